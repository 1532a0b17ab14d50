use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use ramsey_bayes::harness::batch::sample_detunings;
use ramsey_bayes::harness::config::{parse_methods, parse_repetitions};
use ramsey_bayes::harness::output::{self, Summary};
use ramsey_bayes::harness::{latency_bench, run_batch, run_single, ExperimentConfig};
use ramsey_bayes::sim::{derive_seed, GroundTruth};
use ramsey_bayes::Error;

#[derive(Parser, Debug)]
#[command(name = "ramsey-bayes", version, about = "Bayesian qubit frequency estimation without single-shot readout")]
struct Cli {
    /// JSON experiment config; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated methods, e.g. `majority_nonadaptive,binomial_adaptive`.
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Comma-separated batch sizes.
    #[arg(long = "r-list", global = true)]
    r_list: Option<String>,
    #[arg(long = "n-detunings", global = true)]
    n_detunings: Option<usize>,
    /// Iterations at tau = T2* after the exponential schedule.
    #[arg(long, global = true)]
    extended: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One estimation per selected method and batch size.
    Run {
        /// True detuning (Hz); drawn from the detuning range when absent.
        #[arg(long = "f-true", allow_hyphen_values = true)]
        f_true: Option<f64>,
        /// Also write posterior snapshots to waterfall.csv.
        #[arg(long)]
        waterfall: bool,
    },
    /// Monte Carlo over many detunings; writes results.csv, mse.csv and summary.json.
    Batch {
        /// Also run the update-latency benchmark and record it in the summary.
        #[arg(long)]
        bench: bool,
    },
    /// Latency of one binomial update on the configured grid.
    Bench {
        #[arg(long, default_value_t = 10_000)]
        updates: usize,
        #[arg(long, default_value_t = 2500)]
        repetitions: u64,
    },
    /// Print the sensing-time schedule as CSV.
    EmitSchedule,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(list) = &cli.methods {
        cfg.methods = parse_methods(list)?;
    }
    if let Some(list) = &cli.r_list {
        cfg.repetitions = parse_repetitions(list)?;
    }
    if let Some(n) = cli.n_detunings {
        cfg.n_detunings = n;
    }
    if let Some(n) = cli.extended {
        cfg.schedule.extended_iterations = n;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Run { f_true, waterfall } => {
            let setup = cfg.setup_batch()?;
            let f_true = match f_true {
                Some(f) => *f,
                None => sample_detunings(cfg.seed, 1, cfg.detuning_range)[0],
            };
            if !setup.grid.contains(f_true) {
                return Err(Failure::Config(format!("f_true {f_true} Hz lies outside the grid")));
            }
            let keep = *waterfall || cfg.output.waterfall;
            let mut runs = Vec::new();
            for &method in &cfg.methods {
                for &repetitions in &cfg.repetitions {
                    let run_id = runs.len() as u64;
                    let truth = GroundTruth {
                        f_true,
                        rng_seed: derive_seed(cfg.seed, run_id),
                    };
                    runs.push((run_id, run_single(&setup, method, repetitions, truth, keep)?));
                }
            }
            let dir = &cfg.output.dir;
            output::write_file(dir, "results.csv", &output::results_csv(runs.iter().map(|(i, t)| (*i, t))))?;
            if keep {
                let csv = output::waterfall_csv(&setup.grid, runs.iter().map(|(i, t)| (*i, t)));
                output::write_file(dir, "waterfall.csv", &csv)?;
            }
            for (_, t) in &runs {
                let last = t.final_peak();
                println!(
                    "{:<28} R={:<6} iterations={:<4} f_true={:.0} Hz  f_peak={:.0} Hz  error={:.0} Hz",
                    t.method.to_string(),
                    t.repetitions,
                    t.records.len(),
                    f_true,
                    last,
                    (last - f_true).abs()
                );
            }
        }
        Command::Batch { bench } => {
            let setup = cfg.setup_batch()?;
            let started = Instant::now();
            let result = run_batch(&cfg)?;
            let runtime = started.elapsed().as_secs_f64();
            let latency = bench.then(|| latency_bench(&setup.model, &setup.grid, 2500, 10_000));
            let dir = cfg.output.dir.clone();
            output::write_file(&dir, "results.csv", &output::batch_results_csv(&result))?;
            output::write_file(&dir, "mse.csv", &output::mse_csv(&result.mse))?;
            if cfg.output.waterfall {
                let runs = result.cells.iter().zip(&result.trajectories).map(|(c, t)| (c.run_id, t));
                output::write_file(&dir, "waterfall.csv", &output::waterfall_csv(&setup.grid, runs))?;
            }
            let summary = Summary::new(&cfg, &result, runtime, latency);
            output::write_file(&dir, "summary.json", &output::summary_json(&summary))?;
            for f in &summary.final_mse {
                println!(
                    "{:<28} R={:<6} final mse={:.4} MHz  total time={:.3} s",
                    f.method.to_string(),
                    f.repetitions,
                    f.mse_hz / 1e6,
                    f.mean_total_time_s
                );
            }
            println!("{} runs in {:.2} s, output in {}", summary.runs, runtime, dir.display());
        }
        Command::Bench { updates, repetitions } => {
            let setup = cfg.setup()?;
            if *updates == 0 || *repetitions == 0 {
                return Err(Failure::Config("updates and repetitions must be >= 1".into()));
            }
            let stats = latency_bench(&setup.model, &setup.grid, *repetitions, *updates);
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
        }
        Command::EmitSchedule => {
            let setup = cfg.setup()?;
            println!("step,k,regime,tau_ns,m_k");
            for (i, s) in setup.schedule.steps().iter().enumerate() {
                let regime = match s.regime {
                    ramsey_bayes::Regime::Exponential => "exponential",
                    ramsey_bayes::Regime::Extended => "extended",
                };
                println!("{},{},{},{},{}", i + 1, s.k, regime, s.tau * 1e9, s.m_k);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
