use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use koopman::harness::{
    emit_reconstruction_curves, monte_carlo, run_scenario, write_runs_csv, ExperimentConfig,
    SummaryRow,
};
use koopman::Result;

#[derive(Parser)]
#[command(
    name = "koopman",
    version,
    about = "Koopman operator benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One data set per noise level; writes runs.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruction curves on the evaluation grid; writes curves_<observable>.csv.
    Curves {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Process-noise level (defaults to the first configured one).
        #[arg(long)]
        sigma_t: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo sweep; writes runs.csv and summary.csv.
    Mc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"))
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<14} {:<8} {:<8} {:>5} {:>5} {:>11} {:>11} {:>11}",
        "scenario", "method", "obs", "runs", "fail", "q1", "median", "q3"
    );
    for r in rows {
        println!(
            "{:<14} {:<8} {:<8} {:>5} {:>5} {:>11} {:>11} {:>11}",
            r.scenario,
            r.method,
            r.observable,
            r.runs,
            r.failures,
            fmt_opt(r.q1),
            fmt_opt(r.median),
            fmt_opt(r.q3)
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let runs: Vec<_> = cfg
                .noise_levels
                .iter()
                .flat_map(|&s| run_scenario(&cfg, s, seed))
                .collect();
            std::fs::create_dir_all(&dir).map_err(|e| koopman::KoopmanError::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("runs.csv");
            write_runs_csv(&path, &runs)?;
            for r in &runs {
                match (&r.error, &r.failure) {
                    (Some(e), _) => println!(
                        "{:<14} {:<4} {:<6} {e:.6e}",
                        r.scenario, r.method, r.observable
                    ),
                    (None, Some(f)) => println!(
                        "{:<14} {:<4} {:<6} FAILED: {f}",
                        r.scenario, r.method, r.observable
                    ),
                    _ => {}
                }
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Curves {
            config,
            seed,
            sigma_t,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let sigma_t = sigma_t.unwrap_or(cfg.noise_levels[0]);
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            for p in emit_reconstruction_curves(&cfg, sigma_t, seed, &dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Mc { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let t0 = Instant::now();
            let report = monte_carlo(&cfg, seed)?;
            let (runs, summary) = report.write(&dir)?;
            print_summary(&report.summary);
            eprintln!(
                "{} runs in {:.2?}; wrote {} and {}",
                report.runs.len(),
                t0.elapsed(),
                runs.display(),
                summary.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
