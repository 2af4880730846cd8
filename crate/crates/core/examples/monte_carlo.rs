//! A reduced Monte Carlo sweep over the three noise scenarios.
//!
//! `cargo run --release -p koopman --example monte_carlo -- [runs]`

use koopman::harness::{monte_carlo, ExperimentConfig};

fn main() -> koopman::Result<()> {
    let mut cfg = ExperimentConfig::benchmark();
    cfg.monte_carlo_count = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    let report = monte_carlo(&cfg, cfg.seed)?;

    println!(
        "{:<12} {:<4} {:<6} {:>10} {:>10} {:>10}",
        "scenario", "", "obs", "q1", "median", "q3"
    );
    for r in &report.summary {
        println!(
            "{:<12} {:<4} {:<6} {:>10.4} {:>10.4} {:>10.4}",
            r.scenario,
            r.method,
            r.observable,
            r.q1.unwrap_or(f64::NAN),
            r.median.unwrap_or(f64::NAN),
            r.q3.unwrap_or(f64::NAN)
        );
    }
    let failures: usize = report.summary.iter().map(|r| r.failures).sum();
    println!("{} runs, {failures} failed", report.runs.len());
    Ok(())
}
