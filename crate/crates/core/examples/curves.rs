//! Reconstruction curves for both observables on the evaluation grid.
//!
//! `cargo run -p koopman --example curves -- [out_dir]`

use std::path::PathBuf;

use koopman::harness::{emit_reconstruction_curves, reconstruction_curves, ExperimentConfig};

fn main() -> koopman::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("koopman-curves"));
    let cfg = ExperimentConfig::benchmark();

    for table in reconstruction_curves(&cfg, 0.0, 42)? {
        for (method, est) in &table.estimates {
            let worst = est
                .iter()
                .zip(&table.truth)
                .map(|(e, t)| (e - t).abs())
                .fold(0.0, f64::max);
            println!(
                "{:>5} {method}: max abs deviation {worst:.3e}",
                table.observable
            );
        }
    }
    for p in emit_reconstruction_curves(&cfg, 0.0, 42, &out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}
