//! Held-out grid search for the Gaussian kernel width.
//!
//! `cargo run -p koopman --example rho_search`

use koopman::harness::{grid_search_rho, select_candidate, ValidationSplit};
use koopman::prelude::*;

fn main() -> Result<()> {
    let sys = benchmark_system();
    let split = ValidationSplit {
        fraction: 0.2,
        seed: 99,
    };
    let grid = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];

    for sigma_t in [0.0, 0.2, 0.5] {
        let plan = SamplingPlan {
            n_traj: 5,
            traj_len: 10,
            init_low: 0.0,
            init_high: 7.0,
            sigma_t,
            seed: 21,
        };
        let data = generate_snapshots(&sys, &plan)?;
        let targets = data.outputs().column(0).into_owned();
        let sigma2 = if sigma_t > 0.0 {
            sigma_t * sigma_t
        } else {
            1e-3
        };
        let noise = NoiseModel::new(sigma2, 1e-3)?;
        let choice = grid_search_rho(&data, &targets, noise, &grid, split)?;
        println!(
            "σ_T = {sigma_t}: ρ = {} (validation error {:.4})",
            choice.rho, choice.score
        );
    }

    // Ties go to the smaller candidate.
    let tie = select_candidate(&[2.0, 1.0, 3.0], |_| Ok(0.5))?;
    println!("tie among [2, 1, 3] -> {}", tie.rho);
    Ok(())
}
