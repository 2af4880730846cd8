//! Bayesian regularized EDMD: primal and dual forms agree, and the prior
//! variance controls how far the estimate shrinks.
//!
//! `cargo run -p koopman --example regularized_edmd`

use koopman::estimators::{fit_edmd_regularized_dual, fit_edmd_regularized_primal};
use koopman::linalg::relative_diff;
use koopman::prelude::*;

fn main() -> Result<()> {
    let sys = benchmark_system();
    let plan = SamplingPlan {
        n_traj: 2,
        traj_len: 3,
        init_low: 0.0,
        init_high: 7.0,
        sigma_t: 0.1,
        seed: 3,
    };
    let data = generate_snapshots(&sys, &plan)?;
    let dict = benchmark_dictionary();
    let (px, py) = feature_matrices(&dict, &data)?;
    let lambda = Matrix::identity(dict.len(), dict.len());
    println!("M = {} pairs, N = {} features", px.nrows(), px.ncols());

    // With M < N plain EDMD is underdetermined; the prior makes it well posed.
    for sigma2 in [1e-6, 1e-3, 1e-1, 10.0] {
        let primal = fit_edmd_regularized_primal(&px, &py, &lambda, sigma2)?;
        let dual = fit_edmd_regularized_dual(&px, &py, &lambda, sigma2)?;
        println!(
            "σ² = {sigma2:7.0e}  ‖U‖_F = {:8.4}  primal/dual rel diff = {:.1e}",
            dual.matrix().norm(),
            relative_diff(primal.matrix(), dual.matrix())
        );
    }

    match fit_edmd_regularized(&px, &py, &lambda, 0.0) {
        Ok(_) => println!("σ² = 0 unexpectedly succeeded"),
        Err(e) => println!("σ² = 0: {e}"),
    }
    Ok(())
}
