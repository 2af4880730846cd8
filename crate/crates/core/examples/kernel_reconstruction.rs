//! Function-based kernel estimator: reconstruct the transition map from noisy
//! snapshots with the dictionary kernel and with a Gaussian kernel.
//!
//! `cargo run -p koopman --example kernel_reconstruction`

use std::sync::Arc;

use koopman::harness::normalized_l2_error;
use koopman::prelude::*;

fn main() -> Result<()> {
    let sys = benchmark_system();
    let plan = SamplingPlan {
        n_traj: 5,
        traj_len: 10,
        init_low: 0.0,
        init_high: 7.0,
        sigma_t: 0.2,
        seed: 11,
    };
    let data = generate_snapshots(&sys, &plan)?;
    let grid = Matrix::from_fn(200, 1, |i, _| 7.0 * i as f64 / 199.0);
    let truth = Vector::from_fn(200, |i, _| benchmark_map(grid[(i, 0)]));
    // ψ(x) = x measured at the successors: ψ(ȳ) = ȳ.
    let psi_y = data.outputs().column(0).into_owned();

    let dict = benchmark_dictionary();
    let lambda = Matrix::identity(dict.len(), dict.len());
    let k1 = dictionary_kernel(&dict, &lambda)?;
    let noise1 = NoiseModel::new(1e-5, 1e-5)?;
    let est1 = predict_composed(&k1, &data, noise1, &psi_y, &grid)?;

    let k2 = rbf_kernel(0.5)?;
    let noise2 = NoiseModel::new(0.2 * 0.2, 1e-3)?;
    let est2 = predict_composed(&k2, &data, noise2, &psi_y, &grid)?;

    println!(
        "dictionary kernel error {:.4}",
        normalized_l2_error(&est1, &truth)?
    );
    println!(
        "RBF kernel error        {:.4}",
        normalized_l2_error(&est2, &truth)?
    );

    // The same RBF estimate through the operator on kernel-section coefficients.
    let op = fit_koopman_kernel_function(Arc::new(k2), &data, noise2)?;
    let alpha = CoefficientVector::new(
        Vector::from_element(data.len(), 0.1),
        BasisTag::KernelSection(data.len()),
    )?;
    let g = op.predict_sections(&alpha, &grid.rows(0, 3).into_owned())?;
    println!(
        "K(x, x̄) U α at x = 0, 7/199, 14/199: {:.4} {:.4} {:.4}",
        g[0], g[1], g[2]
    );
    Ok(())
}
