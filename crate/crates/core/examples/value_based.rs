//! Value-based pipeline for an observable outside the dictionary span: the
//! quadratic cost J(x) = x² is known only through its values at the inputs.
//!
//! `cargo run -p koopman --example value_based`

use koopman::harness::normalized_l2_error;
use koopman::observables::observable_values;
use koopman::prelude::*;

fn main() -> Result<()> {
    let sys = benchmark_system();
    let plan = SamplingPlan {
        n_traj: 5,
        traj_len: 10,
        init_low: 0.0,
        init_high: 7.0,
        sigma_t: 0.0,
        seed: 5,
    };
    let data = generate_snapshots(&sys, &plan)?;
    let cost = Observable::quadratic_cost(vec![0.0]);
    let psi_x = observable_values(&cost, data.inputs())?;

    let grid = Matrix::from_fn(200, 1, |i, _| 7.0 * i as f64 / 199.0);
    let truth = Vector::from_fn(200, |i, _| benchmark_map(grid[(i, 0)]).powi(2));

    let noise = NoiseModel::new(1e-3, 1e-3)?;
    for rho in [0.1, 0.5, 2.0] {
        let k = rbf_kernel(rho)?;
        let est = predict_value_based(&k, &data, noise, &psi_x, &grid)?;
        println!(
            "ρ = {rho:3}: ‖Ĵ∘f − J∘f‖/‖J∘f‖ = {:.4}",
            normalized_l2_error(&est, &truth)?
        );
    }

    // The value-based operator maps ψ(x̄) to the projected observable at ȳ.
    let k = rbf_kernel(0.5)?;
    let op = fit_koopman_kernel_value(&k, &data, noise)?;
    let alpha = project_observable(&k, data.inputs(), &psi_x, noise.mu)?;
    let at_y = gram(&k, data.outputs(), data.inputs())? * alpha.values();
    println!(
        "operator vs projection at ȳ: {:.1e}",
        (op.matrix() * &psi_x - at_y).amax()
    );
    Ok(())
}
