//! A user-defined two-dimensional map with a hand-built dictionary.
//!
//! `cargo run -p koopman --example custom_system`

use std::sync::Arc;

use koopman::harness::normalized_l2_error;
use koopman::prelude::*;

fn main() -> Result<()> {
    // Damped rotation with a quadratic coupling.
    let sys = DynamicalSystem::new("rotation", 2, |x: &[f64]| {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        vec![
            0.9 * (c * x[0] - s * x[1]),
            0.9 * (s * x[0] + c * x[1]) + 0.1 * x[0] * x[0],
        ]
    });
    let plan = SamplingPlan {
        n_traj: 10,
        traj_len: 8,
        init_low: -1.0,
        init_high: 1.0,
        sigma_t: 0.0,
        seed: 4,
    };
    let data = generate_snapshots(&sys, &plan)?;

    let dict = Dictionary::new(vec![
        Observable::constant(1.0).with_dim(2),
        Observable::state(0),
        Observable::state(1),
        Observable::new("x0^2", |x| x[0] * x[0]).with_dim(2),
        Observable::new("x0*x1", |x| x[0] * x[1]).with_dim(2),
        Observable::new("x1^2", |x| x[1] * x[1]).with_dim(2),
    ])?;
    let (px, py) = feature_matrices(&dict, &data)?;
    let edmd = fit_edmd(&px, &py)?;

    let query = Matrix::from_fn(25, 2, |i, j| {
        if j == 0 {
            (i % 5) as f64 * 0.4 - 0.8
        } else {
            (i / 5) as f64 * 0.4 - 0.8
        }
    });
    let truth = Vector::from_fn(25, |i, _| sys.step(&[query[(i, 0)], query[(i, 1)]])[1]);

    // Second state coordinate: coefficient vector e₃.
    let mut e = Vector::zeros(dict.len());
    e[2] = 1.0;
    let alpha = CoefficientVector::new(e, BasisTag::Function(dict.len()))?;
    let via_edmd = edmd_predict(&edmd, &dict, &alpha, &query)?;

    let k: SharedKernel = Arc::new(rbf_kernel(1.0)?);
    let psi_y = data.outputs().column(1).into_owned();
    let via_rbf = predict_composed(
        k.as_ref(),
        &data,
        NoiseModel::new(1e-6, 1e-6)?,
        &psi_y,
        &query,
    )?;

    println!("EDMD error {:.2e}", normalized_l2_error(&via_edmd, &truth)?);
    println!("RBF  error {:.2e}", normalized_l2_error(&via_rbf, &truth)?);
    Ok(())
}
