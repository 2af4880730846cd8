//! Least-squares Koopman estimates from benchmark snapshots: DMD acting on
//! observable values and EDMD acting on dictionary coefficients.
//!
//! `cargo run -p koopman --example dmd_edmd`

use koopman::prelude::*;

fn main() -> Result<()> {
    let sys = benchmark_system();
    let plan = SamplingPlan {
        n_traj: 5,
        traj_len: 10,
        init_low: 0.0,
        init_high: 7.0,
        sigma_t: 0.0,
        seed: 7,
    };
    let data = generate_snapshots(&sys, &plan)?;
    let dict = benchmark_dictionary();
    let (px, py) = feature_matrices(&dict, &data)?;
    println!("{} pairs, dictionary {:?}", data.len(), dict.labels());

    let dmd = fit_dmd(&px, &py)?;
    let edmd = fit_edmd(&px, &py)?;
    println!(
        "DMD operator {:?}, EDMD operator {:?}",
        dmd.matrix().shape(),
        edmd.matrix().shape()
    );

    // ψ(x) = x is the second dictionary member, so α = e₂ and Ψ(x) U α ≈ f(x).
    let mut e2 = Vector::zeros(dict.len());
    e2[1] = 1.0;
    let alpha = CoefficientVector::new(e2, BasisTag::Function(dict.len()))?;
    let query = Matrix::from_column_slice(5, 1, &[0.0, 1.0, 2.5, 4.0, 6.5]);
    let pred = edmd_predict(&edmd, &dict, &alpha, &query)?;
    for (i, x) in query.iter().enumerate() {
        println!(
            "x = {x:4.1}  f(x) = {:+.6}  EDMD = {:+.6}",
            benchmark_map(*x),
            pred[i]
        );
    }

    // DMD maps the training values ψ(x̄) of a span member to predicted ψ(ȳ).
    let psi_x = &px * alpha.values();
    let psi_y_hat = dmd.matrix() * &psi_x;
    let psi_y = data.outputs().column(0);
    println!("DMD max |ψ̂(ȳ) − ψ(ȳ)| = {:.2e}", (psi_y_hat - psi_y).amax());
    Ok(())
}
