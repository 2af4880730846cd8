//! Snapshot sets to and from CSV and JSON.
//!
//! `cargo run -p koopman --example snapshot_io`

use koopman::prelude::*;
use koopman::simulation::empirical_snr;

fn main() -> Result<()> {
    let sys = benchmark_system();
    let plan = SamplingPlan {
        n_traj: 2,
        traj_len: 4,
        init_low: 0.0,
        init_high: 7.0,
        sigma_t: 0.2,
        seed: 1,
    };
    let data = generate_snapshots(&sys, &plan)?;
    println!("empirical SNR {:.2}", empirical_snr(&sys, &data));

    let mut csv = Vec::new();
    data.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    let back = SnapshotSet::read_csv(csv.as_slice())?;
    assert_eq!(back.inputs(), data.inputs());
    assert_eq!(back.outputs(), data.outputs());

    let json = data.to_json()?;
    let again = SnapshotSet::from_json(&json)?;
    assert_eq!(again.origins(), data.origins());
    println!(
        "JSON: {} bytes, σ_T = {}, seed = {}",
        json.len(),
        again.sigma_t,
        again.seed
    );
    Ok(())
}
