//! Config-driven benchmark: data generation, reconstruction of target
//! observables by each kernel method, Monte Carlo sweeps and CSV output.

mod config;
mod output;
mod run;
mod search;

pub use config::{
    EvaluationMode, EvaluationSpec, ExperimentConfig, MethodSpec, ObservableSpec, Sigma2Keyword,
    Sigma2Spec, SystemSpec,
};
pub use output::{
    read_runs_csv, read_summary_csv, write_curves_csv, write_runs_csv, write_summary_csv,
};
pub use run::{
    composed_truth, emit_reconstruction_curves, evaluation_points, monte_carlo, reconstruct,
    reconstruction_curves, run_scenario, run_seeds, scenario_id, summarize, CurveTable,
    MonteCarloReport, Reconstruction, RunResult, SummaryRow,
};
pub use search::{grid_search_rho, select_candidate, RhoChoice, ValidationSplit};

use crate::error::{KoopmanError, Result};
use crate::linalg::Vector;

/// `‖estimate − truth‖ / ‖truth‖`.
pub fn normalized_l2_error(estimate: &Vector, truth: &Vector) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(KoopmanError::invalid(format!(
            "estimate has length {}, truth {}",
            estimate.len(),
            truth.len()
        )));
    }
    let denom = truth.norm();
    if !(denom > 0.0) {
        return Err(KoopmanError::invalid("reference has zero norm"));
    }
    Ok((estimate - truth).norm() / denom)
}

/// Linearly interpolated quantile of already sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    match sorted.len() {
        0 => None,
        1 => Some(sorted[0]),
        n => {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
        }
    }
}
