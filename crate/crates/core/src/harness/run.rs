use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KoopmanError, Result};
use crate::estimators::GramSolver;
use crate::kernels::{dictionary_kernel, rbf_kernel, Kernel, KernelSpec, RhoSpec, WeightSpec};
use crate::linalg::{Matrix, Vector};
use crate::observables::{observable_values, Dictionary, Observable, SnapshotSet};
use crate::simulation::{empirical_snr, generate_snapshots, SamplingPlan};

use super::config::{EvaluationMode, ExperimentConfig, MethodSpec};
use super::output::{write_curves_csv, write_runs_csv, write_summary_csv};
use super::search::{grid_search_rho, ValidationSplit};
use super::{normalized_l2_error, quantile_sorted};

const SPLIT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
const EVAL_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

/// Error of one method on one observable in one scenario.
///
/// Equality ignores `wall_time`, which is not written to CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub sigma_t: f64,
    pub method: String,
    pub observable: String,
    pub seed: u64,
    /// Normalized L2 error `‖ĝ − g‖ / ‖g‖` on the evaluation points.
    pub error: Option<f64>,
    /// RBF parameter used, when the kernel has one.
    pub rho: Option<f64>,
    /// Empirical signal-to-noise ratio of the training data.
    pub snr: Option<f64>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for RunResult {
    fn eq(&self, other: &Self) -> bool {
        self.scenario == other.scenario
            && self.sigma_t.to_bits() == other.sigma_t.to_bits()
            && self.method == other.method
            && self.observable == other.observable
            && self.seed == other.seed
            && opt_bits(self.error) == opt_bits(other.error)
            && opt_bits(self.rho) == opt_bits(other.rho)
            && opt_bits(self.snr) == opt_bits(other.snr)
            && self.failure == other.failure
    }
}

fn opt_bits(v: Option<f64>) -> Option<u64> {
    v.map(f64::to_bits)
}

pub fn scenario_id(sigma_t: f64) -> String {
    format!("sigma_t={sigma_t}")
}

/// A kernel instantiated for one method and one observable.
enum BuiltKernel {
    Dictionary(crate::kernels::DictionaryKernel),
    Rbf(crate::kernels::RbfKernel),
}

impl BuiltKernel {
    fn as_kernel(&self) -> &dyn Kernel {
        match self {
            BuiltKernel::Dictionary(k) => k,
            BuiltKernel::Rbf(k) => k,
        }
    }

    fn rho(&self) -> Option<f64> {
        match self {
            BuiltKernel::Rbf(k) => Some(k.rho()),
            BuiltKernel::Dictionary(_) => None,
        }
    }
}

/// Posterior-mean reconstruction of `ψ ∘ f` at some query points.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub values: Vector,
    pub rho: Option<f64>,
}

/// Fits `method` on `data` and reconstructs `psi ∘ f` at `query`.
///
/// For grid-searched RBF kernels the parameter is chosen on a validation
/// split drawn from `seed`.
pub fn reconstruct(
    config: &ExperimentConfig,
    method: &MethodSpec,
    dictionary: &Dictionary,
    data: &SnapshotSet,
    psi: &Observable,
    query: &Matrix,
    seed: u64,
) -> Result<Reconstruction> {
    let noise = method.noise_model(data.sigma_t)?;
    let targets = observable_values(psi, data.outputs())?;
    let kernel = match method.kernel {
        KernelSpec::Dictionary {
            lambda: WeightSpec::Identity,
        } => {
            let n = dictionary.len();
            BuiltKernel::Dictionary(dictionary_kernel(dictionary, &Matrix::identity(n, n))?)
        }
        KernelSpec::Rbf {
            rho: RhoSpec::Value(rho),
        } => BuiltKernel::Rbf(rbf_kernel(rho)?),
        KernelSpec::Rbf {
            rho: RhoSpec::Named(_),
        } => {
            let split = ValidationSplit {
                fraction: config.validation_fraction,
                seed: seed ^ SPLIT_STREAM,
            };
            let choice = grid_search_rho(data, &targets, noise, &config.rho_grid, split)?;
            BuiltKernel::Rbf(rbf_kernel(choice.rho)?)
        }
    };
    let solver = GramSolver::new(kernel.as_kernel(), data.inputs(), noise.posterior_shift())?;
    Ok(Reconstruction {
        values: solver.predict(&targets, query)?,
        rho: kernel.rho(),
    })
}

/// Points at which reconstruction errors are measured.
pub fn evaluation_points(config: &ExperimentConfig, seed: u64) -> Result<Matrix> {
    let e = &config.evaluation;
    match e.mode {
        EvaluationMode::Grid => {
            let g = e.grid();
            Ok(Matrix::from_column_slice(g.len(), 1, &g))
        }
        EvaluationMode::TestTrajectories => {
            let sys = config.system.build();
            let len = config.sampling.traj_len;
            let plan = SamplingPlan {
                n_traj: e.points.div_ceil(len),
                traj_len: len,
                init_low: e.low,
                init_high: e.high,
                sigma_t: 0.0,
                seed: seed ^ EVAL_STREAM,
            };
            let data = generate_snapshots(&sys, &plan)?;
            Ok(data.inputs().rows(0, e.points).into_owned())
        }
    }
}

/// Ground truth `ψ(f(x))` at each evaluation point.
pub fn composed_truth(config: &ExperimentConfig, psi: &Observable, pts: &Matrix) -> Result<Vector> {
    let mapped = config.system.build().map_rows(pts);
    observable_values(psi, &mapped)
}

fn failure(
    sigma_t: f64,
    method: &str,
    observable: &str,
    seed: u64,
    snr: Option<f64>,
    err: &KoopmanError,
    wall_time: Duration,
) -> RunResult {
    RunResult {
        scenario: scenario_id(sigma_t),
        sigma_t,
        method: method.to_string(),
        observable: observable.to_string(),
        seed,
        error: None,
        rho: None,
        snr,
        failure: Some(err.to_string()),
        wall_time,
    }
}

/// Generates one data set with process noise `sigma_t` and evaluates every
/// (method, observable) pair on it. Estimator failures are recorded in the
/// results rather than returned.
pub fn run_scenario(config: &ExperimentConfig, sigma_t: f64, seed: u64) -> Vec<RunResult> {
    let t0 = Instant::now();
    let sys = config.system.build();
    let plan = SamplingPlan {
        sigma_t,
        seed,
        ..config.sampling
    };
    let prepared = generate_snapshots(&sys, &plan).and_then(|data| {
        let dict = Dictionary::from_specs(&config.dictionary)?;
        let pts = evaluation_points(config, seed)?;
        Ok((data, dict, pts))
    });
    let (data, dict, pts) = match prepared {
        Ok(v) => v,
        Err(e) => {
            let elapsed = t0.elapsed();
            return config
                .methods
                .iter()
                .flat_map(|m| {
                    config
                        .observables
                        .iter()
                        .map(|o| failure(sigma_t, &m.label, o.name(), seed, None, &e, elapsed))
                        .collect::<Vec<_>>()
                })
                .collect();
        }
    };
    let snr = Some(empirical_snr(&sys, &data));

    let mut out = Vec::with_capacity(config.methods.len() * config.observables.len());
    for method in &config.methods {
        for obs in &config.observables {
            let start = Instant::now();
            let psi = obs.build();
            let result = composed_truth(config, &psi, &pts).and_then(|truth| {
                let rec = reconstruct(config, method, &dict, &data, &psi, &pts, seed)?;
                Ok((normalized_l2_error(&rec.values, &truth)?, rec.rho))
            });
            let wall_time = start.elapsed();
            out.push(match result {
                Ok((error, rho)) => RunResult {
                    scenario: scenario_id(sigma_t),
                    sigma_t,
                    method: method.label.clone(),
                    observable: obs.name().to_string(),
                    seed,
                    error: Some(error),
                    rho,
                    snr,
                    failure: None,
                    wall_time,
                },
                Err(e) => failure(sigma_t, &method.label, obs.name(), seed, snr, &e, wall_time),
            });
        }
    }
    out
}

/// Per-run seeds derived from the master seed. The same seeds are reused in
/// every noise scenario.
pub fn run_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..count).map(|_| rng.next_u64()).collect()
}

/// Error distribution of one (scenario, method, observable) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub sigma_t: f64,
    pub method: String,
    pub observable: String,
    pub runs: usize,
    pub failures: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloReport {
    pub runs: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

impl MonteCarloReport {
    pub fn group(&self, sigma_t: f64, method: &str, observable: &str) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.sigma_t == sigma_t && r.method == method && r.observable == observable)
    }

    /// Writes `runs.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| KoopmanError::io(dir, e))?;
        let runs = dir.join("runs.csv");
        let summary = dir.join("summary.csv");
        write_runs_csv(&runs, &self.runs)?;
        write_summary_csv(&summary, &self.summary)?;
        Ok((runs, summary))
    }
}

/// Aggregates run results per (scenario, method, observable), in the order
/// groups first appear.
pub fn summarize(runs: &[RunResult]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64, String, String)> = Vec::new();
    for r in runs {
        let key = (
            r.scenario.clone(),
            r.sigma_t,
            r.method.clone(),
            r.observable.clone(),
        );
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scenario, sigma_t, method, observable)| {
            let group: Vec<&RunResult> = runs
                .iter()
                .filter(|r| {
                    r.scenario == scenario && r.method == method && r.observable == observable
                })
                .collect();
            let mut errs: Vec<f64> = group.iter().filter_map(|r| r.error).collect();
            errs.sort_by(f64::total_cmp);
            let q = |p: f64| quantile_sorted(&errs, p);
            SummaryRow {
                runs: errs.len(),
                failures: group.len() - errs.len(),
                median: q(0.5),
                q1: q(0.25),
                q3: q(0.75),
                min: errs.first().copied(),
                max: errs.last().copied(),
                scenario,
                sigma_t,
                method,
                observable,
            }
        })
        .collect()
}

/// Runs every noise scenario `monte_carlo_count` times and aggregates the
/// errors. A pure function of the config and `master_seed`.
pub fn monte_carlo(config: &ExperimentConfig, master_seed: u64) -> Result<MonteCarloReport> {
    config.validate()?;
    let seeds = run_seeds(master_seed, config.monte_carlo_count);
    let jobs: Vec<(f64, u64)> = config
        .noise_levels
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(sigma_t, seed)| run_scenario(config, sigma_t, seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&runs);
    Ok(MonteCarloReport { runs, summary })
}

/// Truth and per-method reconstructions of one observable on the
/// evaluation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub observable: String,
    pub x: Vec<f64>,
    pub truth: Vec<f64>,
    pub estimates: Vec<(String, Vec<f64>)>,
}

/// Reconstructions of every observable by every method on the evaluation
/// grid, from one data set.
pub fn reconstruction_curves(
    config: &ExperimentConfig,
    sigma_t: f64,
    seed: u64,
) -> Result<Vec<CurveTable>> {
    config.validate()?;
    let sys = config.system.build();
    let plan = SamplingPlan {
        sigma_t,
        seed,
        ..config.sampling
    };
    let data = generate_snapshots(&sys, &plan)?;
    let dict = Dictionary::from_specs(&config.dictionary)?;
    let grid = config.evaluation.grid();
    let pts = Matrix::from_column_slice(grid.len(), 1, &grid);

    config
        .observables
        .iter()
        .map(|obs| {
            let psi = obs.build();
            let truth = composed_truth(config, &psi, &pts)?;
            let estimates = config
                .methods
                .iter()
                .map(|m| {
                    let rec = reconstruct(config, m, &dict, &data, &psi, &pts, seed)?;
                    Ok((m.label.clone(), rec.values.as_slice().to_vec()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CurveTable {
                observable: obs.name().to_string(),
                x: grid.clone(),
                truth: truth.as_slice().to_vec(),
                estimates,
            })
        })
        .collect()
}

/// Writes one `curves_<observable>.csv` per observable into `dir`.
pub fn emit_reconstruction_curves(
    config: &ExperimentConfig,
    sigma_t: f64,
    seed: u64,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let tables = reconstruction_curves(config, sigma_t, seed)?;
    std::fs::create_dir_all(dir).map_err(|e| KoopmanError::io(dir, e))?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("curves_{}.csv", t.observable));
            write_curves_csv(&path, t)?;
            Ok(path)
        })
        .collect()
}
