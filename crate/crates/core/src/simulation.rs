//! Benchmark systems, noisy trajectory generation and snapshot files.
//!
//! Random draws come from a ChaCha8 stream seeded with the plan's seed, in a
//! fixed order: all initial conditions first (trajectory by trajectory,
//! component by component), then one standard-normal draw per state
//! component per step, trajectory by trajectory. The process noise is the
//! standard-normal draw scaled by `σ_T`, so the same seed yields the same
//! initial conditions and noise directions at every noise level.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KoopmanError, Result};
use crate::linalg::Matrix;
use crate::observables::{row_of, PairOrigin, SnapshotSet};

type TransitionFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Autonomous discrete-time system `x_{t+1} = f(x_t)`.
#[derive(Clone)]
pub struct DynamicalSystem {
    label: String,
    dim: usize,
    transition: Arc<TransitionFn>,
}

impl fmt::Debug for DynamicalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicalSystem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl DynamicalSystem {
    pub fn new<F>(label: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        DynamicalSystem {
            label: label.into(),
            dim,
            transition: Arc::new(f),
        }
    }

    pub fn scalar<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DynamicalSystem::new(label, 1, move |x: &[f64]| vec![f(x[0])])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One noiseless step `f(x)`.
    pub fn step(&self, x: &[f64]) -> Vec<f64> {
        (self.transition)(x)
    }

    /// Applies `f` to every row of `pts`.
    pub fn map_rows(&self, pts: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(pts.nrows(), self.dim);
        for i in 0..pts.nrows() {
            for (j, v) in self.step(&row_of(pts, i)).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// `f(x) = −x + 3/(1 + x²) + 0.5 sin(2x)`.
pub fn benchmark_map(x: f64) -> f64 {
    -x + 3.0 / (1.0 + x * x) + 0.5 * (2.0 * x).sin()
}

/// Scalar benchmark system built on [`benchmark_map`].
pub fn benchmark_system() -> DynamicalSystem {
    DynamicalSystem::scalar("benchmark", benchmark_map)
}

/// How snapshot pairs are drawn: `n_traj` trajectories of `traj_len` pairs
/// each, initial conditions uniform on `[init_low, init_high]` in every
/// component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub n_traj: usize,
    pub traj_len: usize,
    pub init_low: f64,
    pub init_high: f64,
    #[serde(default)]
    pub sigma_t: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 || self.traj_len == 0 {
            return Err(KoopmanError::invalid(
                "sampling plan must produce at least one pair",
            ));
        }
        if !self.init_low.is_finite()
            || !self.init_high.is_finite()
            || self.init_low > self.init_high
        {
            return Err(KoopmanError::invalid(format!(
                "invalid initial-condition interval [{}, {}]",
                self.init_low, self.init_high
            )));
        }
        if !(self.sigma_t >= 0.0) || !self.sigma_t.is_finite() {
            return Err(KoopmanError::invalid(format!(
                "invalid sigma_t {}",
                self.sigma_t
            )));
        }
        Ok(())
    }

    /// Total number of pairs M.
    pub fn pairs(&self) -> usize {
        self.n_traj * self.traj_len
    }
}

/// Runs `x_{t+1} = f(x_t) + σ_T·z_t` for `steps` steps; returns all
/// `steps + 1` states starting with `x0`.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    sys: &DynamicalSystem,
    x0: &[f64],
    steps: usize,
    sigma_t: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if steps == 0 {
        return Err(KoopmanError::invalid("trajectory needs at least one step"));
    }
    if !(sigma_t >= 0.0) || !sigma_t.is_finite() {
        return Err(KoopmanError::invalid(format!("invalid sigma_t {sigma_t}")));
    }
    if x0.len() != sys.dim() || x0.iter().any(|v| !v.is_finite()) {
        return Err(KoopmanError::invalid(format!(
            "invalid initial state {x0:?}"
        )));
    }
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    for t in 0..steps {
        let mut next = sys.step(&states[t]);
        for v in next.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += sigma_t * z;
        }
        if next.len() != sys.dim() || next.iter().any(|v| !v.is_finite()) {
            return Err(KoopmanError::Divergence { step: t + 1 });
        }
        states.push(next);
    }
    Ok(states)
}

/// Draws trajectories per `plan` and returns their consecutive state pairs.
pub fn generate_snapshots(sys: &DynamicalSystem, plan: &SamplingPlan) -> Result<SnapshotSet> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let n = sys.dim();
    let width = plan.init_high - plan.init_low;
    let starts: Vec<Vec<f64>> = (0..plan.n_traj)
        .map(|_| {
            (0..n)
                .map(|_| plan.init_low + width * rng.random::<f64>())
                .collect()
        })
        .collect();

    let m = plan.pairs();
    let mut x = Matrix::zeros(m, n);
    let mut y = Matrix::zeros(m, n);
    let mut origins = Vec::with_capacity(m);
    for (traj, x0) in starts.iter().enumerate() {
        let states = simulate_trajectory(sys, x0, plan.traj_len, plan.sigma_t, &mut rng)?;
        for step in 0..plan.traj_len {
            let row = origins.len();
            for j in 0..n {
                x[(row, j)] = states[step][j];
                y[(row, j)] = states[step + 1][j];
            }
            origins.push(PairOrigin { traj, step });
        }
    }
    SnapshotSet::with_origins(x, y, origins, plan.sigma_t, plan.seed)
}

/// Ratio of the variance of the noiseless successors `f(x̄)` to the variance
/// of the injected noise `ȳ − f(x̄)`, pooled over components. Infinite for
/// noiseless data.
pub fn empirical_snr(sys: &DynamicalSystem, s: &SnapshotSet) -> f64 {
    let clean = sys.map_rows(s.inputs());
    let noise = s.outputs() - &clean;
    let var = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n
    };
    let noise_var = var(noise.as_slice());
    if noise_var == 0.0 {
        f64::INFINITY
    } else {
        var(clean.as_slice()) / noise_var
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvPair {
    traj: usize,
    step: usize,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonPair {
    traj: usize,
    step: usize,
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonSnapshots {
    sigma_t: f64,
    seed: u64,
    pairs: Vec<JsonPair>,
}

impl SnapshotSet {
    /// Writes scalar snapshots as CSV with header `traj,step,x,y`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        if self.dim() != 1 {
            return Err(KoopmanError::invalid(
                "CSV snapshot format holds scalar states only; use JSON",
            ));
        }
        let mut wtr = csv::Writer::from_writer(w);
        for (m, o) in self.origins().iter().enumerate() {
            wtr.serialize(CsvPair {
                traj: o.traj,
                step: o.step,
                x: self.inputs()[(m, 0)],
                y: self.outputs()[(m, 0)],
            })?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the CSV written by [`SnapshotSet::write_csv`]. Noise level and
    /// seed are not stored in CSV and come back as zero.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<SnapshotSet> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut origins = Vec::new();
        for rec in rdr.deserialize() {
            let p: CsvPair = rec?;
            xs.push(p.x);
            ys.push(p.y);
            origins.push(PairOrigin {
                traj: p.traj,
                step: p.step,
            });
        }
        SnapshotSet::with_origins(
            Matrix::from_column_slice(xs.len(), 1, &xs),
            Matrix::from_column_slice(ys.len(), 1, &ys),
            origins,
            0.0,
            0,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let pairs = self
            .origins()
            .iter()
            .enumerate()
            .map(|(m, o)| JsonPair {
                traj: o.traj,
                step: o.step,
                x: row_of(self.inputs(), m),
                y: row_of(self.outputs(), m),
            })
            .collect();
        Ok(serde_json::to_string_pretty(&JsonSnapshots {
            sigma_t: self.sigma_t,
            seed: self.seed,
            pairs,
        })?)
    }

    pub fn from_json(text: &str) -> Result<SnapshotSet> {
        let doc: JsonSnapshots = serde_json::from_str(text)?;
        let m = doc.pairs.len();
        let n = doc.pairs.first().map_or(0, |p| p.x.len());
        if doc.pairs.iter().any(|p| p.x.len() != n || p.y.len() != n) {
            return Err(KoopmanError::invalid("snapshot rows differ in dimension"));
        }
        let x = Matrix::from_fn(m, n, |i, j| doc.pairs[i].x[j]);
        let y = Matrix::from_fn(m, n, |i, j| doc.pairs[i].y[j]);
        let origins = doc
            .pairs
            .iter()
            .map(|p| PairOrigin {
                traj: p.traj,
                step: p.step,
            })
            .collect();
        SnapshotSet::with_origins(x, y, origins, doc.sigma_t, doc.seed)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| KoopmanError::io(path, e))?;
        self.write_csv(BufWriter::new(f))
    }

    pub fn load_csv(path: &Path) -> Result<SnapshotSet> {
        let f = File::open(path).map_err(|e| KoopmanError::io(path, e))?;
        SnapshotSet::read_csv(BufReader::new(f))
    }
}
