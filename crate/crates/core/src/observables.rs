//! Observables, dictionaries and snapshot data.
//!
//! An [`Observable`] maps a state vector to a real scalar. A [`Dictionary`]
//! is an ordered list of observables; evaluating it at a state gives the
//! feature row `Ψ(x)`, and stacking feature rows over the snapshot inputs and
//! outputs gives the matrices `P_x` and `P_y`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::RowDVector;
use serde::{Deserialize, Serialize};

use crate::error::{KoopmanError, Result};
use crate::linalg::{ensure_finite, Matrix, Vector};

type StateFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A real-valued function of the state.
#[derive(Clone)]
pub struct Observable {
    label: String,
    dim: Option<usize>,
    eval: Arc<StateFn>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl Observable {
    /// Wraps an arbitrary function of an n-dimensional state.
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Observable {
            label: label.into(),
            dim: None,
            eval: Arc::new(f),
        }
    }

    /// Wraps a function of a scalar state. Evaluating on a state of any other
    /// dimension is an error.
    pub fn scalar<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Observable {
            label: label.into(),
            dim: Some(1),
            eval: Arc::new(move |x: &[f64]| f(x[0])),
        }
    }

    /// Restricts the observable to states of dimension `dim`.
    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }

    pub fn constant(value: f64) -> Self {
        let label = if value == 1.0 {
            "1".to_string()
        } else {
            format!("{value}")
        };
        Observable::new(label, move |_| value)
    }

    pub fn monomial(degree: u32) -> Self {
        let label = match degree {
            0 => "1".to_string(),
            1 => "x".to_string(),
            d => format!("x^{d}"),
        };
        Observable::scalar(label, move |x| x.powi(degree as i32))
    }

    pub fn sine(freq: f64) -> Self {
        Observable::scalar(format!("sin({freq}x)"), move |x| (freq * x).sin())
    }

    /// Hill function `1 / (1 + x^(2i))`.
    pub fn hill(i: u32) -> Self {
        let p = 2 * i as i32;
        Observable::scalar(format!("1/(1+x^{p})"), move |x| 1.0 / (1.0 + x.powi(p)))
    }

    /// Component `index` of the state; for scalar systems this is `ψ(x) = x`.
    pub fn state(index: usize) -> Self {
        let label = if index == 0 {
            "x".to_string()
        } else {
            format!("x[{index}]")
        };
        Observable::new(label, move |x| x[index])
    }

    /// Quadratic cost `J(x) = ‖x − x₀‖²`.
    pub fn quadratic_cost(target: Vec<f64>) -> Self {
        let dim = target.len();
        Observable::new("J", move |x| {
            x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum()
        })
        .with_dim(dim)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates the observable, rejecting non-finite inputs and outputs.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim {
            if x.len() != d {
                return Err(KoopmanError::invalid(format!(
                    "observable `{}` expects dimension {d}, got {}",
                    self.label,
                    x.len()
                )));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KoopmanError::invalid(format!(
                "non-finite state {x:?} passed to `{}`",
                self.label
            )));
        }
        let value = (self.eval)(x);
        if !value.is_finite() {
            return Err(KoopmanError::Evaluation {
                member: self.label.clone(),
                state: x.to_vec(),
                value,
            });
        }
        Ok(value)
    }
}

/// Ordered set of basis observables `{ψ₁, …, ψ_N}`.
#[derive(Clone, Debug)]
pub struct Dictionary {
    members: Vec<Observable>,
}

impl Dictionary {
    pub fn new(members: Vec<Observable>) -> Result<Self> {
        if members.is_empty() {
            return Err(KoopmanError::invalid(
                "dictionary must have at least one member",
            ));
        }
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(m.label()) {
                return Err(KoopmanError::invalid(format!(
                    "duplicate dictionary label `{}`",
                    m.label()
                )));
            }
        }
        Ok(Dictionary { members })
    }

    pub fn from_specs(specs: &[BasisSpec]) -> Result<Self> {
        let mut members = Vec::new();
        for spec in specs {
            members.extend(spec.expand()?);
        }
        Dictionary::new(members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Observable] {
        &self.members
    }

    pub fn labels(&self) -> Vec<&str> {
        self.members.iter().map(Observable::label).collect()
    }

    pub fn feature_row(&self, x: &[f64]) -> Result<RowDVector<f64>> {
        feature_row(self, x)
    }
}

/// Declarative dictionary member, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    Monomial {
        degree: u32,
    },
    Sin {
        freq: f64,
    },
    /// Expands to the first `count` Hill functions.
    Hill {
        count: u32,
    },
}

fn one() -> f64 {
    1.0
}

impl BasisSpec {
    pub fn expand(&self) -> Result<Vec<Observable>> {
        Ok(match *self {
            BasisSpec::Constant { value } => vec![Observable::constant(value)],
            BasisSpec::Monomial { degree } => vec![Observable::monomial(degree)],
            BasisSpec::Sin { freq } => vec![Observable::sine(freq)],
            BasisSpec::Hill { count } => hill_dictionary(count as usize)?.members,
        })
    }
}

/// The row `[ψ₁(x), …, ψ_N(x)]`.
pub fn feature_row(d: &Dictionary, x: &[f64]) -> Result<RowDVector<f64>> {
    let mut row = RowDVector::zeros(d.len());
    for (j, psi) in d.members.iter().enumerate() {
        row[j] = psi.eval(x)?;
    }
    Ok(row)
}

fn feature_matrix(d: &Dictionary, pts: &Matrix) -> Result<Matrix> {
    let mut p = Matrix::zeros(pts.nrows(), d.len());
    let mut buf = vec![0.0; pts.ncols()];
    for m in 0..pts.nrows() {
        copy_row(pts, m, &mut buf);
        for (j, psi) in d.members.iter().enumerate() {
            p[(m, j)] = psi.eval(&buf)?;
        }
    }
    Ok(p)
}

/// Stacked feature rows `(P_x, P_y)` of a snapshot set, each M×N.
pub fn feature_matrices(d: &Dictionary, s: &SnapshotSet) -> Result<(Matrix, Matrix)> {
    Ok((feature_matrix(d, &s.x)?, feature_matrix(d, &s.y)?))
}

/// Evaluates a dictionary at every row of `pts`.
pub fn feature_matrix_at(d: &Dictionary, pts: &Matrix) -> Result<Matrix> {
    feature_matrix(d, pts)
}

/// The column `ψ(x̄)` of an observable evaluated at each row of `pts`.
pub fn observable_values(psi: &Observable, pts: &Matrix) -> Result<Vector> {
    ensure_finite(pts, "evaluation points")?;
    let mut out = Vector::zeros(pts.nrows());
    let mut buf = vec![0.0; pts.ncols()];
    for m in 0..pts.nrows() {
        copy_row(pts, m, &mut buf);
        out[m] = psi.eval(&buf)?;
    }
    Ok(out)
}

/// Hill functions `x ↦ 1/(1+x^(2i))` for `i = 1..=n`.
pub fn hill_dictionary(n: usize) -> Result<Dictionary> {
    if n == 0 {
        return Err(KoopmanError::invalid(
            "Hill dictionary needs at least one member",
        ));
    }
    Dictionary::new((1..=n as u32).map(Observable::hill).collect())
}

/// `{1, x, x², sin(2x)} ∪ H⁴`, N = 8.
pub fn benchmark_dictionary() -> Dictionary {
    Dictionary::from_specs(&benchmark_dictionary_specs()).expect("static dictionary is valid")
}

pub fn benchmark_dictionary_specs() -> Vec<BasisSpec> {
    vec![
        BasisSpec::Constant { value: 1.0 },
        BasisSpec::Monomial { degree: 1 },
        BasisSpec::Monomial { degree: 2 },
        BasisSpec::Sin { freq: 2.0 },
        BasisSpec::Hill { count: 4 },
    ]
}

pub(crate) fn copy_row(m: &Matrix, i: usize, buf: &mut [f64]) {
    for (j, b) in buf.iter_mut().enumerate() {
        *b = m[(i, j)];
    }
}

pub(crate) fn row_of(m: &Matrix, i: usize) -> Vec<f64> {
    let mut buf = vec![0.0; m.ncols()];
    copy_row(m, i, &mut buf);
    buf
}

/// Origin of a snapshot pair inside its generating trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOrigin {
    pub traj: usize,
    pub step: usize,
}

/// Paired samples `(x^(m), y^(m))`, stored as two M×n matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    pub(crate) x: Matrix,
    pub(crate) y: Matrix,
    pub(crate) origins: Vec<PairOrigin>,
    /// Standard deviation of the process noise used to generate the data.
    pub sigma_t: f64,
    pub seed: u64,
}

impl SnapshotSet {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        let origins = (0..x.nrows())
            .map(|step| PairOrigin { traj: 0, step })
            .collect();
        SnapshotSet::with_origins(x, y, origins, 0.0, 0)
    }

    pub fn with_origins(
        x: Matrix,
        y: Matrix,
        origins: Vec<PairOrigin>,
        sigma_t: f64,
        seed: u64,
    ) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(KoopmanError::invalid(format!(
                "snapshot inputs {:?} and outputs {:?} differ in shape",
                x.shape(),
                y.shape()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(KoopmanError::invalid(
                "snapshot set must hold at least one pair",
            ));
        }
        if origins.len() != x.nrows() {
            return Err(KoopmanError::invalid(
                "one origin per snapshot pair is required",
            ));
        }
        ensure_finite(&x, "snapshot inputs")?;
        ensure_finite(&y, "snapshot outputs")?;
        Ok(SnapshotSet {
            x,
            y,
            origins,
            sigma_t,
            seed,
        })
    }

    /// Scalar-state convenience constructor.
    pub fn from_scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        SnapshotSet::new(
            Matrix::from_column_slice(xs.len(), 1, xs),
            Matrix::from_column_slice(ys.len(), 1, ys),
        )
    }

    /// Number of pairs M.
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// State dimension n.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Inputs `x̄`, one row per pair.
    pub fn inputs(&self) -> &Matrix {
        &self.x
    }

    /// Outputs `ȳ`, one row per pair.
    pub fn outputs(&self) -> &Matrix {
        &self.y
    }

    pub fn origins(&self) -> &[PairOrigin] {
        &self.origins
    }

    /// Sub-set made of the given pair indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Result<SnapshotSet> {
        let x = self.x.select_rows(idx);
        let y = self.y.select_rows(idx);
        let origins = idx.iter().map(|&i| self.origins[i]).collect();
        SnapshotSet::with_origins(x, y, origins, self.sigma_t, self.seed)
    }
}
