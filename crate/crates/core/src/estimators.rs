//! Koopman operator estimators and their predictors.
//!
//! Two dual viewpoints are supported. The *function-based* operators act on
//! coefficients of an observable in some basis (dictionary functions or
//! kernel sections) and return the coefficients of the composed observable
//! `ψ ∘ f`. The *value-based* operators act directly on the vector of
//! observable values at the training inputs and return approximate values at
//! the training outputs.
//!
//! | estimator                         | basis           | matrix                                   |
//! |-----------------------------------|-----------------|------------------------------------------|
//! | [`fit_dmd`]                       | values, M×M     | `P_y P_x†`                               |
//! | [`fit_edmd`]                      | dictionary, N×N | `P_x† P_y`                               |
//! | [`fit_edmd_regularized`]          | dictionary, N×N | `(σ²Λ⁻¹ + P_xᵀP_x)⁻¹ P_xᵀP_y`            |
//! | [`fit_koopman_kernel_function`]   | sections, M×M   | `(K(x̄,x̄) + (σ²+μ)I)⁻¹ K(ȳ,x̄)`          |
//! | [`fit_koopman_kernel_value`]      | values, M×M     | `K(ȳ,x̄) (K(x̄,x̄) + μI)⁻¹`               |
//!
//! Wherever a Gram matrix is inverted the jitter `μ` of the [`NoiseModel`] is
//! added to its diagonal.

use std::fmt;

use crate::error::{KoopmanError, Result};
use crate::kernels::{gram, gram_self, Kernel, SharedKernel};
use crate::linalg::{
    cholesky, cholesky_solve, ensure_finite, ensure_nonempty, is_symmetric, pseudo_inverse,
    singular_values, solve_regularized, Matrix, Vector, DEFAULT_RANK_TOL, SYMMETRY_TOL,
};
use crate::observables::{feature_matrix_at, Dictionary, SnapshotSet};

/// Condition number of `Λ` above which the regularized EDMD switches to the
/// dual form, which never inverts `Λ`.
const WEIGHT_COND_LIMIT: f64 = 1e12;

/// Observation noise variance `σ²` and Gram jitter `μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
    pub mu: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, mu: f64) -> Result<Self> {
        for (name, v) in [("sigma2", sigma2), ("mu", mu)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(KoopmanError::invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(NoiseModel { sigma2, mu })
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            sigma2: 0.0,
            mu: 0.0,
        }
    }

    /// Total diagonal shift used by the posterior-mean solve.
    pub fn posterior_shift(&self) -> f64 {
        self.sigma2 + self.mu
    }
}

/// Which coordinates an operator matrix acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisTag {
    /// Coefficients over an N-member dictionary.
    Function(usize),
    /// Values at M training points.
    Value(usize),
    /// Coefficients over M kernel sections `K(·, x^(m))`.
    KernelSection(usize),
}

impl BasisTag {
    pub fn dim(self) -> usize {
        match self {
            BasisTag::Function(n) | BasisTag::Value(n) | BasisTag::KernelSection(n) => n,
        }
    }
}

#[derive(Clone)]
pub enum OperatorBasis {
    Function {
        n: usize,
    },
    Value {
        m: usize,
    },
    KernelSection {
        kernel: SharedKernel,
        centers: Matrix,
    },
}

impl fmt::Debug for OperatorBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorBasis::Function { n } => write!(f, "Function({n})"),
            OperatorBasis::Value { m } => write!(f, "Value({m})"),
            OperatorBasis::KernelSection { kernel, centers } => {
                write!(
                    f,
                    "KernelSection({}, M={})",
                    kernel.label(),
                    centers.nrows()
                )
            }
        }
    }
}

impl OperatorBasis {
    pub fn tag(&self) -> BasisTag {
        match self {
            OperatorBasis::Function { n } => BasisTag::Function(*n),
            OperatorBasis::Value { m } => BasisTag::Value(*m),
            OperatorBasis::KernelSection { centers, .. } => {
                BasisTag::KernelSection(centers.nrows())
            }
        }
    }
}

/// Data and noise settings an operator was fitted with.
#[derive(Clone, Debug)]
pub struct FitContext {
    pub snapshots: SnapshotSet,
    pub noise: NoiseModel,
}

/// A fitted finite-dimensional Koopman operator.
#[derive(Clone, Debug)]
pub struct KoopmanOperator {
    matrix: Matrix,
    basis: OperatorBasis,
    context: Option<FitContext>,
}

impl KoopmanOperator {
    fn new(matrix: Matrix, basis: OperatorBasis, context: Option<FitContext>) -> Self {
        let d = basis.tag().dim();
        debug_assert_eq!(matrix.shape(), (d, d));
        KoopmanOperator {
            matrix,
            basis,
            context,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn tag(&self) -> BasisTag {
        self.basis.tag()
    }

    pub fn context(&self) -> Option<&FitContext> {
        self.context.as_ref()
    }

    /// Maps coefficients (or values) `α` to `β = U α`.
    pub fn apply(&self, alpha: &CoefficientVector) -> Result<CoefficientVector> {
        if alpha.basis != self.tag() {
            return Err(KoopmanError::invalid(format!(
                "coefficient basis {:?} does not match operator basis {:?}",
                alpha.basis,
                self.tag()
            )));
        }
        CoefficientVector::new(&self.matrix * &alpha.values, self.tag())
    }

    /// For a kernel-section operator, evaluates `K(query, x̄) U α`: the
    /// estimate of `ψ̂ ∘ f` where `ψ̂ = K(·, x̄) α`.
    pub fn predict_sections(&self, alpha: &CoefficientVector, query: &Matrix) -> Result<Vector> {
        let OperatorBasis::KernelSection { kernel, centers } = &self.basis else {
            return Err(KoopmanError::invalid(
                "operator is not expressed in kernel sections",
            ));
        };
        let beta = self.apply(alpha)?;
        Ok(gram(kernel.as_ref(), query, centers)? * beta.values)
    }
}

/// Coefficients `α`/`β` of an observable in an operator's basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientVector {
    values: Vector,
    basis: BasisTag,
}

impl CoefficientVector {
    pub fn new(values: Vector, basis: BasisTag) -> Result<Self> {
        if values.len() != basis.dim() {
            return Err(KoopmanError::invalid(format!(
                "{} coefficients given for basis {basis:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KoopmanError::invalid("coefficients must be finite"));
        }
        Ok(CoefficientVector { values, basis })
    }

    pub fn values(&self) -> &Vector {
        &self.values
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn into_values(self) -> Vector {
        self.values
    }
}

fn check_feature_pair(px: &Matrix, py: &Matrix) -> Result<()> {
    if px.shape() != py.shape() {
        return Err(KoopmanError::invalid(format!(
            "P_x {:?} and P_y {:?} differ in shape",
            px.shape(),
            py.shape()
        )));
    }
    ensure_nonempty(px, "P_x")?;
    ensure_finite(px, "P_x")?;
    ensure_finite(py, "P_y")
}

/// Value-based least-squares operator `P_y P_x†` (M×M).
pub fn fit_dmd(px: &Matrix, py: &Matrix) -> Result<KoopmanOperator> {
    check_feature_pair(px, py)?;
    let m = px.nrows();
    let matrix = py * pseudo_inverse(px, DEFAULT_RANK_TOL)?;
    Ok(KoopmanOperator::new(
        matrix,
        OperatorBasis::Value { m },
        None,
    ))
}

/// Function-based least-squares operator `P_x† P_y` (N×N).
pub fn fit_edmd(px: &Matrix, py: &Matrix) -> Result<KoopmanOperator> {
    check_feature_pair(px, py)?;
    let n = px.ncols();
    let matrix = pseudo_inverse(px, DEFAULT_RANK_TOL)? * py;
    Ok(KoopmanOperator::new(
        matrix,
        OperatorBasis::Function { n },
        None,
    ))
}

fn symmetrize(a: &mut Matrix) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Validates `Λ` as symmetric positive definite and returns its condition
/// number.
fn check_weights(lambda: &Matrix, n: usize) -> Result<f64> {
    if lambda.shape() != (n, n) {
        return Err(KoopmanError::invalid(format!(
            "prior weight matrix must be {n}x{n}, got {:?}",
            lambda.shape()
        )));
    }
    ensure_finite(lambda, "prior weight matrix")?;
    if !is_symmetric(lambda, SYMMETRY_TOL) {
        return Err(KoopmanError::invalid(
            "prior weight matrix is not symmetric",
        ));
    }
    let eig = lambda.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) {
        return Err(KoopmanError::invalid(format!(
            "prior weight matrix is singular or indefinite (eigenvalue {lo:e})"
        )));
    }
    Ok(hi / lo)
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(KoopmanError::invalid(format!(
            "sigma2 must be finite and non-negative, got {sigma2}"
        )));
    }
    Ok(())
}

fn numerical_rank(a: &Matrix) -> Result<usize> {
    let s = singular_values(a)?;
    let s_max = s.max();
    Ok(s.iter()
        .filter(|&&v| v > DEFAULT_RANK_TOL * s_max && v > 0.0)
        .count())
}

/// Regularized EDMD in the primal form `(σ²Λ⁻¹ + P_xᵀP_x)⁻¹ P_xᵀP_y`.
pub fn fit_edmd_regularized_primal(
    px: &Matrix,
    py: &Matrix,
    lambda: &Matrix,
    sigma2: f64,
) -> Result<KoopmanOperator> {
    check_feature_pair(px, py)?;
    check_sigma2(sigma2)?;
    let n = px.ncols();
    check_weights(lambda, n)?;

    if sigma2 == 0.0 {
        let rank = numerical_rank(px)?;
        if rank < n {
            return Err(KoopmanError::RankDeficient { rank, required: n });
        }
    }

    let mut normal = px.tr_mul(px);
    if sigma2 > 0.0 {
        let lambda_inv = cholesky_solve(&cholesky(lambda)?, &Matrix::identity(n, n));
        normal += lambda_inv * sigma2;
    }
    symmetrize(&mut normal);
    let matrix = solve_regularized(&normal, 0.0, &px.tr_mul(py))?;
    Ok(KoopmanOperator::new(
        matrix,
        OperatorBasis::Function { n },
        None,
    ))
}

/// Regularized EDMD in the dual form `Λ P_xᵀ (P_x Λ P_xᵀ + σ²I)⁻¹ P_y`.
pub fn fit_edmd_regularized_dual(
    px: &Matrix,
    py: &Matrix,
    lambda: &Matrix,
    sigma2: f64,
) -> Result<KoopmanOperator> {
    check_feature_pair(px, py)?;
    check_sigma2(sigma2)?;
    let n = px.ncols();
    check_weights(lambda, n)?;

    let mut outer = px * lambda * px.transpose();
    symmetrize(&mut outer);
    let solved = solve_regularized(&outer, sigma2, py)?;
    let matrix = lambda * px.tr_mul(&solved);
    Ok(KoopmanOperator::new(
        matrix,
        OperatorBasis::Function { n },
        None,
    ))
}

/// Regularized EDMD, the MAP estimate under a Gaussian prior `β ~ N(0, Λ)`.
///
/// Uses the dual form when there are fewer snapshots than dictionary members
/// or `Λ` is badly conditioned, and the primal form otherwise (always primal
/// when `σ² = 0`).
pub fn fit_edmd_regularized(
    px: &Matrix,
    py: &Matrix,
    lambda: &Matrix,
    sigma2: f64,
) -> Result<KoopmanOperator> {
    check_feature_pair(px, py)?;
    check_sigma2(sigma2)?;
    let cond = check_weights(lambda, px.ncols())?;
    let use_dual = sigma2 > 0.0 && (px.nrows() < px.ncols() || cond > WEIGHT_COND_LIMIT);
    if use_dual {
        fit_edmd_regularized_dual(px, py, lambda, sigma2)
    } else {
        fit_edmd_regularized_primal(px, py, lambda, sigma2)
    }
}

/// `Ψ(query) U α` for a function-basis operator.
pub fn edmd_predict(
    op: &KoopmanOperator,
    d: &Dictionary,
    alpha: &CoefficientVector,
    query: &Matrix,
) -> Result<Vector> {
    match op.tag() {
        BasisTag::Function(n) if n == d.len() => {}
        tag => {
            return Err(KoopmanError::invalid(format!(
                "operator basis {tag:?} does not match a dictionary of {} members",
                d.len()
            )))
        }
    }
    let beta = op.apply(alpha)?;
    Ok(feature_matrix_at(d, query)? * beta.values)
}

/// Cached factorization of `K(x̄,x̄) + cI` for repeated posterior-mean solves
/// against one training set.
#[derive(Debug)]
pub struct GramSolver<'k> {
    kernel: &'k dyn Kernel,
    centers: Matrix,
    factor: Matrix,
}

impl<'k> GramSolver<'k> {
    pub fn new(kernel: &'k dyn Kernel, centers: &Matrix, shift: f64) -> Result<Self> {
        ensure_nonempty(centers, "training inputs")?;
        ensure_finite(centers, "training inputs")?;
        if !(shift >= 0.0) || !shift.is_finite() {
            return Err(KoopmanError::invalid(format!("invalid Gram shift {shift}")));
        }
        let mut g = gram_self(kernel, centers)?;
        for i in 0..g.nrows() {
            g[(i, i)] += shift;
        }
        Ok(GramSolver {
            kernel,
            centers: centers.clone(),
            factor: cholesky(&g)?,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.nrows() == 0
    }

    /// `(K(x̄,x̄) + cI)⁻¹ rhs`.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if rhs.nrows() != self.len() {
            return Err(KoopmanError::invalid(format!(
                "right-hand side has {} rows, expected {}",
                rhs.nrows(),
                self.len()
            )));
        }
        ensure_finite(rhs, "right-hand side")?;
        Ok(cholesky_solve(&self.factor, rhs))
    }

    pub fn solve_vec(&self, rhs: &Vector) -> Result<Vector> {
        let m = Matrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
        Ok(self.solve(&m)?.column(0).into_owned())
    }

    /// `K(query, x̄) (K(x̄,x̄) + cI)⁻¹ targets`.
    pub fn predict(&self, targets: &Vector, query: &Matrix) -> Result<Vector> {
        let weights = self.solve_vec(targets)?;
        Ok(gram(self.kernel, query, &self.centers)? * weights)
    }
}

/// Function-based kernel operator `(K(x̄,x̄) + (σ²+μ)I)⁻¹ K(ȳ,x̄)`, acting on
/// kernel-section coefficients.
pub fn fit_koopman_kernel_function(
    k: SharedKernel,
    s: &SnapshotSet,
    noise: NoiseModel,
) -> Result<KoopmanOperator> {
    let solver = GramSolver::new(k.as_ref(), s.inputs(), noise.posterior_shift())?;
    let cross = gram(k.as_ref(), s.outputs(), s.inputs())?;
    let matrix = solver.solve(&cross)?;
    let centers = s.inputs().clone();
    Ok(KoopmanOperator::new(
        matrix,
        OperatorBasis::KernelSection { kernel: k, centers },
        Some(FitContext {
            snapshots: s.clone(),
            noise,
        }),
    ))
}

/// Value-based kernel operator `K(ȳ,x̄) (K(x̄,x̄) + μI)⁻¹`, mapping `ψ(x̄)` to
/// the values of the projected observable at `ȳ`.
pub fn fit_koopman_kernel_value(
    k: &dyn Kernel,
    s: &SnapshotSet,
    noise: NoiseModel,
) -> Result<KoopmanOperator> {
    let solver = GramSolver::new(k, s.inputs(), noise.mu)?;
    let cross = gram(k, s.outputs(), s.inputs())?;
    // X = C G⁻¹  ⇔  Xᵀ = G⁻¹ Cᵀ, G symmetric
    let matrix = solver.solve(&cross.transpose())?.transpose();
    Ok(KoopmanOperator::new(
        matrix,
        OperatorBasis::Value { m: s.len() },
        Some(FitContext {
            snapshots: s.clone(),
            noise,
        }),
    ))
}

/// Coefficients `α = (K(x̄,x̄) + μI)⁻¹ ψ(x̄)` of the projection of `ψ` onto
/// the span of the kernel sections centred at `x̄`.
pub fn project_observable(
    k: &dyn Kernel,
    centers: &Matrix,
    values: &Vector,
    mu: f64,
) -> Result<CoefficientVector> {
    let solver = GramSolver::new(k, centers, mu)?;
    let alpha = solver.solve_vec(values)?;
    CoefficientVector::new(alpha, BasisTag::KernelSection(centers.nrows()))
}

/// Posterior-mean estimate of `g = ψ ∘ f` at `query` from the values
/// `ψ(ȳ)` measured at the snapshot outputs.
pub fn predict_composed(
    k: &dyn Kernel,
    s: &SnapshotSet,
    noise: NoiseModel,
    psi_y: &Vector,
    query: &Matrix,
) -> Result<Vector> {
    check_len(psi_y, s.len(), "ψ(ȳ)")?;
    GramSolver::new(k, s.inputs(), noise.posterior_shift())?.predict(psi_y, query)
}

/// Value-based pipeline: project `ψ` from its values at `x̄`, evaluate the
/// projection at `ȳ`, then reconstruct `ψ̂ ∘ f` at `query` by posterior mean.
pub fn predict_value_based(
    k: &dyn Kernel,
    s: &SnapshotSet,
    noise: NoiseModel,
    psi_x: &Vector,
    query: &Matrix,
) -> Result<Vector> {
    check_len(psi_x, s.len(), "ψ(x̄)")?;
    let op = fit_koopman_kernel_value(k, s, noise)?;
    let psi_hat_y = op.matrix() * psi_x;
    predict_composed(k, s, noise, &psi_hat_y, query)
}

fn check_len(v: &Vector, m: usize, what: &str) -> Result<()> {
    if v.len() != m {
        return Err(KoopmanError::invalid(format!(
            "{what} has length {}, expected {m}",
            v.len()
        )));
    }
    Ok(())
}
