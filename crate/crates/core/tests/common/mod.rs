//! Random instance generators and identity checks shared by the property
//! tests and the acceptance runner.

#![allow(dead_code)]

use std::sync::Arc;

use koopman::estimators::{
    edmd_predict, fit_dmd, fit_edmd, fit_edmd_regularized, fit_edmd_regularized_dual,
    fit_edmd_regularized_primal, fit_koopman_kernel_function, predict_composed, BasisTag,
    CoefficientVector, NoiseModel,
};
use koopman::kernels::{dictionary_kernel, gram, is_psd, rbf_kernel, Kernel};
use koopman::linalg::{
    pseudo_inverse, relative_diff, solve_regularized, Matrix, Vector, DEFAULT_RANK_TOL,
};
use koopman::observables::{
    benchmark_dictionary, feature_matrices, feature_matrix_at, SnapshotSet,
};
use proptest::prelude::*;

pub type Check = Result<(), String>;

pub fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..hi, rows * cols)
        .prop_map(move |v| Matrix::from_row_slice(rows, cols, &v))
}

pub fn vector(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vector> {
    prop::collection::vec(lo..hi, n).prop_map(Vector::from_vec)
}

/// `B Bᵀ / n + floor·I`, symmetric positive definite.
pub fn spd(n: usize, floor: f64) -> impl Strategy<Value = Matrix> {
    matrix(n, n, -1.0, 1.0).prop_map(move |b| {
        let mut s = &b * b.transpose() / n as f64;
        for i in 0..n {
            s[(i, i)] += floor;
        }
        (&s + s.transpose()) * 0.5
    })
}

fn scalar_points(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    matrix(n, 1, lo, hi)
}

fn within(what: &str, got: f64, tol: f64) -> Check {
    if got.is_finite() && got <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {got:.3e} exceeds {tol:.1e}"))
    }
}

fn vec_rel(a: &Vector, b: &Vector) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn err(e: koopman::KoopmanError) -> String {
    e.to_string()
}

// ---------------------------------------------------------------- linalg

#[derive(Clone, Debug)]
pub struct TallMatrix(pub Matrix);

/// Full column rank with probability one: rows ≥ cols.
pub fn tall_matrix() -> impl Strategy<Value = TallMatrix> {
    (1usize..7, 0usize..8)
        .prop_flat_map(|(c, extra)| matrix(c + extra, c, -1.0, 1.0))
        .prop_map(TallMatrix)
}

pub fn check_moore_penrose(TallMatrix(a): &TallMatrix) -> Check {
    let p = pseudo_inverse(a, DEFAULT_RANK_TOL).map_err(err)?;
    let apa = a * &p * a;
    within("‖AA†A − A‖/‖A‖", (&apa - a).norm() / a.norm(), 1e-10)?;
    let pap = &p * a * &p;
    within("‖A†AA† − A†‖/‖A†‖", (&pap - &p).norm() / p.norm(), 1e-10)?;
    let pa = &p * a;
    let ap = a * &p;
    within(
        "A†A asymmetry",
        (&pa - pa.transpose()).norm() / pa.norm(),
        1e-10,
    )?;
    within(
        "AA† asymmetry",
        (&ap - ap.transpose()).norm() / ap.norm(),
        1e-10,
    )
}

#[derive(Clone, Debug)]
pub struct LowRank(pub Matrix, pub usize);

pub fn low_rank_matrix() -> impl Strategy<Value = LowRank> {
    (2usize..8, 2usize..8, 1usize..4)
        .prop_flat_map(|(r, c, k)| {
            let k = k.min(r.min(c) - 1).max(1);
            (matrix(r, k, -1.0, 1.0), matrix(k, c, -1.0, 1.0), Just(k))
        })
        .prop_map(|(b, c, k)| LowRank(b * c, k))
}

pub fn check_low_rank_pinv(LowRank(a, _): &LowRank) -> Check {
    let p = pseudo_inverse(a, 1e-10).map_err(err)?;
    within("‖AA†A − A‖/‖A‖", (a * &p * a - a).norm() / a.norm(), 1e-10)?;
    within(
        "‖A†AA† − A†‖/‖A†‖",
        (&p * a * &p - &p).norm() / p.norm(),
        1e-10,
    )
}

#[derive(Clone, Debug)]
pub struct RegularizedSystem {
    pub g: Matrix,
    pub c: f64,
    pub b: Matrix,
}

pub fn regularized_system() -> impl Strategy<Value = RegularizedSystem> {
    (1usize..10, 1usize..4)
        .prop_flat_map(|(n, k)| (spd(n, 0.05), 0.0..1.0f64, matrix(n, k, -2.0, 2.0)))
        .prop_map(|(g, c, b)| RegularizedSystem { g, c, b })
}

pub fn check_solve_regularized(inst: &RegularizedSystem) -> Check {
    let n = inst.g.nrows();
    let x = solve_regularized(&inst.g, inst.c, &inst.b).map_err(err)?;
    let shifted = &inst.g + Matrix::identity(n, n) * inst.c;
    let reference = pseudo_inverse(&shifted, DEFAULT_RANK_TOL).map_err(err)? * &inst.b;
    within(
        "solve vs pseudo-inverse",
        relative_diff(&x, &reference),
        1e-8,
    )?;
    within(
        "relative residual",
        (&shifted * &x - &inst.b).norm() / inst.b.norm(),
        1e-8,
    )
}

// --------------------------------------------------------------- kernels

#[derive(Clone, Debug)]
pub struct RbfGram {
    pub rho: f64,
    pub a: Matrix,
}

pub fn rbf_gram() -> impl Strategy<Value = RbfGram> {
    (0.01..10.0f64, 1usize..25, 1usize..3)
        .prop_flat_map(|(rho, m, d)| (Just(rho), matrix(m, d, -4.0, 4.0)))
        .prop_map(|(rho, a)| RbfGram { rho, a })
}

#[derive(Clone, Debug)]
pub struct DictGram {
    pub lambda: Matrix,
    pub a: Matrix,
    pub b: Matrix,
}

pub fn dict_gram() -> impl Strategy<Value = DictGram> {
    (1usize..20, 1usize..20)
        .prop_flat_map(|(m, k)| {
            (
                spd(8, 1e-3),
                scalar_points(m, -3.0, 3.0),
                scalar_points(k, -3.0, 3.0),
            )
        })
        .prop_map(|(lambda, a, b)| DictGram { lambda, a, b })
}

fn check_gram_self(g: &Matrix) -> Check {
    let scale = g.amax().max(f64::MIN_POSITIVE);
    within("Gram asymmetry", (g - g.transpose()).amax() / scale, 1e-12)?;
    let sym = (g + g.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    let trace = g.trace();
    if min_eig >= -1e-8 * trace && is_psd(g, 1e-8) {
        Ok(())
    } else {
        Err(format!(
            "min eigenvalue {min_eig:.3e} with trace {trace:.3e}"
        ))
    }
}

pub fn check_rbf_gram(inst: &RbfGram) -> Check {
    let k = rbf_kernel(inst.rho).map_err(err)?;
    let g = gram(&k, &inst.a, &inst.a).map_err(err)?;
    for i in 0..g.nrows() {
        if g[(i, i)] != 1.0 {
            return Err(format!("diagonal entry {} is {}", i, g[(i, i)]));
        }
    }
    check_gram_self(&g)
}

pub fn check_dict_gram(inst: &DictGram) -> Check {
    let d = benchmark_dictionary();
    let k = dictionary_kernel(&d, &inst.lambda).map_err(err)?;
    check_gram_self(&gram(&k, &inst.a, &inst.a).map_err(err)?)?;
    let g = gram(&k, &inst.a, &inst.b).map_err(err)?;
    let pa = feature_matrix_at(&d, &inst.a).map_err(err)?;
    let pb = feature_matrix_at(&d, &inst.b).map_err(err)?;
    let factored = pa * &inst.lambda * pb.transpose();
    within("Gram vs P_A Λ P_Bᵀ", relative_diff(&g, &factored), 1e-12)
}

#[derive(Clone, Debug)]
pub struct RbfDecay {
    pub rho: f64,
    pub a: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn rbf_decay() -> impl Strategy<Value = RbfDecay> {
    (0.01..5.0f64, -5.0..5.0f64, 0.0..3.0f64, 0.0..3.0f64).prop_map(|(rho, a, x, y)| RbfDecay {
        rho,
        a,
        d1: x.min(y),
        d2: x.max(y),
    })
}

pub fn check_rbf_decay(inst: &RbfDecay) -> Check {
    let k = rbf_kernel(inst.rho).map_err(err)?;
    let near = k.eval(&[inst.a], &[inst.a + inst.d1]).map_err(err)?;
    let far = k.eval(&[inst.a], &[inst.a + inst.d2]).map_err(err)?;
    let back = k.eval(&[inst.a + inst.d2], &[inst.a]).map_err(err)?;
    if near >= far && far == back && near <= 1.0 && far >= 0.0 {
        Ok(())
    } else {
        Err(format!("K at {} = {near}, at {} = {far}", inst.d1, inst.d2))
    }
}

// ------------------------------------------------------------ estimators

#[derive(Clone, Debug)]
pub struct FeaturePair {
    pub px: Matrix,
    pub py: Matrix,
}

/// `P_x` with full column rank (M ≥ N + 2).
pub fn full_rank_pair() -> impl Strategy<Value = FeaturePair> {
    (1usize..7, 2usize..14)
        .prop_flat_map(|(n, extra)| {
            let m = n + extra;
            (matrix(m, n, -1.0, 1.0), matrix(m, n, -1.0, 1.0))
        })
        .prop_map(|(px, py)| FeaturePair { px, py })
}

/// Arbitrary shapes, wide or tall.
pub fn any_pair() -> impl Strategy<Value = FeaturePair> {
    (1usize..10, 1usize..10)
        .prop_flat_map(|(m, n)| (matrix(m, n, -1.0, 1.0), matrix(m, n, -1.0, 1.0)))
        .prop_map(|(px, py)| FeaturePair { px, py })
}

/// Regularized EDMD with `σ² = 0`, `Λ = I` against plain EDMD.
pub fn check_unregularized_limit(inst: &FeaturePair) -> Check {
    let n = inst.px.ncols();
    let reg =
        fit_edmd_regularized(&inst.px, &inst.py, &Matrix::identity(n, n), 0.0).map_err(err)?;
    let plain = fit_edmd(&inst.px, &inst.py).map_err(err)?;
    within(
        "regularized(σ²=0) vs EDMD",
        relative_diff(reg.matrix(), plain.matrix()),
        1e-8,
    )
}

#[derive(Clone, Debug)]
pub struct DualInstance {
    pub px: Matrix,
    pub py: Matrix,
    pub lambda: Matrix,
    pub sigma2: f64,
}

pub fn dual_instance() -> impl Strategy<Value = DualInstance> {
    (1usize..12, 1usize..9)
        .prop_flat_map(|(m, n)| {
            (
                matrix(m, n, -1.0, 1.0),
                matrix(m, n, -1.0, 1.0),
                spd(n, 0.1),
                0.01..2.0f64,
            )
        })
        .prop_map(|(px, py, lambda, sigma2)| DualInstance {
            px,
            py,
            lambda,
            sigma2,
        })
}

pub fn check_primal_dual(inst: &DualInstance) -> Check {
    let primal =
        fit_edmd_regularized_primal(&inst.px, &inst.py, &inst.lambda, inst.sigma2).map_err(err)?;
    let dual =
        fit_edmd_regularized_dual(&inst.px, &inst.py, &inst.lambda, inst.sigma2).map_err(err)?;
    within(
        "primal vs dual",
        relative_diff(primal.matrix(), dual.matrix()),
        1e-8,
    )
}

#[derive(Clone, Debug)]
pub struct DictionaryPrediction {
    pub xs: Matrix,
    pub ys: Matrix,
    pub lambda: Matrix,
    pub sigma2: f64,
    pub alpha: Vector,
    pub query: Matrix,
}

pub fn dictionary_prediction() -> impl Strategy<Value = DictionaryPrediction> {
    (2usize..16, 1usize..12)
        .prop_flat_map(|(m, q)| {
            (
                scalar_points(m, -2.5, 2.5),
                scalar_points(m, -2.5, 2.5),
                spd(8, 0.2),
                0.05..1.0f64,
                vector(8, -1.0, 1.0),
                scalar_points(q, -3.0, 3.0),
            )
        })
        .prop_map(
            |(xs, ys, lambda, sigma2, alpha, query)| DictionaryPrediction {
                xs,
                ys,
                lambda,
                sigma2,
                alpha,
                query,
            },
        )
}

/// `Ψ(x) U_f^(r) α` against the kernel posterior mean fed with `P_y α`.
pub fn check_dictionary_prediction(inst: &DictionaryPrediction) -> Check {
    let d = benchmark_dictionary();
    let s = SnapshotSet::new(inst.xs.clone(), inst.ys.clone()).map_err(err)?;
    let (px, py) = feature_matrices(&d, &s).map_err(err)?;
    let op = fit_edmd_regularized(&px, &py, &inst.lambda, inst.sigma2).map_err(err)?;
    let alpha = CoefficientVector::new(inst.alpha.clone(), BasisTag::Function(8)).map_err(err)?;
    let via_edmd = edmd_predict(&op, &d, &alpha, &inst.query).map_err(err)?;

    let k = dictionary_kernel(&d, &inst.lambda).map_err(err)?;
    let noise = NoiseModel::new(inst.sigma2, 0.0).map_err(err)?;
    let psi_y = &py * &inst.alpha;
    let via_kernel = predict_composed(&k, &s, noise, &psi_y, &inst.query).map_err(err)?;
    within(
        "EDMD vs kernel prediction",
        vec_rel(&via_kernel, &via_edmd),
        1e-8,
    )
}

#[derive(Clone, Debug)]
pub struct SectionInstance {
    pub rho: f64,
    pub xs: Matrix,
    pub ys: Matrix,
    pub sigma2: f64,
    pub mu: f64,
    pub alpha: Vector,
    pub query: Matrix,
}

pub fn section_instance() -> impl Strategy<Value = SectionInstance> {
    (1usize..14, 1usize..10)
        .prop_flat_map(|(m, q)| {
            (
                0.2..3.0f64,
                scalar_points(m, 0.0, 5.0),
                scalar_points(m, 0.0, 5.0),
                0.01..1.0f64,
                0.0..1e-3f64,
                vector(m, -1.0, 1.0),
                scalar_points(q, -1.0, 6.0),
            )
        })
        .prop_map(|(rho, xs, ys, sigma2, mu, alpha, query)| SectionInstance {
            rho,
            xs,
            ys,
            sigma2,
            mu,
            alpha,
            query,
        })
}

/// `K(q,x̄) (U α)` against the posterior mean fed with `K(ȳ,x̄) α`.
pub fn check_section_consistency(inst: &SectionInstance) -> Check {
    let k = Arc::new(rbf_kernel(inst.rho).map_err(err)?);
    let s = SnapshotSet::new(inst.xs.clone(), inst.ys.clone()).map_err(err)?;
    let noise = NoiseModel::new(inst.sigma2, inst.mu).map_err(err)?;
    let op = fit_koopman_kernel_function(k.clone(), &s, noise).map_err(err)?;
    let alpha = CoefficientVector::new(inst.alpha.clone(), BasisTag::KernelSection(s.len()))
        .map_err(err)?;
    let via_operator = op.predict_sections(&alpha, &inst.query).map_err(err)?;

    let psi_hat_y = gram(k.as_ref(), s.outputs(), s.inputs()).map_err(err)? * &inst.alpha;
    let direct = predict_composed(k.as_ref(), &s, noise, &psi_hat_y, &inst.query).map_err(err)?;
    let scale = direct.norm().max(via_operator.norm());
    if scale == 0.0 {
        return Ok(());
    }
    within(
        "operator vs direct posterior mean",
        (&via_operator - &direct).norm() / scale,
        1e-10,
    )
}

pub fn check_residual_orthogonality(inst: &FeaturePair) -> Check {
    let FeaturePair { px, py } = inst;
    let scale = py.norm();
    let dmd = fit_dmd(px, py).map_err(err)?;
    let r_dmd = (py - dmd.matrix() * px) * px.transpose();
    within("DMD residual · P_xᵀ", r_dmd.norm() / scale, 1e-8)?;
    if px.nrows() >= px.ncols() + 2 {
        let edmd = fit_edmd(px, py).map_err(err)?;
        let r_edmd = (py - px * edmd.matrix()).transpose() * px;
        within("EDMD residualᵀ · P_x", r_edmd.norm() / scale, 1e-8)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Interpolation {
    pub rho: f64,
    pub xs: Matrix,
    pub ys: Matrix,
    pub psi_y: Vector,
}

/// Inputs at least one unit apart so the RBF Gram is well conditioned.
pub fn interpolation() -> impl Strategy<Value = Interpolation> {
    (1usize..12)
        .prop_flat_map(|m| {
            (
                1.0..4.0f64,
                vector(m, 0.0, 0.3),
                scalar_points(m, 0.0, 10.0),
                vector(m, -3.0, 3.0),
            )
        })
        .prop_map(|(rho, jitter, ys, psi_y)| {
            let m = jitter.len();
            let xs = Matrix::from_fn(m, 1, |i, _| i as f64 * 1.0 + jitter[i]);
            Interpolation { rho, xs, ys, psi_y }
        })
}

pub fn check_interpolation(inst: &Interpolation) -> Check {
    let k = rbf_kernel(inst.rho).map_err(err)?;
    let s = SnapshotSet::new(inst.xs.clone(), inst.ys.clone()).map_err(err)?;
    let noise = NoiseModel::new(0.0, 0.0).map_err(err)?;
    let fitted = predict_composed(&k, &s, noise, &inst.psi_y, &inst.xs).map_err(err)?;
    within(
        "max |ĝ(x̄) − ψ(ȳ)|",
        (&fitted - &inst.psi_y).amax() / inst.psi_y.amax().max(1.0),
        1e-8,
    )
}
