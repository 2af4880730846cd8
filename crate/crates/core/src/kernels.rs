//! Positive-semidefinite kernels and Gram matrix assembly.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{KoopmanError, Result};
use crate::linalg::{ensure_finite, is_symmetric, Matrix, SYMMETRY_TOL};
use crate::observables::{copy_row, feature_row, Dictionary};

/// A symmetric positive-semidefinite function `K(a, b)` of two states.
pub trait Kernel: Debug + Send + Sync {
    fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64>;

    fn label(&self) -> String;
}

pub type SharedKernel = Arc<dyn Kernel>;

/// `K(a, b) = Ψ(a) Λ Ψ(b)ᵀ` for a fixed dictionary.
#[derive(Clone, Debug)]
pub struct DictionaryKernel {
    dictionary: Dictionary,
    weights: Matrix,
}

impl DictionaryKernel {
    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }
}

impl Kernel for DictionaryKernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let pa = feature_row(&self.dictionary, a)?;
        let pb = feature_row(&self.dictionary, b)?;
        Ok((pa * &self.weights).dot(&pb))
    }

    fn label(&self) -> String {
        format!("dictionary(N={})", self.dictionary.len())
    }
}

/// Builds the dictionary-induced kernel with weight matrix `Λ`.
pub fn dictionary_kernel(d: &Dictionary, lambda: &Matrix) -> Result<DictionaryKernel> {
    let n = d.len();
    if lambda.shape() != (n, n) {
        return Err(KoopmanError::invalid(format!(
            "weight matrix must be {n}x{n}, got {:?}",
            lambda.shape()
        )));
    }
    ensure_finite(lambda, "kernel weight matrix")?;
    if !is_symmetric(lambda, SYMMETRY_TOL) {
        return Err(KoopmanError::invalid(
            "kernel weight matrix is not symmetric",
        ));
    }
    let min_eig = lambda.clone().symmetric_eigenvalues().min();
    if min_eig < -1e-12 * lambda.trace().abs().max(1.0) {
        return Err(KoopmanError::invalid(format!(
            "kernel weight matrix is indefinite (eigenvalue {min_eig:e})"
        )));
    }
    Ok(DictionaryKernel {
        dictionary: d.clone(),
        weights: lambda.clone(),
    })
}

/// Gaussian RBF `K(a, b) = exp(−ρ‖a − b‖²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RbfKernel {
    rho: f64,
}

impl RbfKernel {
    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Kernel for RbfKernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(KoopmanError::invalid(format!(
                "RBF kernel arguments differ in dimension ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        Ok((-self.rho * d2).exp())
    }

    fn label(&self) -> String {
        format!("rbf(rho={})", self.rho)
    }
}

pub fn rbf_kernel(rho: f64) -> Result<RbfKernel> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(KoopmanError::invalid(format!(
            "RBF parameter must be positive and finite, got {rho}"
        )));
    }
    Ok(RbfKernel { rho })
}

/// Matrix of pairwise evaluations, entry (i, j) = `K(a_i, b_j)`.
pub fn gram(k: &dyn Kernel, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(KoopmanError::invalid(format!(
            "Gram arguments differ in state dimension ({} vs {})",
            a.ncols(),
            b.ncols()
        )));
    }
    let mut g = Matrix::zeros(a.nrows(), b.nrows());
    let mut ra = vec![0.0; a.ncols()];
    let mut rb = vec![0.0; b.ncols()];
    for i in 0..a.nrows() {
        copy_row(a, i, &mut ra);
        for j in 0..b.nrows() {
            copy_row(b, j, &mut rb);
            g[(i, j)] = k.eval(&ra, &rb)?;
        }
    }
    Ok(g)
}

/// True when the smallest eigenvalue of the symmetric matrix `g` is at least
/// `−rel_tol · trace(g)`.
pub fn is_psd(g: &Matrix, rel_tol: f64) -> bool {
    if !g.is_square() || !is_symmetric(g, 1e-12) {
        return false;
    }
    let min = g.clone().symmetric_eigenvalues().min();
    min >= -rel_tol * g.trace().abs()
}

/// [`gram`] of a set of points with itself; in debug builds also asserts
/// that the result is positive semidefinite.
pub fn gram_self(k: &dyn Kernel, a: &Matrix) -> Result<Matrix> {
    let g = gram(k, a, a)?;
    debug_assert!(is_psd(&g, 1e-8), "Gram matrix of {} is not PSD", k.label());
    Ok(g)
}

/// Declarative kernel description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Dictionary {
        #[serde(default)]
        lambda: WeightSpec,
    },
    Rbf {
        rho: RhoSpec,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Identity,
}

/// A fixed RBF parameter, or `"grid"` to pick one by validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Value(f64),
    Named(RhoKeyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoKeyword {
    Grid,
}
