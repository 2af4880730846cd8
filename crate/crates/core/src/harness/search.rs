use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{KoopmanError, Result};
use crate::estimators::{GramSolver, NoiseModel};
use crate::kernels::rbf_kernel;
use crate::linalg::Vector;
use crate::observables::SnapshotSet;

use super::normalized_l2_error;

/// Seeded train/validation partition of snapshot pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationSplit {
    pub fraction: f64,
    pub seed: u64,
}

impl ValidationSplit {
    /// Returns `(train, validation)` pair indices. Both are non-empty and
    /// sorted.
    pub fn indices(&self, m: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if m < 2 {
            return Err(KoopmanError::Config(format!(
                "cannot split {m} snapshot pair(s) for validation"
            )));
        }
        let n_val = ((m as f64 * self.fraction).round() as usize).clamp(1, m - 1);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let mut val = idx[..n_val].to_vec();
        let mut train = idx[n_val..].to_vec();
        val.sort_unstable();
        train.sort_unstable();
        Ok((train, val))
    }
}

/// Outcome of a grid search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoChoice {
    pub rho: f64,
    pub score: f64,
}

/// Picks the candidate with the smallest score; ties go to the smaller
/// candidate. Candidates whose scoring fails are skipped.
pub fn select_candidate<F>(candidates: &[f64], mut score: F) -> Result<RhoChoice>
where
    F: FnMut(f64) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(KoopmanError::Config("no candidates to search".into()));
    }
    let mut best: Option<RhoChoice> = None;
    let mut last_err = None;
    for &rho in candidates {
        match score(rho) {
            Ok(s) if s.is_finite() => {
                let better = match best {
                    None => true,
                    Some(b) => s < b.score || (s == b.score && rho < b.rho),
                };
                if better {
                    best = Some(RhoChoice { rho, score: s });
                }
            }
            Ok(s) => last_err = Some(format!("non-finite score {s} for rho = {rho}")),
            Err(e) => last_err = Some(format!("rho = {rho}: {e}")),
        }
    }
    best.ok_or_else(|| {
        KoopmanError::Config(format!(
            "every candidate failed ({})",
            last_err.unwrap_or_default()
        ))
    })
}

/// Chooses the RBF parameter by fitting the posterior-mean predictor on the
/// training pairs and scoring the normalized error of its predictions of
/// `targets` (the observable values at `ȳ`) on the held-out pairs.
pub fn grid_search_rho(
    data: &SnapshotSet,
    targets: &Vector,
    noise: NoiseModel,
    candidates: &[f64],
    split: ValidationSplit,
) -> Result<RhoChoice> {
    if targets.len() != data.len() {
        return Err(KoopmanError::invalid(format!(
            "{} targets for {} snapshot pairs",
            targets.len(),
            data.len()
        )));
    }
    if let [only] = candidates {
        return Ok(RhoChoice {
            rho: *only,
            score: f64::NAN,
        });
    }
    let (train_idx, val_idx) = split.indices(data.len())?;
    let train = data.select(&train_idx)?;
    let val = data.select(&val_idx)?;
    let train_targets = targets.select_rows(&train_idx);
    let val_targets = targets.select_rows(&val_idx);

    select_candidate(candidates, |rho| {
        let k = rbf_kernel(rho)?;
        let solver = GramSolver::new(&k, train.inputs(), noise.posterior_shift())?;
        let pred = solver.predict(&train_targets, val.inputs())?;
        normalized_l2_error(&pred, &val_targets)
    })
}
