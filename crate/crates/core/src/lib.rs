//! Data-driven estimation of Koopman operators for discrete-time nonlinear
//! systems `x_{t+1} = f(x_t) + ω_t`.
//!
//! The crate covers the classical least-squares estimators (DMD on observable
//! values, EDMD on dictionary coefficients), a Bayesian regularized EDMD, and
//! kernel estimators that work on the span of kernel sections centred at the
//! data, in both a function-based and a value-based form. The [`harness`]
//! module runs the fixed-dictionary versus Gaussian-kernel benchmark.
//!
//! ```
//! use koopman::prelude::*;
//!
//! let sys = benchmark_system();
//! let plan = SamplingPlan { n_traj: 5, traj_len: 10, init_low: 0.0, init_high: 7.0, sigma_t: 0.0, seed: 1 };
//! let data = generate_snapshots(&sys, &plan).unwrap();
//!
//! let (px, py) = feature_matrices(&benchmark_dictionary(), &data).unwrap();
//! let edmd = fit_edmd(&px, &py).unwrap();
//! assert_eq!(edmd.matrix().shape(), (8, 8));
//! ```
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory (`cargo run -p koopman --example <name>`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod observables;
pub mod simulation;

pub use error::{KoopmanError, Result};

pub mod prelude {
    pub use crate::error::{KoopmanError, Result};
    pub use crate::estimators::{
        edmd_predict, fit_dmd, fit_edmd, fit_edmd_regularized, fit_edmd_regularized_dual,
        fit_edmd_regularized_primal, fit_koopman_kernel_function, fit_koopman_kernel_value,
        predict_composed, predict_value_based, project_observable, BasisTag, CoefficientVector,
        GramSolver, KoopmanOperator, NoiseModel, OperatorBasis,
    };
    pub use crate::kernels::{dictionary_kernel, gram, rbf_kernel, Kernel, SharedKernel};
    pub use crate::linalg::{pseudo_inverse, solve_regularized, Matrix, Vector, DEFAULT_RANK_TOL};
    pub use crate::observables::{
        benchmark_dictionary, feature_matrices, feature_row, hill_dictionary, observable_values,
        BasisSpec, Dictionary, Observable, SnapshotSet,
    };
    pub use crate::simulation::{
        benchmark_map, benchmark_system, generate_snapshots, simulate_trajectory, DynamicalSystem,
        SamplingPlan,
    };
}
