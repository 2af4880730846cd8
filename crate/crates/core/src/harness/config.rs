use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{KoopmanError, Result};
use crate::estimators::NoiseModel;
use crate::kernels::{KernelSpec, RhoSpec};
use crate::observables::{BasisSpec, Observable};
use crate::simulation::{benchmark_system, DynamicalSystem, SamplingPlan};

const BENCHMARK_CONFIG: &str = include_str!("../../configs/paper.json");

/// Full description of a benchmark experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    /// Trajectory layout; `sigma_t` and `seed` are overridden per run.
    pub sampling: SamplingPlan,
    /// Process-noise standard deviations, one scenario each.
    pub noise_levels: Vec<f64>,
    pub dictionary: Vec<BasisSpec>,
    pub methods: Vec<MethodSpec>,
    pub observables: Vec<ObservableSpec>,
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub rho_grid: Vec<f64>,
    #[serde(default = "default_validation_fraction")]
    pub validation_fraction: f64,
    pub monte_carlo_count: usize,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_validation_fraction() -> f64 {
    0.2
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `x ↦ −x + 3/(1+x²) + 0.5 sin(2x)`.
    Benchmark,
}

impl SystemSpec {
    pub fn build(&self) -> DynamicalSystem {
        match self {
            SystemSpec::Benchmark => benchmark_system(),
        }
    }
}

/// One reconstruction method: a kernel plus its noise settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub kernel: KernelSpec,
    pub sigma2: Sigma2Spec,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma2Spec {
    Value(f64),
    Named(Sigma2Keyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma2Keyword {
    /// Use `σ_T²` of the scenario, or `μ` when the scenario is noiseless.
    NoiseVariance,
}

impl MethodSpec {
    /// Noise model for a scenario with process-noise standard deviation
    /// `sigma_t`.
    pub fn noise_model(&self, sigma_t: f64) -> Result<NoiseModel> {
        let sigma2 = match self.sigma2 {
            Sigma2Spec::Value(v) => v,
            Sigma2Spec::Named(Sigma2Keyword::NoiseVariance) => {
                if sigma_t > 0.0 {
                    sigma_t * sigma_t
                } else {
                    self.mu
                }
            }
        };
        NoiseModel::new(sigma2, self.mu)
    }

    pub fn uses_rho_grid(&self) -> bool {
        matches!(
            self.kernel,
            KernelSpec::Rbf {
                rho: RhoSpec::Named(_)
            }
        )
    }
}

/// Target observables of the benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// `ψ(x) = x`; reconstructing `ψ ∘ f` recovers the transition map.
    State,
    /// `J(x) = ‖x − x₀‖²`.
    QuadraticCost { target: Vec<f64> },
}

impl ObservableSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObservableSpec::State => "state",
            ObservableSpec::QuadraticCost { .. } => "cost",
        }
    }

    pub fn build(&self) -> Observable {
        match self {
            ObservableSpec::State => Observable::state(0),
            ObservableSpec::QuadraticCost { target } => Observable::quadratic_cost(target.clone()),
        }
    }
}

/// Where reconstruction errors are measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSpec {
    pub low: f64,
    pub high: f64,
    pub points: usize,
    #[serde(default)]
    pub mode: EvaluationMode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluationMode {
    /// `points` equispaced values on `[low, high]`.
    #[default]
    Grid,
    /// `points` states visited by fresh noiseless trajectories started
    /// uniformly in `[low, high]`, using the sampling plan's trajectory length.
    TestTrajectories,
}

impl EvaluationSpec {
    pub fn grid(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.low],
            n => {
                let h = (self.high - self.low) / (n - 1) as f64;
                (0..n).map(|i| self.low + h * i as f64).collect()
            }
        }
    }
}

impl ExperimentConfig {
    /// The built-in benchmark configuration (`configs/paper.json`).
    pub fn benchmark() -> Self {
        ExperimentConfig::from_json(BENCHMARK_CONFIG).expect("bundled config is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KoopmanError::io(path, e))?;
        ExperimentConfig::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(KoopmanError::Config(m));
        if self.evaluation.points == 0 {
            return cfg_err("evaluation grid is empty".into());
        }
        if !(self.evaluation.low < self.evaluation.high) && self.evaluation.points > 1 {
            return cfg_err("evaluation interval must have low < high".into());
        }
        if self.noise_levels.is_empty() {
            return cfg_err("at least one noise level is required".into());
        }
        if self
            .noise_levels
            .iter()
            .any(|s| !(*s >= 0.0) || !s.is_finite())
        {
            return cfg_err("noise levels must be finite and non-negative".into());
        }
        if self.methods.is_empty() || self.observables.is_empty() {
            return cfg_err("at least one method and one observable are required".into());
        }
        let mut labels = HashSet::new();
        for m in &self.methods {
            if !labels.insert(m.label.as_str()) {
                return cfg_err(format!("duplicate method label `{}`", m.label));
            }
            if !(m.mu >= 0.0) || !m.mu.is_finite() {
                return cfg_err(format!("method `{}` has invalid mu", m.label));
            }
            if let Sigma2Spec::Value(v) = m.sigma2 {
                if !(v >= 0.0) || !v.is_finite() {
                    return cfg_err(format!("method `{}` has invalid sigma2", m.label));
                }
            }
            if let KernelSpec::Rbf {
                rho: RhoSpec::Value(r),
            } = m.kernel
            {
                if !(r > 0.0) || !r.is_finite() {
                    return cfg_err(format!("method `{}` has invalid rho", m.label));
                }
            }
        }
        let mut names = HashSet::new();
        for o in &self.observables {
            if !names.insert(o.name()) {
                return cfg_err(format!("duplicate observable `{}`", o.name()));
            }
        }
        if self.methods.iter().any(MethodSpec::uses_rho_grid) {
            if self.rho_grid.is_empty() {
                return cfg_err("rho_grid must be non-empty for grid-searched RBF kernels".into());
            }
            if self.rho_grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                return cfg_err("rho_grid entries must be positive".into());
            }
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return cfg_err("validation_fraction must lie in (0, 1)".into());
        }
        if self.monte_carlo_count == 0 {
            return cfg_err("monte_carlo_count must be at least 1".into());
        }
        if self.dictionary.is_empty()
            && self
                .methods
                .iter()
                .any(|m| matches!(m.kernel, KernelSpec::Dictionary { .. }))
        {
            return cfg_err("dictionary kernel requested with an empty dictionary".into());
        }
        self.sampling.validate()
    }
}
