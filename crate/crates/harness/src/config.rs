//! Declarative experiment descriptions. Configs are TOML with explicit
//! keys; unknown keys are errors, not warnings, so that every recorded
//! digest pins down exactly what ran.

use std::fs;
use std::path::{Path, PathBuf};

use proxnet::Regularizer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// MSD-vs-regularized-solution curves for a sweep of step sizes.
    TheoremIllustration,
    /// Steady-state MSD against the local models over an eta grid,
    /// sparse-difference models.
    EtaSweepSparse,
    /// Same sweep with smoothly varying models.
    EtaSweepSmooth,
    /// Logistic classification on the ingested weather data.
    Weather,
    /// Free-form combination of the pieces above.
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum TopologyConfig {
    /// Ring of `agents` nodes, `rho = 1/2` per link.
    Ring { agents: usize },
    /// k-NN graph over seeded uniform points in the unit square.
    KnnPoints { agents: usize, k_neighbors: usize },
    /// k-NN graph over the dataset's station coordinates (weather only).
    KnnStations { k_neighbors: usize },
    /// Structured text file; see the `topology` module for the format.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// MSE costs, ground truths differing by one-hot perturbations.
    MseSparse,
    /// MSE costs, ground truths damped through the graph Laplacian.
    MseSmooth,
    /// Logistic costs with sparse cross-agent differences and
    /// pre-recorded train/test streams.
    LogisticSparse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsConfig {
    pub kind: ModelKind,
    pub dimension: usize,
    /// Range for the per-agent feature variances.
    #[serde(default = "default_sigma_u_sq")]
    pub sigma_u_sq_range: (f64, f64),
    /// Range for the per-agent noise variances (MSE kinds).
    #[serde(default = "default_sigma_v_sq")]
    pub sigma_v_sq_range: (f64, f64),
    /// Laplacian damping strength (mse_smooth).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Scale of the shared weight vector (logistic_sparse).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_scale: Option<f64>,
    /// Ridge parameter (logistic kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    /// Recorded stream lengths (logistic_sparse).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_samples: Option<usize>,
}

fn default_sigma_u_sq() -> (f64, f64) {
    (1.0, 1.5)
}

fn default_sigma_v_sq() -> (f64, f64) {
    (0.15, 0.25)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum RegularizerConfig {
    L1,
    ReweightedL1 { epsilon: f64 },
    L0 { lambda: f64 },
    ElasticNet { beta: f64 },
    SquaredL2,
}

impl RegularizerConfig {
    pub fn to_core(&self) -> Regularizer {
        match *self {
            RegularizerConfig::L1 => Regularizer::L1,
            RegularizerConfig::ReweightedL1 { epsilon } => Regularizer::ReweightedL1 { epsilon },
            RegularizerConfig::L0 { lambda } => Regularizer::L0 { lambda },
            RegularizerConfig::ElasticNet { beta } => Regularizer::ElasticNet { beta },
            RegularizerConfig::SquaredL2 => Regularizer::SquaredL2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RegularizerConfig::L1 => "l1".into(),
            RegularizerConfig::ReweightedL1 { epsilon } => format!("reweighted_l1(eps={epsilon})"),
            RegularizerConfig::L0 { lambda } => format!("l0(lambda={lambda})"),
            RegularizerConfig::ElasticNet { beta } => format!("elastic_net(beta={beta})"),
            RegularizerConfig::SquaredL2 => "squared_l2".into(),
        }
    }
}

/// How the co-regularization strength is chosen for each step size.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum EtaMode {
    /// `eta = kappa * mu^alpha`.
    Scaled { kappa: f64, alpha: f64 },
    /// Explicit grid, one run per value.
    Grid { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zeros,
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Step sizes; each is one sweep point.
    pub mu: Vec<f64>,
    pub eta: EtaMode,
    pub regularizers: Vec<RegularizerConfig>,
    /// Iterations per run; for weather runs this defaults to the
    /// training-stream length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default = "default_init")]
    pub init: InitKind,
    /// Logistic ridge for the weather pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

fn default_init() -> InitKind {
    InitKind::Zeros
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// MSD against the regularized solution of the reference solver.
    MsdVsReference,
    /// MSD against the local ground-truth models.
    MsdVsLocalModels,
    /// Misclassification rate on the test stream.
    PredictionError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    /// Monte-Carlo runs for convex regularizers.
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Monte-Carlo runs for the l0 regularizer.
    #[serde(default = "default_runs_l0")]
    pub runs_l0: usize,
    /// Steady-state averaging window.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Settling assertion: the two half-windows of the steady-state
    /// window must agree within this many dB, otherwise the horizon is
    /// rejected as too short.
    #[serde(default = "default_settling_db")]
    pub settling_db: f64,
    /// Optimality residual tolerance of the reference solver.
    #[serde(default = "default_reference_tolerance")]
    pub reference_tolerance: f64,
}

fn default_settling_db() -> f64 {
    0.2
}

fn default_runs() -> usize {
    30
}

fn default_runs_l0() -> usize {
    400
}

fn default_window() -> usize {
    200
}

fn default_reference_tolerance() -> f64 {
    1e-8
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            metric: None,
            runs: default_runs(),
            runs_l0: default_runs_l0(),
            window: default_window(),
            settling_db: default_settling_db(),
            reference_tolerance: default_reference_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub topology: TopologyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<ModelsConfig>,
    pub solver: SolverSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::ReadFile {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| HarnessError::ParseConfig {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        config.validate()?;
        Ok(config)
    }

    /// The effective metric for this experiment kind.
    pub fn metric(&self) -> MetricKind {
        if let Some(metric) = self.metrics.metric {
            return metric;
        }
        match self.kind {
            ExperimentKind::TheoremIllustration => MetricKind::MsdVsReference,
            ExperimentKind::EtaSweepSparse | ExperimentKind::EtaSweepSmooth => {
                MetricKind::MsdVsLocalModels
            }
            ExperimentKind::Weather => MetricKind::PredictionError,
            ExperimentKind::Custom => MetricKind::MsdVsLocalModels,
        }
    }

    /// Field-level diagnostics; all issues are collected before failing.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.solver.mu.is_empty() {
            issues.push("solver.mu: at least one step size required".into());
        }
        for (i, &mu) in self.solver.mu.iter().enumerate() {
            if !(mu > 0.0 && mu.is_finite()) {
                issues.push(format!(
                    "solver.mu[{i}]: must be positive and finite, got {mu}"
                ));
            }
        }
        match &self.solver.eta {
            EtaMode::Scaled { kappa, alpha } => {
                if !(*kappa > 0.0) {
                    issues.push(format!("solver.eta.kappa: must be positive, got {kappa}"));
                }
                if !(*alpha >= 0.5) {
                    issues.push(format!("solver.eta.alpha: must be >= 1/2, got {alpha}"));
                }
            }
            EtaMode::Grid { values } => {
                if values.is_empty() {
                    issues.push("solver.eta.values: empty grid".into());
                }
                for (i, &eta) in values.iter().enumerate() {
                    if !(eta >= 0.0 && eta.is_finite()) {
                        issues.push(format!(
                            "solver.eta.values[{i}]: must be nonnegative, got {eta}"
                        ));
                    }
                }
            }
        }
        if self.solver.regularizers.is_empty() {
            issues.push("solver.regularizers: at least one required".into());
        }
        for (i, reg) in self.solver.regularizers.iter().enumerate() {
            if let Err(e) = reg.to_core().validate() {
                issues.push(format!("solver.regularizers[{i}]: {e}"));
            }
        }
        match &self.topology {
            TopologyConfig::Ring { agents } if *agents == 0 => {
                issues.push("topology.agents: must be positive".into());
            }
            TopologyConfig::KnnPoints {
                agents,
                k_neighbors,
            } => {
                if *agents <= *k_neighbors {
                    issues.push(format!(
                        "topology: need agents > k_neighbors, got {agents} <= {k_neighbors}"
                    ));
                }
            }
            TopologyConfig::KnnStations { .. } if self.kind != ExperimentKind::Weather => {
                issues.push("topology.knn_stations: only valid for weather experiments".into());
            }
            _ => {}
        }
        if self.metrics.runs == 0 || self.metrics.runs_l0 == 0 {
            issues.push("metrics.runs: must be positive".into());
        }
        if self.metrics.window == 0 {
            issues.push("metrics.window: must be positive".into());
        }
        if !(self.metrics.settling_db > 0.0) {
            issues.push("metrics.settling_db: must be positive".into());
        }
        if !(self.metrics.reference_tolerance > 0.0) {
            issues.push("metrics.reference_tolerance: must be positive".into());
        }

        let needs_models = !matches!(self.kind, ExperimentKind::Weather);
        match (&self.models, needs_models) {
            (None, true) => issues.push("models: section required for this experiment".into()),
            (Some(models), _) => {
                if models.dimension == 0 {
                    issues.push("models.dimension: must be positive".into());
                }
                if models.kind == ModelKind::MseSmooth && models.tau.is_none() {
                    issues.push("models.tau: required for mse_smooth".into());
                }
                if let Some(tau) = models.tau {
                    if !(tau > 0.0) {
                        issues.push(format!("models.tau: must be positive, got {tau}"));
                    }
                }
                if models.kind == ModelKind::LogisticSparse {
                    if models.train_samples.unwrap_or(0) == 0 {
                        issues.push("models.train_samples: required for logistic_sparse".into());
                    }
                    if models.test_samples.unwrap_or(0) == 0 {
                        issues.push("models.test_samples: required for logistic_sparse".into());
                    }
                }
            }
            (None, false) => {}
        }

        match self.kind {
            ExperimentKind::Weather => {
                if self.dataset.is_none() {
                    issues.push("dataset: section required for weather experiments".into());
                }
                if self.metric() != MetricKind::PredictionError {
                    issues
                        .push("metrics.metric: weather experiments report prediction_error".into());
                }
            }
            ExperimentKind::TheoremIllustration => {
                if self.metric() != MetricKind::MsdVsReference {
                    issues
                        .push("metrics.metric: theorem_illustration uses msd_vs_reference".into());
                }
                for reg in &self.solver.regularizers {
                    if !reg.to_core().is_convex() {
                        issues.push(format!(
                            "solver.regularizers: {} has no reference solution",
                            reg.label()
                        ));
                    }
                }
            }
            ExperimentKind::EtaSweepSparse | ExperimentKind::EtaSweepSmooth => {
                if self.metric() != MetricKind::MsdVsLocalModels {
                    issues.push("metrics.metric: eta sweeps use msd_vs_local_models".into());
                }
                if matches!(self.solver.eta, EtaMode::Scaled { .. }) {
                    issues.push("solver.eta: eta sweeps need an explicit grid".into());
                }
            }
            ExperimentKind::Custom => {
                if self.metric() == MetricKind::PredictionError {
                    let ok = self
                        .models
                        .as_ref()
                        .map(|m| m.kind == ModelKind::LogisticSparse)
                        .unwrap_or(false);
                    if !ok {
                        issues.push(
                            "metrics.metric: prediction_error needs logistic_sparse models".into(),
                        );
                    }
                }
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::InvalidConfig { issues })
        }
    }

    /// Canonical serialized form; the digest is taken over this.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 digest embedded in every output artifact.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_toml().as_bytes());
        crate::outputs::hex_string(&hasher.finalize())
    }

    /// Step-size / eta sweep points in deterministic order.
    pub fn sweep_points(&self) -> Vec<(f64, f64)> {
        let mut points = Vec::new();
        for &mu in &self.solver.mu {
            match &self.solver.eta {
                EtaMode::Scaled { kappa, alpha } => points.push((mu, kappa * mu.powf(*alpha))),
                EtaMode::Grid { values } => {
                    for &eta in values {
                        points.push((mu, eta));
                    }
                }
            }
        }
        points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "eta_sweep_sparse"
seed = 7
out_dir = "out"

[topology]
kind = "ring"
agents = 20

[models]
kind = "mse_sparse"
dimension = 10

[solver]
mu = [0.005]
eta = { kind = "grid", values = [0.0, 0.05, 0.1] }
regularizers = [ { kind = "l1" }, { kind = "l0", lambda = 1.0 } ]
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        config.validate().unwrap();
        assert_eq!(config.metrics.runs, 30);
        assert_eq!(config.metrics.runs_l0, 400);
        assert_eq!(config.metrics.window, 200);
        assert_eq!(config.metric(), MetricKind::MsdVsLocalModels);
        assert_eq!(config.sweep_points().len(), 3);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = MINIMAL.replace("[solver]", "typo_key = 3\n[solver]");
        assert!(toml::from_str::<ExperimentConfig>(&text).is_err());
        let nested = MINIMAL.replace("agents = 20", "agents = 20\nextra = 1");
        assert!(toml::from_str::<ExperimentConfig>(&nested).is_err());
    }

    #[test]
    fn validation_collects_field_diagnostics() {
        let mut config: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        config.solver.mu = vec![-1.0];
        config.metrics.window = 0;
        match config.validate() {
            Err(HarnessError::InvalidConfig { issues }) => {
                assert!(issues.iter().any(|i| i.contains("solver.mu[0]")));
                assert!(issues.iter().any(|i| i.contains("metrics.window")));
            }
            other => panic!("expected invalid config, got {other:?}"),
        }
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        let a: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        let b: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        assert_eq!(a.digest(), b.digest());
        let mut c: ExperimentConfig = toml::from_str(MINIMAL).unwrap();
        c.seed = 8;
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn theorem_kind_rejects_nonconvex_regularizers() {
        let text = MINIMAL
            .replace("eta_sweep_sparse", "theorem_illustration")
            .replace(
                "eta = { kind = \"grid\", values = [0.0, 0.05, 0.1] }",
                "eta = { kind = \"scaled\", kappa = 50.0, alpha = 1.0 }",
            );
        let config: ExperimentConfig = toml::from_str(&text).unwrap();
        match config.validate() {
            Err(HarnessError::InvalidConfig { issues }) => {
                assert!(issues.iter().any(|i| i.contains("no reference solution")));
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
