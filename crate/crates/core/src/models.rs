//! Agent cost families: MSE linear-regression and ridge-regularized
//! logistic regression, with synthetic data generation, stochastic and
//! true gradients, and the ground-truth model constructors used by the
//! experiments.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::{largest_eigenvalue, smallest_eigenvalue_spd, Cholesky};
use crate::rng::{keyed_rng, Purpose};

/// Numerically stable logistic function `1 / (1 + exp(-z))`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Feature covariance of an agent's regressors.
#[derive(Debug, Clone)]
pub enum Covariance {
    /// `sigma^2 I`, the form used throughout the synthetic experiments.
    Isotropic { variance: f64 },
    /// General SPD matrix with its Cholesky factor for sampling.
    Full {
        matrix: Array2<f64>,
        factor: Cholesky,
    },
}

impl Covariance {
    pub fn isotropic(variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: 0 });
        }
        Ok(Covariance::Isotropic { variance })
    }

    pub fn full(matrix: Array2<f64>) -> Result<Self> {
        let factor = Cholesky::new(&matrix)?;
        Ok(Covariance::Full { matrix, factor })
    }

    /// Draws one zero-mean vector with this covariance.
    pub fn sample(&self, dimension: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let z = Array1::from_shape_fn(dimension, |_| rng.sample::<f64, _>(StandardNormal));
        match self {
            Covariance::Isotropic { variance } => z * variance.sqrt(),
            Covariance::Full { factor, .. } => factor.apply_factor(&z.view()),
        }
    }

    pub fn matvec(&self, x: &ArrayView1<f64>) -> Array1<f64> {
        match self {
            Covariance::Isotropic { variance } => x.mapv(|v| v * variance),
            Covariance::Full { matrix, .. } => matrix.dot(x),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        match self {
            Covariance::Isotropic { variance } => *variance,
            Covariance::Full { matrix, .. } => largest_eigenvalue(matrix),
        }
    }

    pub fn lambda_min(&self) -> f64 {
        match self {
            Covariance::Isotropic { variance } => *variance,
            Covariance::Full { matrix, .. } => {
                smallest_eigenvalue_spd(matrix).expect("covariance is SPD by construction")
            }
        }
    }
}

/// Cost family of one agent.
#[derive(Debug, Clone)]
pub enum CostKind {
    /// `J(w) = 1/2 E (d - u' w)^2` with observation noise variance
    /// `sigma_v^2`.
    Mse { noise_variance: f64 },
    /// `J(w) = E ln(1 + exp(-label h' w)) + (ridge/2) ||w||^2`.
    Logistic { ridge: f64 },
}

/// One agent's cost, data distribution and ground-truth vector.
#[derive(Debug, Clone)]
pub struct AgentModel {
    kind: CostKind,
    w_true: Array1<f64>,
    covariance: Covariance,
}

impl AgentModel {
    pub fn mse(w_true: Array1<f64>, covariance: Covariance, noise_variance: f64) -> Result<Self> {
        if !(noise_variance >= 0.0) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("noise variance must be nonnegative, got {noise_variance}"),
            });
        }
        Ok(Self {
            kind: CostKind::Mse { noise_variance },
            w_true,
            covariance,
        })
    }

    pub fn logistic(w_true: Array1<f64>, covariance: Covariance, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("ridge must be nonnegative, got {ridge}"),
            });
        }
        Ok(Self {
            kind: CostKind::Logistic { ridge },
            w_true,
            covariance,
        })
    }

    pub fn dimension(&self) -> usize {
        self.w_true.len()
    }

    pub fn kind(&self) -> &CostKind {
        &self.kind
    }

    pub fn w_true(&self) -> &Array1<f64> {
        &self.w_true
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Draws one regression pair `(u, d)` with `d = u' w_true + v`.
    pub fn mse_sample(&self, rng: &mut ChaCha8Rng) -> (Array1<f64>, f64) {
        let CostKind::Mse { noise_variance } = self.kind else {
            panic!("mse_sample on a non-MSE model");
        };
        let u = self.covariance.sample(self.dimension(), rng);
        let noise = if noise_variance > 0.0 {
            noise_variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        let d = u.dot(&self.w_true) + noise;
        (u, d)
    }

    /// Draws one classification pair `(h, label)` with
    /// `P(label = +1 | h) = sigmoid(h' w_true)`.
    pub fn logistic_sample(&self, rng: &mut ChaCha8Rng) -> (Array1<f64>, f64) {
        assert!(
            matches!(self.kind, CostKind::Logistic { .. }),
            "logistic_sample on a non-logistic model"
        );
        let h = self.covariance.sample(self.dimension(), rng);
        let p = sigmoid(h.dot(&self.w_true));
        let label = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
        (h, label)
    }

    /// Exact gradient `R_u (w - w_true)` of the MSE risk.
    pub fn mse_true_gradient(&self, w: &ArrayView1<f64>) -> Array1<f64> {
        assert!(
            matches!(self.kind, CostKind::Mse { .. }),
            "mse_true_gradient on a non-MSE model"
        );
        let diff = w - &self.w_true;
        self.covariance.matvec(&diff.view())
    }

    /// One stochastic gradient from a fresh sample of this model's
    /// distribution.
    pub fn stochastic_gradient(&self, w: &ArrayView1<f64>, rng: &mut ChaCha8Rng) -> Array1<f64> {
        match self.kind {
            CostKind::Mse { .. } => {
                let sample = self.mse_sample(rng);
                mse_stochastic_gradient(w, &sample)
            }
            CostKind::Logistic { ridge } => {
                let sample = self.logistic_sample(rng);
                logistic_stochastic_gradient(w, &sample, ridge)
            }
        }
    }

    /// Bounds `(nu, delta)` on the Hessian spectrum of the risk.
    pub fn hessian_bounds(&self) -> (f64, f64) {
        match self.kind {
            CostKind::Mse { .. } => (self.covariance.lambda_min(), self.covariance.lambda_max()),
            CostKind::Logistic { ridge } => {
                // the logistic curvature is at most 1/4 of the feature
                // second moment
                (ridge, ridge + 0.25 * self.covariance.lambda_max())
            }
        }
    }
}

/// Instantaneous MSE gradient `-u (d - u' w)`, so the step
/// `w - mu * grad` is the LMS update.
pub fn mse_stochastic_gradient(w: &ArrayView1<f64>, sample: &(Array1<f64>, f64)) -> Array1<f64> {
    let (u, d) = sample;
    let residual = d - u.dot(w);
    u.mapv(|ui| -ui * residual)
}

/// Instantaneous logistic gradient
/// `ridge * w - label * h / (1 + exp(label * h' w))`, evaluated with the
/// overflow-safe logistic function.
pub fn logistic_stochastic_gradient(
    w: &ArrayView1<f64>,
    sample: &(Array1<f64>, f64),
    ridge: f64,
) -> Array1<f64> {
    let (h, label) = sample;
    let weight = sigmoid(-label * h.dot(w));
    let mut g = h.mapv(|hi| -label * hi * weight);
    if ridge != 0.0 {
        g.scaled_add(ridge, w);
    }
    g
}

/// Loss of one logistic sample; used by the finite-difference checks.
pub fn logistic_sample_loss(w: &ArrayView1<f64>, sample: &(Array1<f64>, f64), ridge: f64) -> f64 {
    let (h, label) = sample;
    let margin = label * h.dot(w);
    // ln(1 + exp(-margin)) without overflow
    let loss = if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    };
    loss + 0.5 * ridge * w.dot(w)
}

/// How an ensemble's ground-truth vectors were constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructionMode {
    SparseDifferences,
    SmoothGraph,
    Custom,
}

/// Per-agent models sharing one dimension.
#[derive(Debug, Clone)]
pub struct ModelEnsemble {
    models: Vec<AgentModel>,
    mode: ConstructionMode,
}

impl ModelEnsemble {
    pub fn new(models: Vec<AgentModel>, mode: ConstructionMode) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::InvalidSolverConfig {
                reason: "ensemble needs at least one agent".into(),
            });
        };
        let m = first.dimension();
        if let Some(bad) = models.iter().position(|mo| mo.dimension() != m) {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "agent {bad} has dimension {}, expected {m}",
                    models[bad].dimension()
                ),
            });
        }
        Ok(Self { models, mode })
    }

    pub fn num_agents(&self) -> usize {
        self.models.len()
    }

    pub fn dimension(&self) -> usize {
        self.models[0].dimension()
    }

    pub fn mode(&self) -> ConstructionMode {
        self.mode
    }

    pub fn model(&self, agent: usize) -> &AgentModel {
        &self.models[agent]
    }

    pub fn models(&self) -> &[AgentModel] {
        &self.models
    }

    /// Ground-truth vectors stacked into one `K * M` vector.
    pub fn stacked_w_true(&self) -> Array1<f64> {
        let m = self.dimension();
        let mut out = Array1::<f64>::zeros(self.num_agents() * m);
        for (k, model) in self.models.iter().enumerate() {
            out.slice_mut(ndarray::s![k * m..(k + 1) * m])
                .assign(&model.w_true);
        }
        out
    }
}

/// Ranges for the per-agent variance draws of the synthetic MSE setups:
/// `sigma_u^2 ~ U(1, 1.5)` and `sigma_v^2 ~ U(0.15, 0.25)` by default.
#[derive(Debug, Clone, Copy)]
pub struct MseVarianceRanges {
    pub sigma_u_sq: (f64, f64),
    pub sigma_v_sq: (f64, f64),
}

impl Default for MseVarianceRanges {
    fn default() -> Self {
        Self {
            sigma_u_sq: (1.0, 1.5),
            sigma_v_sq: (0.15, 0.25),
        }
    }
}

fn draw_uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Common vector plus one-hot perturbations: `w_k = w_c + delta_k` where
/// agent `k` (zero-based) perturbs coordinate `k mod M` with sign `+1`
/// for `k < M`, `-1` for `M <= k < 2M`, alternating in further blocks of
/// `M` agents when `K != 2M`.
pub fn generate_sparse_weight_vectors(
    num_agents: usize,
    dimension: usize,
    seed: u64,
) -> Vec<Array1<f64>> {
    let mut rng = keyed_rng(seed, Purpose::ModelGen, 0, 0, 0);
    let w_c = Array1::from_shape_fn(dimension, |_| rng.sample::<f64, _>(StandardNormal));
    (0..num_agents)
        .map(|k| {
            let mut w = w_c.clone();
            let coord = k % dimension;
            let sign = if (k / dimension).is_multiple_of(2) { 1.0 } else { -1.0 };
            w[coord] += sign;
            w
        })
        .collect()
}

/// MSE ensemble whose ground-truth vectors differ sparsely across agents.
pub fn generate_sparse_models(
    num_agents: usize,
    dimension: usize,
    ranges: &MseVarianceRanges,
    seed: u64,
) -> Result<ModelEnsemble> {
    let weights = generate_sparse_weight_vectors(num_agents, dimension, seed);
    let models = mse_models_from_weights(weights, ranges, seed)?;
    ModelEnsemble::new(models, ConstructionMode::SparseDifferences)
}

fn mse_models_from_weights(
    weights: Vec<Array1<f64>>,
    ranges: &MseVarianceRanges,
    seed: u64,
) -> Result<Vec<AgentModel>> {
    weights
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            let mut rng_u = keyed_rng(seed, Purpose::ModelGen, 0, k as u64, 1);
            let mut rng_v = keyed_rng(seed, Purpose::ModelGen, 0, k as u64, 2);
            let sigma_u_sq = draw_uniform(&mut rng_u, ranges.sigma_u_sq);
            let sigma_v_sq = draw_uniform(&mut rng_v, ranges.sigma_v_sq);
            AgentModel::mse(w, Covariance::isotropic(sigma_u_sq)?, sigma_v_sq)
        })
        .collect()
}

/// MSE ensemble whose ground-truth vectors vary smoothly over the graph:
/// i.i.d. Gaussian draws damped through `(I + tau L)^{-1}` per
/// coordinate, with `L` the unweighted Laplacian. Larger `tau` means
/// smoother models.
pub fn generate_smooth_models(
    network: &Network,
    dimension: usize,
    tau: f64,
    ranges: &MseVarianceRanges,
    seed: u64,
) -> Result<ModelEnsemble> {
    let weights = generate_smooth_weight_vectors(network, dimension, tau, seed)?;
    let models = mse_models_from_weights(weights, ranges, seed)?;
    ModelEnsemble::new(models, ConstructionMode::SmoothGraph)
}

/// The raw damped Gaussian construction behind [`generate_smooth_models`].
pub fn generate_smooth_weight_vectors(
    network: &Network,
    dimension: usize,
    tau: f64,
    seed: u64,
) -> Result<Vec<Array1<f64>>> {
    if !(tau > 0.0) {
        return Err(Error::NonpositiveTau { tau });
    }
    let k = network.num_agents();
    let draws: Vec<Array1<f64>> = (0..k)
        .map(|agent| {
            let mut rng = keyed_rng(seed, Purpose::ModelGen, 0, agent as u64, 3);
            Array1::from_shape_fn(dimension, |_| rng.sample::<f64, _>(StandardNormal))
        })
        .collect();
    let mut operator = network.laplacian() * tau;
    for i in 0..k {
        operator[(i, i)] += 1.0;
    }
    let factor = Cholesky::new(&operator)?;
    let mut damped = vec![Array1::<f64>::zeros(dimension); k];
    for m in 0..dimension {
        let column = Array1::from_shape_fn(k, |agent| draws[agent][m]);
        let smoothed = factor.solve(&column.view());
        for agent in 0..k {
            damped[agent][m] = smoothed[agent];
        }
    }
    Ok(damped)
}

/// Logistic ensemble with sparse cross-agent differences; `scale`
/// multiplies the common vector to control label noise.
pub fn generate_sparse_logistic_models(
    num_agents: usize,
    dimension: usize,
    scale: f64,
    ridge: f64,
    seed: u64,
) -> Result<ModelEnsemble> {
    let mut rng = keyed_rng(seed, Purpose::ModelGen, 0, 0, 0);
    let w_c = Array1::from_shape_fn(dimension, |_| rng.sample::<f64, _>(StandardNormal)) * scale;
    let models = (0..num_agents)
        .map(|k| {
            let mut w = w_c.clone();
            let coord = k % dimension;
            let sign = if (k / dimension).is_multiple_of(2) { 1.0 } else { -1.0 };
            w[coord] += sign;
            let mut rng_u = keyed_rng(seed, Purpose::ModelGen, 0, k as u64, 1);
            let sigma_h_sq = draw_uniform(&mut rng_u, (1.0, 1.5));
            AgentModel::logistic(w, Covariance::isotropic(sigma_h_sq)?, ridge)
        })
        .collect::<Result<Vec<_>>>()?;
    ModelEnsemble::new(models, ConstructionMode::SparseDifferences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ring_network;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn sparse_models_follow_the_one_hot_pattern() {
        let ensemble = generate_sparse_models(20, 10, &MseVarianceRanges::default(), 42).unwrap();
        let weights: Vec<_> = ensemble
            .models()
            .iter()
            .map(|m| m.w_true().clone())
            .collect();
        // reconstruct w_c by undoing agent 0's +1 on coordinate 0
        let mut w_c = weights[0].clone();
        w_c[0] -= 1.0;
        // agent 3 (one-based) differs from w_c only in entry 3 by +1
        let d2 = &weights[2] - &w_c;
        assert_abs_diff_eq!(d2[2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d2.dot(&d2), 1.0, epsilon = 1e-12);
        // agent 13 (one-based) differs only in entry 3 by -1
        let d12 = &weights[12] - &w_c;
        assert_abs_diff_eq!(d12[2], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d12.dot(&d12), 1.0, epsilon = 1e-12);
        // any two agents differ in at most two coordinates
        for a in 0..20 {
            for b in (a + 1)..20 {
                let diff = &weights[a] - &weights[b];
                let nonzero = diff.iter().filter(|x| x.abs() > 1e-12).count();
                assert!(nonzero <= 2, "agents {a},{b} differ in {nonzero} entries");
            }
        }
    }

    #[test]
    fn sparse_variances_stay_in_ranges() {
        let ensemble = generate_sparse_models(20, 10, &MseVarianceRanges::default(), 42).unwrap();
        for model in ensemble.models() {
            let (nu, delta) = model.hessian_bounds();
            assert!(nu >= 1.0 && delta <= 1.5);
            let CostKind::Mse { noise_variance } = model.kind() else {
                panic!()
            };
            assert!((0.15..=0.25).contains(noise_variance));
        }
    }

    #[test]
    fn mse_sample_noiseless_is_exact() {
        let model =
            AgentModel::mse(array![1.0, -2.0], Covariance::isotropic(1.0).unwrap(), 0.0).unwrap();
        let mut rng = keyed_rng(1, Purpose::Sample, 0, 0, 0);
        let (u, d) = model.mse_sample(&mut rng);
        assert_abs_diff_eq!(d, u.dot(model.w_true()), epsilon = 1e-15);
    }

    #[test]
    fn mse_gradient_arithmetic() {
        // u = e_1, d = 2, w = 0 -> gradient = -2 e_1
        let sample = (array![1.0, 0.0], 2.0);
        let g = mse_stochastic_gradient(&array![0.0, 0.0].view(), &sample);
        assert_eq!(g, array![-2.0, 0.0]);
        // perfect fit, no noise -> zero gradient
        let w = array![1.0, -1.0];
        let u = array![0.3, 0.8];
        let sample = (u.clone(), u.dot(&w));
        let g = mse_stochastic_gradient(&w.view(), &sample);
        assert!(g.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn mse_true_gradient_identity_covariance() {
        let model =
            AgentModel::mse(array![1.0, 2.0], Covariance::isotropic(1.0).unwrap(), 0.1).unwrap();
        let g = model.mse_true_gradient(&array![2.0, 2.0].view());
        assert_eq!(g, array![1.0, 0.0]);
        let g0 = model.mse_true_gradient(&model.w_true().view());
        assert!(g0.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn logistic_gradient_at_zero_weight() {
        // w = 0: logistic weight is 1/2, gradient = -label h / 2
        let sample = (array![2.0, -4.0], 1.0);
        let g = logistic_stochastic_gradient(&array![0.0, 0.0].view(), &sample, 0.0);
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn logistic_gradient_vanishes_at_large_margin() {
        let sample = (array![1.0], 1.0);
        let g = logistic_stochastic_gradient(&array![80.0].view(), &sample, 0.0);
        assert!(g[0].abs() < 1e-30);
        // and stays finite far on the wrong side
        let g = logistic_stochastic_gradient(&array![-800.0].view(), &sample, 0.0);
        assert!(g[0].is_finite());
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn label_balance_under_zero_weights() {
        let model =
            AgentModel::logistic(Array1::zeros(3), Covariance::isotropic(1.0).unwrap(), 0.0)
                .unwrap();
        let mut positives = 0usize;
        let n = 100_000;
        for i in 0..n {
            let mut rng = keyed_rng(5, Purpose::Sample, 0, 0, i as u64);
            let (_, label) = model.logistic_sample(&mut rng);
            if label > 0.0 {
                positives += 1;
            }
        }
        let balance = positives as f64 / n as f64;
        assert!((balance - 0.5).abs() < 0.01, "balance {balance}");
    }

    #[test]
    fn huge_weights_make_labels_deterministic() {
        let model = AgentModel::logistic(
            array![1e6, -1e6],
            Covariance::isotropic(1.0).unwrap(),
            0.0,
        )
        .unwrap();
        for i in 0..1000u64 {
            let mut rng = keyed_rng(8, Purpose::Sample, 0, 0, i);
            let (h, label) = model.logistic_sample(&mut rng);
            let margin = h.dot(model.w_true());
            if margin != 0.0 {
                assert_eq!(label, margin.signum(), "draw {i}");
            }
        }
    }

    #[test]
    fn full_covariance_sampling_matches_the_matrix() {
        let matrix = ndarray::array![[2.0, 0.5], [0.5, 1.0]];
        let cov = Covariance::full(matrix.clone()).unwrap();
        assert!((cov.lambda_max() - 2.25).abs() < 0.2);
        let mut empirical = ndarray::Array2::<f64>::zeros((2, 2));
        let n = 50_000;
        for i in 0..n {
            let mut rng = keyed_rng(77, Purpose::Sample, 0, 0, i as u64);
            let u = cov.sample(2, &mut rng);
            for a in 0..2 {
                for b in 0..2 {
                    empirical[(a, b)] += u[a] * u[b];
                }
            }
        }
        empirical /= n as f64;
        for a in 0..2 {
            for b in 0..2 {
                assert!(
                    (empirical[(a, b)] - matrix[(a, b)]).abs() < 0.1,
                    "cov[{a}{b}] = {}",
                    empirical[(a, b)]
                );
            }
        }
    }

    #[test]
    fn smooth_models_reduce_laplacian_energy() {
        let network = ring_network(12).unwrap();
        let lap = network.laplacian();
        let seed = 9;
        let raw: Vec<Array1<f64>> = (0..12)
            .map(|agent| {
                let mut rng = keyed_rng(seed, Purpose::ModelGen, 0, agent, 3);
                Array1::from_shape_fn(4, |_| rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let smooth = generate_smooth_weight_vectors(&network, 4, 5.0, seed).unwrap();
        let energy = |vectors: &[Array1<f64>]| -> f64 {
            let mut total = 0.0;
            for m in 0..4 {
                let col = Array1::from_shape_fn(12, |k| vectors[k][m]);
                total += col.dot(&lap.dot(&col));
            }
            total
        };
        assert!(energy(&smooth) < energy(&raw));
    }

    #[test]
    fn smooth_models_reject_nonpositive_tau() {
        let network = ring_network(5).unwrap();
        assert!(matches!(
            generate_smooth_weight_vectors(&network, 2, 0.0, 1),
            Err(Error::NonpositiveTau { .. })
        ));
    }

    #[test]
    fn smooth_models_tau_limits() {
        // tiny tau: output close to the raw draws
        let network = ring_network(6).unwrap();
        let seed = 3;
        let raw: Vec<Array1<f64>> = (0..6)
            .map(|agent| {
                let mut rng = keyed_rng(seed, Purpose::ModelGen, 0, agent, 3);
                Array1::from_shape_fn(2, |_| rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let near_identity = generate_smooth_weight_vectors(&network, 2, 1e-9, seed).unwrap();
        for (a, b) in raw.iter().zip(near_identity.iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-6);
            }
        }
        // complete graph, huge tau: all agents collapse to a common vector
        let n = 5;
        let mut adjacency = ndarray::Array2::from_elem((n, n), false);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    adjacency[(a, b)] = true;
                }
            }
        }
        let complete = crate::graph::build_network_uniform(&adjacency).unwrap();
        let damped = generate_smooth_weight_vectors(&complete, 2, 1e9, seed).unwrap();
        for k in 1..n {
            for m in 0..2 {
                assert_abs_diff_eq!(damped[k][m], damped[0][m], epsilon = 1e-6);
            }
        }
    }
}
