//! Deterministic reference solver for the regularized problem
//!
//! ```text
//! min_W  sum_k J_k(w_k) + (eta/2) R(W),
//! R(W) = sum_k sum_{l in N_k} p_kl f(w_k - w_l)
//! ```
//!
//! using full-gradient forward-backward iterations. The backward step —
//! the prox of `gamma (eta/2) R` — couples neighboring agents; it is
//! evaluated per coordinate with a warm-started ADMM over the graph
//! edges (for the l1 and elastic-net couplings) or a direct linear solve
//! (squared l2). A returned solution carries a verified optimality
//! residual: the minimum-norm element of `grad(sum J_k) + (eta/2) dR`
//! at the returned point has Euclidean norm at most the requested
//! tolerance.
//!
//! Logistic risks have no closed-form population gradient, so they are
//! replaced by a frozen-sample surrogate (fixed seed, configurable
//! size); the reference is exact for the surrogate problem.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::{largest_eigenvalue, Cholesky};
use crate::models::{logistic_sample_loss, sigmoid, AgentModel, CostKind, ModelEnsemble};
use crate::prox::Regularizer;
use crate::rng::{keyed_rng, Purpose};

/// Frozen-sample surrogate used for logistic risks.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Result of a reference solve.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    /// Per-agent minimizers.
    pub per_agent: Vec<Array1<f64>>,
    /// Verified optimality residual at the returned point.
    pub residual: f64,
    pub outer_iterations: usize,
}

impl ReferenceSolution {
    /// Stacks the per-agent blocks into one `K * M` vector.
    pub fn stacked(&self) -> Array1<f64> {
        let m = self.per_agent[0].len();
        let mut out = Array1::<f64>::zeros(self.per_agent.len() * m);
        for (k, w) in self.per_agent.iter().enumerate() {
            out.slice_mut(ndarray::s![k * m..(k + 1) * m]).assign(w);
        }
        out
    }
}

enum SmoothPart<'a> {
    Mse(&'a ModelEnsemble),
    Logistic {
        ensemble: &'a ModelEnsemble,
        samples: Vec<Vec<(Array1<f64>, f64)>>,
    },
}

impl SmoothPart<'_> {
    fn gradient(&self, agent: usize, w: &ArrayView1<f64>) -> Array1<f64> {
        match self {
            SmoothPart::Mse(ensemble) => ensemble.model(agent).mse_true_gradient(w),
            SmoothPart::Logistic { ensemble, samples } => {
                let CostKind::Logistic { ridge } = *ensemble.model(agent).kind() else {
                    unreachable!("logistic smooth part over non-logistic model")
                };
                let agent_samples = &samples[agent];
                let mut g = Array1::<f64>::zeros(w.len());
                for sample in agent_samples {
                    let margin = sample.1 * sample.0.dot(w);
                    let weight = sigmoid(-margin);
                    g.scaled_add(-sample.1 * weight, &sample.0);
                }
                g /= agent_samples.len() as f64;
                g.scaled_add(ridge, w);
                g
            }
        }
    }

    fn risk(&self, agent: usize, w: &ArrayView1<f64>) -> f64 {
        match self {
            SmoothPart::Mse(ensemble) => {
                let model = ensemble.model(agent);
                let diff = &w.to_owned() - model.w_true();
                0.5 * diff.dot(&model.covariance().matvec(&diff.view()))
            }
            SmoothPart::Logistic { ensemble, samples } => {
                let CostKind::Logistic { ridge } = *ensemble.model(agent).kind() else {
                    unreachable!()
                };
                let agent_samples = &samples[agent];
                agent_samples
                    .iter()
                    .map(|s| logistic_sample_loss(w, s, 0.0))
                    .sum::<f64>()
                    / agent_samples.len() as f64
                    + 0.5 * ridge * w.dot(w)
            }
        }
    }

    fn hessian_upper_bound(&self, agent: usize) -> f64 {
        match self {
            SmoothPart::Mse(ensemble) => ensemble.model(agent).hessian_bounds().1,
            SmoothPart::Logistic { ensemble, samples } => {
                let CostKind::Logistic { ridge } = *ensemble.model(agent).kind() else {
                    unreachable!()
                };
                let m = ensemble.dimension();
                let mut second_moment = Array2::<f64>::zeros((m, m));
                for (h, _) in &samples[agent] {
                    for i in 0..m {
                        for j in 0..m {
                            second_moment[(i, j)] += h[i] * h[j];
                        }
                    }
                }
                second_moment /= samples[agent].len() as f64;
                ridge + 0.25 * largest_eigenvalue(&second_moment)
            }
        }
    }
}

/// Scalar coupling value `f(d)` of the active regularizer.
fn coupling_value(regularizer: &Regularizer, d: f64) -> f64 {
    match regularizer {
        Regularizer::L1 => d.abs(),
        Regularizer::ElasticNet { beta } => d.abs() + 0.5 * beta * d * d,
        Regularizer::SquaredL2 => d * d,
        _ => unreachable!("non-convex coupling in the reference solver"),
    }
}

/// The smooth (always-present) part of the coupling subgradient at `d`,
/// and the half-width of the free interval when `d == 0`.
fn coupling_subgradient(regularizer: &Regularizer, d: f64) -> (f64, f64) {
    match regularizer {
        Regularizer::L1 => {
            if d == 0.0 {
                (0.0, 1.0)
            } else {
                (d.signum(), 0.0)
            }
        }
        Regularizer::ElasticNet { beta } => {
            if d == 0.0 {
                (0.0, 1.0)
            } else {
                (d.signum() + beta * d, 0.0)
            }
        }
        Regularizer::SquaredL2 => (2.0 * d, 0.0),
        _ => unreachable!(),
    }
}

/// Options beyond the required `(eta, regularizer, tolerance)` triple.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    pub max_outer_iterations: usize,
    pub surrogate: SurrogateConfig,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: 200_000,
            surrogate: SurrogateConfig::default(),
        }
    }
}

/// A fully assembled deterministic problem instance.
pub struct ReferenceProblem<'a> {
    network: &'a Network,
    smooth: SmoothPart<'a>,
    eta: f64,
    regularizer: Regularizer,
    /// `(k, l, eta * p_kl)` per undirected edge.
    edges: Vec<(usize, usize, f64)>,
}

impl<'a> ReferenceProblem<'a> {
    pub fn new(
        network: &'a Network,
        ensemble: &'a ModelEnsemble,
        eta: f64,
        regularizer: Regularizer,
        options: &ReferenceOptions,
    ) -> Result<Self> {
        regularizer.validate()?;
        match regularizer {
            Regularizer::L1 | Regularizer::ElasticNet { .. } | Regularizer::SquaredL2 => {}
            Regularizer::L0 { .. } => {
                return Err(Error::NonConvexReference { kind: "l0" });
            }
            Regularizer::ReweightedL1 { .. } => {
                // weights depend on the iterate, so no fixed convex
                // problem exists to solve
                return Err(Error::NonConvexReference {
                    kind: "reweighted_l1",
                });
            }
        }
        if network.num_agents() != ensemble.num_agents() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "network has {} agents, ensemble has {}",
                    network.num_agents(),
                    ensemble.num_agents()
                ),
            });
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("eta must be nonnegative, got {eta}"),
            });
        }
        let all_mse = ensemble
            .models()
            .iter()
            .all(|m| matches!(m.kind(), CostKind::Mse { .. }));
        let all_logistic = ensemble
            .models()
            .iter()
            .all(|m| matches!(m.kind(), CostKind::Logistic { .. }));
        let smooth = if all_mse {
            SmoothPart::Mse(ensemble)
        } else if all_logistic {
            let samples = frozen_logistic_samples(ensemble, &options.surrogate);
            SmoothPart::Logistic { ensemble, samples }
        } else {
            return Err(Error::InvalidSolverConfig {
                reason: "mixed cost kinds are not supported by the reference solver".into(),
            });
        };
        let edges = network.links().map(|(k, l, p)| (k, l, eta * p)).collect();
        Ok(Self {
            network,
            smooth,
            eta,
            regularizer,
            edges,
        })
    }

    pub fn dimension(&self) -> usize {
        match self.smooth {
            SmoothPart::Mse(e) | SmoothPart::Logistic { ensemble: e, .. } => e.dimension(),
        }
    }

    fn gradients(&self, w: &[Array1<f64>]) -> Vec<Array1<f64>> {
        w.iter()
            .enumerate()
            .map(|(k, wk)| self.smooth.gradient(k, &wk.view()))
            .collect()
    }

    /// Global objective `sum_k J_k + (eta/2) R`; MSE risks are taken
    /// without their constant noise floor.
    pub fn objective(&self, w: &[Array1<f64>]) -> f64 {
        let mut value = 0.0;
        for (k, wk) in w.iter().enumerate() {
            value += self.smooth.risk(k, &wk.view());
        }
        for &(k, l, weight) in &self.edges {
            let diff = &w[k] - &w[l];
            for d in diff.iter() {
                value += weight * coupling_value(&self.regularizer, *d);
            }
        }
        value
    }

    /// Minimum-norm element of the global subdifferential at `w`,
    /// computed coordinate-wise: per coordinate, the free l1 interval
    /// subgradients of exactly-tied edges are optimized by cyclic
    /// coordinate descent over the (box-constrained, separable) edge
    /// variables.
    pub fn optimality_residual(&self, w: &[Array1<f64>]) -> f64 {
        let grads = self.gradients(w);
        self.residual_with_grads(w, &grads)
    }

    fn residual_with_grads(&self, w: &[Array1<f64>], grads: &[Array1<f64>]) -> f64 {
        let k_agents = self.network.num_agents();
        let m_dim = self.dimension();
        let mut total_sq = 0.0;
        let mut r = vec![0.0; k_agents];
        let mut free: Vec<(usize, usize, f64, f64)> = Vec::new(); // (k, l, bound, theta)
        for m in 0..m_dim {
            for (k, rk) in r.iter_mut().enumerate() {
                *rk = grads[k][m];
            }
            free.clear();
            for &(k, l, weight) in &self.edges {
                let d = w[k][m] - w[l][m];
                let (fixed, free_half_width) = coupling_subgradient(&self.regularizer, d);
                r[k] += weight * fixed;
                r[l] -= weight * fixed;
                if free_half_width > 0.0 {
                    free.push((k, l, weight * free_half_width, 0.0));
                }
            }
            // cyclic exact coordinate descent on the free edge variables
            if !free.is_empty() {
                for _pass in 0..500 {
                    let mut max_change: f64 = 0.0;
                    for entry in free.iter_mut() {
                        let (k, l, bound, theta) = *entry;
                        let target = (theta - (r[k] - r[l]) / 2.0).clamp(-bound, bound);
                        let change = target - theta;
                        if change != 0.0 {
                            r[k] += change;
                            r[l] -= change;
                            entry.3 = target;
                        }
                        max_change = max_change.max(change.abs());
                    }
                    if max_change <= 1e-16 {
                        break;
                    }
                }
            }
            total_sq += r.iter().map(|x| x * x).sum::<f64>();
        }
        total_sq.sqrt()
    }

    /// Per-coordinate consensus snap: agents whose values coincide up to
    /// `snap_tol` across an edge are set to their component average.
    /// Exact ties are what make the residual's free intervals available.
    fn snap(&self, w: &[Array1<f64>], snap_tol: f64) -> Vec<Array1<f64>> {
        let k_agents = self.network.num_agents();
        let m_dim = self.dimension();
        let mut out = w.to_vec();
        let mut parent: Vec<usize> = Vec::new();
        for m in 0..m_dim {
            parent.clear();
            parent.extend(0..k_agents);
            fn find(parent: &mut [usize], mut x: usize) -> usize {
                while parent[x] != x {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                x
            }
            for &(k, l, _) in &self.edges {
                if (w[k][m] - w[l][m]).abs() <= snap_tol {
                    let (a, b) = (find(&mut parent, k), find(&mut parent, l));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
            let mut sums: Vec<(f64, usize)> = vec![(0.0, 0); k_agents];
            for (k, wk) in w.iter().enumerate() {
                let root = find(&mut parent, k);
                sums[root].0 += wk[m];
                sums[root].1 += 1;
            }
            for (k, out_k) in out.iter_mut().enumerate() {
                let root = find(&mut parent, k);
                if sums[root].1 > 1 {
                    out_k[m] = sums[root].0 / sums[root].1 as f64;
                }
            }
        }
        out
    }

    /// Runs forward-backward iterations until the verified residual
    /// drops below `tolerance`.
    pub fn solve(&self, tolerance: f64, max_outer: usize) -> Result<ReferenceSolution> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("tolerance must be positive, got {tolerance}"),
            });
        }
        let k_agents = self.network.num_agents();
        let m_dim = self.dimension();
        let delta_max = (0..k_agents)
            .map(|k| self.smooth.hessian_upper_bound(k))
            .fold(0.0_f64, f64::max);
        let gamma = 1.0 / delta_max;
        let snap_tol = (0.1 * tolerance).max(1e-10);
        // the squared-l2 coupling is smooth: no interval subgradients to
        // unlock, so no consensus snapping either
        let snapping = !matches!(self.regularizer, Regularizer::SquaredL2);

        // start from the decoupled minimizers when they are known
        let mut w: Vec<Array1<f64>> = match &self.smooth {
            SmoothPart::Mse(ensemble) => ensemble
                .models()
                .iter()
                .map(|model| model.w_true().clone())
                .collect(),
            SmoothPart::Logistic { .. } => vec![Array1::zeros(m_dim); k_agents],
        };

        let mut backward = BackwardStep::new(self, gamma, tolerance)?;
        let mut best_residual = f64::INFINITY;
        let mut outer = 0usize;
        loop {
            if outer.is_multiple_of(20) || outer >= max_outer {
                let snapped = if snapping {
                    self.snap(&w, snap_tol)
                } else {
                    w.clone()
                };
                let residual = self.optimality_residual(&snapped);
                best_residual = best_residual.min(residual);
                if residual <= tolerance {
                    return Ok(ReferenceSolution {
                        per_agent: snapped,
                        residual,
                        outer_iterations: outer,
                    });
                }
                if outer >= max_outer {
                    return Err(Error::ReferenceDidNotConverge {
                        tolerance,
                        residual: best_residual,
                        iterations: outer,
                    });
                }
            }
            let grads = self.gradients(&w);
            for (wk, gk) in w.iter_mut().zip(grads.iter()) {
                wk.scaled_add(-gamma, gk);
            }
            backward.apply(&mut w);
            outer += 1;
        }
    }
}

fn frozen_logistic_samples(
    ensemble: &ModelEnsemble,
    surrogate: &SurrogateConfig,
) -> Vec<Vec<(Array1<f64>, f64)>> {
    (0..ensemble.num_agents())
        .map(|agent| {
            let model: &AgentModel = ensemble.model(agent);
            (0..surrogate.samples)
                .map(|n| {
                    let mut rng = keyed_rng(
                        surrogate.seed,
                        Purpose::Reference,
                        0,
                        agent as u64,
                        n as u64,
                    );
                    model.logistic_sample(&mut rng)
                })
                .collect()
        })
        .collect()
}

/// Evaluates the prox of `gamma (eta/2) R` per coordinate: a direct
/// linear solve for the squared-l2 coupling, warm-started ADMM over the
/// edges otherwise.
enum BackwardStep {
    Identity,
    Linear {
        factor: Cholesky,
    },
    Admm {
        /// `(k, l, eta * p_kl)` per undirected edge.
        edges: Vec<(usize, usize, f64)>,
        beta: f64,
        gamma: f64,
        factor: Cholesky,
        rho: f64,
        inner_tol: f64,
        /// warm-start state per coordinate, indexed like `edges`
        z: Vec<Vec<f64>>,
        u: Vec<Vec<f64>>,
    },
}

impl BackwardStep {
    fn new(problem: &ReferenceProblem<'_>, gamma: f64, tolerance: f64) -> Result<Self> {
        let k_agents = problem.network.num_agents();
        let m_dim = problem.dimension();
        if problem.eta == 0.0 || problem.edges.is_empty() {
            return Ok(BackwardStep::Identity);
        }
        match problem.regularizer {
            Regularizer::SquaredL2 => {
                // (I + 2 gamma L_w) x = v with edge weights eta * p
                let mut system = Array2::<f64>::eye(k_agents);
                for &(k, l, weight) in &problem.edges {
                    let s = 2.0 * gamma * weight;
                    system[(k, k)] += s;
                    system[(l, l)] += s;
                    system[(k, l)] -= s;
                    system[(l, k)] -= s;
                }
                Ok(BackwardStep::Linear {
                    factor: Cholesky::new(&system)?,
                })
            }
            _ => {
                let rho = 1.0 / gamma;
                // I/gamma + rho * (unweighted edge Laplacian)
                let mut system = Array2::<f64>::zeros((k_agents, k_agents));
                for i in 0..k_agents {
                    system[(i, i)] = 1.0 / gamma;
                }
                for &(k, l, _) in &problem.edges {
                    system[(k, k)] += rho;
                    system[(l, l)] += rho;
                    system[(k, l)] -= rho;
                    system[(l, k)] -= rho;
                }
                let beta = match problem.regularizer {
                    Regularizer::ElasticNet { beta } => beta,
                    _ => 0.0,
                };
                Ok(BackwardStep::Admm {
                    edges: problem.edges.clone(),
                    beta,
                    gamma,
                    factor: Cholesky::new(&system)?,
                    rho,
                    inner_tol: (tolerance * 1e-2).clamp(1e-14, 1e-9),
                    z: vec![vec![0.0; problem.edges.len()]; m_dim],
                    u: vec![vec![0.0; problem.edges.len()]; m_dim],
                })
            }
        }
    }

    /// Replaces `v` (per agent) with `prox_{gamma (eta/2) R}(v)`.
    fn apply(&mut self, v: &mut [Array1<f64>]) {
        let k_agents = v.len();
        let m_dim = v[0].len();
        match self {
            BackwardStep::Identity => {}
            BackwardStep::Linear { factor } => {
                let mut column = Array1::<f64>::zeros(k_agents);
                for m in 0..m_dim {
                    for (k, vk) in v.iter().enumerate() {
                        column[k] = vk[m];
                    }
                    let solved = factor.solve(&column.view());
                    for (k, vk) in v.iter_mut().enumerate() {
                        vk[m] = solved[k];
                    }
                }
            }
            BackwardStep::Admm {
                edges,
                beta,
                gamma,
                factor,
                rho,
                inner_tol,
                z,
                u,
            } => {
                let (beta, gamma, rho, inner_tol) = (*beta, *gamma, *rho, *inner_tol);
                let mut rhs = Array1::<f64>::zeros(k_agents);
                for m in 0..m_dim {
                    let zm = &mut z[m];
                    let um = &mut u[m];
                    let mut x = Array1::<f64>::zeros(k_agents);
                    for _iteration in 0..20_000 {
                        // x-update
                        for k in 0..k_agents {
                            rhs[k] = v[k][m] / gamma;
                        }
                        for (e, &(k, l, _)) in edges.iter().enumerate() {
                            let s = rho * (zm[e] - um[e]);
                            rhs[k] += s;
                            rhs[l] -= s;
                        }
                        x = factor.solve(&rhs.view());
                        // z-update and residuals
                        let mut primal: f64 = 0.0;
                        let mut dual: f64 = 0.0;
                        for (e, &(k, l, weight)) in edges.iter().enumerate() {
                            let ax = x[k] - x[l];
                            let s = ax + um[e];
                            let t = weight / rho;
                            let soft = (s.abs() - t).max(0.0) * s.signum();
                            let z_new = soft / (1.0 + t * beta);
                            dual = dual.max((z_new - zm[e]).abs());
                            zm[e] = z_new;
                            um[e] += ax - z_new;
                            primal = primal.max((ax - z_new).abs());
                        }
                        if primal <= inner_tol && rho * dual <= inner_tol {
                            break;
                        }
                    }
                    for k in 0..k_agents {
                        v[k][m] = x[k];
                    }
                }
            }
        }
    }
}

/// Solves the regularized reference problem with default options.
pub fn solve_reference(
    network: &Network,
    ensemble: &ModelEnsemble,
    eta: f64,
    regularizer: Regularizer,
    tolerance: f64,
) -> Result<ReferenceSolution> {
    let options = ReferenceOptions::default();
    let problem = ReferenceProblem::new(network, ensemble, eta, regularizer, &options)?;
    problem.solve(tolerance, options.max_outer_iterations)
}
