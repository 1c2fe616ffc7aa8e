//! The decentralized stochastic proximal-gradient recursion: per
//! iteration, every agent takes a stochastic gradient step on its own
//! cost (self-learning), then applies the prox of the neighbor-coupled
//! co-regularizer to its intermediate estimate (social learning). The
//! two phases are barrier-separated: no agent starts the social step of
//! an iteration before all agents finished the gradient step.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::models::ModelEnsemble;
use crate::prox::{prox_social_step, Regularizer};
use crate::rng::{keyed_rng, Purpose};
use crate::trajectory::Trajectory;

/// Initial iterates.
#[derive(Debug, Clone)]
pub enum InitScheme {
    Zeros,
    /// Standard normal per coordinate, keyed by `(seed, run, agent)`.
    Gaussian,
    Explicit(Vec<Array1<f64>>),
}

/// Parameters of one decentralized run.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Gradient step size.
    pub mu: f64,
    /// Co-regularization strength; the social step uses `gamma = mu * eta`.
    pub eta: f64,
    pub regularizer: Regularizer,
    pub iterations: usize,
    pub init: InitScheme,
    pub store_intermediates: bool,
}

impl SolverConfig {
    pub fn new(mu: f64, eta: f64, regularizer: Regularizer, iterations: usize) -> Self {
        Self {
            mu,
            eta,
            regularizer,
            iterations,
            init: InitScheme::Zeros,
            store_intermediates: false,
        }
    }

    pub fn validate(&self, num_agents: usize, dimension: usize) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("mu must be positive and finite, got {}", self.mu),
            });
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("eta must be nonnegative and finite, got {}", self.eta),
            });
        }
        if self.iterations == 0 {
            return Err(Error::InvalidSolverConfig {
                reason: "iterations must be positive".into(),
            });
        }
        self.regularizer.validate()?;
        if let InitScheme::Explicit(vectors) = &self.init {
            if vectors.len() != num_agents {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "{} explicit init vectors for {num_agents} agents",
                        vectors.len()
                    ),
                });
            }
            if let Some(bad) = vectors.iter().position(|v| v.len() != dimension) {
                return Err(Error::DimensionMismatch {
                    context: format!("init vector {bad} has length {}", vectors[bad].len()),
                });
            }
        }
        Ok(())
    }

    /// SHA-256 digest of the configuration, recorded in trajectories.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.mu.to_le_bytes());
        hasher.update(self.eta.to_le_bytes());
        hasher.update(self.regularizer.name().as_bytes());
        match &self.regularizer {
            Regularizer::ReweightedL1 { epsilon } => hasher.update(epsilon.to_le_bytes()),
            Regularizer::L0 { lambda } => hasher.update(lambda.to_le_bytes()),
            Regularizer::ElasticNet { beta } => hasher.update(beta.to_le_bytes()),
            _ => {}
        }
        hasher.update((self.iterations as u64).to_le_bytes());
        match &self.init {
            InitScheme::Zeros => hasher.update([0u8]),
            InitScheme::Gaussian => hasher.update([1u8]),
            InitScheme::Explicit(vectors) => {
                hasher.update([2u8]);
                for v in vectors {
                    for x in v.iter() {
                        hasher.update(x.to_le_bytes());
                    }
                }
            }
        }
        crate::trajectory::hex_string(&hasher.finalize())
    }
}

/// Identifies one Monte-Carlo run of one experiment.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey {
    pub seed: u64,
    pub run: u64,
}

/// Source of per-(agent, iteration) stochastic gradients.
pub trait SampleStream {
    fn num_agents(&self) -> usize;
    fn dimension(&self) -> usize;
    /// Gradient at `w` for the sample of `(agent, iteration)`;
    /// iterations are 1-based.
    fn stochastic_gradient(
        &self,
        agent: usize,
        iteration: usize,
        w: &ArrayView1<f64>,
    ) -> Array1<f64>;
}

/// Draws fresh samples from an ensemble's generative models, keyed by
/// `(seed, run, agent, iteration)`.
pub struct GenerativeStream<'a> {
    ensemble: &'a ModelEnsemble,
    key: StreamKey,
}

impl<'a> GenerativeStream<'a> {
    pub fn new(ensemble: &'a ModelEnsemble, key: StreamKey) -> Self {
        Self { ensemble, key }
    }
}

impl SampleStream for GenerativeStream<'_> {
    fn num_agents(&self) -> usize {
        self.ensemble.num_agents()
    }

    fn dimension(&self) -> usize {
        self.ensemble.dimension()
    }

    fn stochastic_gradient(
        &self,
        agent: usize,
        iteration: usize,
        w: &ArrayView1<f64>,
    ) -> Array1<f64> {
        let mut rng = keyed_rng(
            self.key.seed,
            Purpose::Sample,
            self.key.run,
            agent as u64,
            iteration as u64,
        );
        self.ensemble.model(agent).stochastic_gradient(w, &mut rng)
    }
}

fn initial_iterates(
    config: &SolverConfig,
    key: StreamKey,
    num_agents: usize,
    dimension: usize,
) -> Vec<Array1<f64>> {
    match &config.init {
        InitScheme::Zeros => vec![Array1::zeros(dimension); num_agents],
        InitScheme::Gaussian => (0..num_agents)
            .map(|k| {
                let mut rng = keyed_rng(key.seed, Purpose::Init, key.run, k as u64, 0);
                Array1::from_shape_fn(dimension, |_| rng.sample::<f64, _>(StandardNormal))
            })
            .collect(),
        InitScheme::Explicit(vectors) => vectors.clone(),
    }
}

fn check_finite(iterates: &[Array1<f64>], iteration: usize) -> Result<()> {
    for (agent, w) in iterates.iter().enumerate() {
        if !w.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteIterate { agent, iteration });
        }
    }
    Ok(())
}

/// Social-learning phase over all agents, reading only the completed
/// intermediate estimates `psi`. `order` is the agent visiting order;
/// because each output depends only on `psi`, any order produces the
/// same result.
fn social_phase(
    network: &Network,
    psi: &[Array1<f64>],
    step: f64,
    regularizer: &Regularizer,
    order: &[usize],
    out: &mut [Array1<f64>],
) -> Result<()> {
    let mut neighbor_views: Vec<ArrayView1<f64>> = Vec::new();
    for &k in order {
        neighbor_views.clear();
        neighbor_views.extend(network.neighbors(k).iter().map(|&l| psi[l].view()));
        out[k] = prox_social_step(
            &psi[k].view(),
            &neighbor_views,
            network.p_weights(k),
            step,
            regularizer,
        )?;
    }
    Ok(())
}

/// Runs the recursion, reporting each completed iteration to `observe`
/// as `(iteration, estimates, intermediates)`. Iteration 0 reports the
/// initialization with `psi` equal to the initial iterates.
pub fn run_decentralized_observed<S, F>(
    network: &Network,
    stream: &S,
    config: &SolverConfig,
    key: StreamKey,
    mut observe: F,
) -> Result<()>
where
    S: SampleStream + ?Sized,
    F: FnMut(usize, &[Array1<f64>], &[Array1<f64>]),
{
    let num_agents = network.num_agents();
    let dimension = stream.dimension();
    if stream.num_agents() != num_agents {
        return Err(Error::DimensionMismatch {
            context: format!(
                "network has {num_agents} agents, stream has {}",
                stream.num_agents()
            ),
        });
    }
    config.validate(num_agents, dimension)?;

    let mut w = initial_iterates(config, key, num_agents, dimension);
    check_finite(&w, 0)?;
    observe(0, &w, &w);

    let step = config.mu * config.eta;
    let order: Vec<usize> = (0..num_agents).collect();
    let mut psi = vec![Array1::<f64>::zeros(dimension); num_agents];
    for iteration in 1..=config.iterations {
        // self-learning: every agent finishes before any social step
        for k in 0..num_agents {
            let gradient = stream.stochastic_gradient(k, iteration, &w[k].view());
            psi[k].assign(&w[k]);
            psi[k].scaled_add(-config.mu, &gradient);
        }
        check_finite(&psi, iteration)?;
        // social learning over the completed intermediates
        if step == 0.0 {
            for k in 0..num_agents {
                w[k].assign(&psi[k]);
            }
        } else {
            social_phase(network, &psi, step, &config.regularizer, &order, &mut w)?;
        }
        check_finite(&w, iteration)?;
        observe(iteration, &w, &psi);
    }
    Ok(())
}

/// Runs the recursion and records the full trajectory.
pub fn run_decentralized<S>(
    network: &Network,
    stream: &S,
    config: &SolverConfig,
    key: StreamKey,
) -> Result<Trajectory>
where
    S: SampleStream + ?Sized,
{
    let mut trajectory: Option<Trajectory> = None;
    run_decentralized_observed(network, stream, config, key, |iteration, w, psi| {
        if iteration == 0 {
            trajectory = Some(Trajectory::new(
                w.to_vec(),
                config.iterations,
                config.store_intermediates,
                key.seed,
                key.run,
                config.digest(),
            ));
        } else {
            let t = trajectory.as_mut().expect("iteration 0 observed first");
            t.push(w.to_vec());
            t.push_intermediate(psi.to_vec());
        }
    })?;
    Ok(trajectory.expect("at least the initialization is observed"))
}

/// Convenience wrapper drawing samples from the ensemble's models.
pub fn run_decentralized_generative(
    network: &Network,
    ensemble: &ModelEnsemble,
    config: &SolverConfig,
    key: StreamKey,
) -> Result<Trajectory> {
    let stream = GenerativeStream::new(ensemble, key);
    run_decentralized(network, &stream, config, key)
}
