//! Decentralized multitask learning over graphs with non-smooth
//! co-regularization.
//!
//! Agents on a connected network jointly minimize individual risks plus
//! sparsity-promoting penalties on neighbor differences. Each iteration
//! alternates a stochastic gradient step on the local cost with the
//! proximal operator of the neighbor-coupled co-regularizer, evaluated
//! in closed form for weighted sums of elastic-net, l0, l1 and
//! reweighted-l1 terms.
//!
//! The crate provides:
//!
//! - [`graph`]: agent networks with symmetric link weights, built from
//!   adjacency matrices or k-nearest-neighbor rules;
//! - [`prox`]: the closed-form scalar proximal operators and the
//!   component-wise social-learning step;
//! - [`oracle`]: independent brute-force prox oracles for verification;
//! - [`models`]: MSE and logistic cost families with synthetic data
//!   generation and gradient oracles;
//! - [`solver`]: the decentralized stochastic proximal-gradient
//!   recursion with deterministic, stream-keyed sampling;
//! - [`reference`]: a deterministic forward-backward solver computing
//!   the regularized optimum with a verified optimality residual;
//! - [`bound`]: the mean-square-perturbation bound recursion and its
//!   closed-form limsup;
//! - [`metrics`]: MSD learning curves, steady-state extraction and
//!   prediction error.

// validation comparisons are written `!(x > 0.0)` so that NaN inputs
// fail them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bound;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod prox;
pub mod reference;
pub mod rng;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result};
pub use graph::Network;
pub use models::{AgentModel, ModelEnsemble};
pub use prox::{ProxProblem, ProxResult, Regularizer};
pub use solver::{InitScheme, SolverConfig, StreamKey};
pub use trajectory::Trajectory;
