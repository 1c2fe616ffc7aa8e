//! Mean-square-perturbation bound recursion: iterates
//!
//! ```text
//! MSP_i <= A MSP_{i-1} + mu (c + mu d)
//! A = diag{ 1 - mu nu_k / 2 + 2 mu^2 beta_sk^2 / (1 - mu nu_k / 2) }
//! c = eta^2 col{ 8 e_k^2 / nu_k }
//! d = col{ (2 beta_sk^2 ||w_k||^2 + sigma_sk^2) / (1 - mu nu_k / 2) }
//! ```
//!
//! together with the closed-form limsup bound
//! `mu ||c + mu d||_inf / (1 - ||A||_inf)`.

use crate::error::{Error, Result};

/// Per-agent curvature, gradient-noise and subgradient bounds plus the
/// regularization scaling `eta = kappa * mu^alpha`.
#[derive(Debug, Clone)]
pub struct StabilityConstants {
    /// Hessian lower bounds `nu_k`.
    pub nu: Vec<f64>,
    /// Hessian upper bounds `delta_k`.
    pub delta: Vec<f64>,
    /// Relative gradient-noise bounds `beta_sk^2`.
    pub beta_s_sq: Vec<f64>,
    /// Absolute gradient-noise bounds `sigma_sk^2`.
    pub sigma_s_sq: Vec<f64>,
    /// Subgradient bounds `e_k`.
    pub subgradient_bound: Vec<f64>,
    pub kappa: f64,
    pub alpha: f64,
}

impl StabilityConstants {
    pub fn num_agents(&self) -> usize {
        self.nu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.nu.len();
        if [
            self.delta.len(),
            self.beta_s_sq.len(),
            self.sigma_s_sq.len(),
            self.subgradient_bound.len(),
        ]
        .iter()
        .any(|&len| len != k)
        {
            return Err(Error::DimensionMismatch {
                context: "stability constant vectors have unequal lengths".into(),
            });
        }
        for agent in 0..k {
            if !(self.nu[agent] > 0.0 && self.nu[agent] <= self.delta[agent]) {
                return Err(Error::InvalidSolverConfig {
                    reason: format!(
                        "need 0 < nu <= delta at agent {agent}: nu = {}, delta = {}",
                        self.nu[agent], self.delta[agent]
                    ),
                });
            }
            if self.beta_s_sq[agent] < 0.0
                || self.sigma_s_sq[agent] < 0.0
                || self.subgradient_bound[agent] < 0.0
            {
                return Err(Error::InvalidSolverConfig {
                    reason: format!("negative noise or subgradient bound at agent {agent}"),
                });
            }
        }
        if !(self.alpha >= 0.5) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("alpha must be >= 1/2, got {}", self.alpha),
            });
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("kappa must be positive, got {}", self.kappa),
            });
        }
        Ok(())
    }

    /// `eta = kappa * mu^alpha`.
    pub fn eta_for(&self, mu: f64) -> f64 {
        self.kappa * mu.powf(self.alpha)
    }

    /// Checks the sufficient stability condition
    /// `mu < min_k { nu_k / delta_k^2, nu_k / (4 beta_sk^2 + nu_k^2 / 2) }`,
    /// naming the violated bound.
    pub fn check_step_size(&self, mu: f64) -> Result<()> {
        if !(mu > 0.0) {
            return Err(Error::InvalidSolverConfig {
                reason: format!("mu must be positive, got {mu}"),
            });
        }
        for agent in 0..self.num_agents() {
            let curvature_limit = self.nu[agent] / (self.delta[agent] * self.delta[agent]);
            if mu >= curvature_limit {
                return Err(Error::UnstableStepSize {
                    mu,
                    bound: "nu/delta^2",
                    limit: curvature_limit,
                    agent,
                });
            }
            let noise_limit = self.nu[agent]
                / (4.0 * self.beta_s_sq[agent] + self.nu[agent] * self.nu[agent] / 2.0);
            if mu >= noise_limit {
                return Err(Error::UnstableStepSize {
                    mu,
                    bound: "nu/(4 beta_s^2 + nu^2/2)",
                    limit: noise_limit,
                    agent,
                });
            }
        }
        Ok(())
    }
}

/// Output of the bound recursion.
#[derive(Debug, Clone)]
pub struct BoundRecursion {
    /// `MSP_i` bound per iteration, index 0 holding the supplied start.
    pub msp: Vec<Vec<f64>>,
    /// Diagonal of `A`.
    pub contraction: Vec<f64>,
    /// Closed-form bound on `limsup_i ||MSP_i||_inf`.
    pub limsup_bound: f64,
}

/// Iterates the diagonal recursion for `iterations` steps from `msp_0`.
///
/// `w_eta_norms` are the norms `||w_k_eta||` entering `d`. The step size
/// must satisfy the stability condition; violations are rejected with
/// the violated bound named.
pub fn theorem_bound_recursion(
    constants: &StabilityConstants,
    mu: f64,
    eta: f64,
    msp_0: &[f64],
    w_eta_norms: &[f64],
    iterations: usize,
) -> Result<BoundRecursion> {
    constants.validate()?;
    constants.check_step_size(mu)?;
    let k = constants.num_agents();
    if msp_0.len() != k || w_eta_norms.len() != k {
        return Err(Error::DimensionMismatch {
            context: format!(
                "msp_0 has {} entries, w_eta_norms {}, expected {k}",
                msp_0.len(),
                w_eta_norms.len()
            ),
        });
    }

    let mut contraction = Vec::with_capacity(k);
    let mut drive = Vec::with_capacity(k); // mu (c + mu d) per agent
    #[allow(clippy::needless_range_loop)]
    for agent in 0..k {
        let shrink = 1.0 - mu * constants.nu[agent] / 2.0;
        let a = shrink + 2.0 * mu * mu * constants.beta_s_sq[agent] / shrink;
        contraction.push(a);
        let c = eta
            * eta
            * 8.0
            * constants.subgradient_bound[agent]
            * constants.subgradient_bound[agent]
            / constants.nu[agent];
        let d = (2.0 * constants.beta_s_sq[agent] * w_eta_norms[agent] * w_eta_norms[agent]
            + constants.sigma_s_sq[agent])
            / shrink;
        drive.push(mu * (c + mu * d));
    }

    let mut msp = Vec::with_capacity(iterations + 1);
    msp.push(msp_0.to_vec());
    for _ in 0..iterations {
        let previous = msp.last().expect("nonempty");
        let next: Vec<f64> = (0..k)
            .map(|agent| contraction[agent] * previous[agent] + drive[agent])
            .collect();
        msp.push(next);
    }

    let a_inf = contraction
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let drive_inf = drive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // drive already carries the leading mu factor
    let limsup_bound = drive_inf / (1.0 - a_inf);

    Ok(BoundRecursion {
        msp,
        contraction,
        limsup_bound,
    })
}
