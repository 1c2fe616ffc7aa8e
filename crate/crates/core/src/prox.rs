//! Closed-form scalar proximal operators for weighted sums of
//! elastic-net, l0, l1 and reweighted-l1 anchor terms, and the
//! component-wise social-learning step built on top of them.
//!
//! The scalar elastic-net prox minimizes
//!
//! ```text
//! sum_j c_j ( |x - b_j| + (beta/2) (x - b_j)^2 )  +  (1 / 2 gamma) (x - v)^2
//! ```
//!
//! by locating `v` in a partition of the real line into `2 J + 1`
//! half-open intervals `I_0, {I_{n,1}, I_{n,2}}` and applying the
//! matching affine (or constant) formula. The l0 variant compares the
//! finite candidate set `{v} u {b_j}` directly and can be multi-valued.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};

/// Co-regularizer family applied to neighbor differences.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// `|x|` summed over coordinates.
    L1,
    /// l1 with per-coordinate weights `1 / (epsilon + |delta|)` frozen
    /// from the current intermediate estimates.
    ReweightedL1 { epsilon: f64 },
    /// `lambda * count(x != 0)`; non-convex, prox may be multi-valued.
    L0 { lambda: f64 },
    /// `|x| + (beta/2) x^2` per coordinate.
    ElasticNet { beta: f64 },
    /// `||x||^2`; smooth, prox is an affine averaging map.
    SquaredL2,
}

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::ReweightedL1 { epsilon } if !(epsilon > 0.0) => {
                Err(Error::InvalidRegularizer {
                    reason: format!("reweighted l1 needs epsilon > 0, got {epsilon}"),
                })
            }
            Regularizer::L0 { lambda } if !(lambda > 0.0) => Err(Error::InvalidRegularizer {
                reason: format!("l0 needs lambda > 0, got {lambda}"),
            }),
            Regularizer::ElasticNet { beta } if !(beta >= 0.0) => Err(Error::InvalidRegularizer {
                reason: format!("elastic net needs beta >= 0, got {beta}"),
            }),
            _ => Ok(()),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Regularizer::L0 { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::L1 => "l1",
            Regularizer::ReweightedL1 { .. } => "reweighted_l1",
            Regularizer::L0 { .. } => "l0",
            Regularizer::ElasticNet { .. } => "elastic_net",
            Regularizer::SquaredL2 => "squared_l2",
        }
    }
}

/// One scalar prox subproblem: anchors `(b_j, c_j)` with strictly
/// increasing `b_j` (duplicates merged at construction), step `gamma`,
/// elastic-net curvature `beta` and l0 level `lambda`.
#[derive(Debug, Clone)]
pub struct ProxProblem {
    anchors: Vec<(f64, f64)>,
    gamma: f64,
    beta: f64,
    lambda: f64,
}

impl ProxProblem {
    /// Builds a problem, sorting anchors and merging duplicates by
    /// summing their coefficients.
    pub fn new(anchors: Vec<(f64, f64)>, gamma: f64, beta: f64, lambda: f64) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidProxProblem {
                reason: "at least one anchor required".into(),
            });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidProxProblem {
                reason: format!("gamma must be positive and finite, got {gamma}"),
            });
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidProxProblem {
                reason: format!("beta must be nonnegative, got {beta}"),
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProxProblem {
                reason: format!("lambda must be positive, got {lambda}"),
            });
        }
        for &(b, c) in &anchors {
            if !b.is_finite() {
                return Err(Error::InvalidProxProblem {
                    reason: format!("anchor value {b} is not finite"),
                });
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidProxProblem {
                    reason: format!("anchor coefficient {c} must be positive"),
                });
            }
        }
        let mut sorted = anchors;
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite anchors"));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
        for (b, c) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += c,
                _ => merged.push((b, c)),
            }
        }
        Ok(Self {
            anchors: merged,
            gamma,
            beta,
            lambda,
        })
    }

    /// l1 / elastic-net problem (`lambda` unused, kept at 1).
    pub fn elastic(anchors: Vec<(f64, f64)>, gamma: f64, beta: f64) -> Result<Self> {
        Self::new(anchors, gamma, beta, 1.0)
    }

    /// Plain l1 problem.
    pub fn l1(anchors: Vec<(f64, f64)>, gamma: f64) -> Result<Self> {
        Self::new(anchors, gamma, 0.0, 1.0)
    }

    /// l0 problem at level `lambda` (`beta` unused).
    pub fn l0(anchors: Vec<(f64, f64)>, gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(anchors, gamma, 0.0, lambda)
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn with_beta(&self, beta: f64) -> Self {
        Self {
            anchors: self.anchors.clone(),
            gamma: self.gamma,
            beta,
            lambda: self.lambda,
        }
    }
}

/// Result of a possibly multi-valued prox (the l0 case).
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    /// All global minimizers, ascending.
    pub values: Vec<f64>,
    /// The deterministic pick: smallest absolute value, then smallest
    /// value.
    pub selected: f64,
}

impl ProxResult {
    fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite prox values"));
        values.dedup();
        let selected = values
            .iter()
            .copied()
            .min_by(|x, y| {
                (x.abs(), *x)
                    .partial_cmp(&(y.abs(), *y))
                    .expect("finite prox values")
            })
            .expect("nonempty prox result");
        Self { values, selected }
    }
}

/// Prefix/suffix coefficient sums used by the interval formulas.
/// `prefix[n] = sum_{j < n} c_j`, `suffix[n] = sum_{j >= n} c_j`.
struct CoefficientSums {
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    total_c: f64,
    total_cb: f64,
}

fn coefficient_sums(anchors: &[(f64, f64)]) -> CoefficientSums {
    let j = anchors.len();
    let mut prefix = vec![0.0; j + 1];
    for (i, &(_, c)) in anchors.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    let mut suffix = vec![0.0; j + 1];
    for (i, &(_, c)) in anchors.iter().enumerate().rev() {
        suffix[i] = suffix[i + 1] + c;
    }
    let total_cb = anchors.iter().map(|&(b, c)| c * b).sum();
    CoefficientSums {
        total_c: prefix[j],
        prefix,
        suffix,
        total_cb,
    }
}

/// `sum_j c_j (b - b_j)`, the quadratic pull entering every interval
/// bound at anchor value `b`; `skip` omits one index (the printed bound
/// of `I_0` leaves out the vanishing `j = 1` term).
fn anchor_pull(anchors: &[(f64, f64)], b: f64, skip: Option<usize>) -> f64 {
    let mut acc = 0.0;
    for (idx, &(bj, cj)) in anchors.iter().enumerate() {
        if Some(idx) == skip {
            continue;
        }
        acc += cj * (b - bj);
    }
    acc
}

/// Scalar elastic-net-sum prox on pre-sorted, pre-merged anchors.
/// Interval membership is left-closed, right-open.
fn elastic_net_scalar(v: f64, anchors: &[(f64, f64)], gamma: f64, beta: f64) -> f64 {
    let sums = coefficient_sums(anchors);
    let bg = beta * gamma;
    let denom = 1.0 + bg * sums.total_c;
    for (i, &(b, _)) in anchors.iter().enumerate() {
        let quad = bg * anchor_pull(anchors, b, None);
        let flat_start = b - gamma * (sums.suffix[i] - sums.prefix[i]) + quad;
        if v < flat_start {
            return if i == 0 {
                // I_0
                (v + gamma * sums.total_c + bg * sums.total_cb) / denom
            } else {
                // the gap interval before this anchor's flat segment
                (v + gamma * (sums.suffix[i] - sums.prefix[i]) + bg * sums.total_cb) / denom
            };
        }
        let flat_end = b - gamma * (sums.suffix[i + 1] - sums.prefix[i + 1]) + quad;
        if v < flat_end {
            // I_{i,1}: prox sticks at the anchor
            return b;
        }
    }
    // I_{J,2}
    (v - gamma * sums.total_c + bg * sums.total_cb) / denom
}

/// Prox of the weighted elastic-net sum
/// `sum_j c_j (|x - b_j| + (beta/2)(x - b_j)^2)` at `v` (`lambda` unused).
pub fn prox_elastic_net_sum(v: f64, problem: &ProxProblem) -> f64 {
    elastic_net_scalar(v, &problem.anchors, problem.gamma, problem.beta)
}

/// Prox of the weighted l1 sum: the elastic-net prox with `beta = 0`.
pub fn prox_l1_sum(v: f64, problem: &ProxProblem) -> f64 {
    prox_elastic_net_sum(v, &problem.with_beta(0.0))
}

/// Prox of the weighted l0 sum `sum_j c_j * lambda * [x != b_j]`
/// (up to the constant `-lambda sum_j c_j`). The minimizer set is the
/// argmin of `f` over the candidates `{v} u {b_j}` where
/// `f(b_j) = -lambda c_j + (b_j - v)^2 / (2 gamma)` and `f(v) = 0` when
/// `v` is not an anchor.
pub fn prox_l0_sum(v: f64, problem: &ProxProblem) -> ProxResult {
    let gamma = problem.gamma;
    let lambda = problem.lambda;
    let v_is_anchor = problem.anchors.iter().any(|&(b, _)| b == v);
    let mut f_min = f64::INFINITY;
    let mut argmin: Vec<f64> = Vec::new();
    for &(b, c) in &problem.anchors {
        let d = b - v;
        let f = -lambda * c + d * d / (2.0 * gamma);
        if f < f_min {
            f_min = f;
            argmin.clear();
            argmin.push(b);
        } else if f == f_min {
            argmin.push(b);
        }
    }
    let values = if v_is_anchor {
        // staying put is itself an anchor candidate, already covered
        argmin
    } else if f_min < 0.0 {
        argmin
    } else if f_min > 0.0 {
        vec![v]
    } else {
        argmin.push(v);
        argmin
    };
    ProxResult::from_values(values)
}

/// Per-coordinate reweighting coefficients `base_p / (epsilon + |delta_m|)`.
pub fn reweight_coefficients(delta: &ArrayView1<f64>, base_p: f64, epsilon: f64) -> Array1<f64> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    delta.mapv(|d| base_p / (epsilon + d.abs()))
}

/// One social-learning step: component-wise prox of
/// `step * sum_l p_kl f(. - psi_l)` evaluated at `psi_k`.
///
/// `neighbor_psis[i]` pairs with `p_weights[i]`. With no neighbors or a
/// zero step the input is returned unchanged. For the l0 regularizer the
/// deterministic selection rule picks one minimizer per coordinate.
pub fn prox_social_step(
    psi_k: &ArrayView1<f64>,
    neighbor_psis: &[ArrayView1<f64>],
    p_weights: &[f64],
    step: f64,
    regularizer: &Regularizer,
) -> Result<Array1<f64>> {
    regularizer.validate()?;
    if neighbor_psis.len() != p_weights.len() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{} neighbor vectors vs {} weights",
                neighbor_psis.len(),
                p_weights.len()
            ),
        });
    }
    let m = psi_k.len();
    for psi in neighbor_psis {
        if psi.len() != m {
            return Err(Error::DimensionMismatch {
                context: format!("neighbor vector length {} vs {}", psi.len(), m),
            });
        }
    }
    if neighbor_psis.is_empty() || step == 0.0 {
        return Ok(psi_k.to_owned());
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidProxProblem {
            reason: format!("step must be nonnegative and finite, got {step}"),
        });
    }

    if let Regularizer::SquaredL2 = regularizer {
        // prox of step * sum_l p_l (x - psi_l)^2 per coordinate:
        // x = (v + 2 step sum_l p_l psi_l) / (1 + 2 step sum_l p_l)
        let total_p: f64 = p_weights.iter().sum();
        let mut weighted = Array1::<f64>::zeros(m);
        for (psi, &p) in neighbor_psis.iter().zip(p_weights) {
            weighted.scaled_add(p, psi);
        }
        let denom = 1.0 + 2.0 * step * total_p;
        return Ok(Array1::from_shape_fn(m, |i| {
            (psi_k[i] + 2.0 * step * weighted[i]) / denom
        }));
    }

    let mut out = Array1::<f64>::zeros(m);
    let mut anchors: Vec<(f64, f64)> = Vec::with_capacity(neighbor_psis.len());
    for coord in 0..m {
        let v = psi_k[coord];
        anchors.clear();
        for (psi, &p) in neighbor_psis.iter().zip(p_weights) {
            let b = psi[coord];
            let c = match regularizer {
                Regularizer::ReweightedL1 { epsilon } => p / (epsilon + (v - b).abs()),
                _ => p,
            };
            anchors.push((b, c));
        }
        anchors.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite anchors"));
        // merge coinciding anchors by summing coefficients
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(anchors.len());
        for &(b, c) in &anchors {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += c,
                _ => merged.push((b, c)),
            }
        }
        out[coord] = match regularizer {
            Regularizer::L1 | Regularizer::ReweightedL1 { .. } => {
                elastic_net_scalar(v, &merged, step, 0.0)
            }
            Regularizer::ElasticNet { beta } => elastic_net_scalar(v, &merged, step, *beta),
            Regularizer::L0 { lambda } => {
                let problem = ProxProblem {
                    anchors: merged.clone(),
                    gamma: step,
                    beta: 0.0,
                    lambda: *lambda,
                };
                prox_l0_sum(v, &problem).selected
            }
            Regularizer::SquaredL2 => unreachable!("handled above"),
        };
    }
    Ok(out)
}

/// One interval of the partition backing the elastic-net prox.
/// `start` and `end` are each evaluated from that interval's own
/// printed bound formula.
#[derive(Debug, Clone, Copy)]
pub struct ProxInterval {
    /// `-inf` for `I_0`.
    pub start: f64,
    /// `+inf` for `I_{J,2}`.
    pub end: f64,
}

/// The `2 J + 1` intervals `I_0, I_{1,1}, I_{1,2}, ..., I_{J,2}` in
/// left-to-right order. Adjacent bounds are algebraically equal;
/// evaluating each from its own formula lets tests verify the partition
/// tiles the real line with no gaps or overlaps.
pub fn interval_partition(problem: &ProxProblem) -> Vec<ProxInterval> {
    let anchors = &problem.anchors;
    let gamma = problem.gamma;
    let bg = problem.beta * gamma;
    let sums = coefficient_sums(anchors);
    let count = anchors.len();

    let mut intervals = Vec::with_capacity(2 * count + 1);
    // I_0 as printed: the quadratic pull omits the vanishing j = 1 term
    intervals.push(ProxInterval {
        start: f64::NEG_INFINITY,
        end: anchors[0].0 - gamma * sums.total_c + bg * anchor_pull(anchors, anchors[0].0, Some(0)),
    });
    for (i, &(b, _)) in anchors.iter().enumerate() {
        let quad = bg * anchor_pull(anchors, b, None);
        // I_{n,1}
        intervals.push(ProxInterval {
            start: b - gamma * (sums.suffix[i] - sums.prefix[i]) + quad,
            end: b - gamma * (sums.suffix[i + 1] - sums.prefix[i + 1]) + quad,
        });
        // I_{n,2}
        let start = b - gamma * (sums.suffix[i + 1] - sums.prefix[i + 1]) + quad;
        let end = if i + 1 < count {
            let b_next = anchors[i + 1].0;
            b_next - gamma * (sums.suffix[i + 1] - sums.prefix[i + 1])
                + bg * anchor_pull(anchors, b_next, None)
        } else {
            f64::INFINITY
        };
        intervals.push(ProxInterval { start, end });
    }
    intervals
}

/// Units-in-last-place distance between two finite floats.
pub fn ulp_distance(a: f64, b: f64) -> u64 {
    if a == b {
        return 0;
    }
    let to_ordered = |x: f64| -> i64 {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN.wrapping_sub(bits)
        } else {
            bits
        }
    };
    let (oa, ob) = (to_ordered(a), to_ordered(b));
    oa.abs_diff(ob)
}
