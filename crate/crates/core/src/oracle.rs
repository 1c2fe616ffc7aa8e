//! Brute-force verification oracles for the scalar proximal operators.
//!
//! These deliberately avoid the interval machinery in [`crate::prox`]:
//! the convex oracle minimizes the prox objective on a grid followed by a
//! ternary-search refinement, and the l0 oracle exhaustively compares the
//! finite candidate set. They exist so the closed forms can be checked
//! against an independent computation path.

use crate::error::{Error, Result};

/// Grid minimizer of `objective(x) + (x - v)^2 / (2 gamma)` over
/// `search_interval`, refined by one local ternary-search pass down to
/// `grid_step`. Accuracy is `<= grid_step` for convex objectives.
///
/// `anchors` are the `(b_j, c_j)` pairs of the underlying problem; the
/// search interval must cover every anchor with a margin of
/// `10 * gamma * sum_j c_j` and must contain `v`.
pub fn brute_force_prox_oracle(
    v: f64,
    objective: impl Fn(f64) -> f64,
    search_interval: (f64, f64),
    grid_step: f64,
    gamma: f64,
    anchors: &[(f64, f64)],
) -> Result<f64> {
    let (lo, hi) = search_interval;
    let (mut need_lo, mut need_hi) = (v, v);
    if !anchors.is_empty() {
        let margin: f64 = 10.0 * gamma * anchors.iter().map(|&(_, c)| c).sum::<f64>();
        let b_min = anchors
            .iter()
            .map(|&(b, _)| b)
            .fold(f64::INFINITY, f64::min);
        let b_max = anchors
            .iter()
            .map(|&(b, _)| b)
            .fold(f64::NEG_INFINITY, f64::max);
        need_lo = need_lo.min(b_min - margin);
        need_hi = need_hi.max(b_max + margin);
    }
    if lo > need_lo || hi < need_hi {
        return Err(Error::OracleInterval {
            lo,
            hi,
            need_lo,
            need_hi,
        });
    }

    let g = |x: f64| objective(x) + (x - v) * (x - v) / (2.0 * gamma);

    // coarse scan to locate the basin
    let coarse = ((hi - lo) / 65536.0).max(grid_step);
    let cells = ((hi - lo) / coarse).ceil() as usize;
    let mut best_x = lo;
    let mut best_g = g(lo);
    for i in 1..=cells {
        let x = (lo + i as f64 * coarse).min(hi);
        let gx = g(x);
        if gx < best_g {
            best_g = gx;
            best_x = x;
        }
    }

    // ternary refinement inside the bracketing cells
    let mut a = (best_x - coarse).max(lo);
    let mut b = (best_x + coarse).min(hi);
    while b - a > grid_step {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        let (g1, g2) = (g(m1), g(m2));
        if g1 < g2 {
            b = m2;
        } else if g1 > g2 {
            a = m1;
        } else {
            a = m1;
            b = m2;
        }
    }
    Ok(0.5 * (a + b))
}

/// Exhaustive l0 prox oracle: evaluates
/// `h0(x) + (x - v)^2 / (2 gamma)` with
/// `h0(x) = -lambda * sum_{j : b_j = x} c_j` over the candidate set
/// `{v} u {b_j}` and returns every global minimizer, ascending.
pub fn l0_candidate_set_oracle(
    v: f64,
    anchors: &[(f64, f64)],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let mut candidates: Vec<f64> = anchors.iter().map(|&(b, _)| b).collect();
    candidates.push(v);
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
    candidates.dedup();

    let objective = |x: f64| -> f64 {
        let penalty: f64 = anchors
            .iter()
            .filter(|&&(b, _)| b == x)
            .map(|&(_, c)| c)
            .sum();
        -lambda * penalty + (x - v) * (x - v) / (2.0 * gamma)
    };

    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    for &x in &candidates {
        let fx = objective(x);
        if fx < best {
            best = fx;
            argmin.clear();
            argmin.push(x);
        } else if fx == best {
            argmin.push(x);
        }
    }
    argmin
}
