//! Closed-form prox operators checked against independent brute-force
//! oracles and their printed-formula properties.

use proptest::prelude::*;
use proxnet::oracle::{brute_force_prox_oracle, l0_candidate_set_oracle};
use proxnet::prox::{
    interval_partition, prox_elastic_net_sum, prox_l0_sum, prox_l1_sum, prox_social_step,
    ulp_distance, ProxProblem, Regularizer,
};

/// The three-anchor instance with weights (1/10, 1/2, 2/5) at anchors
/// (-2, 1, 5) and quadratic term (1/4)(.)^2 per anchor, i.e. beta = 1/2.
fn three_anchor_elastic() -> ProxProblem {
    ProxProblem::elastic(vec![(-2.0, 0.1), (1.0, 0.5), (5.0, 0.4)], 1.0, 0.5).unwrap()
}

fn three_anchor_l1() -> ProxProblem {
    ProxProblem::l1(vec![(-2.0, 0.1), (1.0, 0.5), (5.0, 0.4)], 1.0).unwrap()
}

fn elastic_objective(anchors: Vec<(f64, f64)>, beta: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        anchors
            .iter()
            .map(|&(b, c)| c * ((x - b).abs() + 0.5 * beta * (x - b) * (x - b)))
            .sum()
    }
}

#[test]
fn three_anchor_elastic_net_frozen_values() {
    let problem = three_anchor_elastic();
    // frozen from grid minimization of h(x) + (1/2)(x - v)^2 over
    // [-15, 15] at step 1e-6 (independent run); closed fractions are
    // -2.05/1.5, 1.95/1.5 and 8.15/1.5
    let cases = [(-4.0, -2.05 / 1.5), (1.0, 1.95 / 1.5), (8.0, 8.15 / 1.5)];
    for (v, frozen) in cases {
        let closed = prox_elastic_net_sum(v, &problem);
        assert!(
            (closed - frozen).abs() < 1e-12,
            "v = {v}: closed {closed} vs frozen {frozen}"
        );
        let objective = elastic_objective(problem.anchors().to_vec(), 0.5);
        let oracle =
            brute_force_prox_oracle(v, objective, (-100.0, 100.0), 1e-7, 1.0, problem.anchors())
                .unwrap();
        assert!(
            (closed - oracle).abs() < 1e-6,
            "v = {v}: closed {closed} vs oracle {oracle}"
        );
    }
    // at v = 1 the flat segment does not cover the anchor: the prox
    // moves past it (the pure-l1 variant below does return 1 there)
    assert!((prox_elastic_net_sum(1.0, &problem) - 1.3).abs() < 1e-12);
}

#[test]
fn three_anchor_l1_frozen_values() {
    let problem = three_anchor_l1();
    for (v, frozen) in [(-4.0, -3.0), (1.0, 1.0), (8.0, 7.0), (6.5, 5.5)] {
        let closed = prox_l1_sum(v, &problem);
        assert!(
            (closed - frozen).abs() < 1e-12,
            "v = {v}: closed {closed} vs frozen {frozen}"
        );
    }
    // v beyond b_J + gamma * sum(c) = 6 lands on the outer affine piece
    for v in [6.0001, 9.3, 42.0] {
        assert!((prox_l1_sum(v, &problem) - (v - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn l0_spec_cases_match_candidate_oracle() {
    let problem = ProxProblem::l0(vec![(0.0, 1.0)], 1.0, 1.0).unwrap();
    for v in [2.0, 1.0, 2.0f64.sqrt(), -2.0f64.sqrt(), 0.0] {
        let result = prox_l0_sum(v, &problem);
        let oracle = l0_candidate_set_oracle(v, problem.anchors(), 1.0, 1.0);
        assert_eq!(result.values, oracle, "v = {v}");
        assert!(result.values.contains(&result.selected));
    }
}

#[test]
fn reweighted_social_step_equals_l1_with_frozen_weights() {
    // the reweighted step is the l1 step with per-coordinate
    // coefficients p / (eps + |psi_k - psi_l|) frozen from the inputs
    let psi_k = ndarray::array![1.5, -0.25, 0.0];
    let a = ndarray::array![0.6, -0.25, 2.0];
    let b = ndarray::array![-1.0, 0.75, 0.5];
    let (p_a, p_b) = (0.4, 0.7);
    let (step, epsilon) = (0.3, 0.1);
    let out = prox_social_step(
        &psi_k.view(),
        &[a.view(), b.view()],
        &[p_a, p_b],
        step,
        &Regularizer::ReweightedL1 { epsilon },
    )
    .unwrap();
    for m in 0..3 {
        let c_a = p_a / (epsilon + (psi_k[m] - a[m]).abs());
        let c_b = p_b / (epsilon + (psi_k[m] - b[m]).abs());
        let problem = ProxProblem::l1(vec![(a[m], c_a), (b[m], c_b)], step).unwrap();
        let expect = prox_l1_sum(psi_k[m], &problem);
        assert!(
            (out[m] - expect).abs() < 1e-12,
            "coordinate {m}: {} vs {expect}",
            out[m]
        );
    }
}

fn anchors_strategy(max_anchors: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(((-10.0..10.0f64), (0.001..2.0f64)), 1..=max_anchors)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn closed_form_matches_oracle(
        anchors in anchors_strategy(6),
        gamma in 0.01..5.0f64,
        beta in 0.0..2.0f64,
        v in -20.0..20.0f64,
    ) {
        let problem = ProxProblem::elastic(anchors, gamma, beta).unwrap();
        let closed = prox_elastic_net_sum(v, &problem);
        let objective = elastic_objective(problem.anchors().to_vec(), beta);
        let total_c: f64 = problem.anchors().iter().map(|&(_, c)| c).sum();
        let span = 21.0 + 10.0 * gamma * total_c + 11.0;
        let oracle = brute_force_prox_oracle(
            v,
            objective,
            (-span, span),
            1e-7,
            gamma,
            problem.anchors(),
        ).unwrap();
        prop_assert!(
            (closed - oracle).abs() <= 1e-6,
            "closed {} vs oracle {}",
            closed,
            oracle
        );
    }

    #[test]
    fn interval_partition_tiles_the_line(
        anchors in anchors_strategy(6),
        gamma in 0.01..5.0f64,
        beta in 0.0..2.0f64,
    ) {
        let problem = ProxProblem::elastic(anchors, gamma, beta).unwrap();
        let intervals = interval_partition(&problem);
        prop_assert_eq!(intervals.len(), 2 * problem.anchors().len() + 1);
        prop_assert_eq!(intervals[0].start, f64::NEG_INFINITY);
        prop_assert_eq!(intervals.last().unwrap().end, f64::INFINITY);
        // adjacent bounds coincide (no gaps, no overlaps) and the
        // finite bound sequence is nondecreasing
        for pair in intervals.windows(2) {
            prop_assert!(
                ulp_distance(pair[0].end, pair[1].start) <= 8,
                "bounds {} vs {}",
                pair[0].end,
                pair[1].start
            );
            prop_assert!(pair[0].start <= pair[1].start);
        }
        for interval in &intervals[1..intervals.len() - 1] {
            prop_assert!(interval.start <= interval.end);
        }
    }

    #[test]
    fn convex_prox_is_nonexpansive_and_monotone(
        anchors in anchors_strategy(5),
        gamma in 0.01..5.0f64,
        beta in 0.0..2.0f64,
        v1 in -20.0..20.0f64,
        v2 in -20.0..20.0f64,
    ) {
        let problem = ProxProblem::elastic(anchors, gamma, beta).unwrap();
        let p1 = prox_elastic_net_sum(v1, &problem);
        let p2 = prox_elastic_net_sum(v2, &problem);
        prop_assert!((p1 - p2).abs() <= (v1 - v2).abs() + 1e-12);
        if v1 <= v2 {
            prop_assert!(p1 <= p2 + 1e-12);
        } else {
            prop_assert!(p2 <= p1 + 1e-12);
        }
    }

    #[test]
    fn prox_is_shift_equivariant(
        anchors in anchors_strategy(5),
        gamma in 0.01..5.0f64,
        beta in 0.0..2.0f64,
        v in -20.0..20.0f64,
        shift in -10.0..10.0f64,
        lambda in 0.1..3.0f64,
    ) {
        let problem = ProxProblem::new(anchors.clone(), gamma, beta, lambda).unwrap();
        let shifted_anchors: Vec<(f64, f64)> =
            anchors.iter().map(|&(b, c)| (b + shift, c)).collect();
        let shifted = ProxProblem::new(shifted_anchors, gamma, beta, lambda).unwrap();
        let base = prox_elastic_net_sum(v, &problem);
        let moved = prox_elastic_net_sum(v + shift, &shifted);
        prop_assert!((moved - (base + shift)).abs() < 1e-8, "{moved} vs {}", base + shift);
        // the l0 selector shifts the same way up to set reordering
        let base_l0 = prox_l0_sum(v, &problem);
        let moved_l0 = prox_l0_sum(v + shift, &shifted);
        prop_assert_eq!(base_l0.values.len(), moved_l0.values.len());
        for (a, b) in base_l0.values.iter().zip(moved_l0.values.iter()) {
            prop_assert!((b - (a + shift)).abs() < 1e-8);
        }
    }

    #[test]
    fn l1_is_elastic_net_with_zero_beta(
        anchors in anchors_strategy(5),
        gamma in 0.01..5.0f64,
        v in -20.0..20.0f64,
    ) {
        let problem = ProxProblem::elastic(anchors, gamma, 1.3).unwrap();
        let zero_beta = ProxProblem::elastic(problem.anchors().to_vec(), gamma, 0.0).unwrap();
        prop_assert_eq!(
            prox_l1_sum(v, &problem).to_bits(),
            prox_elastic_net_sum(v, &zero_beta).to_bits()
        );
    }

    #[test]
    fn l0_set_equals_exhaustive_candidate_argmin(
        anchors in anchors_strategy(5),
        gamma in 0.01..5.0f64,
        lambda in 0.05..3.0f64,
        v in -20.0..20.0f64,
    ) {
        let problem = ProxProblem::l0(anchors, gamma, lambda).unwrap();
        let result = prox_l0_sum(v, &problem);
        let oracle = l0_candidate_set_oracle(v, problem.anchors(), gamma, lambda);
        prop_assert_eq!(&result.values, &oracle);
        prop_assert!(result.values.contains(&result.selected));
        // deterministic pick: smallest absolute value, then smallest
        let expected = result
            .values
            .iter()
            .copied()
            .min_by(|x, y| (x.abs(), *x).partial_cmp(&(y.abs(), *y)).unwrap())
            .unwrap();
        prop_assert_eq!(result.selected, expected);
    }

    #[test]
    fn social_step_l1_subgradient_is_bounded(
        psi_k in prop::collection::vec(-5.0..5.0f64, 1..6),
        neighbor_seed in prop::collection::vec(
            prop::collection::vec(-5.0..5.0f64, 1..6), 1..5),
        weights_seed in prop::collection::vec(0.05..2.0f64, 1..5),
        step in 0.001..2.0f64,
    ) {
        let m = psi_k.len();
        let neighbors: Vec<ndarray::Array1<f64>> = neighbor_seed
            .iter()
            .map(|values| {
                ndarray::Array1::from_shape_fn(m, |i| values[i % values.len()])
            })
            .collect();
        let count = neighbors.len().min(weights_seed.len());
        let neighbors = &neighbors[..count];
        let weights = &weights_seed[..count];
        let psi = ndarray::Array1::from(psi_k);
        let views: Vec<_> = neighbors.iter().map(|n| n.view()).collect();
        let out = prox_social_step(&psi.view(), &views, weights, step, &Regularizer::L1).unwrap();
        // the implied subgradient (psi - out) / step has norm at most
        // sqrt(M) * sum of weights
        let diff = &psi - &out;
        let norm = diff.dot(&diff).sqrt() / step;
        let bound = (m as f64).sqrt() * weights.iter().sum::<f64>();
        prop_assert!(norm <= bound * (1.0 + 1e-10) + 1e-12, "{norm} > {bound}");
    }

    #[test]
    fn social_step_merges_identical_neighbors(
        psi_k in prop::collection::vec(-5.0..5.0f64, 2..5),
        anchor in prop::collection::vec(-5.0..5.0f64, 2..5),
        p1 in 0.05..1.5f64,
        p2 in 0.05..1.5f64,
        step in 0.01..1.0f64,
    ) {
        let m = psi_k.len().min(anchor.len());
        let psi = ndarray::Array1::from(psi_k[..m].to_vec());
        let shared = ndarray::Array1::from(anchor[..m].to_vec());
        let merged = prox_social_step(
            &psi.view(),
            &[shared.view(), shared.view()],
            &[p1, p2],
            step,
            &Regularizer::L1,
        ).unwrap();
        let single = prox_social_step(
            &psi.view(),
            &[shared.view()],
            &[p1 + p2],
            step,
            &Regularizer::L1,
        ).unwrap();
        for (a, b) in merged.iter().zip(single.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // cross-check one coordinate against the brute-force oracle
        let objective = elastic_objective(vec![(shared[0], p1 + p2)], 0.0);
        let oracle = brute_force_prox_oracle(
            psi[0],
            objective,
            (-200.0, 200.0),
            1e-7,
            step,
            &[(shared[0], p1 + p2)],
        ).unwrap();
        prop_assert!((merged[0] - oracle).abs() < 1e-6);
    }
}
