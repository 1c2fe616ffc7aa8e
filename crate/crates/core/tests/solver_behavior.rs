//! Long-horizon behavior of the decentralized recursion: stability
//! inside the step-size bound and the non-cooperative steady-state
//! plateau.

use proxnet::bound::StabilityConstants;
use proxnet::graph::ring_network;
use proxnet::metrics::{steady_state_db_settled, LearningCurve, ReferenceKind};
use proxnet::models::{generate_sparse_models, CostKind, MseVarianceRanges};
use proxnet::solver::{run_decentralized_observed, GenerativeStream};
use proxnet::{Regularizer, SolverConfig, StreamKey};

/// Valid Theorem-1 constants for an isotropic MSE ensemble: for
/// Gaussian regressors the gradient-noise second moment satisfies
/// `E||s||^2 <= 4 sigma_u^4 ||w||^2 + 4 sigma_u^4 ||w_true||^2
/// + sigma_u^2 sigma_v^2 M`.
fn mse_stability_constants(ensemble: &proxnet::ModelEnsemble) -> StabilityConstants {
    let mut constants = StabilityConstants {
        nu: Vec::new(),
        delta: Vec::new(),
        beta_s_sq: Vec::new(),
        sigma_s_sq: Vec::new(),
        subgradient_bound: vec![0.0; ensemble.num_agents()],
        kappa: 50.0,
        alpha: 1.0,
    };
    for model in ensemble.models() {
        let (nu, delta) = model.hessian_bounds();
        let sigma_u_sq = delta;
        let CostKind::Mse { noise_variance } = model.kind() else {
            panic!("MSE ensemble expected");
        };
        constants.nu.push(nu);
        constants.delta.push(delta);
        constants.beta_s_sq.push(4.0 * sigma_u_sq * sigma_u_sq);
        constants.sigma_s_sq.push(
            4.0 * sigma_u_sq * sigma_u_sq * model.w_true().dot(model.w_true())
                + sigma_u_sq * noise_variance * ensemble.dimension() as f64,
        );
    }
    constants
}

#[test]
fn iterates_stay_bounded_inside_the_step_size_condition() {
    let network = ring_network(20).unwrap();
    let ensemble = generate_sparse_models(20, 10, &MseVarianceRanges::default(), 23).unwrap();
    let constants = mse_stability_constants(&ensemble);
    let mu = 0.01;
    constants.check_step_size(mu).unwrap();

    let config = SolverConfig::new(mu, 50.0 * mu, Regularizer::L1, 100_000);
    for seed in 0..20u64 {
        let key = StreamKey { seed, run: 0 };
        let stream = GenerativeStream::new(&ensemble, key);
        let mut max_norm: f64 = 0.0;
        run_decentralized_observed(&network, &stream, &config, key, |_, w, _| {
            for wk in w {
                max_norm = max_norm.max(wk.dot(wk).sqrt());
            }
        })
        .unwrap_or_else(|e| panic!("seed {seed} diverged: {e}"));
        assert!(
            max_norm < 100.0,
            "seed {seed}: iterate norm reached {max_norm}"
        );
    }
}

#[test]
fn non_cooperative_steady_state_is_a_positive_mu_dependent_plateau() {
    let network = ring_network(10).unwrap();
    let ensemble = generate_sparse_models(10, 5, &MseVarianceRanges::default(), 5).unwrap();
    let reference: Vec<_> = ensemble
        .models()
        .iter()
        .map(|m| m.w_true().clone())
        .collect();

    let plateau = |mu: f64| -> f64 {
        let config = SolverConfig::new(mu, 0.0, Regularizer::L1, 3000);
        let runs = 20u64;
        let mut sums = vec![0.0; config.iterations + 1];
        for run in 0..runs {
            let key = StreamKey { seed: 40, run };
            let stream = GenerativeStream::new(&ensemble, key);
            run_decentralized_observed(&network, &stream, &config, key, |i, w, _| {
                let mut total = 0.0;
                for (wk, r) in w.iter().zip(reference.iter()) {
                    let diff = wk - r;
                    total += diff.dot(&diff);
                }
                sums[i] += total / w.len() as f64;
            })
            .unwrap();
        }
        let values: Vec<f64> = sums.iter().map(|s| s / runs as f64).collect();
        let curve = LearningCurve::from_values(values, runs as usize, ReferenceKind::LocalModels);
        // loose settling limit: the Monte-Carlo count here is small
        steady_state_db_settled(&curve, 400, 0.75).unwrap()
    };

    let low = plateau(0.01);
    let high = plateau(0.02);
    // the plateau is finite (positive MSD) and grows with mu
    assert!(low.is_finite() && high.is_finite());
    assert!(
        high > low + 1.0,
        "doubling mu should lift the plateau: {low} dB vs {high} dB"
    );
}

#[test]
fn msd_curves_from_trajectories_match_their_definitions() {
    use proxnet::metrics::{msd_curve, msd_loc_curve};
    use proxnet::solver::run_decentralized_generative;

    let network = ring_network(4).unwrap();
    let ensemble = generate_sparse_models(4, 3, &MseVarianceRanges::default(), 13).unwrap();
    let config = SolverConfig::new(0.02, 0.1, Regularizer::L1, 40);
    let trajectories: Vec<_> = (0..3u64)
        .map(|run| {
            run_decentralized_generative(&network, &ensemble, &config, StreamKey { seed: 3, run })
                .unwrap()
        })
        .collect();

    let local = msd_loc_curve(&trajectories, &ensemble).unwrap();
    // against the stacked ground truths the curves coincide
    let stacked = ensemble.stacked_w_true();
    let explicit = msd_curve(&trajectories, &stacked.view()).unwrap();
    assert_eq!(local.values(), explicit.values());
    assert_eq!(local.len(), config.iterations + 1);
    assert_eq!(local.n_runs(), 3);

    // spot-check one entry against the definition
    let i = 17;
    let mut expect = 0.0;
    for trajectory in &trajectories {
        for (agent, model) in ensemble.models().iter().enumerate() {
            let diff = &trajectory.estimate(i, agent).to_owned() - model.w_true();
            expect += diff.dot(&diff);
        }
    }
    expect /= (3 * 4) as f64;
    assert!((local.values()[i] - expect).abs() < 1e-14);
}

#[test]
fn steady_state_variance_shrinks_with_the_run_count() {
    let network = ring_network(5).unwrap();
    let ensemble = generate_sparse_models(5, 3, &MseVarianceRanges::default(), 8).unwrap();
    let reference: Vec<_> = ensemble
        .models()
        .iter()
        .map(|m| m.w_true().clone())
        .collect();
    let config = SolverConfig::new(0.02, 0.0, Regularizer::L1, 800);

    // steady state of one batch of consecutive runs
    let batch_level = |first_run: u64, runs: u64| -> f64 {
        let mut sums = vec![0.0; config.iterations + 1];
        for run in first_run..first_run + runs {
            let key = StreamKey { seed: 99, run };
            let stream = GenerativeStream::new(&ensemble, key);
            run_decentralized_observed(&network, &stream, &config, key, |i, w, _| {
                let mut total = 0.0;
                for (wk, r) in w.iter().zip(reference.iter()) {
                    let diff = wk - r;
                    total += diff.dot(&diff);
                }
                sums[i] += total / w.len() as f64;
            })
            .unwrap();
        }
        let values: Vec<f64> = sums.iter().map(|s| s / runs as f64).collect();
        let curve = LearningCurve::from_values(values, runs as usize, ReferenceKind::LocalModels);
        // raw steady state; settledness is not the point here
        10.0 * (curve.values()[curve.len() - 200..].iter().sum::<f64>() / 200.0).log10()
    };

    let variance_of = |batch_runs: u64, batches: u64| -> f64 {
        let levels: Vec<f64> = (0..batches)
            .map(|b| batch_level(1000 * b, batch_runs))
            .collect();
        let mean = levels.iter().sum::<f64>() / batches as f64;
        levels.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (batches - 1) as f64
    };

    // quadrupling the run count should shrink the variance roughly 4x;
    // the band is wide because the ratio is itself a random draw
    let small = variance_of(4, 25);
    let large = variance_of(16, 25);
    let ratio = small / large;
    assert!(
        (1.5..=11.0).contains(&ratio),
        "variance ratio {ratio:.2} far from the 1/n_runs scaling"
    );
}
