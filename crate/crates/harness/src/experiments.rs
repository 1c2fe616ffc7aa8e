//! Experiment engine: builds topology and models from a configuration,
//! fans Monte-Carlo runs out to a worker pool, aggregates metrics, and
//! writes the output bundle (tables, curves, reference cache, summary,
//! provenance).

use std::path::Path;

use ndarray::Array1;
use proxnet::graph::{knn_network, ring_network};
use proxnet::metrics::{steady_state_db_settled, LearningCurve, ReferenceKind};
use proxnet::models::{
    generate_smooth_models, generate_sparse_logistic_models, generate_sparse_models,
    logistic_stochastic_gradient, CostKind, Covariance, ModelEnsemble, MseVarianceRanges,
};
use proxnet::reference::{ReferenceOptions, ReferenceProblem};
use proxnet::rng::{keyed_rng, Purpose};
use proxnet::solver::{
    run_decentralized, run_decentralized_observed, GenerativeStream, SampleStream,
};
use proxnet::{InitScheme, Network, Regularizer, SolverConfig, StreamKey};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{
    ExperimentConfig, ExperimentKind, InitKind, MetricKind, ModelKind, ModelsConfig,
    RegularizerConfig, TopologyConfig,
};
use crate::error::{HarnessError, Result};
use crate::outputs::{self, SweepRow};
use crate::topology::load_topology;
use crate::weather::{ingest_weather, standardize_per_station, StationStreams};

/// Flat `key = value` summary entries.
pub type SummaryEntries = Vec<(String, String)>;
/// Named per-iteration MSD curves.
pub type NamedCurves = Vec<(String, Vec<f64>)>;
/// Per-agent recorded sample streams.
pub type AgentSamples = Vec<Vec<(Array1<f64>, f64)>>;

/// Everything an experiment produced, returned for inspection in
/// addition to being written to disk.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub digest: String,
    pub rows: Vec<SweepRow>,
    pub summary: SummaryEntries,
    /// Named MSD curves (theorem illustration runs).
    pub curves: NamedCurves,
}

impl ExperimentOutcome {
    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Builds the network described by the configuration. Station-graph
/// topologies are resolved inside the weather pipeline instead.
pub fn build_topology(config: &ExperimentConfig) -> Result<Network> {
    match &config.topology {
        TopologyConfig::Ring { agents } => Ok(ring_network(*agents)?),
        TopologyConfig::KnnPoints {
            agents,
            k_neighbors,
        } => {
            let mut rng = keyed_rng(config.seed, Purpose::Topology, 0, 0, 0);
            use rand::Rng;
            let coordinates: Vec<(f64, f64)> = (0..*agents)
                .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            Ok(knn_network(&coordinates, *k_neighbors)?)
        }
        TopologyConfig::KnnStations { .. } => Err(HarnessError::InvalidConfig {
            issues: vec!["station topologies are built from the ingested dataset".into()],
        }),
        TopologyConfig::File { path } => load_topology(path),
    }
}

fn variance_ranges(models: &ModelsConfig) -> MseVarianceRanges {
    MseVarianceRanges {
        sigma_u_sq: models.sigma_u_sq_range,
        sigma_v_sq: models.sigma_v_sq_range,
    }
}

/// Builds the generative model ensemble for synthetic experiments.
pub fn build_ensemble(config: &ExperimentConfig, network: &Network) -> Result<ModelEnsemble> {
    let models = config
        .models
        .as_ref()
        .ok_or_else(|| HarnessError::InvalidConfig {
            issues: vec!["models: section required".into()],
        })?;
    let k = network.num_agents();
    let ensemble = match models.kind {
        ModelKind::MseSparse => {
            generate_sparse_models(k, models.dimension, &variance_ranges(models), config.seed)?
        }
        ModelKind::MseSmooth => generate_smooth_models(
            network,
            models.dimension,
            models.tau.expect("validated"),
            &variance_ranges(models),
            config.seed,
        )?,
        ModelKind::LogisticSparse => generate_sparse_logistic_models(
            k,
            models.dimension,
            models.weight_scale.unwrap_or(1.0),
            models.ridge.unwrap_or(0.0),
            config.seed,
        )?,
    };
    Ok(ensemble)
}

fn init_scheme(kind: InitKind) -> InitScheme {
    match kind {
        InitKind::Zeros => InitScheme::Zeros,
        InitKind::Gaussian => InitScheme::Gaussian,
    }
}

fn runs_for(config: &ExperimentConfig, regularizer: &Regularizer) -> usize {
    if matches!(regularizer, Regularizer::L0 { .. }) {
        config.metrics.runs_l0
    } else {
        config.metrics.runs
    }
}

/// Mean MSD curve over `runs` Monte-Carlo runs against per-agent
/// reference blocks. Runs are independent jobs; aggregation order is
/// fixed by run index, so worker count never changes the result.
fn monte_carlo_curve(
    network: &Network,
    ensemble: &ModelEnsemble,
    solver: &SolverConfig,
    seed: u64,
    runs: usize,
    reference: &[Array1<f64>],
    kind: ReferenceKind,
) -> Result<LearningCurve> {
    let per_run: Vec<proxnet::Result<Vec<f64>>> = (0..runs as u64)
        .into_par_iter()
        .map(|run| {
            let key = StreamKey { seed, run };
            let stream = GenerativeStream::new(ensemble, key);
            let mut values = Vec::with_capacity(solver.iterations + 1);
            run_decentralized_observed(network, &stream, solver, key, |_, w, _| {
                let mut total = 0.0;
                for (wk, reference_block) in w.iter().zip(reference) {
                    let diff = wk - reference_block;
                    total += diff.dot(&diff);
                }
                values.push(total / reference.len() as f64);
            })?;
            Ok(values)
        })
        .collect();

    let mut sums: Vec<f64> = Vec::new();
    let mut n_runs = 0usize;
    for run in per_run {
        let values = run?;
        if sums.is_empty() {
            sums = values;
        } else {
            for (s, v) in sums.iter_mut().zip(values.iter()) {
                *s += v;
            }
        }
        n_runs += 1;
    }
    let scale = 1.0 / n_runs as f64;
    let values: Vec<f64> = sums.into_iter().map(|s| s * scale).collect();
    Ok(LearningCurve::from_values(values, n_runs, kind))
}

fn reference_blocks_local(ensemble: &ModelEnsemble) -> Vec<Array1<f64>> {
    ensemble
        .models()
        .iter()
        .map(|model| model.w_true().clone())
        .collect()
}

/// Digest identifying one reference problem, used as the cache key.
fn reference_digest(
    network: &Network,
    ensemble: &ModelEnsemble,
    eta: f64,
    regularizer: &RegularizerConfig,
    tolerance: f64,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update((network.num_agents() as u64).to_le_bytes());
    for (k, l, p) in network.links() {
        hasher.update((k as u64).to_le_bytes());
        hasher.update((l as u64).to_le_bytes());
        hasher.update(p.to_le_bytes());
    }
    for model in ensemble.models() {
        match model.kind() {
            CostKind::Mse { noise_variance } => {
                hasher.update([1u8]);
                hasher.update(noise_variance.to_le_bytes());
            }
            CostKind::Logistic { ridge } => {
                hasher.update([2u8]);
                hasher.update(ridge.to_le_bytes());
            }
        }
        for value in model.w_true().iter() {
            hasher.update(value.to_le_bytes());
        }
        match model.covariance() {
            Covariance::Isotropic { variance } => {
                hasher.update([1u8]);
                hasher.update(variance.to_le_bytes());
            }
            Covariance::Full { matrix, .. } => {
                hasher.update([2u8]);
                for value in matrix.iter() {
                    hasher.update(value.to_le_bytes());
                }
            }
        }
    }
    hasher.update(eta.to_le_bytes());
    hasher.update(regularizer.label().as_bytes());
    hasher.update(tolerance.to_le_bytes());
    outputs::hex_string(&hasher.finalize())
}

/// Reference solution with on-disk caching keyed by the problem digest.
/// Cached solutions are re-verified against the residual contract before
/// being trusted.
fn cached_reference(
    out_dir: &Path,
    network: &Network,
    ensemble: &ModelEnsemble,
    eta: f64,
    regularizer: &RegularizerConfig,
    tolerance: f64,
) -> Result<Vec<Array1<f64>>> {
    let options = ReferenceOptions::default();
    let problem = ReferenceProblem::new(network, ensemble, eta, regularizer.to_core(), &options)?;
    let digest = reference_digest(network, ensemble, eta, regularizer, tolerance);
    let cache_path = outputs::reference_cache_path(out_dir, &digest);
    if let Some(cached) =
        outputs::read_reference(&cache_path, network.num_agents(), ensemble.dimension())
    {
        if problem.optimality_residual(&cached) <= tolerance {
            return Ok(cached);
        }
    }
    let solution = problem.solve(tolerance, options.max_outer_iterations)?;
    outputs::write_reference(&cache_path, &digest, &solution.per_agent)?;
    Ok(solution.per_agent)
}

fn format_f64(value: f64) -> String {
    format!("{value}")
}

/// Pre-recorded per-agent sample streams with logistic gradients.
struct RecordedStream<'a> {
    samples: &'a [Vec<(Array1<f64>, f64)>],
    ridge: f64,
    dimension: usize,
}

impl SampleStream for RecordedStream<'_> {
    fn num_agents(&self) -> usize {
        self.samples.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn stochastic_gradient(
        &self,
        agent: usize,
        iteration: usize,
        w: &ndarray::ArrayView1<f64>,
    ) -> Array1<f64> {
        logistic_stochastic_gradient(w, &self.samples[agent][iteration - 1], self.ridge)
    }
}

/// Runs one (mu, eta, regularizer) point over a recorded training
/// stream and reports the prediction error of the averaged tail iterate
/// on the test streams. Stations without test rows are skipped in the
/// evaluation (they still train).
fn recorded_prediction_error(
    network: &Network,
    train: &[Vec<(Array1<f64>, f64)>],
    test: &[Vec<(Array1<f64>, f64)>],
    ridge: f64,
    solver: &SolverConfig,
    seed: u64,
    window: usize,
) -> Result<f64> {
    let dimension = train
        .iter()
        .find(|t| !t.is_empty())
        .map(|t| t[0].0.len())
        .unwrap_or(0);
    let stream = RecordedStream {
        samples: train,
        ridge,
        dimension,
    };
    let key = StreamKey { seed, run: 0 };
    let trajectory = run_decentralized(network, &stream, solver, key)?;
    let weights = trajectory.average_last_iterates(window);
    let mut kept_weights = Vec::new();
    let mut kept_test = Vec::new();
    for (w, samples) in weights.into_iter().zip(test.iter()) {
        if !samples.is_empty() {
            kept_weights.push(w);
            kept_test.push(samples.clone());
        }
    }
    Ok(proxnet::metrics::prediction_error(
        &kept_weights,
        &kept_test,
    )?)
}

fn best_row_per_regularizer<'a>(rows: &'a [SweepRow], label: &str) -> Option<&'a SweepRow> {
    rows.iter()
        .filter(|row| row.regularizer == label)
        .min_by(|a, b| a.value.partial_cmp(&b.value).expect("finite metric"))
}

fn run_msd_sweep(
    config: &ExperimentConfig,
    network: &Network,
    ensemble: &ModelEnsemble,
) -> Result<(Vec<SweepRow>, SummaryEntries)> {
    let mut rows = Vec::new();
    let iterations = config
        .solver
        .iterations
        .ok_or_else(|| HarnessError::InvalidConfig {
            issues: vec!["solver.iterations: required for synthetic experiments".into()],
        })?;
    let reference = reference_blocks_local(ensemble);
    for regularizer_config in &config.solver.regularizers {
        let regularizer = regularizer_config.to_core();
        let runs = runs_for(config, &regularizer);
        for (mu, eta) in config.sweep_points() {
            let solver = SolverConfig {
                mu,
                eta,
                regularizer: regularizer.clone(),
                iterations,
                init: init_scheme(config.solver.init),
                store_intermediates: false,
            };
            let curve = monte_carlo_curve(
                network,
                ensemble,
                &solver,
                config.seed,
                runs,
                &reference,
                ReferenceKind::LocalModels,
            )?;
            let value =
                steady_state_db_settled(&curve, config.metrics.window, config.metrics.settling_db)?;
            rows.push(SweepRow {
                mu,
                eta,
                regularizer: regularizer_config.label(),
                value,
                n_runs: runs,
            });
        }
    }
    let mut summary = Vec::new();
    for regularizer_config in &config.solver.regularizers {
        let label = regularizer_config.label();
        if let Some(best) = best_row_per_regularizer(&rows, &label) {
            summary.push((format!("best_eta.{label}"), format_f64(best.eta)));
            summary.push((format!("best_msd_loc_db.{label}"), format_f64(best.value)));
            if let Some(baseline) = rows
                .iter()
                .find(|row| row.regularizer == label && row.eta == 0.0)
            {
                summary.push((
                    format!("improvement_db.{label}"),
                    format_f64(baseline.value - best.value),
                ));
            }
        }
    }
    Ok((rows, summary))
}

fn run_theorem_illustration(
    config: &ExperimentConfig,
    network: &Network,
    ensemble: &ModelEnsemble,
) -> Result<(Vec<SweepRow>, SummaryEntries, NamedCurves)> {
    let iterations = config
        .solver
        .iterations
        .ok_or_else(|| HarnessError::InvalidConfig {
            issues: vec!["solver.iterations: required".into()],
        })?;
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut summary = Vec::new();
    for regularizer_config in &config.solver.regularizers {
        let regularizer = regularizer_config.to_core();
        let runs = runs_for(config, &regularizer);
        let label = regularizer_config.label();
        let mut steady_states = Vec::new();
        for (mu, eta) in config.sweep_points() {
            let reference = cached_reference(
                &config.out_dir,
                network,
                ensemble,
                eta,
                regularizer_config,
                config.metrics.reference_tolerance,
            )?;
            let solver = SolverConfig {
                mu,
                eta,
                regularizer: regularizer.clone(),
                iterations,
                init: init_scheme(config.solver.init),
                store_intermediates: false,
            };
            let curve = monte_carlo_curve(
                network,
                ensemble,
                &solver,
                config.seed,
                runs,
                &reference,
                ReferenceKind::RegularizedSolution,
            )?;
            let value =
                steady_state_db_settled(&curve, config.metrics.window, config.metrics.settling_db)?;
            summary.push((
                format!("steady_state_db.{label}.mu_{mu}"),
                format_f64(value),
            ));
            steady_states.push((mu, value));
            rows.push(SweepRow {
                mu,
                eta,
                regularizer: label.clone(),
                value,
                n_runs: runs,
            });
            curves.push((format!("msd_mu_{mu}_{label}"), curve.values().to_vec()));
        }
        for pair in steady_states.windows(2) {
            let (mu_a, db_a) = pair[0];
            let (mu_b, db_b) = pair[1];
            summary.push((
                format!("delta_db.{label}.mu_{mu_a}_to_{mu_b}"),
                format_f64(db_b - db_a),
            ));
        }
    }
    Ok((rows, summary, curves))
}

fn run_weather(config: &ExperimentConfig) -> Result<(Vec<SweepRow>, SummaryEntries)> {
    let dataset = config
        .dataset
        .as_ref()
        .ok_or_else(|| HarnessError::InvalidConfig {
            issues: vec!["dataset: section required".into()],
        })?;
    let k_neighbors = match &config.topology {
        TopologyConfig::KnnStations { k_neighbors } => *k_neighbors,
        _ => {
            return Err(HarnessError::InvalidConfig {
                issues: vec!["topology: weather experiments use knn_stations".into()],
            })
        }
    };
    let mut ingested = ingest_weather(&dataset.path, k_neighbors)?;
    standardize_per_station(&mut ingested.stations);
    let train: AgentSamples = ingested.stations.iter().map(|s| s.train.clone()).collect();
    let test: AgentSamples = ingested.stations.iter().map(|s| s.test.clone()).collect();
    let ridge = config.solver.ridge.unwrap_or(1e-5);
    let max_iterations = ingested.report.min_train_days;
    let iterations = config
        .solver
        .iterations
        .unwrap_or(max_iterations)
        .min(max_iterations);

    let rows = prediction_error_rows(config, &ingested.network, &train, &test, ridge, iterations)?;
    let mut summary = prediction_summary(config, &rows);
    summary.push((
        "ingest.stations".into(),
        ingested.stations.len().to_string(),
    ));
    summary.push((
        "ingest.dropped_rows".into(),
        ingested.report.dropped_rows.to_string(),
    ));
    summary.push((
        "ingest.excluded_stations".into(),
        ingested.report.excluded_stations.len().to_string(),
    ));
    summary.push((
        "ingest.min_train_days".into(),
        ingested.report.min_train_days.to_string(),
    ));
    summary.push((
        "ingest.min_test_days".into(),
        ingested.report.min_test_days.to_string(),
    ));
    Ok((rows, summary))
}

/// Shared (eta x regularizer) prediction-error table over recorded
/// streams.
fn prediction_error_rows(
    config: &ExperimentConfig,
    network: &Network,
    train: &[Vec<(Array1<f64>, f64)>],
    test: &[Vec<(Array1<f64>, f64)>],
    ridge: f64,
    iterations: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for regularizer_config in &config.solver.regularizers {
        let regularizer = regularizer_config.to_core();
        for (mu, eta) in config.sweep_points() {
            let solver = SolverConfig {
                mu,
                eta,
                regularizer: regularizer.clone(),
                iterations,
                init: init_scheme(config.solver.init),
                store_intermediates: false,
            };
            let error = recorded_prediction_error(
                network,
                train,
                test,
                ridge,
                &solver,
                config.seed,
                config.metrics.window,
            )?;
            rows.push(SweepRow {
                mu,
                eta,
                regularizer: regularizer_config.label(),
                value: error,
                n_runs: 1,
            });
        }
    }
    Ok(rows)
}

fn prediction_summary(config: &ExperimentConfig, rows: &[SweepRow]) -> SummaryEntries {
    let mut summary = Vec::new();
    for regularizer_config in &config.solver.regularizers {
        let label = regularizer_config.label();
        if let Some(best) = best_row_per_regularizer(rows, &label) {
            summary.push((format!("best_eta.{label}"), format_f64(best.eta)));
            summary.push((
                format!("best_prediction_error.{label}"),
                format_f64(best.value),
            ));
        }
        if let Some(baseline) = rows
            .iter()
            .find(|row| row.regularizer == label && row.eta == 0.0)
        {
            summary.push((
                format!("prediction_error_eta0.{label}"),
                format_f64(baseline.value),
            ));
        }
    }
    summary
}

/// Synthetic logistic cooperation check: recorded train/test streams
/// generated from a sparse-difference logistic ensemble.
fn run_logistic_synthetic(
    config: &ExperimentConfig,
    network: &Network,
    ensemble: &ModelEnsemble,
) -> Result<(Vec<SweepRow>, SummaryEntries)> {
    let models = config.models.as_ref().expect("validated");
    let train_samples = models.train_samples.expect("validated");
    let test_samples = models.test_samples.expect("validated");
    let ridge = models.ridge.unwrap_or(0.0);
    let draw = |run: u64, count: usize| -> AgentSamples {
        (0..ensemble.num_agents())
            .map(|agent| {
                (0..count)
                    .map(|i| {
                        let mut rng =
                            keyed_rng(config.seed, Purpose::Dataset, run, agent as u64, i as u64);
                        ensemble.model(agent).logistic_sample(&mut rng)
                    })
                    .collect()
            })
            .collect()
    };
    let train = draw(0, train_samples);
    let test = draw(1, test_samples);
    let iterations = config
        .solver
        .iterations
        .unwrap_or(train_samples)
        .min(train_samples);
    let rows = prediction_error_rows(config, network, &train, &test, ridge, iterations)?;
    let summary = prediction_summary(config, &rows);
    Ok((rows, summary))
}

/// Runs the experiment described by `config` and writes the output
/// bundle into `config.out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let digest = config.digest();

    let (rows, mut summary, curves, value_name) = match config.kind {
        ExperimentKind::Weather => {
            let (rows, summary) = run_weather(config)?;
            (rows, summary, Vec::new(), "prediction_error")
        }
        ExperimentKind::TheoremIllustration => {
            let network = build_topology(config)?;
            let ensemble = build_ensemble(config, &network)?;
            let (rows, summary, curves) = run_theorem_illustration(config, &network, &ensemble)?;
            (rows, summary, curves, "msd_db")
        }
        ExperimentKind::EtaSweepSparse | ExperimentKind::EtaSweepSmooth => {
            let network = build_topology(config)?;
            let ensemble = build_ensemble(config, &network)?;
            let (rows, summary) = run_msd_sweep(config, &network, &ensemble)?;
            (rows, summary, Vec::new(), "msd_loc_db")
        }
        ExperimentKind::Custom => {
            let network = build_topology(config)?;
            let ensemble = build_ensemble(config, &network)?;
            match config.metric() {
                MetricKind::PredictionError => {
                    let (rows, summary) = run_logistic_synthetic(config, &network, &ensemble)?;
                    (rows, summary, Vec::new(), "prediction_error")
                }
                MetricKind::MsdVsLocalModels => {
                    let (rows, summary) = run_msd_sweep(config, &network, &ensemble)?;
                    (rows, summary, Vec::new(), "msd_loc_db")
                }
                MetricKind::MsdVsReference => {
                    let (rows, summary, curves) =
                        run_theorem_illustration(config, &network, &ensemble)?;
                    (rows, summary, curves, "msd_db")
                }
            }
        }
    };

    summary.push(("experiment.rows".into(), rows.len().to_string()));

    outputs::write_sweep_csv(
        &config.out_dir.join("sweep.csv"),
        &digest,
        value_name,
        &rows,
    )?;
    for (name, values) in &curves {
        outputs::write_curve_csv(&config.out_dir.join(format!("{name}.csv")), &digest, values)?;
    }
    outputs::write_summary(&config.out_dir.join("summary.txt"), &digest, &summary)?;
    outputs::write_provenance(
        &config.out_dir.join("provenance.txt"),
        &digest,
        config.seed,
        &config.canonical_toml(),
    )?;

    Ok(ExperimentOutcome {
        digest,
        rows,
        summary,
        curves,
    })
}

/// Re-exported for the ingest subcommand: writes a station/edge report.
pub fn write_ingest_report(
    out_dir: &Path,
    stations: &[StationStreams],
    network: &Network,
    report: &crate::weather::IngestReport,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut stations_csv = String::from("station,longitude,latitude,train_rows,test_rows\n");
    for station in stations {
        stations_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            station.id,
            station.coordinates.0,
            station.coordinates.1,
            station.train.len(),
            station.test.len()
        ));
    }
    std::fs::write(out_dir.join("stations.csv"), stations_csv)?;
    let mut edges_csv = String::from("from,to,p\n");
    for (k, l, p) in network.links() {
        edges_csv.push_str(&format!("{},{},{}\n", stations[k].id, stations[l].id, p));
    }
    std::fs::write(out_dir.join("edges.csv"), edges_csv)?;
    let report_text = format!(
        "parsed_rows = {}\ndropped_rows = {}\nexcluded_stations = {}\nmin_train_days = {}\nmin_test_days = {}\n",
        report.parsed_rows,
        report.dropped_rows,
        report.excluded_stations.len(),
        report.min_train_days,
        report.min_test_days
    );
    std::fs::write(out_dir.join("report.txt"), report_text)?;
    Ok(())
}
