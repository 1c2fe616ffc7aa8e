//! Performance metrics: mean-square-deviation learning curves against a
//! reference (the regularized solution or the local models),
//! steady-state extraction in dB, and the classification prediction
//! error.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::models::ModelEnsemble;
use crate::trajectory::Trajectory;

/// What deviations are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    RegularizedSolution,
    LocalModels,
}

/// Per-iteration mean-square deviation averaged over agents and runs.
#[derive(Debug, Clone)]
pub struct LearningCurve {
    values: Vec<f64>,
    n_runs: usize,
    reference_kind: ReferenceKind,
}

impl LearningCurve {
    /// Wraps already-aggregated per-iteration values.
    pub fn from_values(values: Vec<f64>, n_runs: usize, reference_kind: ReferenceKind) -> Self {
        Self {
            values,
            n_runs,
            reference_kind,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_runs(&self) -> usize {
        self.n_runs
    }

    pub fn reference_kind(&self) -> ReferenceKind {
        self.reference_kind
    }
}

/// Streaming accumulator: feed per-iteration estimates run by run; the
/// mean over runs and agents is taken at the end. Aggregation is
/// order-independent over agents and exact-sum over runs in feed order.
#[derive(Debug, Clone)]
pub struct MsdAccumulator {
    reference: Vec<Array1<f64>>,
    kind: ReferenceKind,
    sums: Vec<f64>,
    current_len: usize,
    finished_runs: usize,
}

impl MsdAccumulator {
    pub fn new(reference: Vec<Array1<f64>>, kind: ReferenceKind) -> Self {
        Self {
            reference,
            kind,
            sums: Vec::new(),
            current_len: 0,
            finished_runs: 0,
        }
    }

    /// Reference blocks from a stacked `K * M` vector.
    pub fn from_stacked(stacked: &ArrayView1<f64>, num_agents: usize, kind: ReferenceKind) -> Self {
        let m = stacked.len() / num_agents;
        let reference = (0..num_agents)
            .map(|k| stacked.slice(ndarray::s![k * m..(k + 1) * m]).to_owned())
            .collect();
        Self::new(reference, kind)
    }

    /// Records the estimates of one iteration of the current run.
    /// Iterations must be fed in order from 0.
    pub fn record(&mut self, iteration: usize, estimates: &[Array1<f64>]) -> Result<()> {
        if estimates.len() != self.reference.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{} agents recorded, reference has {}",
                    estimates.len(),
                    self.reference.len()
                ),
            });
        }
        if iteration != self.current_len {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "iteration {iteration} recorded out of order (expected {})",
                    self.current_len
                ),
            });
        }
        let mut total = 0.0;
        for (w, reference) in estimates.iter().zip(self.reference.iter()) {
            if w.len() != reference.len() {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "estimate dimension {} vs reference {}",
                        w.len(),
                        reference.len()
                    ),
                });
            }
            let diff = w - reference;
            total += diff.dot(&diff);
        }
        let msd = total / self.reference.len() as f64;
        if self.finished_runs == 0 {
            self.sums.push(msd);
        } else {
            if iteration >= self.sums.len() {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "run length {} exceeds the first run's {}",
                        iteration + 1,
                        self.sums.len()
                    ),
                });
            }
            self.sums[iteration] += msd;
        }
        self.current_len += 1;
        Ok(())
    }

    /// Closes the current run; lengths must match across runs.
    pub fn finish_run(&mut self) -> Result<()> {
        if self.current_len != self.sums.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "run recorded {} iterations, expected {}",
                    self.current_len,
                    self.sums.len()
                ),
            });
        }
        self.finished_runs += 1;
        self.current_len = 0;
        Ok(())
    }

    pub fn curve(&self) -> Result<LearningCurve> {
        if self.finished_runs == 0 {
            return Err(Error::DimensionMismatch {
                context: "no finished runs to average".into(),
            });
        }
        let scale = 1.0 / self.finished_runs as f64;
        Ok(LearningCurve {
            values: self.sums.iter().map(|s| s * scale).collect(),
            n_runs: self.finished_runs,
            reference_kind: self.kind,
        })
    }
}

fn curve_from_trajectories(
    trajectories: &[Trajectory],
    reference: Vec<Array1<f64>>,
    kind: ReferenceKind,
) -> Result<LearningCurve> {
    let mut accumulator = MsdAccumulator::new(reference, kind);
    for trajectory in trajectories {
        for iteration in 0..trajectory.num_entries() {
            accumulator.record(iteration, trajectory.estimates_at(iteration))?;
        }
        accumulator.finish_run()?;
    }
    accumulator.curve()
}

/// MSD curve against a stacked reference vector (`K * M` entries).
pub fn msd_curve(
    trajectories: &[Trajectory],
    reference: &ArrayView1<f64>,
) -> Result<LearningCurve> {
    let Some(first) = trajectories.first() else {
        return Err(Error::DimensionMismatch {
            context: "no trajectories supplied".into(),
        });
    };
    let (k, m) = (first.num_agents(), first.dimension());
    if reference.len() != k * m {
        return Err(Error::DimensionMismatch {
            context: format!("reference length {} vs K*M = {}", reference.len(), k * m),
        });
    }
    let blocks = (0..k)
        .map(|agent| {
            reference
                .slice(ndarray::s![agent * m..(agent + 1) * m])
                .to_owned()
        })
        .collect();
    curve_from_trajectories(trajectories, blocks, ReferenceKind::RegularizedSolution)
}

/// MSD curve against the ensemble's ground-truth vectors.
pub fn msd_loc_curve(
    trajectories: &[Trajectory],
    ensemble: &ModelEnsemble,
) -> Result<LearningCurve> {
    let blocks = ensemble
        .models()
        .iter()
        .map(|model| model.w_true().clone())
        .collect();
    curve_from_trajectories(trajectories, blocks, ReferenceKind::LocalModels)
}

/// `10 log10` of the mean over the last `window` curve values.
pub fn steady_state_db(curve: &LearningCurve, window: usize) -> Result<f64> {
    if window == 0 || curve.len() <= window {
        return Err(Error::WindowTooLong {
            len: curve.len(),
            window,
        });
    }
    let tail = &curve.values[curve.len() - window..];
    for (offset, &value) in tail.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonpositiveCurveValue {
                index: curve.len() - window + offset,
                value,
            });
        }
    }
    let mean = tail.iter().sum::<f64>() / window as f64;
    Ok(10.0 * mean.log10())
}

/// Steady state with a settling check: the two halves of the window must
/// agree within `limit_db` (0.2 dB by default via [`steady_state_db_checked`]),
/// otherwise the horizon was too short and an error is returned rather
/// than a silently biased value.
pub fn steady_state_db_settled(curve: &LearningCurve, window: usize, limit_db: f64) -> Result<f64> {
    let value = steady_state_db(curve, window)?;
    let half = window / 2;
    if half == 0 {
        return Ok(value);
    }
    let tail = &curve.values[curve.len() - window..];
    let first = tail[..half].iter().sum::<f64>() / half as f64;
    let second = tail[window - half..].iter().sum::<f64>() / half as f64;
    let diff_db = (10.0 * first.log10() - 10.0 * second.log10()).abs();
    if diff_db >= limit_db {
        return Err(Error::SteadyStateNotSettled { diff_db, limit_db });
    }
    Ok(value)
}

/// Steady state with the default 0.2 dB settling rule.
pub fn steady_state_db_checked(curve: &LearningCurve, window: usize) -> Result<f64> {
    steady_state_db_settled(curve, window, 0.2)
}

/// Mean misclassification rate over agents and their test sequences.
/// `sign(0)` counts as an error: a zero score matches neither label.
pub fn prediction_error(
    weights: &[Array1<f64>],
    test_set: &[Vec<(Array1<f64>, f64)>],
) -> Result<f64> {
    if weights.len() != test_set.len() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "{} weight vectors vs {} test sequences",
                weights.len(),
                test_set.len()
            ),
        });
    }
    let mut total = 0.0;
    for (agent, (w, samples)) in weights.iter().zip(test_set.iter()).enumerate() {
        if samples.is_empty() {
            return Err(Error::EmptyTestSet { agent });
        }
        let mut errors = 0usize;
        for (features, label) in samples {
            let score = features.dot(w);
            let predicted = if score > 0.0 {
                1.0
            } else if score < 0.0 {
                -1.0
            } else {
                0.0
            };
            if predicted != *label {
                errors += 1;
            }
        }
        total += errors as f64 / samples.len() as f64;
    }
    Ok(total / weights.len() as f64)
}
