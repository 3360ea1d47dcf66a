//! Trajectory recording and certification. A recorder drives a learner over
//! a loss sequence while capturing every prediction (and auxiliary state for
//! the optimistic variants); a checker then replays the per-step
//! inequalities on the recorded data and compares realized tracking regret
//! against the learner's closed-form guarantee.

use crate::bounds::{
    bound_theorem1, bound_theorem2, bound_theorem3, bound_theorem4, bound_theorem5, check_lemma2,
    check_lemma3, check_lemma4, check_lemma5, check_lemma9, smoothed_matrix_comparator,
};
use crate::comparator::{best_switching_matrix, best_switching_sequence, path_length};
use crate::environment::{generate_matrix, generate_vector, EnvironmentKind, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::learners::{ClippedOmd, Ocs, OcsPlus, Pcs, VectorLearner};
use crate::matrix::{LossMatrix, SymmetricMatrix};
use crate::simplex::{weighted_loss, Distribution, HorizonConfig, LossVector};
use crate::spectraplex::{MatrixLearner, Pcsp, SpectraplexPoint};
use serde::{Deserialize, Serialize};

/// Everything a learner exposed while running: the prediction used against
/// each loss, the state after the final update, auxiliary iterates for
/// optimistic learners, and the learning rate / epoch in effect per round.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub learner_id: String,
    pub t: usize,
    pub k: usize,
    pub s: usize,
    pub predictions: Vec<Distribution>,
    pub final_prediction: Distribution,
    pub aux_after: Vec<Distribution>,
    pub etas: Vec<f64>,
    pub epochs: Vec<usize>,
}

pub fn record_vector_trajectory(
    learner: &mut dyn VectorLearner,
    losses: &[LossVector],
    s: usize,
) -> Result<TrajectoryRecord> {
    if losses.is_empty() {
        return Err(Error::Config("cannot record over an empty loss sequence".into()));
    }
    let t = losses.len();
    let k = losses[0].dim();
    let mut predictions = Vec::with_capacity(t);
    let mut aux_after = Vec::new();
    let mut etas = Vec::with_capacity(t);
    let mut epochs = Vec::with_capacity(t);
    for loss in losses {
        if loss.dim() != k {
            return Err(Error::DimensionMismatch("ragged loss sequence".into()));
        }
        let w = learner.predict();
        if w.dim() != k {
            return Err(Error::DimensionMismatch(format!(
                "learner dimension {} vs losses {}",
                w.dim(),
                k
            )));
        }
        etas.push(learner.eta());
        epochs.push(learner.epoch());
        predictions.push(w);
        learner.update(loss)?;
        if let Some(a) = learner.aux_weights() {
            aux_after.push(a);
        }
    }
    Ok(TrajectoryRecord {
        learner_id: learner.id().to_string(),
        t,
        k,
        s,
        predictions,
        final_prediction: learner.predict(),
        aux_after,
        etas,
        epochs,
    })
}

/// Matrix analogue of [`TrajectoryRecord`].
#[derive(Debug, Clone)]
pub struct MatrixTrajectoryRecord {
    pub learner_id: String,
    pub t: usize,
    pub k: usize,
    pub s: usize,
    pub predictions: Vec<SpectraplexPoint>,
    pub final_prediction: SpectraplexPoint,
    pub etas: Vec<f64>,
}

pub fn record_matrix_trajectory(
    learner: &mut dyn MatrixLearner,
    losses: &[LossMatrix],
    s: usize,
) -> Result<MatrixTrajectoryRecord> {
    if losses.is_empty() {
        return Err(Error::Config("cannot record over an empty loss sequence".into()));
    }
    let t = losses.len();
    let k = losses[0].dim();
    let mut predictions = Vec::with_capacity(t);
    let mut etas = Vec::with_capacity(t);
    for loss in losses {
        if loss.dim() != k {
            return Err(Error::DimensionMismatch("ragged loss sequence".into()));
        }
        etas.push(learner.eta());
        predictions.push(learner.predict());
        learner.update(loss)?;
    }
    Ok(MatrixTrajectoryRecord {
        learner_id: learner.id().to_string(),
        t,
        k,
        s,
        predictions,
        final_prediction: learner.predict(),
        etas,
    })
}

/// Aggregate result of replaying one inequality family over a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub lemma: String,
    pub checks: usize,
    pub violations: usize,
    pub min_slack: f64,
}

impl LemmaSummary {
    fn collect(
        lemma: &str,
        outcomes: impl IntoIterator<Item = crate::bounds::CheckOutcome>,
    ) -> LemmaSummary {
        let mut checks = 0;
        let mut violations = 0;
        let mut min_slack = f64::INFINITY;
        for o in outcomes {
            checks += 1;
            if !o.holds() {
                violations += 1;
            }
            min_slack = min_slack.min(o.slack());
        }
        LemmaSummary {
            lemma: lemma.to_string(),
            checks,
            violations,
            min_slack,
        }
    }
}

/// Regret-versus-guarantee comparison for one learner on one sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: String,
    pub learner: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub regret: f64,
    pub bound: f64,
    pub slack: f64,
    pub violations: usize,
    pub pass: bool,
}

const BOUND_SLACK_TOL: f64 = 1e-6;

/// Full verdict for one recorded trajectory: per-lemma tallies plus, for
/// learners that carry a guarantee, the regret-versus-bound report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryVerdict {
    pub learner: String,
    pub regret: f64,
    pub lemmas: Vec<LemmaSummary>,
    pub report: Option<BoundReport>,
}

impl TrajectoryVerdict {
    pub fn pass(&self) -> bool {
        self.lemmas.iter().all(|l| l.violations == 0)
            && self.report.as_ref().map_or(true, |r| r.pass)
    }
}

fn constant_eta(etas: &[f64], who: &str) -> Result<f64> {
    let eta = etas[0];
    if etas.iter().any(|&e| e != eta) {
        return Err(Error::Config(format!(
            "{who} is expected to keep a constant learning rate"
        )));
    }
    Ok(eta)
}

/// Replay every applicable inequality on a recorded vector trajectory and
/// compare realized regret to the learner's guarantee. Learners without a
/// closed-form guarantee (plain multiplicative weights, share-mixing) still
/// get the comparator-smoothing checks; their report stays `None`.
pub fn check_trajectory(
    record: &TrajectoryRecord,
    losses: &[LossVector],
) -> Result<TrajectoryVerdict> {
    if losses.len() != record.t {
        return Err(Error::DimensionMismatch(format!(
            "record covers {} rounds but {} losses given",
            record.t,
            losses.len()
        )));
    }
    let h = HorizonConfig::new(record.t, record.k, record.s, record.etas[0].max(1e-12))?;
    let comparator = best_switching_sequence(losses, record.s)?;

    let mut lemmas = Vec::new();

    // smoothing the per-round comparator expert costs at most S/T
    let mut l2_outcomes = Vec::with_capacity(record.t);
    for t in 0..record.t {
        l2_outcomes.push(check_lemma2(&h, comparator.sequence[t], &losses[t])?);
    }
    lemmas.push(LemmaSummary::collect("lemma2", l2_outcomes));

    let id = record.learner_id.as_str();

    // one-step stability of the entropic update (applies to the entropic
    // chain: the predictions themselves, or the auxiliary iterates for the
    // optimistic learners)
    if matches!(id, "clipped_omd" | "projection_update") {
        let mut outcomes = Vec::with_capacity(record.t);
        for t in 0..record.t {
            let next = if t + 1 < record.t {
                &record.predictions[t + 1]
            } else {
                &record.final_prediction
            };
            outcomes.push(check_lemma3(
                &record.predictions[t],
                next,
                &losses[t],
                record.etas[t],
            )?);
        }
        lemmas.push(LemmaSummary::collect("lemma3", outcomes));
    }

    if matches!(id, "ocs" | "ocs_plus") {
        if record.aux_after.len() != record.t {
            return Err(Error::Config(format!(
                "{id} did not expose auxiliary iterates for every round"
            )));
        }
        let uniform = Distribution::uniform(record.k);
        let mut stability = Vec::with_capacity(record.t);
        let mut optimism = Vec::with_capacity(record.t);
        let mut prev_loss = LossVector::zeros(record.k);
        for t in 0..record.t {
            let aux_prev = if t == 0 { &uniform } else { &record.aux_after[t - 1] };
            stability.push(check_lemma3(
                aux_prev,
                &record.aux_after[t],
                &losses[t],
                record.etas[t],
            )?);
            optimism.push(check_lemma4(
                &record.predictions[t],
                &record.aux_after[t],
                &losses[t],
                &prev_loss,
                record.etas[t],
            )?);
            prev_loss = losses[t].clone();
        }
        lemmas.push(LemmaSummary::collect("lemma3", stability));
        lemmas.push(LemmaSummary::collect("lemma4", optimism));
    }

    let mut total = 0.0;
    for t in 0..record.t {
        total += weighted_loss(&record.predictions[t], &losses[t])?;
    }
    let regret = total - comparator.total_loss;

    let violations: usize = lemmas.iter().map(|l| l.violations).sum();
    let bound = match id {
        "clipped_omd" | "projection_update" => Some((
            "theorem1",
            Some(constant_eta(&record.etas, id)?),
            bound_theorem1(constant_eta(&record.etas, id)?, record.t, record.k, record.s)?,
        )),
        "pcs" => {
            let eta = constant_eta(&record.etas, id)?;
            Some((
                "theorem2",
                Some(eta),
                bound_theorem2(eta, record.t, record.k, record.s, comparator.l2)?,
            ))
        }
        "ocs" => {
            let eta = constant_eta(&record.etas, id)?;
            Some((
                "theorem3",
                Some(eta),
                bound_theorem3(eta, record.t, record.k, record.s, path_length(losses))?,
            ))
        }
        "ocs_plus" => Some((
            "theorem4",
            None,
            bound_theorem4(record.t, record.k, record.s, path_length(losses))?,
        )),
        _ => None,
    };

    let report = bound.map(|(theorem, eta, bound)| BoundReport {
        theorem: theorem.to_string(),
        learner: record.learner_id.clone(),
        eta,
        regret,
        bound,
        slack: bound - regret,
        violations,
        pass: bound - regret >= -BOUND_SLACK_TOL && violations == 0,
    });

    Ok(TrajectoryVerdict {
        learner: record.learner_id.clone(),
        regret,
        lemmas,
        report,
    })
}

/// Matrix counterpart of [`check_trajectory`].
pub fn check_matrix_trajectory(
    record: &MatrixTrajectoryRecord,
    losses: &[LossMatrix],
) -> Result<TrajectoryVerdict> {
    if losses.len() != record.t {
        return Err(Error::DimensionMismatch(format!(
            "record covers {} rounds but {} losses given",
            record.t,
            losses.len()
        )));
    }
    let h = HorizonConfig::new(record.t, record.k, record.s, record.etas[0].max(1e-12))?;
    let comparator = best_switching_matrix(losses, record.s)?;

    // rank-one comparator per round, from the segment's best direction
    let mut seg = 0usize;
    let mut round_comparators = Vec::with_capacity(record.t);
    for t in 0..record.t {
        if seg + 1 < comparator.segment_starts.len() && comparator.segment_starts[seg + 1] <= t {
            seg += 1;
        }
        round_comparators.push(SymmetricMatrix::outer(&comparator.directions[seg]));
    }

    let mut lemmas = Vec::new();

    let mut l5 = Vec::with_capacity(record.t);
    for t in 0..record.t {
        l5.push(check_lemma5(&h, &round_comparators[t], losses[t].matrix())?);
    }
    lemmas.push(LemmaSummary::collect("lemma5", l5));

    let mut l9 = Vec::with_capacity(record.t);
    for t in 0..record.t {
        let smoothed = smoothed_matrix_comparator(&h, &round_comparators[t])?;
        let x = SpectraplexPoint::new(smoothed)?;
        let next = if t + 1 < record.t {
            &record.predictions[t + 1]
        } else {
            &record.final_prediction
        };
        l9.push(check_lemma9(&h, &x, next, &record.predictions[t])?);
    }
    lemmas.push(LemmaSummary::collect("lemma9", l9));

    let mut total = 0.0;
    for t in 0..record.t {
        total += crate::matrix::trace_product(record.predictions[t].matrix(), losses[t].matrix());
    }
    let regret = total - comparator.total_loss;

    let violations: usize = lemmas.iter().map(|l| l.violations).sum();
    let report = if record.learner_id == "pcsp" {
        let eta = constant_eta(&record.etas, "pcsp")?;
        let bound = bound_theorem5(eta, record.t, record.k, record.s, comparator.m2)?;
        Some(BoundReport {
            theorem: "theorem5".to_string(),
            learner: record.learner_id.clone(),
            eta: Some(eta),
            regret,
            bound,
            slack: bound - regret,
            violations,
            pass: bound - regret >= -BOUND_SLACK_TOL && violations == 0,
        })
    } else {
        None
    };

    Ok(TrajectoryVerdict {
        learner: record.learner_id.clone(),
        regret,
        lemmas,
        report,
    })
}

/// One entry of the built-in verification battery.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub environment: String,
    pub verdict: TrajectoryVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub entries: Vec<SuiteEntry>,
    pub all_pass: bool,
}

/// Run every bound-carrying learner over a battery of generated
/// environments and certify each trajectory. `quick` shrinks horizons for
/// smoke-test use.
pub fn run_verification_suite(seed: u64, quick: bool) -> Result<VerificationSummary> {
    let scale = if quick { 1 } else { 3 };
    let mut entries = Vec::new();

    let vector_envs = [
        (
            "piecewise_stationary",
            EnvironmentSpec {
                kind: EnvironmentKind::PiecewiseStationary,
                t: 80 * scale,
                k: 6,
                seed,
                s_true: 4,
                noise: 0.1,
                drift_step: 0.02,
                leader_loss_mean: 0.05,
            },
            4usize,
        ),
        (
            "drifting",
            EnvironmentSpec {
                kind: EnvironmentKind::Drifting,
                t: 80 * scale,
                k: 5,
                seed: seed.wrapping_add(1),
                s_true: 1,
                noise: 0.1,
                drift_step: 0.02,
                leader_loss_mean: 0.05,
            },
            2usize,
        ),
        (
            "small_loss",
            EnvironmentSpec {
                kind: EnvironmentKind::SmallLoss,
                t: 80 * scale,
                k: 6,
                seed: seed.wrapping_add(2),
                s_true: 3,
                noise: 0.1,
                drift_step: 0.02,
                leader_loss_mean: 0.05,
            },
            3usize,
        ),
        (
            "worst_case_switching",
            EnvironmentSpec {
                kind: EnvironmentKind::WorstCaseSwitching,
                t: 40 * scale,
                k: 4,
                seed: seed.wrapping_add(3),
                s_true: 1,
                noise: 0.5,
                drift_step: 0.02,
                leader_loss_mean: 0.05,
            },
            3usize,
        ),
    ];

    for (name, spec, s) in vector_envs {
        let losses = generate_vector(&spec)?;
        let t = spec.t;
        let k = spec.k;
        let stats = best_switching_sequence(&losses, s)?;
        let p = path_length(&losses);

        let mut learners: Vec<Box<dyn VectorLearner>> = vec![
            Box::new(ClippedOmd::new(HorizonConfig::new(
                t,
                k,
                s,
                ClippedOmd::tuned_eta(t, k, s),
            )?)),
            Box::new(Pcs::new(HorizonConfig::new(
                t,
                k,
                s,
                Pcs::tuned_eta(t, k, s, stats.l2),
            )?)?),
            Box::new(Ocs::new(HorizonConfig::new(
                t,
                k,
                s,
                Ocs::tuned_eta(t, k, s, p),
            )?)),
            Box::new(OcsPlus::new(t, k, s)?),
        ];
        for learner in learners.iter_mut() {
            let record = record_vector_trajectory(learner.as_mut(), &losses, s)?;
            let verdict = check_trajectory(&record, &losses)?;
            entries.push(SuiteEntry {
                environment: name.to_string(),
                verdict,
            });
        }
    }

    let matrix_spec = EnvironmentSpec {
        kind: EnvironmentKind::MatrixPiecewise,
        t: 20 * scale,
        k: 3,
        seed: seed.wrapping_add(4),
        s_true: 2,
        noise: 0.2,
        drift_step: 0.02,
        leader_loss_mean: 0.05,
    };
    let losses = generate_matrix(&matrix_spec)?;
    let s = 2usize;
    let stats = best_switching_matrix(&losses, s)?;
    let mut pcsp = Pcsp::new(HorizonConfig::new(
        matrix_spec.t,
        matrix_spec.k,
        s,
        Pcsp::tuned_eta(matrix_spec.t, matrix_spec.k, s, stats.m2),
    )?)?;
    let record = record_matrix_trajectory(&mut pcsp, &losses, s)?;
    let verdict = check_matrix_trajectory(&record, &losses)?;
    entries.push(SuiteEntry {
        environment: "matrix_piecewise".to_string(),
        verdict,
    });

    let all_pass = entries.iter().all(|e| e.verdict.pass());
    Ok(VerificationSummary { entries, all_pass })
}
