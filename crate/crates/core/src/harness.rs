//! Experiment harness: a JSON config names an environment, a set of
//! learners, and a switch budget; the harness generates the losses, runs
//! every learner, writes a per-round CSV trace and a JSON report, and — when
//! verification is on — certifies each trajectory against its guarantee.
//! Everything is derived from the config's seed, so identical configs
//! produce byte-identical outputs.

use crate::comparator::{best_switching_matrix, best_switching_sequence, path_length};
use crate::environment::{generate, EnvironmentSpec, LossSequence};
use crate::error::{Error, Result};
use crate::learners::{
    ClippedOmd, FixedShare, Mwu, Ocs, OcsPlus, Pcs, ProjectionUpdate, VectorLearner,
};
use crate::matrix::{trace_product, LossMatrix};
use crate::simplex::{weighted_loss, HorizonConfig, LossVector};
use crate::spectraplex::Pcsp;
use crate::verify::{
    check_matrix_trajectory, check_trajectory, record_matrix_trajectory, record_vector_trajectory,
    TrajectoryVerdict,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const KNOWN_ALGORITHMS: [&str; 8] = [
    "mwu",
    "fixed_share",
    "projection_update",
    "clipped_omd",
    "pcs",
    "ocs",
    "ocs_plus",
    "pcsp",
];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub params: LearnerParams,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub learners: Vec<LearnerSpec>,
    /// Switch budget the comparator (and every clipped learner) is built
    /// for.
    pub s_for_regret: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub verification: bool,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        if self.learners.is_empty() {
            return Err(Error::Config("at least one learner is required".into()));
        }
        if self.s_for_regret < 1 || self.s_for_regret > self.environment.t {
            return Err(Error::Config(format!(
                "s_for_regret {} outside [1, t={}]",
                self.s_for_regret, self.environment.t
            )));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        let matrix_env = self.environment.kind.is_matrix();
        for l in &self.learners {
            let alg = l.algorithm.as_str();
            if !KNOWN_ALGORITHMS.contains(&alg) {
                return Err(Error::Config(format!(
                    "unknown algorithm '{alg}'; expected one of {KNOWN_ALGORITHMS:?}"
                )));
            }
            if matrix_env != (alg == "pcsp") {
                return Err(Error::Config(format!(
                    "algorithm '{alg}' does not match the {} environment",
                    if matrix_env { "matrix" } else { "vector" }
                )));
            }
            if l.params.alpha.is_some() && !matches!(alg, "fixed_share" | "projection_update") {
                return Err(Error::Config(format!("'{alg}' takes no alpha parameter")));
            }
            if l.params.eta.is_some() && alg == "ocs_plus" {
                return Err(Error::Config(
                    "'ocs_plus' schedules its own learning rate; eta cannot be set".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Display labels for the learners, made unique when an algorithm appears
/// more than once.
fn learner_labels(specs: &[LearnerSpec]) -> Vec<String> {
    let mut labels = Vec::with_capacity(specs.len());
    for spec in specs {
        let base = spec.name.clone().unwrap_or_else(|| spec.algorithm.clone());
        let mut label = base.clone();
        let mut n = 2;
        while labels.contains(&label) {
            label = format!("{base}_{n}");
            n += 1;
        }
        labels.push(label);
    }
    labels
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub algorithm: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// "given" (from config), "tuned" (horizon-only formula), "hindsight"
    /// (needs comparator statistics), or "scheduled" (learner adapts on its
    /// own).
    pub eta_source: String,
    pub total_loss: f64,
    pub regret: f64,
    pub final_epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<TrajectoryVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped_verification: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparatorSummary {
    pub total_loss: f64,
    pub switches: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_length: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub seed: u64,
    pub comparator: ComparatorSummary,
    pub learners: Vec<RunSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub s_for_regret: usize,
    pub environment: EnvironmentSpec,
    pub repetitions: Vec<RepetitionReport>,
    pub all_pass: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trace_paths: Vec<PathBuf>,
    pub report_path: PathBuf,
    pub report: ExperimentReport,
}

impl ExperimentOutcome {
    pub fn all_pass(&self) -> bool {
        self.report.all_pass
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

struct TraceRow {
    round: usize,
    learner: String,
    loss: f64,
    comparator_loss: f64,
    cum_regret: f64,
    min_weight: f64,
    epoch: usize,
    eta: f64,
}

fn render_trace(seed: u64, rows: &[TraceRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# seed={seed}\n"));
    out.push_str("round,learner,loss,comparator_loss,cum_regret,min_weight,epoch,eta\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.round, r.learner, r.loss, r.comparator_loss, r.cum_regret, r.min_weight, r.epoch, r.eta
        ));
    }
    out
}

fn run_vector_repetition(
    cfg: &ExperimentConfig,
    labels: &[String],
    losses: &[LossVector],
) -> Result<(ComparatorSummary, Vec<RunSummary>, Vec<TraceRow>)> {
    let t = cfg.environment.t;
    let k = cfg.environment.k;
    let s = cfg.s_for_regret;
    let stats = best_switching_sequence(losses, s)?;
    let p = path_length(losses);
    let clip_floor = s as f64 / (t * k) as f64;

    let comparator = ComparatorSummary {
        total_loss: stats.total_loss,
        switches: stats.switches,
        l1: Some(stats.l1),
        l2: Some(stats.l2),
        m2: None,
        path_length: Some(p),
    };

    let mut summaries = Vec::with_capacity(cfg.learners.len());
    let mut rows = Vec::with_capacity(cfg.learners.len() * t);

    for (spec, label) in cfg.learners.iter().zip(labels) {
        let alg = spec.algorithm.as_str();
        let (eta, eta_source) = match (alg, spec.params.eta) {
            ("ocs_plus", _) => (None, "scheduled"),
            (_, Some(e)) => (Some(e), "given"),
            ("pcs", None) => (Some(Pcs::tuned_eta(t, k, s, stats.l2)), "hindsight"),
            ("ocs", None) => (Some(Ocs::tuned_eta(t, k, s, p)), "hindsight"),
            (_, None) => (Some(ClippedOmd::tuned_eta(t, k, s)), "tuned"),
        };
        let mut skipped = None;
        let mut learner: Box<dyn VectorLearner> = match alg {
            "mwu" => Box::new(Mwu::new(HorizonConfig::new(t, k, s, eta.unwrap())?)),
            "fixed_share" => {
                let alpha = spec.params.alpha.unwrap_or(s as f64 / t as f64);
                Box::new(FixedShare::new(HorizonConfig::new(t, k, s, eta.unwrap())?, alpha)?)
            }
            "projection_update" => {
                let alpha = spec.params.alpha.unwrap_or(clip_floor);
                if (alpha - clip_floor).abs() > 1e-12 {
                    skipped = Some(format!(
                        "floor parameter {alpha} differs from s/(t*k)={clip_floor}; the \
                         guarantee only covers the matched floor"
                    ));
                }
                Box::new(ProjectionUpdate::new(
                    HorizonConfig::new(t, k, s, eta.unwrap())?,
                    alpha,
                )?)
            }
            "clipped_omd" => Box::new(ClippedOmd::new(HorizonConfig::new(t, k, s, eta.unwrap())?)),
            "pcs" => Box::new(Pcs::new(HorizonConfig::new(t, k, s, eta.unwrap())?)?),
            "ocs" => Box::new(Ocs::new(HorizonConfig::new(t, k, s, eta.unwrap())?)),
            "ocs_plus" => Box::new(OcsPlus::new(t, k, s)?),
            other => return Err(Error::Config(format!("unknown algorithm '{other}'"))),
        };

        let record = record_vector_trajectory(learner.as_mut(), losses, s)?;
        let mut total = 0.0;
        let mut cum_regret = 0.0;
        for tt in 0..t {
            let lt = weighted_loss(&record.predictions[tt], &losses[tt])?;
            let ct = losses[tt].values()[stats.sequence[tt]];
            total += lt;
            cum_regret += lt - ct;
            rows.push(TraceRow {
                round: tt + 1,
                learner: label.clone(),
                loss: lt,
                comparator_loss: ct,
                cum_regret,
                min_weight: record.predictions[tt].min_weight(),
                epoch: record.epochs[tt],
                eta: record.etas[tt],
            });
        }
        let regret = total - stats.total_loss;

        let verdict = if cfg.verification && skipped.is_none() {
            Some(check_trajectory(&record, losses)?)
        } else {
            None
        };

        summaries.push(RunSummary {
            name: label.clone(),
            algorithm: spec.algorithm.clone(),
            eta,
            eta_source: eta_source.to_string(),
            total_loss: total,
            regret,
            final_epoch: *record.epochs.last().unwrap(),
            verdict,
            skipped_verification: skipped,
        });
    }
    Ok((comparator, summaries, rows))
}

fn run_matrix_repetition(
    cfg: &ExperimentConfig,
    labels: &[String],
    losses: &[LossMatrix],
) -> Result<(ComparatorSummary, Vec<RunSummary>, Vec<TraceRow>)> {
    let t = cfg.environment.t;
    let k = cfg.environment.k;
    let s = cfg.s_for_regret;
    let stats = best_switching_matrix(losses, s)?;

    let comparator = ComparatorSummary {
        total_loss: stats.total_loss,
        switches: stats.segments - 1,
        l1: None,
        l2: None,
        m2: Some(stats.m2),
        path_length: None,
    };

    let mut summaries = Vec::with_capacity(cfg.learners.len());
    let mut rows = Vec::with_capacity(cfg.learners.len() * t);

    for (spec, label) in cfg.learners.iter().zip(labels) {
        let (eta, eta_source) = match spec.params.eta {
            Some(e) => (e, "given"),
            None => (Pcsp::tuned_eta(t, k, s, stats.m2), "hindsight"),
        };
        let mut learner = Pcsp::new(HorizonConfig::new(t, k, s, eta)?)?;
        let record = record_matrix_trajectory(&mut learner, losses, s)?;
        let mut total = 0.0;
        let mut cum_regret = 0.0;
        for tt in 0..t {
            let lt = trace_product(record.predictions[tt].matrix(), losses[tt].matrix());
            let ct = stats.round_loss(losses, tt);
            total += lt;
            cum_regret += lt - ct;
            rows.push(TraceRow {
                round: tt + 1,
                learner: label.clone(),
                loss: lt,
                comparator_loss: ct,
                cum_regret,
                min_weight: record.predictions[tt].min_eigenvalue(),
                epoch: 1,
                eta: record.etas[tt],
            });
        }
        let regret = total - stats.total_loss;
        let verdict = if cfg.verification {
            Some(check_matrix_trajectory(&record, losses)?)
        } else {
            None
        };
        summaries.push(RunSummary {
            name: label.clone(),
            algorithm: spec.algorithm.clone(),
            eta: Some(eta),
            eta_source: eta_source.to_string(),
            total_loss: total,
            regret,
            final_epoch: 1,
            verdict,
            skipped_verification: None,
        });
    }
    Ok((comparator, summaries, rows))
}

/// Run the experiment a config describes, writing one CSV trace per
/// repetition plus a single JSON report into the config's output
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let labels = learner_labels(&cfg.learners);

    let mut trace_paths = Vec::with_capacity(cfg.repetitions);
    let mut reps = Vec::with_capacity(cfg.repetitions);
    for r in 0..cfg.repetitions {
        let spec = cfg.environment.with_seed_offset(r as u64);
        let (comparator, summaries, rows) = match generate(&spec)? {
            LossSequence::Vector(losses) => run_vector_repetition(cfg, &labels, &losses)?,
            LossSequence::Matrix(losses) => run_matrix_repetition(cfg, &labels, &losses)?,
        };
        let trace_path = cfg.output_dir.join(format!("trace_rep{r}.csv"));
        write_atomic(&trace_path, render_trace(spec.seed, &rows).as_bytes())?;
        trace_paths.push(trace_path);
        reps.push(RepetitionReport {
            seed: spec.seed,
            comparator,
            learners: summaries,
        });
    }

    let all_pass = reps.iter().all(|rep| {
        rep.learners
            .iter()
            .filter_map(|l| l.verdict.as_ref())
            .all(|v| v.pass())
    });
    let report = ExperimentReport {
        s_for_regret: cfg.s_for_regret,
        environment: cfg.environment.clone(),
        repetitions: reps,
        all_pass,
    };
    let report_path = cfg.output_dir.join("report.json");
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    write_atomic(&report_path, body.as_bytes())?;

    Ok(ExperimentOutcome {
        trace_paths,
        report_path,
        report,
    })
}
