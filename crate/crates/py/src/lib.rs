//! Python bindings for `extrack-core`. Points, losses, and matrices cross the
//! boundary as plain lists (rows for matrices); experiment configs and
//! reports cross as JSON strings so the Python side never re-models them.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use extrack_core::comparator;
use extrack_core::environment::{generate_matrix, generate_vector, EnvironmentKind, EnvironmentSpec};
use extrack_core::harness::{self, ExperimentConfig};
use extrack_core::learners::{
    ClippedOmd, FixedShare, Mwu, Ocs, OcsPlus, Pcs, ProjectionUpdate, VectorLearner,
};
use extrack_core::matrix::SymmetricMatrix;
use extrack_core::projection;
use extrack_core::simplex::{Distribution, HorizonConfig, LossVector};
use extrack_core::spectraplex::{self, MatrixLearner as _, Pcsp};
use extrack_core::verify::run_verification_suite;
use extrack_core::{bounds, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(inner) => PyIOError::new_err(inner.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn loss_vectors(losses: Vec<Vec<f64>>) -> PyResult<Vec<LossVector>> {
    losses.into_iter().map(|l| LossVector::new(l).map_err(err)).collect()
}

fn sym_from_rows(rows: &[Vec<f64>]) -> PyResult<SymmetricMatrix> {
    let k = rows.len();
    let mut m = SymmetricMatrix::zeros(k);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(PyValueError::new_err(format!(
                "row {i} has {} entries, expected {k}",
                row.len()
            )));
        }
        for (j, &x) in row.iter().enumerate() {
            if (x - rows[j][i]).abs() > 1e-9 {
                return Err(PyValueError::new_err(format!(
                    "matrix not symmetric at ({i},{j}): {x} vs {}",
                    rows[j][i]
                )));
            }
            m.set(i, j, x);
        }
    }
    Ok(m)
}

fn sym_to_rows(m: &SymmetricMatrix) -> Vec<Vec<f64>> {
    let k = m.dim();
    (0..k).map(|i| (0..k).map(|j| m.get(i, j)).collect()).collect()
}

fn loss_matrices(losses: Vec<Vec<Vec<f64>>>) -> PyResult<Vec<extrack_core::matrix::LossMatrix>> {
    losses
        .iter()
        .map(|rows| {
            let m = sym_from_rows(rows)?;
            extrack_core::matrix::LossMatrix::new(m).map_err(err)
        })
        .collect()
}

fn kind_from_str(kind: &str) -> PyResult<EnvironmentKind> {
    Ok(match kind {
        "piecewise_stationary" => EnvironmentKind::PiecewiseStationary,
        "drifting" => EnvironmentKind::Drifting,
        "small_loss" => EnvironmentKind::SmallLoss,
        "worst_case_switching" => EnvironmentKind::WorstCaseSwitching,
        "matrix_piecewise" => EnvironmentKind::MatrixPiecewise,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown environment kind '{other}'"
            )))
        }
    })
}

// ------------------------------------------------------------- projections

/// KL-project a nonnegative point onto {w : w_i >= floor, sum w = 1}.
/// Returns (point, clipped_mask, scale).
#[pyfunction]
fn kl_project_clipped(p: Vec<f64>, clip_floor: f64) -> PyResult<(Vec<f64>, Vec<bool>, f64)> {
    let r = projection::kl_project_clipped(&p, clip_floor).map_err(err)?;
    Ok((r.point.weights().to_vec(), r.clipped, r.scale))
}

/// Reference numeric projection (slow); same contract as kl_project_clipped
/// but computed by projected gradient descent.
#[pyfunction]
#[pyo3(signature = (p, clip_floor, tol=1e-10))]
fn kl_project_oracle(p: Vec<f64>, clip_floor: f64, tol: f64) -> PyResult<Vec<f64>> {
    projection::kl_project_oracle(&p, clip_floor, tol).map_err(err)
}

/// One mirror-descent step on the floored simplex: multiplicative update by
/// exp(-eta * loss), then KL projection.
#[pyfunction]
fn clipped_omd_step(w: Vec<f64>, loss: Vec<f64>, eta: f64, clip_floor: f64) -> PyResult<Vec<f64>> {
    let w = Distribution::new(w).map_err(err)?;
    let l = LossVector::new(loss).map_err(err)?;
    let out = projection::clipped_omd_step(&w, &l, eta, clip_floor).map_err(err)?;
    Ok(out.weights().to_vec())
}

/// Project a PSD matrix (given as rows) onto the floored spectraplex.
/// Returns (rows, clipped_mask, scale); the mask refers to eigenvalues in
/// descending order.
#[pyfunction]
fn vn_project_clipped(
    matrix: Vec<Vec<f64>>,
    clip_floor: f64,
) -> PyResult<(Vec<Vec<f64>>, Vec<bool>, f64)> {
    let m = sym_from_rows(&matrix)?;
    let r = spectraplex::vn_project_clipped(&m, clip_floor).map_err(err)?;
    Ok((sym_to_rows(r.point.matrix()), r.clipped, r.scale))
}

// ------------------------------------------------------------- comparators

/// Offline segmentation statistics for a vector loss sequence.
#[pyclass]
struct ComparatorStats {
    #[pyo3(get)]
    sequence: Vec<usize>,
    #[pyo3(get)]
    segment_starts: Vec<usize>,
    #[pyo3(get)]
    total_loss: f64,
    #[pyo3(get)]
    l1: f64,
    #[pyo3(get)]
    l2: f64,
    #[pyo3(get)]
    switches: usize,
}

/// Best expert sequence with at most s-1 switches (dynamic program).
#[pyfunction]
fn best_switching_sequence(losses: Vec<Vec<f64>>, s: usize) -> PyResult<ComparatorStats> {
    let losses = loss_vectors(losses)?;
    let r = comparator::best_switching_sequence(&losses, s).map_err(err)?;
    Ok(ComparatorStats {
        sequence: r.sequence,
        segment_starts: r.segment_starts,
        total_loss: r.total_loss,
        l1: r.l1,
        l2: r.l2,
        switches: r.switches,
    })
}

/// Offline segmentation statistics for a matrix loss sequence.
#[pyclass]
struct MatrixComparatorStats {
    #[pyo3(get)]
    segment_starts: Vec<usize>,
    #[pyo3(get)]
    directions: Vec<Vec<f64>>,
    #[pyo3(get)]
    total_loss: f64,
    #[pyo3(get)]
    m2: f64,
    #[pyo3(get)]
    segments: usize,
}

/// Best rank-one comparator sequence with at most s segments.
#[pyfunction]
fn best_switching_matrix(losses: Vec<Vec<Vec<f64>>>, s: usize) -> PyResult<MatrixComparatorStats> {
    let losses = loss_matrices(losses)?;
    let r = comparator::best_switching_matrix(&losses, s).map_err(err)?;
    Ok(MatrixComparatorStats {
        segment_starts: r.segment_starts,
        directions: r.directions,
        total_loss: r.total_loss,
        m2: r.m2,
        segments: r.segments,
    })
}

/// Sum over rounds of the squared sup-norm of loss increments (first round
/// measured against the zero vector).
#[pyfunction]
fn path_length(losses: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(comparator::path_length(&loss_vectors(losses)?))
}

// ------------------------------------------------------------------ bounds

#[pyfunction]
fn bound_theorem1(eta: f64, t: usize, k: usize, s: usize) -> PyResult<f64> {
    bounds::bound_theorem1(eta, t, k, s).map_err(err)
}

#[pyfunction]
fn bound_theorem2(eta: f64, t: usize, k: usize, s: usize, l2: f64) -> PyResult<f64> {
    bounds::bound_theorem2(eta, t, k, s, l2).map_err(err)
}

#[pyfunction]
fn bound_theorem3(eta: f64, t: usize, k: usize, s: usize, p_inf: f64) -> PyResult<f64> {
    bounds::bound_theorem3(eta, t, k, s, p_inf).map_err(err)
}

#[pyfunction]
fn bound_theorem4(t: usize, k: usize, s: usize, p_inf: f64) -> PyResult<f64> {
    bounds::bound_theorem4(t, k, s, p_inf).map_err(err)
}

#[pyfunction]
fn bound_theorem5(eta: f64, t: usize, k: usize, s: usize, m2: f64) -> PyResult<f64> {
    bounds::bound_theorem5(eta, t, k, s, m2).map_err(err)
}

/// Horizon-only learning rate sqrt(s * ln(k t / s) / t).
#[pyfunction]
fn tuned_eta(t: usize, k: usize, s: usize) -> f64 {
    ClippedOmd::tuned_eta(t, k, s)
}

/// Hindsight rate from the comparator's squared loss (capped at 1/2).
#[pyfunction]
fn tuned_eta_second_order(t: usize, k: usize, s: usize, l2: f64) -> f64 {
    Pcs::tuned_eta(t, k, s, l2)
}

/// Hindsight rate from the loss path length.
#[pyfunction]
fn tuned_eta_drift(t: usize, k: usize, s: usize, path: f64) -> f64 {
    Ocs::tuned_eta(t, k, s, path)
}

/// Hindsight rate from the matrix comparator's second-order term (capped at
/// 1/2).
#[pyfunction]
fn tuned_eta_matrix(t: usize, k: usize, s: usize, m2: f64) -> f64 {
    Pcsp::tuned_eta(t, k, s, m2)
}

// ------------------------------------------------------------ environments

/// Generate a vector loss sequence (one list of k losses per round).
#[pyfunction]
#[pyo3(signature = (kind, t, k, seed, s_true=1, noise=0.1, drift_step=0.02, leader_loss_mean=0.05))]
#[allow(clippy::too_many_arguments)]
fn generate_vector_losses(
    kind: &str,
    t: usize,
    k: usize,
    seed: u64,
    s_true: usize,
    noise: f64,
    drift_step: f64,
    leader_loss_mean: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = EnvironmentSpec {
        kind: kind_from_str(kind)?,
        t,
        k,
        seed,
        s_true,
        noise,
        drift_step,
        leader_loss_mean,
    };
    let losses = generate_vector(&spec).map_err(err)?;
    Ok(losses.into_iter().map(|l| l.values().to_vec()).collect())
}

/// Generate a matrix loss sequence (one list of rows per round).
#[pyfunction]
#[pyo3(signature = (t, k, seed, s_true=1, noise=0.1))]
fn generate_matrix_losses(
    t: usize,
    k: usize,
    seed: u64,
    s_true: usize,
    noise: f64,
) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let spec = EnvironmentSpec {
        kind: EnvironmentKind::MatrixPiecewise,
        t,
        k,
        seed,
        s_true,
        noise,
        drift_step: 0.02,
        leader_loss_mean: 0.05,
    };
    let losses = generate_matrix(&spec).map_err(err)?;
    Ok(losses.iter().map(|l| sym_to_rows(l.matrix())).collect())
}

// ---------------------------------------------------------------- learners

/// A vector learner over k experts. `algorithm` is one of mwu, fixed_share,
/// projection_update, clipped_omd, pcs, ocs, ocs_plus. `eta` defaults to the
/// horizon-tuned rate for clipped_omd and must stay unset for ocs_plus,
/// which schedules its own; the other algorithms require it. `alpha` applies
/// to fixed_share (default s/t) and projection_update (default s/(t*k)).
#[pyclass]
struct Learner {
    inner: Box<dyn VectorLearner + Send + Sync>,
}

#[pymethods]
impl Learner {
    #[new]
    #[pyo3(signature = (algorithm, t, k, s, eta=None, alpha=None))]
    fn new(
        algorithm: &str,
        t: usize,
        k: usize,
        s: usize,
        eta: Option<f64>,
        alpha: Option<f64>,
    ) -> PyResult<Self> {
        if alpha.is_some() && !matches!(algorithm, "fixed_share" | "projection_update") {
            return Err(PyValueError::new_err(format!(
                "'{algorithm}' takes no alpha parameter"
            )));
        }
        let need_eta = |eta: Option<f64>| {
            eta.ok_or_else(|| {
                PyValueError::new_err(format!(
                    "'{algorithm}' requires eta; compute a hindsight rate with the tuned_eta_* helpers"
                ))
            })
        };
        let h = |eta: f64| HorizonConfig::new(t, k, s, eta).map_err(err);
        let inner: Box<dyn VectorLearner + Send + Sync> = match algorithm {
            "mwu" => Box::new(Mwu::new(h(need_eta(eta)?)?)),
            "fixed_share" => {
                let a = alpha.unwrap_or(s as f64 / t as f64);
                Box::new(FixedShare::new(h(need_eta(eta)?)?, a).map_err(err)?)
            }
            "projection_update" => {
                let a = alpha.unwrap_or(s as f64 / (t * k) as f64);
                Box::new(ProjectionUpdate::new(h(need_eta(eta)?)?, a).map_err(err)?)
            }
            "clipped_omd" => {
                let e = eta.unwrap_or_else(|| ClippedOmd::tuned_eta(t, k, s));
                Box::new(ClippedOmd::new(h(e)?))
            }
            "pcs" => Box::new(Pcs::new(h(need_eta(eta)?)?).map_err(err)?),
            "ocs" => Box::new(Ocs::new(h(need_eta(eta)?)?)),
            "ocs_plus" => {
                if eta.is_some() {
                    return Err(PyValueError::new_err(
                        "'ocs_plus' schedules its own learning rate; eta cannot be set",
                    ));
                }
                Box::new(OcsPlus::new(t, k, s).map_err(err)?)
            }
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown algorithm '{other}'"
                )))
            }
        };
        Ok(Learner { inner })
    }

    /// Distribution played this round.
    fn predict(&self) -> Vec<f64> {
        self.inner.predict().weights().to_vec()
    }

    /// Consume this round's losses and advance the state.
    fn update(&mut self, loss: Vec<f64>) -> PyResult<()> {
        let l = LossVector::new(loss).map_err(err)?;
        self.inner.update(&l).map_err(err)
    }

    fn algorithm(&self) -> &'static str {
        self.inner.id()
    }

    fn eta(&self) -> f64 {
        self.inner.eta()
    }

    fn epoch(&self) -> usize {
        self.inner.epoch()
    }

    /// Post-update auxiliary weights of the optimistic learners, if any.
    fn aux_weights(&self) -> Option<Vec<f64>> {
        self.inner.aux_weights().map(|w| w.weights().to_vec())
    }
}

/// The matrix learner (density-matrix state, rank-one-friendly guarantees).
#[pyclass]
struct DensityLearner {
    inner: Pcsp,
}

#[pymethods]
impl DensityLearner {
    #[new]
    fn new(t: usize, k: usize, s: usize, eta: f64) -> PyResult<Self> {
        let h = HorizonConfig::new(t, k, s, eta).map_err(err)?;
        Ok(DensityLearner {
            inner: Pcsp::new(h).map_err(err)?,
        })
    }

    /// Density matrix played this round, as rows.
    fn predict(&self) -> Vec<Vec<f64>> {
        sym_to_rows(self.inner.predict().matrix())
    }

    fn predict_eigenvalues(&self) -> Vec<f64> {
        self.inner.predict().eigenvalues().to_vec()
    }

    fn update(&mut self, loss: Vec<Vec<f64>>) -> PyResult<()> {
        let m = sym_from_rows(&loss)?;
        let l = extrack_core::matrix::LossMatrix::new(m).map_err(err)?;
        self.inner.update(&l).map_err(err)
    }

    fn eta(&self) -> f64 {
        self.inner.eta()
    }
}

// ----------------------------------------------------------------- harness

/// Run the experiment a JSON config string describes. Writes CSV traces and
/// report.json exactly like the CLI; returns (report_json, trace_paths,
/// report_path).
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<(String, Vec<String>, String)> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    let outcome = harness::run_experiment(&cfg).map_err(err)?;
    let report = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((
        report,
        outcome
            .trace_paths
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        outcome.report_path.display().to_string(),
    ))
}

/// Built-in certification battery. Returns (all_pass, summary_json).
#[pyfunction]
#[pyo3(signature = (seed=987, quick=true))]
fn verification_suite(seed: u64, quick: bool) -> PyResult<(bool, String)> {
    let summary = run_verification_suite(seed, quick).map_err(err)?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((summary.all_pass, json))
}

#[pymodule]
fn extrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kl_project_clipped, m)?)?;
    m.add_function(wrap_pyfunction!(kl_project_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(clipped_omd_step, m)?)?;
    m.add_function(wrap_pyfunction!(vn_project_clipped, m)?)?;
    m.add_function(wrap_pyfunction!(best_switching_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(best_switching_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(path_length, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem2, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem3, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem4, m)?)?;
    m.add_function(wrap_pyfunction!(bound_theorem5, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_eta, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_eta_second_order, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_eta_drift, m)?)?;
    m.add_function(wrap_pyfunction!(tuned_eta_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(generate_vector_losses, m)?)?;
    m.add_function(wrap_pyfunction!(generate_matrix_losses, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verification_suite, m)?)?;
    m.add_class::<Learner>()?;
    m.add_class::<DensityLearner>()?;
    m.add_class::<ComparatorStats>()?;
    m.add_class::<MatrixComparatorStats>()?;
    Ok(())
}
