//! Density-matrix analogue of the clipped simplex: PSD matrices with unit
//! trace and eigenvalues at least S/(TK). Projection under the quantum
//! relative entropy reduces to the vector water-filling applied to the
//! eigenvalues in the input's own eigenbasis; a projected-gradient oracle
//! over the PSD cone certifies that reduction numerically.

use crate::error::{Error, Result};
use crate::matrix::{
    log_identity_minus, matrix_exp, matrix_log, sym_eig, trace_product, EigenDecomposition,
    LossMatrix, SymmetricMatrix,
};
use crate::projection::{kl_project_clipped, project_simplex_euclidean};
use crate::rng::StreamRng;
use crate::simplex::HorizonConfig;

const EIG_TOL: f64 = 1e-13;

/// PSD, trace one. Keeps its eigendecomposition around because every
/// consumer (entropy, log, projection, floor checks) needs the spectrum.
#[derive(Debug, Clone)]
pub struct SpectraplexPoint {
    matrix: SymmetricMatrix,
    eig: EigenDecomposition,
}

impl SpectraplexPoint {
    pub fn new(matrix: SymmetricMatrix) -> Result<Self> {
        let eig = sym_eig(&matrix, EIG_TOL)?;
        Self::from_parts(matrix, eig)
    }

    fn from_parts(matrix: SymmetricMatrix, eig: EigenDecomposition) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("spectraplex trace {trace} != 1")));
        }
        if let Some(&bad) = eig.values.iter().find(|&&x| x < -1e-10) {
            return Err(Error::Domain(format!(
                "spectraplex eigenvalue {bad} is negative"
            )));
        }
        Ok(SpectraplexPoint { matrix, eig })
    }

    /// I/K, the maximum-entropy point.
    pub fn uniform(k: usize) -> Self {
        SpectraplexPoint::new(SymmetricMatrix::scaled_identity(k, 1.0 / k as f64))
            .expect("I/K is always feasible")
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eig.values.last().unwrap()
    }

    /// Spectral log from the cached decomposition. Requires PD.
    pub fn log(&self) -> Result<SymmetricMatrix> {
        if self.min_eigenvalue() <= 0.0 {
            return Err(Error::Domain(
                "log of a singular spectraplex point".into(),
            ));
        }
        Ok(self.eig.reconstruct_with(f64::ln))
    }
}

/// tr(W log W) = sum_i lambda_i log lambda_i, zero eigenvalues contributing
/// zero. The matrix mirror map.
pub fn von_neumann_entropy(w: &SpectraplexPoint) -> f64 {
    w.eigenvalues()
        .iter()
        .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
        .sum()
}

/// Bregman divergence of the entropy above:
/// D(A || B) = tr(A log A) - tr(A log B) - tr A + tr B. Requires B PD.
pub fn von_neumann_divergence(a: &SpectraplexPoint, b: &SpectraplexPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "divergence: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let log_b = b.log()?;
    Ok(von_neumann_entropy(a) - trace_product(a.matrix(), &log_b) - a.matrix().trace()
        + b.matrix().trace())
}

/// Result of [`vn_project_clipped`]; mask and scale refer to the eigenvalues
/// in descending order.
#[derive(Debug, Clone)]
pub struct SpectraplexProjection {
    pub point: SpectraplexPoint,
    pub clipped: Vec<bool>,
    pub scale: f64,
}

/// Project a PSD matrix onto {W PSD, tr W = 1, lambda_min(W) >= floor} under
/// the divergence above. The feasible set is unitarily invariant, so the
/// minimizer shares the input's eigenbasis and the problem collapses to the
/// vector projection of the eigenvalue tuple — certified against the
/// full-matrix oracle below.
pub fn vn_project_clipped(p: &SymmetricMatrix, clip_floor: f64) -> Result<SpectraplexProjection> {
    let eig = sym_eig(p, EIG_TOL)?;
    let mut values = eig.values.clone();
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 {
                return Err(Error::Domain(format!(
                    "projecting a matrix with negative eigenvalue {v}"
                )));
            }
            *v = 0.0;
        }
    }
    let flat = kl_project_clipped(&values, clip_floor)?;
    let projected = flat.point.weights().to_vec();
    let matrix = {
        // reuse the input basis with the projected eigenvalues
        let mut tmp = eig.clone();
        tmp.values = projected.clone();
        tmp.reconstruct()
    };
    let mut eig_out = eig;
    eig_out.values = projected;
    Ok(SpectraplexProjection {
        point: SpectraplexPoint::from_parts(matrix, eig_out)?,
        clipped: flat.clipped,
        scale: flat.scale,
    })
}

/// Matrix-valued second-order learner. State W is a clipped spectraplex
/// point; the update multiplies in (I - eta Z) on the log scale and projects
/// back: W' = project(exp(log W + log(I - eta Z))). Requires eta in (0, 1/2]
/// so I - eta Z stays well inside the PD cone for any unit-norm loss.
#[derive(Debug, Clone)]
pub struct Pcsp {
    h: HorizonConfig,
    w: SpectraplexPoint,
}

/// Driver interface for matrix learners, mirroring the vector one.
pub trait MatrixLearner {
    fn id(&self) -> &'static str;
    fn predict(&self) -> SpectraplexPoint;
    fn update(&mut self, z: &LossMatrix) -> Result<()>;
    fn eta(&self) -> f64;
    fn epoch(&self) -> usize {
        1
    }
}

impl Pcsp {
    pub fn new(h: HorizonConfig) -> Result<Self> {
        if !(h.eta > 0.0 && h.eta <= 0.5) {
            return Err(Error::Domain(format!(
                "pcsp eta {} must be in (0, 1/2]",
                h.eta
            )));
        }
        Ok(Pcsp {
            h,
            w: SpectraplexPoint::uniform(h.k),
        })
    }

    /// Hindsight rate min(sqrt(S log(KT/S) / M2), 1/2) given the comparator's
    /// second-order term M2.
    pub fn tuned_eta(t: usize, k: usize, s: usize, m2: f64) -> f64 {
        let h = ((k * t) as f64 / s as f64).ln();
        if m2 <= 0.0 {
            0.5
        } else {
            (s as f64 * h / m2).sqrt().min(0.5)
        }
    }
}

impl MatrixLearner for Pcsp {
    fn id(&self) -> &'static str {
        "pcsp"
    }
    fn predict(&self) -> SpectraplexPoint {
        self.w.clone()
    }
    fn update(&mut self, z: &LossMatrix) -> Result<()> {
        if z.dim() != self.h.k {
            return Err(Error::DimensionMismatch(format!(
                "pcsp: loss dim {} vs {}",
                z.dim(),
                self.h.k
            )));
        }
        let drift = self.w.log()?.add(&log_identity_minus(z.matrix(), self.h.eta)?);
        let unnormalized = matrix_exp(&drift)?;
        self.w = vn_project_clipped(&unnormalized, self.h.clip_floor)?.point;
        Ok(())
    }
    fn eta(&self) -> f64 {
        self.h.eta
    }
}

/// Numerically minimize tr(W * linear) + D(W || base) over the clipped
/// spectraplex by projected gradient on W = floor*I + (1 - K*floor) * Y with
/// Y in the plain spectraplex. The inner projection is Euclidean (spectral
/// simplex projection), so iterates explore arbitrary eigenbases rather than
/// being confined to the input's — that independence is the point.
pub fn clipped_vn_oracle(
    linear: &SymmetricMatrix,
    base: &SymmetricMatrix,
    clip_floor: f64,
    tol: f64,
) -> Result<SymmetricMatrix> {
    let k = base.dim();
    if linear.dim() != k {
        return Err(Error::DimensionMismatch(format!(
            "vn oracle: {} vs {}",
            linear.dim(),
            k
        )));
    }
    if clip_floor < 0.0 || clip_floor * k as f64 > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "vn oracle floor {clip_floor} must be in [0, 1/K]"
        )));
    }
    let floor = clip_floor.min(1.0 / k as f64);
    // Strictly-interior safeguard, as in the vector oracle: keep iterates off
    // the zero-eigenvalue cliff where the clamped log gradient breaks the
    // line-search model. Raising a zero floor to 1e-12 shrinks the feasible
    // set by far less than any tolerance in play.
    let floor = floor.max(1e-12f64.min(1.0 / k as f64));
    let c = 1.0 - k as f64 * floor;
    if c <= 1e-14 {
        return Ok(SymmetricMatrix::scaled_identity(k, floor));
    }
    let log_base = matrix_log(base)?;

    let objective = |w: &SymmetricMatrix| -> Result<f64> {
        let eig = sym_eig(w, EIG_TOL)?;
        let ent: f64 = eig
            .values
            .iter()
            .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
            .sum();
        Ok(trace_product(w, linear) + ent - trace_product(w, &log_base))
    };
    // gradient: linear + log W - log base (+I, constant on the trace slice);
    // the log is clamped so boundary iterates (possible at floor 0) stay
    // finite — the optimum is interior for a positive-definite base
    let gradient = |w: &SymmetricMatrix| -> Result<SymmetricMatrix> {
        let eig = sym_eig(w, EIG_TOL)?;
        Ok(linear
            .add(&eig.reconstruct_with(|x| x.max(1e-300).ln()))
            .sub(&log_base))
    };
    let project_spectraplex = |m: &SymmetricMatrix| -> Result<SymmetricMatrix> {
        let eig = sym_eig(m, EIG_TOL)?;
        let vals = project_simplex_euclidean(&eig.values);
        let mut e = eig;
        e.values = vals;
        Ok(e.reconstruct())
    };

    let mut y = SymmetricMatrix::scaled_identity(k, 1.0 / k as f64);
    let mut w = SymmetricMatrix::scaled_identity(k, floor).add(&y.scale(c));
    let mut fw = objective(&w)?;
    let mut step = 1.0;
    let mut best_f = fw;
    let mut stagnant = 0usize;
    const MAX_ITERS: usize = 200_000;
    const STALL_WINDOW: usize = 200;

    for _ in 0..MAX_ITERS {
        let g = gradient(&w)?;
        let mut moved = 0.0;
        let mut accepted = false;
        for _ in 0..80 {
            let trial = y.sub(&g.scale(step * c));
            let y_new = project_spectraplex(&trial)?;
            let w_new = SymmetricMatrix::scaled_identity(k, floor).add(&y_new.scale(c));
            let f_new = objective(&w_new)?;
            let diff = y_new.sub(&y);
            let lin = trace_product(&g, &diff) * c;
            let dist2 = diff.frobenius_norm().powi(2);
            if f_new <= fw + lin + dist2 / (2.0 * step) {
                moved = dist2.sqrt();
                y = y_new;
                w = w_new;
                fw = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !accepted {
            return Ok(w); // line search at rounding level: converged
        }
        if moved / step < tol {
            return Ok(w);
        }
        // objective stagnation across a window: rounding has floored the
        // gradient-mapping criterion above tol; the iterate will not improve
        if fw < best_f - 1e-15 * (1.0 + best_f.abs()) {
            best_f = fw;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= STALL_WINDOW {
                return Ok(w);
            }
        }
        step = (step * 1.6).min(8.0);
    }
    Err(Error::NoConvergence(format!(
        "vn oracle did not converge in {MAX_ITERS} iterations"
    )))
}

/// Reference projection via the oracle (zero linear term).
pub fn vn_project_oracle(p: &SymmetricMatrix, clip_floor: f64, tol: f64) -> Result<SymmetricMatrix> {
    clipped_vn_oracle(&SymmetricMatrix::zeros(p.dim()), p, clip_floor, tol)
}

/// Gaussian direction normalized to the unit sphere.
pub fn random_unit_vector(rng: &mut StreamRng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.next_gaussian()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Random point of the clipped spectraplex: random eigenbasis (from a random
/// symmetric matrix) with eigenvalues drawn on the simplex and pushed above
/// the floor. floor = 0 gives a plain spectraplex point.
pub fn random_spectraplex_point(
    rng: &mut StreamRng,
    k: usize,
    clip_floor: f64,
) -> Result<SpectraplexPoint> {
    let mut seed_matrix = SymmetricMatrix::zeros(k);
    for i in 0..k {
        for j in i..k {
            let x = rng.next_gaussian();
            seed_matrix.set(i, j, x);
            seed_matrix.set(j, i, x);
        }
    }
    let basis = sym_eig(&seed_matrix, EIG_TOL)?;
    let raw: Vec<f64> = (0..k).map(|_| 1e-3 + rng.next_f64()).collect();
    let vals = kl_project_clipped(&raw, clip_floor)?;
    let mut sorted = vals.point.weights().to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut e = basis;
    e.values = sorted;
    SpectraplexPoint::new(e.reconstruct())
}
