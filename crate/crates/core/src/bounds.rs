//! Closed-form regret bounds for each learner and the per-step inequalities
//! the analysis rests on. The bound functions are pure arithmetic; the
//! check_* functions evaluate one inequality instance on concrete data and
//! report the slack, so a verification pass can confirm the guarantees hold
//! round by round on real trajectories.

use crate::error::{Error, Result};
use crate::matrix::{trace_product, SymmetricMatrix};
use crate::simplex::{weighted_loss, Distribution, HorizonConfig, LossVector};
use crate::spectraplex::SpectraplexPoint;

fn log_cover(t: usize, k: usize, s: usize) -> f64 {
    ((k * t) as f64 / s as f64).ln()
}

fn check_budget(t: usize, k: usize, s: usize) -> Result<()> {
    // mirrors HorizonConfig validation without needing an eta
    if k < 2 {
        return Err(Error::Config("need k >= 2".into()));
    }
    if s < 1 || s > t {
        return Err(Error::Config(format!("switch budget s={s} outside [1, t={t}]")));
    }
    Ok(())
}

/// Guarantee for the clipped mirror-descent learner at learning rate eta:
/// eta*T + S*ln(KT/S)/eta + S.
pub fn bound_theorem1(eta: f64, t: usize, k: usize, s: usize) -> Result<f64> {
    check_budget(t, k, s)?;
    if eta <= 0.0 {
        return Err(Error::Config("eta must be positive".into()));
    }
    Ok(eta * t as f64 + s as f64 * log_cover(t, k, s) / eta + s as f64)
}

/// Guarantee for the multiplicative clipped learner, in terms of the
/// comparator's summed squared losses l2: eta*L2 + S*ln(KT/S)/eta + 1.5*S.
pub fn bound_theorem2(eta: f64, t: usize, k: usize, s: usize, l2: f64) -> Result<f64> {
    check_budget(t, k, s)?;
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::Config(format!("eta {eta} outside (0, 1/2]")));
    }
    if l2 < 0.0 {
        return Err(Error::Config("l2 must be nonnegative".into()));
    }
    Ok(eta * l2 + s as f64 * log_cover(t, k, s) / eta + 1.5 * s as f64)
}

/// Guarantee for the optimistic clipped learner in terms of the loss path
/// length p = sum_t ||l_t - l_{t-1}||_inf^2: eta*P + S*ln(KT/S)/eta + S.
pub fn bound_theorem3(eta: f64, t: usize, k: usize, s: usize, p: f64) -> Result<f64> {
    check_budget(t, k, s)?;
    if eta <= 0.0 {
        return Err(Error::Config("eta must be positive".into()));
    }
    if p < 0.0 {
        return Err(Error::Config("path length must be nonnegative".into()));
    }
    Ok(eta * p + s as f64 * log_cover(t, k, s) / eta + s as f64)
}

/// Guarantee for the restarting optimistic learner, which needs no tuning
/// knowledge of the path length p: 8*sqrt(S*(P+1)*ln(KT/S)) +
/// 4*sqrt(S*ln(KT/S)) + S.
pub fn bound_theorem4(t: usize, k: usize, s: usize, p: f64) -> Result<f64> {
    check_budget(t, k, s)?;
    if p < 0.0 {
        return Err(Error::Config("path length must be nonnegative".into()));
    }
    let lc = log_cover(t, k, s);
    let s_f = s as f64;
    Ok(8.0 * (s_f * (p + 1.0) * lc).sqrt() + 4.0 * (s_f * lc).sqrt() + s_f)
}

/// Guarantee for the matrix-valued multiplicative learner in terms of the
/// comparator's summed squared segment costs m2 = sum_t tr(U_t Z_t^2):
/// eta*M2 + S*ln(KT/S)/eta + 2.5*S.
pub fn bound_theorem5(eta: f64, t: usize, k: usize, s: usize, m2: f64) -> Result<f64> {
    check_budget(t, k, s)?;
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::Config(format!("eta {eta} outside (0, 1/2]")));
    }
    if m2 < 0.0 {
        return Err(Error::Config("m2 must be nonnegative".into()));
    }
    Ok(eta * m2 + s as f64 * log_cover(t, k, s) / eta + 2.5 * s as f64)
}

/// Outcome of evaluating one inequality instance: lhs <= rhs + tolerance.
#[derive(Debug, Clone, Copy)]
pub struct CheckOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + self.tolerance
    }

    /// rhs - lhs; negative beyond the tolerance means a violation.
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// The comparator point after mixing toward uniform: (1 - S/T) e + S/(TK).
pub fn smoothed_comparator(h: &HorizonConfig, expert: usize) -> Result<Distribution> {
    if expert >= h.k {
        return Err(Error::DimensionMismatch(format!(
            "expert {} out of range for k={}",
            expert, h.k
        )));
    }
    let mix = h.s as f64 / h.t as f64;
    let mut w = vec![mix / h.k as f64; h.k];
    w[expert] += 1.0 - mix;
    Distribution::new(w)
}

/// The matrix comparator after mixing toward the scaled identity:
/// (1 - S/T) U + (S/(TK)) I.
pub fn smoothed_matrix_comparator(h: &HorizonConfig, u: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    if u.dim() != h.k {
        return Err(Error::DimensionMismatch(format!(
            "comparator dim {} vs k={}",
            u.dim(),
            h.k
        )));
    }
    let mix = h.s as f64 / h.t as f64;
    Ok(u.scale(1.0 - mix)
        .add(&SymmetricMatrix::scaled_identity(h.k, mix / h.k as f64)))
}

/// Smoothing the comparator costs at most S/T loss per round:
/// <e_bar - e, l> <= S/T.
pub fn check_lemma2(h: &HorizonConfig, expert: usize, loss: &LossVector) -> Result<CheckOutcome> {
    let smoothed = smoothed_comparator(h, expert)?;
    let lhs = weighted_loss(&smoothed, loss)? - loss.values()[expert];
    Ok(CheckOutcome {
        lhs,
        rhs: h.s as f64 / h.t as f64,
        tolerance: 1e-12,
    })
}

/// One mirror-descent step moves the incurred loss by at most eta:
/// <w - w', l> <= eta.
pub fn check_lemma3(
    w: &Distribution,
    w_next: &Distribution,
    loss: &LossVector,
    eta: f64,
) -> Result<CheckOutcome> {
    let lhs = weighted_loss(w, loss)? - weighted_loss(w_next, loss)?;
    Ok(CheckOutcome {
        lhs,
        rhs: eta,
        tolerance: 1e-10,
    })
}

/// The optimistic step's prediction gap is controlled by the loss drift:
/// <w_t - aux_{t+1}, l_t - l_{t-1}> <= eta * ||l_t - l_{t-1}||_inf^2.
pub fn check_lemma4(
    w: &Distribution,
    aux_next: &Distribution,
    loss: &LossVector,
    prev_loss: &LossVector,
    eta: f64,
) -> Result<CheckOutcome> {
    if w.dim() != aux_next.dim() || w.dim() != loss.dim() || loss.dim() != prev_loss.dim() {
        return Err(Error::DimensionMismatch(
            "lemma-4 inputs must share one dimension".into(),
        ));
    }
    let mut lhs = 0.0;
    let mut drift: f64 = 0.0;
    for i in 0..w.dim() {
        let d = loss.values()[i] - prev_loss.values()[i];
        lhs += (w.weights()[i] - aux_next.weights()[i]) * d;
        drift = drift.max(d.abs());
    }
    Ok(CheckOutcome {
        lhs,
        rhs: eta * drift * drift,
        tolerance: 1e-10,
    })
}

/// Matrix analogue of the smoothing cost: tr((U_bar - U) Z) <= 2S/T.
pub fn check_lemma5(
    h: &HorizonConfig,
    u: &SymmetricMatrix,
    z: &SymmetricMatrix,
) -> Result<CheckOutcome> {
    let smoothed = smoothed_matrix_comparator(h, u)?;
    let lhs = trace_product(&smoothed.sub(u), z);
    Ok(CheckOutcome {
        lhs,
        rhs: 2.0 * h.s as f64 / h.t as f64,
        tolerance: 1e-9,
    })
}

/// Log-spread bound on the clipped spectraplex: for any X, Y, Z in the set,
/// tr(X (log Y - log Z)) <= ln(KT/S). The floor keeps every eigenvalue of Y
/// and Z inside [S/(TK), 1], so the spread of their logs is at most the
/// cover term.
pub fn check_lemma9(
    h: &HorizonConfig,
    x: &SpectraplexPoint,
    y: &SpectraplexPoint,
    z: &SpectraplexPoint,
) -> Result<CheckOutcome> {
    let diff = y.log()?.sub(&z.log()?);
    let lhs = trace_product(x.matrix(), &diff);
    Ok(CheckOutcome {
        lhs,
        rhs: h.log_cover(),
        tolerance: 1e-8,
    })
}
