//! Probability vectors over experts, bounded loss vectors, and the horizon
//! parameters shared by every learner.

use crate::error::{Error, Result};

/// Absolute tolerance on |sum - 1| when validating a distribution.
pub const SUM_TOL: f64 = 1e-12;
/// Entries may undershoot zero by at most this much (rounding dust).
pub const ENTRY_TOL: f64 = -1e-15;

/// A point of the probability simplex: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validate and wrap. Entries in [-1e-15, ...] have their dust clamped to
    /// zero; the sum must be within 1e-12 of one.
    pub fn new(mut w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Domain("empty weight vector".into()));
        }
        for x in w.iter_mut() {
            if !x.is_finite() {
                return Err(Error::Domain(format!("non-finite weight {x}")));
            }
            if *x < 0.0 {
                if *x < ENTRY_TOL {
                    return Err(Error::Domain(format!("negative weight {x}")));
                }
                *x = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Domain(format!("weights sum to {sum}, not 1")));
        }
        Ok(Distribution(w))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Distribution(vec![1.0 / k as f64; k])
    }

    /// Point mass on expert `i`.
    pub fn one_hot(k: usize, i: usize) -> Self {
        assert!(i < k);
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        Distribution(w)
    }

    /// Divide by the exact current sum so downstream checks see sum == 1 to
    /// the last bit. Used after every projection.
    pub fn renormalized(mut self) -> Self {
        let sum: f64 = self.0.iter().sum();
        for x in self.0.iter_mut() {
            *x /= sum;
        }
        self
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn min_weight(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn linf_distance(&self, other: &Distribution) -> f64 {
        linf_diff(&self.0, &other.0)
    }
}

/// One round of losses, one entry per expert, each in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(l: Vec<f64>) -> Result<Self> {
        if l.is_empty() {
            return Err(Error::Domain("empty loss vector".into()));
        }
        for x in &l {
            if !(0.0..=1.0).contains(x) {
                return Err(Error::Domain(format!("loss {x} outside [0,1]")));
            }
        }
        Ok(LossVector(l))
    }

    pub fn zeros(k: usize) -> Self {
        LossVector(vec![0.0; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// || self - other ||_inf, the per-round drift the path-length terms sum.
    pub fn linf_diff(&self, other: &LossVector) -> f64 {
        linf_diff(&self.0, &other.0)
    }
}

pub(crate) fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Horizon, expert count, switch budget, learning rate, and the induced
/// clipping floor S/(TK) shared by the clipped learners.
#[derive(Debug, Clone, Copy)]
pub struct HorizonConfig {
    pub t: usize,
    pub k: usize,
    pub s: usize,
    pub eta: f64,
    pub clip_floor: f64,
}

impl HorizonConfig {
    pub fn new(t: usize, k: usize, s: usize, eta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("need at least 2 experts, got {k}")));
        }
        if s < 1 || s > t {
            return Err(Error::Domain(format!(
                "switch budget S={s} must satisfy 1 <= S <= T={t}"
            )));
        }
        if !eta.is_finite() || eta <= 0.0 {
            return Err(Error::Domain(format!("learning rate {eta} must be > 0")));
        }
        let clip_floor = s as f64 / (t as f64 * k as f64);
        // S <= T makes clip_floor * K = S/T <= 1 automatically.
        Ok(HorizonConfig {
            t,
            k,
            s,
            eta,
            clip_floor,
        })
    }

    /// log(KT/S), the complexity term every regret bound carries.
    pub fn log_cover(&self) -> f64 {
        ((self.k * self.t) as f64 / self.s as f64).ln()
    }
}

/// Negative Shannon entropy sum_i w_i log w_i, the mirror map on the simplex.
/// Zero weights contribute zero (the x log x -> 0 limit).
pub fn negative_entropy(w: &Distribution) -> f64 {
    w.weights()
        .iter()
        .map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 })
        .sum()
}

/// KL divergence sum_i x_i log(x_i / y_i), the Bregman divergence of the
/// negative entropy. Requires y_i > 0 wherever x_i > 0.
pub fn kl_divergence(x: &Distribution, y: &Distribution) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "kl_divergence: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    let mut d = 0.0;
    for (&a, &b) in x.weights().iter().zip(y.weights()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::Domain(
                    "kl_divergence: second argument vanishes where first does not".into(),
                ));
            }
            d += a * (a / b).ln();
        }
    }
    Ok(d)
}

/// Expected loss <w, l> of playing distribution w against loss vector l.
pub fn weighted_loss(w: &Distribution, l: &LossVector) -> Result<f64> {
    if w.dim() != l.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weighted_loss: {} vs {}",
            w.dim(),
            l.dim()
        )));
    }
    Ok(w.weights().iter().zip(l.values()).map(|(a, b)| a * b).sum())
}
