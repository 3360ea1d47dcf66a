//! Online learners over the expert simplex behind one interface: classic
//! baselines (multiplicative weights, fixed share, clipped projection update)
//! and the mirror-descent family whose regret is controlled against switching
//! comparators (clipped OMD, its second-order variant, the optimistic variant
//! with a loss hint, and the parameter-free epoch-doubling version).

use crate::error::{Error, Result};
use crate::projection::{clipped_omd_step, kl_project_clipped};
use crate::simplex::{Distribution, HorizonConfig, LossVector};

/// Common driver interface: call `predict`, feed the revealed loss to
/// `update`, repeat. `predict` is pure — without an intervening update it
/// returns the same distribution every time.
pub trait VectorLearner {
    fn id(&self) -> &'static str;
    fn predict(&self) -> Distribution;
    fn update(&mut self, loss: &LossVector) -> Result<()>;
    /// Learning rate in force for the current prediction.
    fn eta(&self) -> f64;
    /// 1-based learning-rate epoch; constant 1 except for the doubling learner.
    fn epoch(&self) -> usize {
        1
    }
    /// Post-update auxiliary weights, exposed by the optimistic learners so
    /// the verifier can replay their one-step inequalities.
    fn aux_weights(&self) -> Option<Distribution> {
        None
    }
}

/// Multiplicative-weights step: w_i <- w_i * exp(-eta * l_i), renormalized.
/// Exponents are max-shifted before exponentiation.
pub fn mwu_step(w: &Distribution, loss: &LossVector, eta: f64) -> Result<Distribution> {
    if w.dim() != loss.dim() {
        return Err(Error::DimensionMismatch(format!(
            "mwu_step: {} vs {}",
            w.dim(),
            loss.dim()
        )));
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::Domain(format!("eta {eta} must be > 0")));
    }
    let shift = loss
        .values()
        .iter()
        .map(|&g| -eta * g)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut q: Vec<f64> = w
        .weights()
        .iter()
        .zip(loss.values())
        .map(|(&wi, &gi)| wi * (-eta * gi - shift).exp())
        .collect();
    let sum: f64 = q.iter().sum();
    if sum <= 0.0 {
        return Err(Error::Domain("mwu_step: all weights vanished".into()));
    }
    for x in q.iter_mut() {
        *x /= sum;
    }
    Ok(Distribution::new(q)?.renormalized())
}

/// Fixed-share step: multiplicative update, then mix each coordinate with an
/// equal share of everyone else's mass:
/// w'_i = (1 - alpha) m_i + alpha/(K-1) * sum_{j != i} m_j.
pub fn fixed_share_step(
    w: &Distribution,
    loss: &LossVector,
    eta: f64,
    alpha: f64,
) -> Result<Distribution> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("share alpha {alpha} must be in [0,1]")));
    }
    let m = mwu_step(w, loss, eta)?;
    let k = m.dim();
    let out: Vec<f64> = m
        .weights()
        .iter()
        .map(|&mi| (1.0 - alpha) * mi + alpha * (1.0 - mi) / (k - 1) as f64)
        .collect();
    Ok(Distribution::new(out)?.renormalized())
}

/// Multiplicative update followed by KL projection onto {w : w_i >= alpha}.
/// With alpha = S/(TK) this reproduces the clipped OMD iterates exactly.
pub fn projection_update_step(
    w: &Distribution,
    loss: &LossVector,
    eta: f64,
    alpha: f64,
) -> Result<Distribution> {
    let m = mwu_step(w, loss, eta)?;
    Ok(kl_project_clipped(m.weights(), alpha)?.point)
}

macro_rules! simple_state_learner {
    ($name:ident, $id:literal, $step:expr) => {
        #[derive(Debug, Clone)]
        pub struct $name {
            h: HorizonConfig,
            alpha: f64,
            w: Distribution,
        }

        impl VectorLearner for $name {
            fn id(&self) -> &'static str {
                $id
            }
            fn predict(&self) -> Distribution {
                self.w.clone()
            }
            fn update(&mut self, loss: &LossVector) -> Result<()> {
                self.w = $step(&self.w, loss, self.h.eta, self.alpha)?;
                Ok(())
            }
            fn eta(&self) -> f64 {
                self.h.eta
            }
        }
    };
}

simple_state_learner!(Mwu, "mwu", |w, l, eta, _alpha| mwu_step(w, l, eta));
simple_state_learner!(FixedShare, "fixed_share", fixed_share_step);
simple_state_learner!(ProjectionUpdate, "projection_update", projection_update_step);

impl Mwu {
    pub fn new(h: HorizonConfig) -> Self {
        let w = Distribution::uniform(h.k);
        Mwu { h, alpha: 0.0, w }
    }
}

impl FixedShare {
    pub fn new(h: HorizonConfig, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("share alpha {alpha} must be in [0,1]")));
        }
        let w = Distribution::uniform(h.k);
        Ok(FixedShare { h, alpha, w })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl ProjectionUpdate {
    pub fn new(h: HorizonConfig, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha * h.k as f64 > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "clip level alpha {alpha} must satisfy 0 <= alpha*K <= 1"
            )));
        }
        let w = Distribution::uniform(h.k);
        Ok(ProjectionUpdate { h, alpha, w })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Mirror descent with the entropic mirror map on the clipped simplex,
/// floor S/(TK). Tracking regret against any S-segment comparator is at most
/// eta*T + S*log(KT/S)/eta + S.
#[derive(Debug, Clone)]
pub struct ClippedOmd {
    h: HorizonConfig,
    w: Distribution,
}

impl ClippedOmd {
    pub fn new(h: HorizonConfig) -> Self {
        let w = Distribution::uniform(h.k);
        ClippedOmd { h, w }
    }

    /// The rate minimizing the worst-case bound: sqrt(S log(KT/S) / T).
    pub fn tuned_eta(t: usize, k: usize, s: usize) -> f64 {
        let h = ((k * t) as f64 / s as f64).ln();
        (s as f64 * h / t as f64).sqrt()
    }
}

impl VectorLearner for ClippedOmd {
    fn id(&self) -> &'static str {
        "clipped_omd"
    }
    fn predict(&self) -> Distribution {
        self.w.clone()
    }
    fn update(&mut self, loss: &LossVector) -> Result<()> {
        self.w = clipped_omd_step(&self.w, loss, self.h.eta, self.h.clip_floor)?;
        Ok(())
    }
    fn eta(&self) -> f64 {
        self.h.eta
    }
}

/// Second-order variant: the multiplicative factor is 1 - eta*l_i itself
/// (equivalently, mirror descent on the surrogate -log(1 - eta*l)), so the
/// regret scales with the comparator's sum of squared losses instead of T.
/// Requires eta in (0, 1/2].
#[derive(Debug, Clone)]
pub struct Pcs {
    h: HorizonConfig,
    w: Distribution,
}

impl Pcs {
    pub fn new(h: HorizonConfig) -> Result<Self> {
        if !(h.eta > 0.0 && h.eta <= 0.5) {
            return Err(Error::Domain(format!(
                "pcs eta {} must be in (0, 1/2]",
                h.eta
            )));
        }
        let w = Distribution::uniform(h.k);
        Ok(Pcs { h, w })
    }

    /// Hindsight rate min(sqrt(S log(KT/S) / L2), 1/2) given the comparator's
    /// sum of squared losses.
    pub fn tuned_eta(t: usize, k: usize, s: usize, l2: f64) -> f64 {
        let h = ((k * t) as f64 / s as f64).ln();
        if l2 <= 0.0 {
            0.5
        } else {
            (s as f64 * h / l2).sqrt().min(0.5)
        }
    }
}

impl VectorLearner for Pcs {
    fn id(&self) -> &'static str {
        "pcs"
    }
    fn predict(&self) -> Distribution {
        self.w.clone()
    }
    fn update(&mut self, loss: &LossVector) -> Result<()> {
        let q: Vec<f64> = self
            .w
            .weights()
            .iter()
            .zip(loss.values())
            .map(|(&wi, &li)| wi * (1.0 - self.h.eta * li))
            .collect();
        self.w = kl_project_clipped(&q, self.h.clip_floor)?.point;
        Ok(())
    }
    fn eta(&self) -> f64 {
        self.h.eta
    }
}

/// Optimistic variant: predicts through an extra mirror step using the
/// previous round's loss as a hint, so the regret scales with the squared
/// per-round drift of the loss sequence rather than with T.
#[derive(Debug, Clone)]
pub struct Ocs {
    h: HorizonConfig,
    aux: Distribution,
    last_loss: LossVector,
}

impl Ocs {
    pub fn new(h: HorizonConfig) -> Self {
        Ocs {
            h,
            aux: Distribution::uniform(h.k),
            last_loss: LossVector::zeros(h.k),
        }
    }

    /// Hindsight rate sqrt(S log(KT/S) / P) given the squared-drift path
    /// length P of the loss sequence.
    pub fn tuned_eta(t: usize, k: usize, s: usize, path_length: f64) -> f64 {
        let h = ((k * t) as f64 / s as f64).ln();
        if path_length <= 0.0 {
            1.0
        } else {
            (s as f64 * h / path_length).sqrt()
        }
    }
}

impl VectorLearner for Ocs {
    fn id(&self) -> &'static str {
        "ocs"
    }
    fn predict(&self) -> Distribution {
        clipped_omd_step(&self.aux, &self.last_loss, self.h.eta, self.h.clip_floor)
            .expect("aux weights stay strictly positive")
    }
    fn update(&mut self, loss: &LossVector) -> Result<()> {
        self.aux = clipped_omd_step(&self.aux, loss, self.h.eta, self.h.clip_floor)?;
        self.last_loss = loss.clone();
        Ok(())
    }
    fn eta(&self) -> f64 {
        self.h.eta
    }
    fn aux_weights(&self) -> Option<Distribution> {
        Some(self.aux.clone())
    }
}

/// Parameter-free optimistic learner. Runs the optimistic update with rate
/// eta_m = sqrt(S log(KT/S)) / 2^(m-1), accumulates the squared drift of the
/// current epoch, and when the rate exceeds what that drift would prescribe
/// it halves the rate and opens epoch m+1 at the next round (the breaking
/// round's update and drift are still charged to the old epoch). Auxiliary
/// weights carry over across epochs.
#[derive(Debug, Clone)]
pub struct OcsPlus {
    t: usize,
    k: usize,
    s: usize,
    clip_floor: f64,
    /// S * log(KT/S): both the squared initial rate and the tuning target.
    budget: f64,
    eta: f64,
    epoch: usize,
    drift_accum: f64,
    aux: Distribution,
    last_loss: LossVector,
}

impl OcsPlus {
    pub fn new(t: usize, k: usize, s: usize) -> Result<Self> {
        // Validates ranges; eta placeholder 1.0 is unused.
        let h = HorizonConfig::new(t, k, s, 1.0)?;
        let budget = s as f64 * h.log_cover();
        Ok(OcsPlus {
            t,
            k,
            s,
            clip_floor: h.clip_floor,
            budget,
            eta: budget.sqrt(),
            epoch: 1,
            drift_accum: 0.0,
            aux: Distribution::uniform(k),
            last_loss: LossVector::zeros(k),
        })
    }

    pub fn horizon(&self) -> (usize, usize, usize) {
        (self.t, self.k, self.s)
    }
}

impl VectorLearner for OcsPlus {
    fn id(&self) -> &'static str {
        "ocs_plus"
    }
    fn predict(&self) -> Distribution {
        clipped_omd_step(&self.aux, &self.last_loss, self.eta, self.clip_floor)
            .expect("aux weights stay strictly positive")
    }
    fn update(&mut self, loss: &LossVector) -> Result<()> {
        self.aux = clipped_omd_step(&self.aux, loss, self.eta, self.clip_floor)?;
        let d = loss.linf_diff(&self.last_loss);
        self.drift_accum += d * d;
        self.last_loss = loss.clone();
        // eta_m > sqrt(budget / P_m), squared to dodge the division.
        if self.eta * self.eta * self.drift_accum > self.budget {
            self.eta *= 0.5;
            self.epoch += 1;
            self.drift_accum = 0.0;
        }
        Ok(())
    }
    fn eta(&self) -> f64 {
        self.eta
    }
    fn epoch(&self) -> usize {
        self.epoch
    }
    fn aux_weights(&self) -> Option<Distribution> {
        Some(self.aux.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::clipped_entropic_oracle;
    use crate::rng::StreamRng;

    fn loss(v: &[f64]) -> LossVector {
        LossVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn mwu_frozen_example() {
        let w = Distribution::uniform(2);
        let out = mwu_step(&w, &loss(&[1.0, 0.0]), (2.0f64).ln()).unwrap();
        assert!((out.weights()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out.weights()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_share_frozen_example() {
        // Zero loss makes the multiplicative stage a no-op, isolating the share.
        let w = Distribution::new(vec![0.8, 0.2]).unwrap();
        let out = fixed_share_step(&w, &loss(&[0.0, 0.0]), 1.0, 0.1).unwrap();
        assert!((out.weights()[0] - 0.74).abs() < 1e-12);
        assert!((out.weights()[1] - 0.26).abs() < 1e-12);
    }

    #[test]
    fn projection_update_no_clip_matches_mwu() {
        let w = Distribution::uniform(3);
        let l = loss(&[1.0, 0.0, 0.0]);
        let plain = mwu_step(&w, &l, 1.0).unwrap();
        let projected = projection_update_step(&w, &l, 1.0, 0.01).unwrap();
        assert!(plain.linf_distance(&projected) < 1e-12);
        assert!((projected.weights()[0] - 0.155_362).abs() < 1e-6);
    }

    #[test]
    fn projection_update_clips_at_higher_alpha() {
        // Same step with alpha = 0.2: the losing coordinate (0.1553...) gets
        // pinned and the other two split the rest. Certified below against
        // the numeric oracle as well.
        let w = Distribution::uniform(3);
        let l = loss(&[1.0, 0.0, 0.0]);
        let out = projection_update_step(&w, &l, 1.0, 0.2).unwrap();
        let v = out.weights();
        assert!((v[0] - 0.2).abs() < 1e-12);
        assert!((v[1] - 0.4).abs() < 1e-12);
        assert!((v[2] - 0.4).abs() < 1e-12);

        let oracle = clipped_entropic_oracle(
            &[1.0, 0.0, 0.0],
            Distribution::uniform(3).weights(),
            0.2,
            1e-10,
        )
        .unwrap();
        for (a, b) in v.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn pcs_step_frozen_example() {
        let h = HorizonConfig::new(1000, 2, 1, 0.5).unwrap();
        let mut p = Pcs::new(h).unwrap();
        p.update(&loss(&[1.0, 0.0])).unwrap();
        let w = p.predict();
        assert!((w.weights()[0] - 1.0 / 3.0).abs() < 1e-6);
        assert!((w.weights()[1] - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn pcs_eta_range_enforced() {
        assert!(Pcs::new(HorizonConfig::new(10, 2, 1, 0.6).unwrap()).is_err());
        assert!(Pcs::new(HorizonConfig::new(10, 2, 1, 0.5).unwrap()).is_ok());
    }

    #[test]
    fn ocs_first_prediction_is_uniform() {
        let h = HorizonConfig::new(100, 4, 2, 0.3).unwrap();
        let o = Ocs::new(h);
        assert!(o.predict().linf_distance(&Distribution::uniform(4)) < 1e-12);
    }

    #[test]
    fn predict_is_pure() {
        let h = HorizonConfig::new(100, 4, 2, 0.3).unwrap();
        let mut o = Ocs::new(h);
        o.update(&loss(&[0.3, 0.9, 0.1, 0.5])).unwrap();
        let a = o.predict();
        let b = o.predict();
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn clipped_learners_respect_floor() {
        let t = 60;
        let h = HorizonConfig::new(t, 5, 3, 0.4).unwrap();
        let mut rng = StreamRng::new(5);
        let mut learners: Vec<Box<dyn VectorLearner>> = vec![
            Box::new(ClippedOmd::new(h)),
            Box::new(Pcs::new(h).unwrap()),
            Box::new(Ocs::new(h)),
            Box::new(OcsPlus::new(t, 5, 3).unwrap()),
        ];
        for round in 0..t {
            let l = loss(&(0..5).map(|_| rng.next_f64()).collect::<Vec<_>>());
            for lr in learners.iter_mut() {
                let w = lr.predict();
                if round > 0 {
                    assert!(
                        w.min_weight() >= h.clip_floor - 1e-12,
                        "{} dropped below the floor",
                        lr.id()
                    );
                }
                lr.update(&l).unwrap();
            }
        }
    }

    #[test]
    fn ocs_plus_constant_losses_stay_in_first_epoch() {
        let mut lr = OcsPlus::new(50, 3, 2).unwrap();
        let l = loss(&[0.9, 0.4, 0.1]);
        for _ in 0..50 {
            lr.predict();
            lr.update(&l).unwrap();
        }
        // Drift accumulates only once (the jump from the zero initial loss,
        // at most 1), which can never exceed the budget.
        assert_eq!(lr.epoch(), 1);
        let (t, k, s) = lr.horizon();
        let budget = s as f64 * ((k * t) as f64 / s as f64).ln();
        assert!((lr.eta() - budget.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ocs_plus_halves_eta_per_epoch() {
        // Violent alternation drives the drift up and forces epoch breaks.
        let t = 400;
        let mut lr = OcsPlus::new(t, 2, 1).unwrap();
        let eta1 = lr.eta();
        let a = loss(&[1.0, 0.0]);
        let b = loss(&[0.0, 1.0]);
        for round in 0..t {
            lr.predict();
            lr.update(if round % 2 == 0 { &a } else { &b }).unwrap();
        }
        assert!(lr.epoch() > 1, "alternating losses must break epochs");
        let expect = eta1 / (1u64 << (lr.epoch() - 1)) as f64;
        assert!((lr.eta() - expect).abs() < 1e-12);
    }

    #[test]
    fn ocs_plus_rejects_eta_parameter_by_construction() {
        // The constructor takes no rate: the initial one is pinned by (T,K,S).
        let lr = OcsPlus::new(200, 4, 3).unwrap();
        let budget = 3.0 * ((4.0 * 200.0) / 3.0f64).ln();
        assert!((lr.eta() - budget.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aux_weights_exposed_by_optimistic_family_only() {
        let h = HorizonConfig::new(10, 2, 1, 0.1).unwrap();
        assert!(ClippedOmd::new(h).aux_weights().is_none());
        assert!(Ocs::new(h).aux_weights().is_some());
        assert!(OcsPlus::new(10, 2, 1).unwrap().aux_weights().is_some());
    }
}
