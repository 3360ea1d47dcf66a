//! Seeded loss-sequence generators covering the regimes the learners are
//! meant to face: planted piecewise-stationary leaders, slow drift, small
//! losses, adversarial per-round switching, and a matrix-valued piecewise
//! variant. Same spec, same bits — all randomness flows from the explicit
//! seed through the deterministic stream generator.

use crate::error::{Error, Result};
use crate::matrix::{spectral_norm, LossMatrix, SymmetricMatrix};
use crate::rng::StreamRng;
use crate::simplex::LossVector;
use crate::spectraplex::random_unit_vector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    /// S_true segments, each with one planted low-loss expert.
    PiecewiseStationary,
    /// Every coordinate moves by at most drift_step per round.
    Drifting,
    /// Piecewise leaders whose empirical mean loss is held at or below
    /// leader_loss_mean.
    SmallLoss,
    /// The cheap expert rotates every round; brutal for a bounded switch
    /// budget and for drift-based learners.
    WorstCaseSwitching,
    /// Matrix losses with one planted low-loss direction per segment.
    MatrixPiecewise,
}

impl EnvironmentKind {
    pub fn is_matrix(self) -> bool {
        matches!(self, EnvironmentKind::MatrixPiecewise)
    }
}

fn default_s_true() -> usize {
    1
}
fn default_noise() -> f64 {
    0.1
}
fn default_drift() -> f64 {
    0.02
}
fn default_leader_mean() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub kind: EnvironmentKind,
    pub t: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(default = "default_s_true")]
    pub s_true: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_drift")]
    pub drift_step: f64,
    #[serde(default = "default_leader_mean")]
    pub leader_loss_mean: f64,
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t < 1 {
            return Err(Error::Config("environment needs t >= 1".into()));
        }
        if self.k < 2 {
            return Err(Error::Config("environment needs k >= 2".into()));
        }
        if self.s_true < 1 || self.s_true > self.t {
            return Err(Error::Config(format!(
                "s_true {} must be in [1, t={}]",
                self.s_true, self.t
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise {} outside [0,1]", self.noise)));
        }
        if !(0.0..=1.0).contains(&self.drift_step) {
            return Err(Error::Config(format!(
                "drift_step {} outside [0,1]",
                self.drift_step
            )));
        }
        if !(0.0..=1.0).contains(&self.leader_loss_mean) {
            return Err(Error::Config(format!(
                "leader_loss_mean {} outside [0,1]",
                self.leader_loss_mean
            )));
        }
        Ok(())
    }

    /// The spec with its seed shifted, for repetition r of an experiment.
    pub fn with_seed_offset(&self, offset: u64) -> EnvironmentSpec {
        let mut s = self.clone();
        s.seed = s.seed.wrapping_add(offset);
        s
    }
}

pub enum LossSequence {
    Vector(Vec<LossVector>),
    Matrix(Vec<LossMatrix>),
}

/// Starts of the planted segments: segment s covers rounds
/// [floor(s*T/S), floor((s+1)*T/S)).
pub fn planted_segment_starts(t: usize, s_true: usize) -> Vec<usize> {
    (0..s_true).map(|s| s * t / s_true).collect()
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Leader index per segment: uniformly random, forced to differ from the
/// previous segment's leader so planted switches are real.
fn plant_leaders(rng: &mut StreamRng, k: usize, s_true: usize) -> Vec<usize> {
    let mut leaders = Vec::with_capacity(s_true);
    for s in 0..s_true {
        if s == 0 {
            leaders.push(rng.next_index(k));
        } else {
            let prev = leaders[s - 1];
            let mut pick = rng.next_index(k - 1);
            if pick >= prev {
                pick += 1;
            }
            leaders.push(pick);
        }
    }
    leaders
}

fn segment_of(starts: &[usize], t: usize) -> usize {
    match starts.binary_search(&t) {
        Ok(pos) => pos,
        Err(pos) => pos - 1,
    }
}

fn piecewise_stationary(spec: &EnvironmentSpec, rng: &mut StreamRng) -> Result<Vec<LossVector>> {
    let starts = planted_segment_starts(spec.t, spec.s_true);
    let leaders = plant_leaders(rng, spec.k, spec.s_true);
    let mut out = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let leader = leaders[segment_of(&starts, t)];
        let mut l = Vec::with_capacity(spec.k);
        for i in 0..spec.k {
            let u = rng.next_f64();
            let x = if i == leader {
                clamp01(spec.leader_loss_mean + spec.noise * (u - 0.5))
            } else {
                // fixed gap above the leader; jitter scaled down so the gap
                // survives any noise level
                clamp01(0.75 + 0.4 * spec.noise * (u - 0.5))
            };
            l.push(x);
        }
        out.push(LossVector::new(l)?);
    }
    Ok(out)
}

fn small_loss(spec: &EnvironmentSpec, rng: &mut StreamRng) -> Result<Vec<LossVector>> {
    let starts = planted_segment_starts(spec.t, spec.s_true);
    let leaders = plant_leaders(rng, spec.k, spec.s_true);
    let cap = (2.0 * spec.leader_loss_mean).min(1.0);
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(spec.t);
    let mut leader_sum = 0.0;
    for t in 0..spec.t {
        let leader = leaders[segment_of(&starts, t)];
        let mut l = Vec::with_capacity(spec.k);
        for i in 0..spec.k {
            let u = rng.next_f64();
            let x = if i == leader {
                u * cap
            } else {
                0.25 + 0.75 * u
            };
            l.push(x);
        }
        leader_sum += l[leader];
        raw.push(l);
    }
    // Dial the leader column down if sampling overshot the requested mean.
    let mean = leader_sum / spec.t as f64;
    if mean > spec.leader_loss_mean && mean > 0.0 {
        let shrink = spec.leader_loss_mean / mean;
        for (t, l) in raw.iter_mut().enumerate() {
            let leader = leaders[segment_of(&starts, t)];
            l[leader] *= shrink;
        }
    }
    raw.into_iter().map(LossVector::new).collect()
}

fn drifting(spec: &EnvironmentSpec, rng: &mut StreamRng) -> Result<Vec<LossVector>> {
    let mut current: Vec<f64> = (0..spec.k).map(|_| rng.next_f64()).collect();
    let mut out = Vec::with_capacity(spec.t);
    out.push(LossVector::new(current.clone())?);
    for _ in 1..spec.t {
        for x in current.iter_mut() {
            *x = clamp01(*x + spec.drift_step * (2.0 * rng.next_f64() - 1.0));
        }
        out.push(LossVector::new(current.clone())?);
    }
    Ok(out)
}

fn worst_case_switching(spec: &EnvironmentSpec, rng: &mut StreamRng) -> Result<Vec<LossVector>> {
    let mut out = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let cheap = t % spec.k;
        let mut l = Vec::with_capacity(spec.k);
        for i in 0..spec.k {
            let u = rng.next_f64();
            let x = if i == cheap {
                clamp01(0.25 * spec.noise * u)
            } else {
                clamp01(1.0 - 0.25 * spec.noise * u)
            };
            l.push(x);
        }
        out.push(LossVector::new(l)?);
    }
    Ok(out)
}

fn matrix_piecewise(spec: &EnvironmentSpec, rng: &mut StreamRng) -> Result<Vec<LossMatrix>> {
    let starts = planted_segment_starts(spec.t, spec.s_true);
    let directions: Vec<Vec<f64>> = (0..spec.s_true)
        .map(|_| random_unit_vector(rng, spec.k))
        .collect();
    let mut out = Vec::with_capacity(spec.t);
    for t in 0..spec.t {
        let v = &directions[segment_of(&starts, t)];
        // planted part: +1/2 everywhere except -1/2 along the leader direction
        let planted = SymmetricMatrix::scaled_identity(spec.k, 0.5)
            .sub(&SymmetricMatrix::outer(v));
        let mut noise_m = SymmetricMatrix::zeros(spec.k);
        for i in 0..spec.k {
            for j in i..spec.k {
                let x = rng.next_f64() - 0.5;
                noise_m.set(i, j, x);
                noise_m.set(j, i, x);
            }
        }
        let nn = spectral_norm(&noise_m)?;
        if nn > 0.5 {
            noise_m = noise_m.scale(0.5 / nn);
        }
        let mut z = planted.scale(1.0 - spec.noise).add(&noise_m.scale(spec.noise));
        // safety valve: never hand out a loss with spectral norm above 1
        let zn = spectral_norm(&z)?;
        if zn > 1.0 {
            z = z.scale(1.0 / zn);
        }
        out.push(LossMatrix::new(z)?);
    }
    Ok(out)
}

/// Generate the loss sequence a spec describes. Identical specs give
/// bit-identical sequences.
pub fn generate(spec: &EnvironmentSpec) -> Result<LossSequence> {
    spec.validate()?;
    let mut rng = StreamRng::new(spec.seed);
    Ok(match spec.kind {
        EnvironmentKind::PiecewiseStationary => {
            LossSequence::Vector(piecewise_stationary(spec, &mut rng)?)
        }
        EnvironmentKind::SmallLoss => LossSequence::Vector(small_loss(spec, &mut rng)?),
        EnvironmentKind::Drifting => LossSequence::Vector(drifting(spec, &mut rng)?),
        EnvironmentKind::WorstCaseSwitching => {
            LossSequence::Vector(worst_case_switching(spec, &mut rng)?)
        }
        EnvironmentKind::MatrixPiecewise => {
            LossSequence::Matrix(matrix_piecewise(spec, &mut rng)?)
        }
    })
}

/// Vector-only view of [`generate`], erroring on matrix kinds.
pub fn generate_vector(spec: &EnvironmentSpec) -> Result<Vec<LossVector>> {
    match generate(spec)? {
        LossSequence::Vector(v) => Ok(v),
        LossSequence::Matrix(_) => Err(Error::Config(format!(
            "{:?} produces matrix losses, not vectors",
            spec.kind
        ))),
    }
}

/// Matrix-only view of [`generate`], erroring on vector kinds.
pub fn generate_matrix(spec: &EnvironmentSpec) -> Result<Vec<LossMatrix>> {
    match generate(spec)? {
        LossSequence::Matrix(v) => Ok(v),
        LossSequence::Vector(_) => Err(Error::Config(format!(
            "{:?} produces vector losses, not matrices",
            spec.kind
        ))),
    }
}
