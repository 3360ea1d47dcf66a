//! Deterministic pseudorandom stream used by the loss generators and the
//! randomized checks.
//!
//! This is SplitMix64 (Steele/Lea/Flood): a 64-bit counter advanced by a fixed
//! odd constant and passed through a finalizing mixer. Pure integer ops, no
//! platform entropy, so the same seed yields the same stream on every build
//! and is easy to reimplement in another language.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng { state: seed }
    }

    /// Derive an independent stream for a labeled sub-task (repetition index,
    /// environment segment, ...). Mixing the label through the finalizer keeps
    /// nearby labels uncorrelated.
    pub fn fork(&self, label: u64) -> StreamRng {
        StreamRng {
            state: mix(self.state ^ mix(label.wrapping_add(GAMMA))),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in 0..n (n > 0). Multiply-high rejection-free map;
    /// the modulo bias is < 2^-53 and irrelevant for loss generation.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }

    /// Standard normal via Box-Muller. Used to sample directions uniformly
    /// on the sphere for matrix environments.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1], keeps ln finite
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn mix(z: u64) -> u64 {
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = StreamRng::new(42);
        let mut b = StreamRng::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn reference_values() {
        // First outputs for seed 0: finalizer applied to successive multiples
        // of the golden-gamma increment. Frozen so a port can self-check.
        let mut r = StreamRng::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn f64_in_unit_interval() {
        let mut r = StreamRng::new(7);
        for _ in 0..10_000 {
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn fork_decorrelates() {
        let base = StreamRng::new(3);
        let mut a = base.fork(0);
        let mut b = base.fork(1);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn index_stays_in_range() {
        let mut r = StreamRng::new(11);
        for n in 1..40 {
            for _ in 0..200 {
                assert!(r.next_index(n) < n);
            }
        }
    }
}
