//! Bregman projection onto the clipped simplex {w : w_i >= floor, sum w = 1}
//! under the KL divergence, plus the mirror-descent step built on it and a
//! slow numeric oracle used to certify the closed form.

use crate::error::{Error, Result};
use crate::simplex::{Distribution, LossVector};

/// Output of [`kl_project_clipped`]: the projected point, which coordinates
/// sit on the floor, and the common multiplier applied to the free ones.
#[derive(Debug, Clone)]
pub struct ClippedProjection {
    pub point: Distribution,
    /// clipped[i] is true iff point[i] was pinned to the floor.
    pub clipped: Vec<bool>,
    /// For free coordinates, point[i] = scale * input[i] (within rounding).
    pub scale: f64,
}

/// KL-project a nonnegative vector onto {w : w_i >= clip_floor, sum_i w_i = 1}.
///
/// The minimizer scales all coordinates by a common factor and pins to the
/// floor exactly those whose scaled value would fall below it, which are the
/// smallest inputs. Sorting ascending and scanning the number of pinned
/// coordinates finds the unique consistent split in O(K log K).
///
/// The input need not be normalized (scaling it changes the objective by a
/// constant). Zero entries are allowed and get pinned whenever the floor is
/// positive; at floor zero this is plain renormalization.
pub fn kl_project_clipped(input: &[f64], clip_floor: f64) -> Result<ClippedProjection> {
    let k = input.len();
    if k == 0 {
        return Err(Error::Domain("empty input".into()));
    }
    if !clip_floor.is_finite() || clip_floor < 0.0 {
        return Err(Error::Domain(format!("clip floor {clip_floor} must be >= 0")));
    }
    if clip_floor * k as f64 > 1.0 + 1e-12 {
        return Err(Error::Infeasible(format!(
            "clip floor {clip_floor} times dimension {k} exceeds 1"
        )));
    }
    let floor = clip_floor.min(1.0 / k as f64);
    let mut sum_in = 0.0;
    for &x in input {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Domain(format!("input entry {x} must be finite and >= 0")));
        }
        sum_in += x;
    }
    if sum_in <= 0.0 {
        return Err(Error::Domain("input sums to zero".into()));
    }

    let q: Vec<f64> = input.iter().map(|x| x / sum_in).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| q[a].partial_cmp(&q[b]).unwrap().then(a.cmp(&b)));

    // suffix[m] = mass of the K - m largest coordinates (the free candidates
    // when the m smallest are pinned).
    let mut suffix = vec![0.0; k + 1];
    for idx in (0..k).rev() {
        suffix[idx] = suffix[idx + 1] + q[order[idx]];
    }

    let tol = 1e-12 * (1.0 + floor);
    let mut split: Option<(usize, f64)> = None;
    for m in 0..k {
        if suffix[m] <= 0.0 {
            continue; // no mass left to scale; pin more coordinates
        }
        let free_mass = 1.0 - m as f64 * floor;
        if free_mass < 0.0 {
            break;
        }
        let c = free_mass / suffix[m];
        let pinned_ok = m == 0 || c * q[order[m - 1]] <= floor + tol;
        let free_ok = c * q[order[m]] >= floor - tol;
        if pinned_ok && free_ok {
            split = Some((m, c));
            break;
        }
    }
    let (m, c) = split.ok_or_else(|| {
        Error::NoConvergence("clipped-simplex breakpoint scan found no consistent split".into())
    })?;

    let mut w = vec![0.0; k];
    let mut clipped = vec![false; k];
    for &i in &order[..m] {
        clipped[i] = true;
        w[i] = floor;
    }
    for &i in &order[m..] {
        w[i] = c * q[i];
    }
    // Pin the sum to 1 exactly; the drift this applies is O(1e-16).
    let rsum: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= rsum;
    }
    let scale = c / (sum_in * rsum);
    Ok(ClippedProjection {
        point: Distribution::new(w)?,
        clipped,
        scale,
    })
}

/// One mirror-descent step on the clipped simplex with the entropic mirror
/// map: multiply by exp(-eta * loss) and KL-project back. Exponents are
/// shifted by their maximum so large eta underflows gracefully (coordinates
/// flushed to zero get pinned to the floor) instead of overflowing.
pub fn clipped_omd_step(
    w: &Distribution,
    loss: &LossVector,
    eta: f64,
    clip_floor: f64,
) -> Result<Distribution> {
    if w.dim() != loss.dim() {
        return Err(Error::DimensionMismatch(format!(
            "clipped_omd_step: {} vs {}",
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
    let q: Vec<f64> = w
        .weights()
        .iter()
        .zip(loss.values())
        .map(|(&wi, &gi)| wi * (-eta * gi - shift).exp())
        .collect();
    Ok(kl_project_clipped(&q, clip_floor)?.point)
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
/// Support routine for the numeric oracle below.
pub fn project_simplex_euclidean(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Numerically minimize <linear, w> + sum_i w_i log(w_i / base_i) over the
/// clipped simplex by projected gradient on the reparameterized set
/// w = floor + (1 - K*floor) * sigma, sigma in the plain simplex.
///
/// Backtracking line search keeps it fast; a first-order optimality residual
/// for the original program decides convergence, so the answer certifies
/// itself. `tol` is the residual target; on instances where rounding noise
/// floors the residual above `tol`, the oracle stops at the first iterate no
/// descent step can improve. Independent of the sorting-based closed form
/// above: different parameterization, Euclidean (not KL) inner projection,
/// no breakpoint scan.
pub fn clipped_entropic_oracle(
    linear: &[f64],
    base: &[f64],
    clip_floor: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    let k = base.len();
    if linear.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "oracle: linear {} vs base {}",
            linear.len(),
            k
        )));
    }
    if k == 0 || base.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain("oracle base must be strictly positive".into()));
    }
    if linear.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("oracle linear term must be finite".into()));
    }
    if clip_floor < 0.0 || clip_floor * k as f64 > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "oracle clip floor {clip_floor} must be in [0, 1/K]"
        )));
    }
    let floor = clip_floor.min(1.0 / k as f64);
    // Strictly-interior safeguard: for a positive base the optimum never
    // touches zero, but an iterate parked at exactly zero gets a clamped log
    // gradient the quadratic line-search model cannot satisfy. Raising a
    // zero floor to 1e-12 keeps iterates off that cliff and shrinks the
    // feasible set by far less than any tolerance in play.
    let floor = floor.max(1e-12f64.min(1.0 / k as f64));
    let c = 1.0 - k as f64 * floor;
    if c <= 1e-14 {
        return Ok(vec![floor; k]); // the feasible set is a single point
    }

    // at floor 0 the set touches the boundary; 0 ln 0 = 0 and the gradient's
    // log is clamped so transient boundary iterates stay finite (the optimum
    // itself is interior for a positive base)
    let objective = |w: &[f64]| -> f64 {
        w.iter()
            .zip(linear)
            .zip(base)
            .map(|((&wi, &ai), &bi)| {
                ai * wi + if wi > 0.0 { wi * (wi / bi).ln() } else { 0.0 }
            })
            .sum()
    };
    let gradient = |w: &[f64], g: &mut [f64]| {
        for i in 0..k {
            g[i] = linear[i] + (w[i] / base[i]).max(1e-300).ln() + 1.0;
        }
    };
    // First-order optimality for the original program: on free coordinates
    // the gradient must be a common constant -lambda; on pinned ones it may
    // only exceed it.
    let residual = |w: &[f64], g: &[f64]| -> f64 {
        let active_margin = 1e-10 * (1.0 + floor);
        let mut lam_sum = 0.0;
        let mut lam_n = 0usize;
        for i in 0..k {
            if w[i] - floor > active_margin {
                lam_sum += g[i];
                lam_n += 1;
            }
        }
        let lam = if lam_n > 0 {
            -lam_sum / lam_n as f64
        } else {
            -g.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let mut r: f64 = 0.0;
        for i in 0..k {
            if w[i] - floor > active_margin {
                r = r.max((g[i] + lam).abs());
            } else {
                r = r.max(-(g[i] + lam));
            }
        }
        r.max(0.0)
    };

    let mut sigma = vec![1.0 / k as f64; k];
    let mut w: Vec<f64> = sigma.iter().map(|s| floor + c * s).collect();
    let mut fw = objective(&w);
    let mut g = vec![0.0; k];
    let mut step = 1.0;
    let mut best_f = fw;
    let mut stagnant = 0usize;
    const MAX_ITERS: usize = 500_000;
    const STALL_WINDOW: usize = 200;

    for _ in 0..MAX_ITERS {
        gradient(&w, &mut g);
        if residual(&w, &g) < tol {
            return Ok(w);
        }
        // gradient in sigma coordinates is c * g
        let mut accepted = false;
        for _ in 0..80 {
            let trial: Vec<f64> = sigma.iter().zip(&g).map(|(&s, &gi)| s - step * c * gi).collect();
            let sigma_new = project_simplex_euclidean(&trial);
            let w_new: Vec<f64> = sigma_new.iter().map(|s| floor + c * s).collect();
            let f_new = objective(&w_new);
            let mut lin = 0.0;
            let mut dist2 = 0.0;
            for i in 0..k {
                let d = sigma_new[i] - sigma[i];
                lin += c * g[i] * d;
                dist2 += d * d;
            }
            if f_new <= fw + lin + dist2 / (2.0 * step) {
                sigma = sigma_new;
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
            // Every stepsize fails the exact descent test: for a convex
            // objective that only happens once the iterate is optimal to
            // rounding level.
            return Ok(w);
        }
        // Accepted steps are monotone up to rounding, so once the objective
        // stops improving beyond noise for a stretch, floating point has
        // floored the residual above `tol` and the iterate will not get
        // better. Callers compare points rather than trusting tol alone.
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
        "entropic oracle did not reach residual {tol} in {MAX_ITERS} iterations"
    )))
}

/// KL projection onto the clipped simplex by the generic oracle (zero linear
/// term). Slow but independent reference for [`kl_project_clipped`].
pub fn kl_project_oracle(p: &[f64], clip_floor: f64, tol: f64) -> Result<Vec<f64>> {
    clipped_entropic_oracle(&vec![0.0; p.len()], p, clip_floor, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use proptest::prelude::*;

    #[test]
    fn frozen_example() {
        let r = kl_project_clipped(&[0.9, 0.08, 0.02], 0.05).unwrap();
        let w = r.point.weights();
        assert!((w[0] - 0.872_449).abs() < 1e-6);
        assert!((w[1] - 0.077_551).abs() < 1e-6);
        assert!((w[2] - 0.05).abs() < 1e-12);
        assert_eq!(r.clipped, vec![false, false, true]);
        assert!((r.scale - 0.969_388).abs() < 1e-6);
    }

    #[test]
    fn floor_zero_is_renormalization() {
        let r = kl_project_clipped(&[2.0, 6.0], 0.0).unwrap();
        assert!((r.point.weights()[0] - 0.25).abs() < 1e-15);
        assert!((r.point.weights()[1] - 0.75).abs() < 1e-15);
        assert!(r.clipped.iter().all(|&b| !b));
    }

    #[test]
    fn floor_one_over_k_gives_uniform() {
        for p in [[0.9, 0.05, 0.05], [0.1, 0.1, 0.8], [1.0, 2.0, 3.0]] {
            let r = kl_project_clipped(&p, 1.0 / 3.0).unwrap();
            for &x in r.point.weights() {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_floor_rejected() {
        assert!(matches!(
            kl_project_clipped(&[0.5, 0.5], 0.6),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn zero_entries_get_pinned() {
        let r = kl_project_clipped(&[0.0, 0.0, 0.5, 0.5], 0.1).unwrap();
        let w = r.point.weights();
        assert!((w[0] - 0.1).abs() < 1e-12);
        assert!((w[1] - 0.1).abs() < 1e-12);
        assert!((w[2] - 0.4).abs() < 1e-12);
        assert!((w[3] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn already_feasible_point_is_fixed() {
        let r = kl_project_clipped(&[0.3, 0.3, 0.4], 0.1).unwrap();
        let again = kl_project_clipped(r.point.weights(), 0.1).unwrap();
        assert!(r.point.linf_distance(&again.point) < 1e-12);
        assert!((r.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omd_step_frozen_example() {
        let w = Distribution::uniform(3);
        let l = LossVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let out = clipped_omd_step(&w, &l, 1.0, 0.01).unwrap();
        let v = out.weights();
        assert!((v[0] - 0.155_362).abs() < 1e-6);
        assert!((v[1] - 0.422_319).abs() < 1e-6);
        assert!((v[2] - 0.422_319).abs() < 1e-6);
    }

    #[test]
    fn omd_step_survives_huge_eta() {
        let w = Distribution::uniform(4);
        let l = LossVector::new(vec![1.0, 0.0, 0.5, 1.0]).unwrap();
        let floor = 0.01;
        let out = clipped_omd_step(&w, &l, 1e3, floor).unwrap();
        let v = out.weights();
        assert!(v.iter().all(|x| x.is_finite()));
        // Hard-hit coordinates land on the floor, the zero-loss one takes the rest.
        assert!((v[0] - floor).abs() < 1e-9);
        assert!((v[3] - floor).abs() < 1e-9);
        assert!(v[1] > 0.9);
    }

    #[test]
    fn oracle_floor_domain() {
        assert!(kl_project_oracle(&[0.5, 0.5], -0.1, 1e-9).is_err());
        assert!(kl_project_oracle(&[0.5, 0.5], 0.6, 1e-9).is_err());
        // floor 0 degenerates to plain renormalization
        let w = kl_project_oracle(&[0.6, 0.2], 0.0, 1e-11).unwrap();
        assert!((w[0] - 0.75).abs() < 1e-7 && (w[1] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn oracle_matches_closed_form_on_example() {
        let w = kl_project_oracle(&[0.9, 0.08, 0.02], 0.05, 1e-10).unwrap();
        let r = kl_project_clipped(&[0.9, 0.08, 0.02], 0.05).unwrap();
        for (a, b) in w.iter().zip(r.point.weights()) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn oracle_single_point_feasible_set() {
        let w = kl_project_oracle(&[0.7, 0.2, 0.1], 1.0 / 3.0, 1e-9).unwrap();
        for &x in &w {
            assert!((x - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn kkt_structure_on_random_instances() {
        let mut rng = StreamRng::new(91);
        for _ in 0..200 {
            let k = 2 + rng.next_index(15);
            let p: Vec<f64> = (0..k).map(|_| 1e-3 + rng.next_f64()).collect();
            let floor = (0.05 + 0.9 * rng.next_f64()) / k as f64;
            let r = kl_project_clipped(&p, floor).unwrap();
            let w = r.point.weights();
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for i in 0..k {
                assert!(w[i] >= floor - 1e-12);
                if r.clipped[i] {
                    // pinned only when the common scale would undershoot
                    assert!(r.scale * p[i] <= floor + 1e-10);
                } else {
                    assert!((w[i] - r.scale * p[i]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn monotone_activation_in_floor() {
        let mut rng = StreamRng::new(17);
        for _ in 0..100 {
            let k = 2 + rng.next_index(10);
            let p: Vec<f64> = (0..k).map(|_| 1e-3 + rng.next_f64()).collect();
            let f_small = 0.1 / k as f64;
            let f_large = 0.9 / k as f64;
            let lo = kl_project_clipped(&p, f_small).unwrap();
            let hi = kl_project_clipped(&p, f_large).unwrap();
            for i in 0..k {
                if lo.clipped[i] {
                    assert!(hi.clipped[i], "raising the floor must keep {i} pinned");
                }
            }
        }
    }

    #[test]
    fn scale_invariance_of_projection() {
        // Multiplying the input by a constant must not move the output.
        let p = [0.4, 1.3, 0.02, 0.7];
        let a = kl_project_clipped(&p, 0.06).unwrap();
        let scaled: Vec<f64> = p.iter().map(|x| x * 37.5).collect();
        let b = kl_project_clipped(&scaled, 0.06).unwrap();
        assert!(a.point.linf_distance(&b.point) < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn projection_idempotent(
            raw in proptest::collection::vec(1e-4..1.0f64, 2..12),
            u in 0.05..0.999f64,
        ) {
            let k = raw.len();
            let floor = u / k as f64;
            let once = kl_project_clipped(&raw, floor).unwrap();
            let twice = kl_project_clipped(once.point.weights(), floor).unwrap();
            prop_assert!(once.point.linf_distance(&twice.point) < 1e-12);
        }

        #[test]
        fn projection_feasible(
            raw in proptest::collection::vec(0.0..1.0f64, 2..12),
            u in 0.05..0.999f64,
        ) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-6);
            let k = raw.len();
            let floor = u / k as f64;
            let r = kl_project_clipped(&raw, floor).unwrap();
            let sum: f64 = r.point.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for &x in r.point.weights() {
                prop_assert!(x >= floor - 1e-12);
            }
        }
    }
}
