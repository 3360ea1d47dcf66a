//! Offline comparators: the best expert sequence with a bounded number of
//! switches (vector case, exact DP) and the best segmentation with one
//! unit-trace PSD matrix per segment (matrix case, interval DP). Both come
//! with exhaustive-enumeration twins used to certify them on small grids.

use crate::error::{Error, Result};
use crate::matrix::{min_eigen, LossMatrix, SymmetricMatrix};
use crate::simplex::LossVector;

/// The optimal switching comparator for a loss sequence under budget S
/// (at most S-1 switches, equivalently at most S constant segments).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorResult {
    /// Chosen expert per round (0-based experts).
    pub sequence: Vec<usize>,
    /// 0-based rounds where a new segment begins; always starts with 0.
    pub segment_starts: Vec<usize>,
    /// Sum of the chosen experts' losses (left-to-right fold).
    pub total_loss: f64,
    /// Same sum — kept under the name the bounds use.
    pub l1: f64,
    /// Sum of squared chosen losses.
    pub l2: f64,
    /// Switches actually used (= segment_starts.len() - 1).
    pub switches: usize,
}

fn stats_for_sequence(losses: &[LossVector], seq: &[usize]) -> (f64, f64, Vec<usize>, usize) {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut starts = vec![0usize];
    for (t, &i) in seq.iter().enumerate() {
        let x = losses[t].values()[i];
        l1 += x;
        l2 += x * x;
        if t > 0 && seq[t] != seq[t - 1] {
            starts.push(t);
        }
    }
    let switches = starts.len() - 1;
    (l1, l2, starts, switches)
}

fn validate_vector_input(losses: &[LossVector], s: usize) -> Result<usize> {
    if losses.is_empty() {
        return Err(Error::Domain("empty loss sequence".into()));
    }
    if s < 1 {
        return Err(Error::Domain("switch budget must be at least 1".into()));
    }
    let k = losses[0].dim();
    for l in losses {
        if l.dim() != k {
            return Err(Error::DimensionMismatch(
                "loss vectors change dimension mid-sequence".into(),
            ));
        }
    }
    Ok(k)
}

/// Exact minimizer of sum_t l_t[e_t] over sequences with at most s-1
/// switches. O(T * K * s) via the running best/second-best trick. Ties are
/// broken toward fewer switches, then the smaller expert index.
pub fn best_switching_sequence(losses: &[LossVector], s: usize) -> Result<ComparatorResult> {
    let k = validate_vector_input(losses, s)?;
    let t_len = losses.len();
    let smax = (s - 1).min(t_len - 1); // exact switch counts 0..=smax
    let rows = smax + 1;

    const INF: f64 = f64::INFINITY;
    // cost[si * k + i]: cheapest way to be at expert i after the current
    // round having switched exactly si times.
    let mut cost = vec![INF; rows * k];
    for i in 0..k {
        cost[i] = losses[0].values()[i];
    }
    // parent[t][si * k + i]: expert at round t-1 (equal to i means "stayed").
    let mut parent: Vec<Vec<u32>> = Vec::with_capacity(t_len);
    parent.push(vec![0; rows * k]); // round 0 unused

    for t in 1..t_len {
        let lt = losses[t].values();
        let mut next = vec![INF; rows * k];
        let mut par = vec![0u32; rows * k];
        // best and runner-up of each exact-count row of the previous round
        let mut best: Vec<(f64, usize, f64, usize)> = Vec::with_capacity(rows);
        for si in 0..rows {
            let row = &cost[si * k..(si + 1) * k];
            let mut b1 = INF;
            let mut j1 = 0usize;
            let mut b2 = INF;
            let mut j2 = 0usize;
            for (j, &c) in row.iter().enumerate() {
                if c < b1 {
                    b2 = b1;
                    j2 = j1;
                    b1 = c;
                    j1 = j;
                } else if c < b2 {
                    b2 = c;
                    j2 = j;
                }
            }
            best.push((b1, j1, b2, j2));
        }
        for si in 0..rows {
            for i in 0..k {
                let stay = cost[si * k + i];
                let (switch_cost, switch_from) = if si > 0 {
                    let (b1, j1, b2, j2) = best[si - 1];
                    if j1 != i {
                        (b1, j1)
                    } else {
                        (b2, j2)
                    }
                } else {
                    (INF, 0)
                };
                // prefer staying on ties: it keeps the backtracked sequence
                // maximally lazy
                if stay <= switch_cost {
                    if stay < INF {
                        next[si * k + i] = stay + lt[i];
                        par[si * k + i] = i as u32;
                    }
                } else {
                    next[si * k + i] = switch_cost + lt[i];
                    par[si * k + i] = switch_from as u32;
                }
            }
        }
        cost = next;
        parent.push(par);
    }

    // Smallest cost; ties toward fewer switches, then smaller expert.
    let mut pick = (0usize, 0usize);
    let mut pick_cost = INF;
    for si in 0..rows {
        for i in 0..k {
            let c = cost[si * k + i];
            if c < pick_cost {
                pick_cost = c;
                pick = (si, i);
            }
        }
    }
    if !pick_cost.is_finite() {
        return Err(Error::Domain("comparator DP produced no finite path".into()));
    }

    let mut sequence = vec![0usize; t_len];
    let (mut si, mut i) = pick;
    sequence[t_len - 1] = i;
    for t in (1..t_len).rev() {
        let p = parent[t][si * k + i] as usize;
        if p != i {
            si -= 1;
        }
        i = p;
        sequence[t - 1] = i;
    }

    let (l1, l2, segment_starts, switches) = stats_for_sequence(losses, &sequence);
    debug_assert_eq!(switches, pick.0);
    Ok(ComparatorResult {
        sequence,
        segment_starts,
        total_loss: l1,
        l1,
        l2,
        switches,
    })
}

/// Exhaustive twin of [`best_switching_sequence`]: walks every expert
/// sequence with at most s-1 switches. Only viable for tiny T and K; guarded
/// so it cannot be misused on real horizons.
pub fn brute_force_switching_sequence(
    losses: &[LossVector],
    s: usize,
) -> Result<ComparatorResult> {
    let k = validate_vector_input(losses, s)?;
    let t_len = losses.len();
    if (k as f64).powi(t_len as i32) > 2e7 {
        return Err(Error::Domain(
            "brute-force comparator limited to tiny grids".into(),
        ));
    }
    let mut best_seq: Option<Vec<usize>> = None;
    let mut best_cost = f64::INFINITY;
    let mut best_switches = usize::MAX;
    let mut seq = vec![0usize; t_len];

    fn recurse(
        losses: &[LossVector],
        k: usize,
        max_switches: usize,
        t: usize,
        switches: usize,
        acc: f64,
        seq: &mut Vec<usize>,
        best_seq: &mut Option<Vec<usize>>,
        best_cost: &mut f64,
        best_switches: &mut usize,
    ) {
        if t == losses.len() {
            let better = acc < *best_cost
                || (acc == *best_cost && switches < *best_switches)
                || (acc == *best_cost
                    && switches == *best_switches
                    && best_seq.as_ref().is_some_and(|b| seq[..] < b[..]));
            if better {
                *best_cost = acc;
                *best_switches = switches;
                *best_seq = Some(seq.clone());
            }
            return;
        }
        for i in 0..k {
            let extra = if t > 0 && seq[t - 1] != i { 1 } else { 0 };
            if switches + extra > max_switches {
                continue;
            }
            seq[t] = i;
            recurse(
                losses,
                k,
                max_switches,
                t + 1,
                switches + extra,
                acc + losses[t].values()[i],
                seq,
                best_seq,
                best_cost,
                best_switches,
            );
        }
    }

    recurse(
        losses,
        k,
        s - 1,
        0,
        0,
        0.0,
        &mut seq,
        &mut best_seq,
        &mut best_cost,
        &mut best_switches,
    );
    let sequence = best_seq.expect("at least the constant sequences are feasible");
    let (l1, l2, segment_starts, switches) = stats_for_sequence(losses, &sequence);
    Ok(ComparatorResult {
        sequence,
        segment_starts,
        total_loss: l1,
        l1,
        l2,
        switches,
    })
}

/// Squared-drift path length of a loss sequence: sum_t ||l_t - l_{t-1}||_inf^2
/// with l_0 = 0, the quantity the optimistic learners' bounds scale with.
pub fn path_length(losses: &[LossVector]) -> f64 {
    let mut prev: Option<&LossVector> = None;
    let mut acc = 0.0;
    for l in losses {
        let d = match prev {
            None => l.values().iter().fold(0.0f64, |m, &x| m.max(x.abs())),
            Some(p) => l.linf_diff(p),
        };
        acc += d * d;
        prev = Some(l);
    }
    acc
}

/// Best segmentation comparator for matrix losses: at most s segments, one
/// unit-trace PSD matrix per segment. Per segment the optimal choice is the
/// projector onto the smallest eigenvector of the summed losses, so the
/// segment cost is that smallest eigenvalue.
#[derive(Debug, Clone)]
pub struct MatrixComparatorResult {
    /// 0-based rounds where a new segment begins; always starts with 0.
    pub segment_starts: Vec<usize>,
    /// Unit direction per segment (the comparator plays its outer product).
    pub directions: Vec<Vec<f64>>,
    /// Sum over segments of lambda_min(sum of the segment's losses).
    pub total_loss: f64,
    /// Second-order term sum_t v_seg(t)^T Z_t^2 v_seg(t).
    pub m2: f64,
    pub segments: usize,
}

impl MatrixComparatorResult {
    /// Comparator loss at round t: v^T Z_t v of its segment's direction.
    pub fn round_loss(&self, losses: &[LossMatrix], t: usize) -> f64 {
        let seg = match self.segment_starts.binary_search(&t) {
            Ok(pos) => pos,
            Err(pos) => pos - 1,
        };
        losses[t].matrix().quadratic_form(&self.directions[seg])
    }
}

fn validate_matrix_input(losses: &[LossMatrix], s: usize) -> Result<usize> {
    if losses.is_empty() {
        return Err(Error::Domain("empty loss sequence".into()));
    }
    if s < 1 {
        return Err(Error::Domain("segment budget must be at least 1".into()));
    }
    let k = losses[0].dim();
    for l in losses {
        if l.dim() != k {
            return Err(Error::DimensionMismatch(
                "loss matrices change dimension mid-sequence".into(),
            ));
        }
    }
    Ok(k)
}

/// All-pairs segment costs from prefix sums: cost[a][b] with a <= b is
/// lambda_min of Z_a + ... + Z_b.
fn segment_cost_table(losses: &[LossMatrix]) -> Result<Vec<Vec<f64>>> {
    let t_len = losses.len();
    let k = losses[0].dim();
    let mut prefix = Vec::with_capacity(t_len + 1);
    prefix.push(SymmetricMatrix::zeros(k));
    for z in losses {
        let last = prefix.last().unwrap().add(z.matrix());
        prefix.push(last);
    }
    let mut table = vec![Vec::new(); t_len];
    for a in 0..t_len {
        let mut row = Vec::with_capacity(t_len - a);
        for b in a..t_len {
            let seg = prefix[b + 1].sub(&prefix[a]);
            row.push(min_eigen(&seg)?.0);
        }
        table[a] = row;
    }
    Ok(table)
}

/// Interval DP over segment boundaries, O(T^2 * s) plus one small
/// eigendecomposition per (start, end) pair. Ties prefer fewer segments,
/// then the earliest split.
pub fn best_switching_matrix(losses: &[LossMatrix], s: usize) -> Result<MatrixComparatorResult> {
    let _k = validate_matrix_input(losses, s)?;
    let t_len = losses.len();
    let smax = s.min(t_len);
    let cost = segment_cost_table(losses)?;

    const INF: f64 = f64::INFINITY;
    // f[n][b]: best value covering rounds 0..b with exactly n segments
    let mut f = vec![vec![INF; t_len + 1]; smax + 1];
    let mut cut = vec![vec![0usize; t_len + 1]; smax + 1];
    f[0][0] = 0.0;
    for n in 1..=smax {
        for b in n..=t_len {
            let mut bv = INF;
            let mut ba = 0usize;
            for a in (n - 1)..b {
                let v = f[n - 1][a] + cost[a][b - 1 - a];
                if v < bv {
                    bv = v;
                    ba = a;
                }
            }
            f[n][b] = bv;
            cut[n][b] = ba;
        }
    }
    let mut pick_n = 1;
    let mut pick_v = f[1][t_len];
    for n in 2..=smax {
        if f[n][t_len] < pick_v {
            pick_v = f[n][t_len];
            pick_n = n;
        }
    }

    let mut bounds = vec![t_len];
    let mut b = t_len;
    for n in (1..=pick_n).rev() {
        b = cut[n][b];
        bounds.push(b);
    }
    bounds.reverse(); // starts with 0, ends with t_len

    let mut segment_starts = Vec::with_capacity(pick_n);
    let mut directions = Vec::with_capacity(pick_n);
    let mut total_loss = 0.0;
    let mut m2 = 0.0;
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        segment_starts.push(a);
        let mut seg = SymmetricMatrix::zeros(losses[0].dim());
        for z in &losses[a..b] {
            seg = seg.add(z.matrix());
        }
        let (lam, v) = min_eigen(&seg)?;
        total_loss += lam;
        for z in &losses[a..b] {
            let u = z.matrix().matvec(&v);
            m2 += u.iter().map(|x| x * x).sum::<f64>();
        }
        directions.push(v);
    }
    Ok(MatrixComparatorResult {
        segment_starts,
        directions,
        total_loss,
        m2,
        segments: pick_n,
    })
}

/// Exhaustive twin of [`best_switching_matrix`]: tries every way to cut the
/// horizon into at most s contiguous segments. Tiny inputs only.
pub fn brute_force_switching_matrix(
    losses: &[LossMatrix],
    s: usize,
) -> Result<MatrixComparatorResult> {
    validate_matrix_input(losses, s)?;
    let t_len = losses.len();
    if t_len > 16 {
        return Err(Error::Domain(
            "brute-force matrix comparator limited to tiny horizons".into(),
        ));
    }
    let cost = segment_cost_table(losses)?;

    let mut best_val = f64::INFINITY;
    let mut best_cuts: Vec<usize> = Vec::new();

    // cuts: segment start indices after 0, strictly increasing
    fn recurse(
        cost: &[Vec<f64>],
        t_len: usize,
        max_segments: usize,
        start: usize,
        cuts: &mut Vec<usize>,
        acc: f64,
        best_val: &mut f64,
        best_cuts: &mut Vec<usize>,
    ) {
        let segments_so_far = cuts.len();
        // close the sequence here: last segment start..t_len
        let total = acc + cost[start][t_len - 1 - start];
        if total < *best_val
            || (total == *best_val && segments_so_far + 1 < best_cuts.len() + 1)
        {
            *best_val = total;
            *best_cuts = cuts.clone();
        }
        if segments_so_far + 1 >= max_segments {
            return;
        }
        for next in (start + 1)..t_len {
            cuts.push(next);
            recurse(
                cost,
                t_len,
                max_segments,
                next,
                cuts,
                acc + cost[start][next - 1 - start],
                best_val,
                best_cuts,
            );
            cuts.pop();
        }
    }

    let mut cuts = Vec::new();
    recurse(
        &cost,
        t_len,
        s.min(t_len),
        0,
        &mut cuts,
        0.0,
        &mut best_val,
        &mut best_cuts,
    );

    let mut bounds = vec![0usize];
    bounds.extend_from_slice(&best_cuts);
    bounds.push(t_len);
    let mut segment_starts = Vec::new();
    let mut directions = Vec::new();
    let mut total_loss = 0.0;
    let mut m2 = 0.0;
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        segment_starts.push(a);
        let mut seg = SymmetricMatrix::zeros(losses[0].dim());
        for z in &losses[a..b] {
            seg = seg.add(z.matrix());
        }
        let (lam, v) = min_eigen(&seg)?;
        total_loss += lam;
        for z in &losses[a..b] {
            let u = z.matrix().matvec(&v);
            m2 += u.iter().map(|x| x * x).sum::<f64>();
        }
        directions.push(v);
    }
    let segments = segment_starts.len();
    Ok(MatrixComparatorResult {
        segment_starts,
        directions,
        total_loss,
        m2,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    fn lv(v: &[f64]) -> LossVector {
        LossVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn frozen_two_expert_example() {
        let losses = vec![
            lv(&[0.0, 1.0]),
            lv(&[0.0, 1.0]),
            lv(&[1.0, 0.0]),
            lv(&[1.0, 0.0]),
        ];
        let r = best_switching_sequence(&losses, 2).unwrap();
        assert_eq!(r.sequence, vec![0, 0, 1, 1]);
        assert_eq!(r.total_loss, 0.0);
        assert_eq!(r.switches, 1);
        assert_eq!(r.segment_starts, vec![0, 2]);
    }

    #[test]
    fn budget_one_is_static_best_expert() {
        let losses = vec![
            lv(&[0.2, 0.9, 0.5]),
            lv(&[0.8, 0.1, 0.5]),
            lv(&[0.3, 0.9, 0.5]),
        ];
        let r = best_switching_sequence(&losses, 1).unwrap();
        assert_eq!(r.switches, 0);
        // static costs: expert0 = 1.3, expert1 = 1.9, expert2 = 1.5
        assert_eq!(r.sequence, vec![0, 0, 0]);
        assert!((r.total_loss - 1.3).abs() < 1e-15);
    }

    #[test]
    fn extra_budget_cannot_hurt() {
        let mut rng = StreamRng::new(60);
        for _ in 0..30 {
            let t = 2 + rng.next_index(7);
            let losses: Vec<LossVector> = (0..t)
                .map(|_| lv(&(0..3).map(|_| rng.next_f64()).collect::<Vec<_>>()))
                .collect();
            let mut prev = f64::INFINITY;
            for s in 1..=4 {
                let r = best_switching_sequence(&losses, s).unwrap();
                assert!(r.total_loss <= prev + 1e-12);
                assert!(r.switches <= s - 1);
                prev = r.total_loss;
            }
        }
    }

    #[test]
    fn dp_matches_brute_force_on_grids() {
        let mut rng = StreamRng::new(99);
        for t in 1..=7 {
            for k in 2..=3 {
                for s in 1..=3usize.min(t) {
                    for _ in 0..3 {
                        let losses: Vec<LossVector> = (0..t)
                            .map(|_| lv(&(0..k).map(|_| rng.next_f64()).collect::<Vec<_>>()))
                            .collect();
                        let fast = best_switching_sequence(&losses, s).unwrap();
                        let slow = brute_force_switching_sequence(&losses, s).unwrap();
                        assert!(
                            (fast.total_loss - slow.total_loss).abs() < 1e-12,
                            "T={t} K={k} S={s}: {} vs {}",
                            fast.total_loss,
                            slow.total_loss
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ties_prefer_fewer_switches() {
        // Both experts are identical: zero switches must win.
        let losses = vec![lv(&[0.5, 0.5]); 5];
        let r = best_switching_sequence(&losses, 3).unwrap();
        assert_eq!(r.switches, 0);
        assert_eq!(r.sequence, vec![0; 5]);
    }

    #[test]
    fn l2_never_exceeds_l1() {
        let mut rng = StreamRng::new(3);
        let losses: Vec<LossVector> = (0..40)
            .map(|_| lv(&(0..4).map(|_| rng.next_f64()).collect::<Vec<_>>()))
            .collect();
        let r = best_switching_sequence(&losses, 5).unwrap();
        assert!(r.l2 <= r.l1 + 1e-12);
        assert_eq!(r.l1, r.total_loss);
    }

    #[test]
    fn path_length_counts_the_initial_jump() {
        let losses = vec![lv(&[0.5, 0.2]), lv(&[0.5, 0.2]), lv(&[0.6, 0.2])];
        // ||l1 - 0||^2 = 0.25, then 0, then 0.01
        assert!((path_length(&losses) - 0.26).abs() < 1e-12);
    }

    fn diag_loss(d: &[f64]) -> LossMatrix {
        LossMatrix::new(SymmetricMatrix::from_diagonal(d)).unwrap()
    }

    #[test]
    fn frozen_matrix_example() {
        let losses = vec![diag_loss(&[1.0, -1.0]), diag_loss(&[-1.0, 1.0])];
        let r = best_switching_matrix(&losses, 2).unwrap();
        assert_eq!(r.segments, 2);
        assert!((r.total_loss - (-2.0)).abs() < 1e-12);
        assert_eq!(r.segment_starts, vec![0, 1]);
    }

    #[test]
    fn matrix_single_segment_is_min_eigenvalue_of_sum() {
        let mut rng = StreamRng::new(21);
        let mut sum = SymmetricMatrix::zeros(3);
        let mut losses = Vec::new();
        for _ in 0..6 {
            let mut m = SymmetricMatrix::zeros(3);
            for i in 0..3 {
                for j in i..3 {
                    let x = 0.3 * (2.0 * rng.next_f64() - 1.0);
                    m.set(i, j, x);
                    m.set(j, i, x);
                }
            }
            sum = sum.add(&m);
            losses.push(LossMatrix::new(m).unwrap());
        }
        let r = best_switching_matrix(&losses, 1).unwrap();
        let (lam, _) = min_eigen(&sum).unwrap();
        assert!((r.total_loss - lam).abs() < 1e-12);
    }

    #[test]
    fn matrix_dp_matches_brute_force() {
        let mut rng = StreamRng::new(55);
        for t in 1..=6 {
            for s in 1..=3usize.min(t) {
                let losses: Vec<LossMatrix> = (0..t)
                    .map(|_| {
                        let mut m = SymmetricMatrix::zeros(3);
                        for i in 0..3 {
                            for j in i..3 {
                                let x = 0.5 * (2.0 * rng.next_f64() - 1.0);
                                m.set(i, j, x);
                                m.set(j, i, x);
                            }
                        }
                        let n = crate::matrix::spectral_norm(&m).unwrap();
                        if n > 1.0 {
                            m = m.scale(1.0 / n);
                        }
                        LossMatrix::new(m).unwrap()
                    })
                    .collect();
                let fast = best_switching_matrix(&losses, s).unwrap();
                let slow = brute_force_switching_matrix(&losses, s).unwrap();
                assert!(
                    (fast.total_loss - slow.total_loss).abs() < 1e-10,
                    "T={t} S={s}: {} vs {}",
                    fast.total_loss,
                    slow.total_loss
                );
            }
        }
    }

    #[test]
    fn matrix_comparator_beats_any_fixed_segment_choice() {
        // Against its own segmentation, the rank-one minimum-eigenvector
        // choice is optimal per segment: any random unit direction pays more.
        let mut rng = StreamRng::new(42);
        let losses: Vec<LossMatrix> = (0..10)
            .map(|_| {
                let mut m = SymmetricMatrix::zeros(3);
                for i in 0..3 {
                    for j in i..3 {
                        let x = 0.4 * (2.0 * rng.next_f64() - 1.0);
                        m.set(i, j, x);
                        m.set(j, i, x);
                    }
                }
                LossMatrix::new(m).unwrap()
            })
            .collect();
        let r = best_switching_matrix(&losses, 3).unwrap();
        let mut bounds = r.segment_starts.clone();
        bounds.push(losses.len());
        for w in bounds.windows(2) {
            let mut seg = SymmetricMatrix::zeros(3);
            for z in &losses[w[0]..w[1]] {
                seg = seg.add(z.matrix());
            }
            for _ in 0..20 {
                let v = crate::spectraplex::random_unit_vector(&mut rng, 3);
                let (lam, _) = min_eigen(&seg).unwrap();
                assert!(seg.quadratic_form(&v) >= lam - 1e-10);
            }
        }
    }

    #[test]
    fn round_loss_picks_the_right_segment() {
        let losses = vec![diag_loss(&[1.0, -1.0]), diag_loss(&[-1.0, 1.0])];
        let r = best_switching_matrix(&losses, 2).unwrap();
        assert!((r.round_loss(&losses, 0) - (-1.0)).abs() < 1e-10);
        assert!((r.round_loss(&losses, 1) - (-1.0)).abs() < 1e-10);
    }
}
