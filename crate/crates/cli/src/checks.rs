//! Self-check battery behind `extrack verify`: re-derives the library's
//! load-bearing equalities and inequalities from scratch on freshly drawn
//! instances, so a broken build fails loudly instead of producing plausible
//! numbers.

use extrack_core::bounds::{check_lemma2, check_lemma3, check_lemma4, check_lemma5, check_lemma9};
use extrack_core::comparator::{
    best_switching_matrix, best_switching_sequence, brute_force_switching_matrix,
    brute_force_switching_sequence,
};
use extrack_core::learners::{ClippedOmd, ProjectionUpdate, VectorLearner};
use extrack_core::matrix::{matrix_exp, spectral_norm, sym_eig, LossMatrix, SymmetricMatrix};
use extrack_core::projection::{clipped_omd_step, kl_project_clipped, kl_project_oracle};
use extrack_core::rng::StreamRng;
use extrack_core::simplex::{HorizonConfig, LossVector};
use extrack_core::spectraplex::{
    random_spectraplex_point, random_unit_vector, vn_project_clipped, vn_project_oracle,
};
use extrack_core::verify::run_verification_suite;
use extrack_core::Result;

pub struct Check {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

fn run_check(name: &'static str, body: impl FnOnce() -> Result<String>) -> Check {
    match body() {
        Ok(detail) => Check {
            name,
            detail,
            pass: true,
        },
        Err(e) => Check {
            name,
            detail: e.to_string(),
            pass: false,
        },
    }
}

fn fail(msg: String) -> extrack_core::Error {
    extrack_core::Error::Domain(msg)
}

fn random_losses(rng: &mut StreamRng, t: usize, k: usize) -> Result<Vec<LossVector>> {
    (0..t)
        .map(|_| LossVector::new((0..k).map(|_| rng.next_f64()).collect()))
        .collect()
}

fn random_loss_matrix(rng: &mut StreamRng, k: usize) -> Result<LossMatrix> {
    let mut m = SymmetricMatrix::zeros(k);
    for i in 0..k {
        for j in i..k {
            let x = rng.next_f64() - 0.5;
            m.set(i, j, x);
            m.set(j, i, x);
        }
    }
    let n = spectral_norm(&m)?;
    if n > 1.0 {
        m = m.scale(1.0 / n);
    }
    LossMatrix::new(m)
}

fn vector_projections(seed: u64, n: usize) -> Result<String> {
    let mut rng = StreamRng::new(seed);
    let mut worst = 0.0f64;
    for i in 0..n {
        let k = 2 + i % 15;
        let mut q: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-3).collect();
        if i % 3 == 0 {
            for (j, x) in q.iter_mut().enumerate() {
                *x *= 10f64.powi(-((j % 3) as i32));
            }
        }
        let floor = if i % 10 == 0 {
            0.0
        } else {
            rng.next_f64() * 0.9 / k as f64
        };
        let fast = kl_project_clipped(&q, floor)?.point;
        let slow = kl_project_oracle(&q, floor, 1e-10)?;
        let gap = fast
            .weights()
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if gap >= 1e-6 {
            return Err(fail(format!(
                "closed form vs oracle disagree on instance {i} (k={k}, floor={floor}): gap {gap:e}"
            )));
        }
        worst = worst.max(gap);
    }
    Ok(format!("{n} instances, worst coordinate gap {worst:.1e}"))
}

fn matrix_projections(seed: u64, n: usize) -> Result<String> {
    let mut rng = StreamRng::new(seed);
    let mut worst = 0.0f64;
    for i in 0..n {
        let k = 2 + i % 5;
        let mut a = SymmetricMatrix::zeros(k);
        for r in 0..k {
            for c in r..k {
                let x = rng.next_f64() - 0.5;
                a.set(r, c, x);
                a.set(c, r, x);
            }
        }
        let p = matrix_exp(&a)?;
        let floor = if i % 10 == 0 {
            0.0
        } else {
            rng.next_f64() * 0.9 / k as f64
        };
        let fast = vn_project_clipped(&p, floor)?.point;
        let slow = vn_project_oracle(&p, floor, 1e-10)?;
        let slow_eigs = sym_eig(&slow, 1e-13)?.values;
        let gap = fast
            .eigenvalues()
            .iter()
            .zip(&slow_eigs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if gap >= 1e-5 {
            return Err(fail(format!(
                "spectral reduction vs oracle disagree on instance {i} (k={k}, floor={floor}): gap {gap:e}"
            )));
        }
        worst = worst.max(gap);
    }
    Ok(format!("{n} instances, worst eigenvalue gap {worst:.1e}"))
}

fn update_forms(seed: u64, runs: usize) -> Result<String> {
    let (t, k, s, eta) = (200usize, 6usize, 4usize, 0.1);
    let mut worst = 0.0f64;
    for r in 0..runs {
        let mut rng = StreamRng::new(seed.wrapping_add(r as u64));
        let h = HorizonConfig::new(t, k, s, eta)?;
        let mut one_shot = ClippedOmd::new(h);
        let mut two_stage = ProjectionUpdate::new(h, h.clip_floor)?;
        for losses in random_losses(&mut rng, t, k)? {
            let a = one_shot.predict();
            let b = two_stage.predict();
            let gap = a
                .weights()
                .iter()
                .zip(b.weights())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            if gap >= 1e-9 {
                return Err(fail(format!(
                    "one-shot and two-stage updates diverge on run {r}: gap {gap:e}"
                )));
            }
            worst = worst.max(gap);
            one_shot.update(&losses)?;
            two_stage.update(&losses)?;
        }
    }
    Ok(format!(
        "{runs} runs of {t} rounds, worst iterate gap {worst:.1e}"
    ))
}

fn segmentation_dp(seed: u64, quick: bool) -> Result<String> {
    let mut rng = StreamRng::new(seed);
    let t_max = if quick { 5 } else { 6 };
    let reps = if quick { 1 } else { 2 };
    let mut vector_checked = 0usize;
    for t in 1..=t_max {
        for k in [2usize, 3] {
            for s in 1..=3usize.min(t) {
                for _ in 0..reps {
                    let losses = random_losses(&mut rng, t, k)?;
                    let fast = best_switching_sequence(&losses, s)?;
                    let slow = brute_force_switching_sequence(&losses, s)?;
                    if (fast.total_loss - slow.total_loss).abs() >= 1e-10 {
                        return Err(fail(format!(
                            "segmentation DP vs enumeration: T={t} K={k} S={s}: {} vs {}",
                            fast.total_loss, slow.total_loss
                        )));
                    }
                    vector_checked += 1;
                }
            }
        }
    }
    let mut matrix_checked = 0usize;
    for t in 1..=t_max.min(5) {
        for k in [2usize, 3] {
            for s in 1..=2usize.min(t) {
                let losses: Vec<LossMatrix> = (0..t)
                    .map(|_| random_loss_matrix(&mut rng, k))
                    .collect::<Result<_>>()?;
                let fast = best_switching_matrix(&losses, s)?;
                let slow = brute_force_switching_matrix(&losses, s)?;
                if (fast.total_loss - slow.total_loss).abs() >= 1e-10 {
                    return Err(fail(format!(
                        "matrix segmentation DP vs enumeration: T={t} K={k} S={s}: {} vs {}",
                        fast.total_loss, slow.total_loss
                    )));
                }
                matrix_checked += 1;
            }
        }
    }
    Ok(format!(
        "{vector_checked} vector + {matrix_checked} matrix instances match enumeration exactly"
    ))
}

fn per_step_inequalities(seed: u64, draws: usize) -> Result<String> {
    let mut rng = StreamRng::new(seed);

    for _ in 0..draws {
        let t = 10 + rng.next_index(490);
        let k = 2 + rng.next_index(9);
        let s = 1 + rng.next_index(10.min(t));
        let h = HorizonConfig::new(t, k, s, 0.1)?;
        let l = LossVector::new((0..k).map(|_| rng.next_f64()).collect())?;
        let e = rng.next_index(k);
        let c = check_lemma2(&h, e, &l)?;
        if !c.holds() {
            return Err(fail(format!(
                "comparator smoothing overshoot: slack {}",
                c.slack()
            )));
        }
    }

    for _ in 0..draws {
        let k = 2 + rng.next_index(7);
        let eta = 0.01 + 2.0 * rng.next_f64();
        let floor = if rng.next_index(8) == 0 {
            0.0
        } else {
            rng.next_f64() * 0.9 / k as f64
        };
        let raw: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-6).collect();
        let w = kl_project_clipped(&raw, floor)?.point;
        let l = LossVector::new((0..k).map(|_| rng.next_f64()).collect())?;
        let w2 = clipped_omd_step(&w, &l, eta, floor)?;
        let c = check_lemma3(&w, &w2, &l, eta)?;
        if !c.holds() {
            return Err(fail(format!("one-step stability broken: slack {}", c.slack())));
        }
    }

    for _ in 0..draws {
        let k = 2 + rng.next_index(7);
        let eta = 0.01 + 2.0 * rng.next_f64();
        let floor = rng.next_f64() * 0.9 / k as f64;
        let raw: Vec<f64> = (0..k).map(|_| rng.next_f64() + 1e-6).collect();
        let aux = kl_project_clipped(&raw, floor)?.point;
        let prev = LossVector::new((0..k).map(|_| rng.next_f64()).collect())?;
        let cur = LossVector::new((0..k).map(|_| rng.next_f64()).collect())?;
        let w = clipped_omd_step(&aux, &prev, eta, floor)?;
        let aux_next = clipped_omd_step(&aux, &cur, eta, floor)?;
        let c = check_lemma4(&w, &aux_next, &cur, &prev, eta)?;
        if !c.holds() {
            return Err(fail(format!(
                "optimistic gap exceeds drift budget: slack {}",
                c.slack()
            )));
        }
    }

    for _ in 0..draws {
        let t = 10 + rng.next_index(190);
        let k = 2 + rng.next_index(5);
        let s = 1 + rng.next_index(6.min(t));
        let h = HorizonConfig::new(t, k, s, 0.1)?;
        let v = random_unit_vector(&mut rng, k);
        let u = SymmetricMatrix::outer(&v);
        let z = random_loss_matrix(&mut rng, k)?;
        let c = check_lemma5(&h, &u, z.matrix())?;
        if !c.holds() {
            return Err(fail(format!(
                "matrix comparator smoothing overshoot: slack {}",
                c.slack()
            )));
        }
    }

    for _ in 0..draws {
        let t = 10 + rng.next_index(190);
        let k = 2 + rng.next_index(4);
        let s = 1 + rng.next_index(4.min(t));
        let h = HorizonConfig::new(t, k, s, 0.1)?;
        let x = random_spectraplex_point(&mut rng, k, h.clip_floor)?;
        let y = random_spectraplex_point(&mut rng, k, h.clip_floor)?;
        let z = random_spectraplex_point(&mut rng, k, h.clip_floor)?;
        let c = check_lemma9(&h, &x, &y, &z)?;
        if !c.holds() {
            return Err(fail(format!(
                "log-spread bound broken: slack {}",
                c.slack()
            )));
        }
    }

    Ok(format!("5 inequality families x {draws} draws, zero violations"))
}

fn trajectory_battery(seed: u64, quick: bool) -> Result<String> {
    let summary = run_verification_suite(seed, quick)?;
    if !summary.all_pass {
        let bad: Vec<String> = summary
            .entries
            .iter()
            .filter(|e| !e.verdict.pass())
            .map(|e| format!("{} on {}", e.verdict.learner, e.environment))
            .collect();
        return Err(fail(format!("uncertified trajectories: {}", bad.join(", "))));
    }
    Ok(format!(
        "{} trajectories certified against their guarantees",
        summary.entries.len()
    ))
}

/// Run the whole battery. `quick` shrinks instance counts and horizons.
pub fn run_battery(seed: u64, quick: bool) -> Vec<Check> {
    let (nv, nm, runs, draws) = if quick {
        (60, 10, 3, 300)
    } else {
        (200, 40, 10, 2000)
    };
    vec![
        run_check("vector projections vs numeric oracle", || {
            vector_projections(seed, nv)
        }),
        run_check("matrix projections vs numeric oracle", || {
            matrix_projections(seed.wrapping_add(1), nm)
        }),
        run_check("one-shot vs two-stage update equivalence", || {
            update_forms(seed.wrapping_add(2), runs)
        }),
        run_check("segmentation DP vs exhaustive enumeration", || {
            segmentation_dp(seed.wrapping_add(3), quick)
        }),
        run_check("per-step inequality fuzzing", || {
            per_step_inequalities(seed.wrapping_add(4), draws)
        }),
        run_check("end-to-end trajectory certification", || {
            trajectory_battery(seed.wrapping_add(5), quick)
        }),
    ]
}
