mod common;

use bilevel_bnc::lp::{solve_lp, Basis, LpModel, LpStatus};
use common::random_lp;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn moore_bard() -> LpModel {
    let mut m = LpModel::new(vec![-1.0, -10.0]);
    m.push_row(vec![25.0, -20.0], -30.0);
    m.push_row(vec![-1.0, -2.0], -10.0);
    m.push_row(vec![-2.0, 1.0], -15.0);
    m.push_row(vec![2.0, 10.0], 15.0);
    m
}

/// Minimum over all vertices formed by intersecting `n` active constraints
/// (rows or finite bounds). `None` if no feasible vertex exists.
fn vertex_enumeration(m: &LpModel) -> Option<(f64, Vec<f64>)> {
    let n = m.num_cols();
    let mut planes: Vec<(Vec<f64>, f64)> = m.rows.iter().cloned().zip(m.rhs.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if m.lower[j].is_finite() {
            planes.push((e.clone(), m.lower[j]));
        }
        if m.upper[j].is_finite() {
            planes.push((e, m.upper[j]));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    if planes.len() < n {
        return None;
    }
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if m.max_violation(&x) <= 1e-9 {
                let v = m.objective_value(&x);
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, x));
                }
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < planes.len() - (n - k) {
                idx[k] += 1;
                for t in k + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[test]
fn moore_bard_relaxation_matches_vertex_enumeration() {
    let m = moore_bard();
    let (v, x) = vertex_enumeration(&m).unwrap();
    let s = solve_lp(&m, None).unwrap();
    assert!((s.objective - v).abs() < 1e-9);
    assert!((v + 42.0).abs() < 1e-12);
    assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 4.0).abs() < 1e-12);
}

#[test]
fn trivial_rows() {
    let m = moore_bard();
    let base = solve_lp(&m, None).unwrap();
    let redundant = solve_lp(&m.add_rows(&[(vec![0.0, 0.0], -1.0)]).unwrap(), None).unwrap();
    assert_eq!(redundant.objective, base.objective);
    let infeasible = solve_lp(&m.add_rows(&[(vec![0.0, 0.0], 1.0)]).unwrap(), None).unwrap();
    assert_eq!(infeasible.status, LpStatus::Infeasible);
    assert!(m.fix_bounds(0, 3.0, 2.0).is_err());
}

#[test]
fn simple_bounded_and_unbounded() {
    let mut m = LpModel::new(vec![1.0]);
    m.lower[0] = 3.0;
    m.upper[0] = 5.0;
    assert_eq!(solve_lp(&m, None).unwrap().x, vec![3.0]);
    let m = LpModel::new(vec![-1.0]);
    assert_eq!(solve_lp(&m, None).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn bound_tightening_on_moore_bard() {
    let m = moore_bard();
    for (col, lo, hi) in [(0usize, 3.0, 10.0), (0, 0.0, 1.0), (1, 0.0, 3.0)] {
        let t = m.fix_bounds(col, lo, hi).unwrap();
        let s = solve_lp(&t, None).unwrap();
        let (v, _) = vertex_enumeration(&t).unwrap();
        assert!((s.objective - v).abs() < 1e-9, "{col} [{lo},{hi}]: {} vs {v}", s.objective);
    }
}

#[test]
fn generalized_row_then_resolve_matches_cold() {
    let m = moore_bard();
    let base = solve_lp(&m, None).unwrap();
    let cut = m.add_rows(&[(vec![-1.0, 0.0], -1.0)]).unwrap();
    let warm = solve_lp(&cut, Some(&base.basis.unwrap().extend_rows(1))).unwrap();
    let cold = solve_lp(&cut, None).unwrap();
    let (v, _) = vertex_enumeration(&cut).unwrap();
    assert!((warm.objective - cold.objective).abs() < 1e-9);
    assert!((warm.objective - v).abs() < 1e-9);
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..400 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(0..=5);
        let mut lp = random_lp(&mut rng, n, m, true);
        for j in 0..n {
            // keep the region bounded so vertices decide the optimum
            if !lp.lower[j].is_finite() {
                lp.lower[j] = -6.0;
            }
            if !lp.upper[j].is_finite() {
                lp.upper[j] = 6.0;
            }
        }
        let s = solve_lp(&lp, None).unwrap();
        match vertex_enumeration(&lp) {
            Some((v, _)) => {
                assert_eq!(s.status, LpStatus::Optimal);
                assert!((s.objective - v).abs() < 1e-7, "{lp:?}: {} vs {v}", s.objective);
                checked += 1;
            }
            None => assert_eq!(s.status, LpStatus::Infeasible, "{lp:?}"),
        }
    }
    assert!(checked > 100);
}

#[test]
fn duality_gap_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut optimal = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(1..=12);
        let integral = rng.gen_bool(0.5);
        let lp = random_lp(&mut rng, n, m, integral);
        let s = solve_lp(&lp, None).unwrap();
        if s.status == LpStatus::Optimal {
            optimal += 1;
            let gap = (s.objective - s.dual_objective(&lp)).abs();
            assert!(gap <= 1e-7, "gap {gap}");
            assert!(lp.max_violation(&s.x) <= 1e-7);
            assert!(s.row_duals.iter().all(|&y| y >= -1e-7));
        }
    }
    assert!(optimal > 300, "only {optimal} optimal");
}

#[test]
fn warm_and_cold_agree_on_bound_change_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(1..=8);
        let mut lp = random_lp(&mut rng, n, m, true);
        for j in 0..n {
            lp.lower[j] = lp.lower[j].max(-10.0);
            lp.upper[j] = lp.upper[j].min(10.0);
        }
        let mut basis: Option<Basis> = None;
        for _ in 0..4 {
            let cold = solve_lp(&lp, None).unwrap();
            let warm = solve_lp(&lp, basis.as_ref()).unwrap();
            assert_eq!(cold.status, warm.status);
            if cold.status == LpStatus::Optimal {
                assert!((cold.objective - warm.objective).abs() <= 1e-7 * (1.0 + cold.objective.abs()));
            }
            if warm.basis.is_some() {
                basis = warm.basis.clone();
            }
            let j = rng.gen_range(0..n);
            let mid = if warm.is_optimal() { warm.x[j] } else { (lp.lower[j] + lp.upper[j]) / 2.0 };
            let (lo, hi) = if rng.gen_bool(0.5) {
                (lp.lower[j], mid.floor().max(lp.lower[j]))
            } else {
                (mid.ceil().min(lp.upper[j]), lp.upper[j])
            };
            lp = lp.fix_bounds(j, lo, hi).unwrap();
            if rng.gen_bool(0.3) {
                let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
                lp = lp.add_rows(&[(row, rng.gen_range(-20..=0) as f64)]).unwrap();
                basis = basis.map(|b| b.extend_rows(1));
            }
        }
    }
}

proptest! {
    #[test]
    fn optimum_bounds_every_feasible_point(seed in 0u64..5000, samples in proptest::collection::vec(proptest::collection::vec(-6.0f64..6.0, 4), 20)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lp = random_lp(&mut rng, 4, 4, false);
        for j in 0..4 {
            lp.lower[j] = lp.lower[j].max(-6.0);
            lp.upper[j] = lp.upper[j].min(6.0);
        }
        let s = solve_lp(&lp, None).unwrap();
        for p in samples {
            if lp.max_violation(&p) <= 0.0 {
                prop_assert!(s.is_optimal());
                prop_assert!(lp.objective_value(&p) >= s.objective - 1e-7);
            }
        }
    }
}
