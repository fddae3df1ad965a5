mod common;

use bilevel_bnc::lp::LpModel;
use bilevel_bnc::milp::{solve_milp, MilpLimits, MilpModel, MilpStatus};
use common::{enumerate_milp, random_milp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Moore-Bard follower at `x`: min y s.t. the four rows with x substituted.
fn moore_bard_follower(x: f64) -> MilpModel {
    let mut lp = LpModel::new(vec![1.0]);
    lp.push_row(vec![-20.0], -30.0 - 25.0 * x);
    lp.push_row(vec![-2.0], -10.0 + x);
    lp.push_row(vec![1.0], 2.0 * x - 15.0);
    lp.push_row(vec![10.0], 15.0 - 2.0 * x);
    MilpModel::new(lp, vec![true])
}

#[test]
fn moore_bard_follower_values() {
    let s = solve_milp(&moore_bard_follower(2.0), &MilpLimits::default()).unwrap();
    assert_eq!((s.status, s.objective, s.x.unwrap()), (MilpStatus::Optimal, 2.0, vec![2.0]));
    let s = solve_milp(&moore_bard_follower(0.0), &MilpLimits::default()).unwrap();
    assert_eq!(s.status, MilpStatus::Infeasible);
}

#[test]
fn node_limit_reports_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10;
    let mut lp = LpModel::new((0..n).map(|_| -(rng.gen_range(10..=40) as f64)).collect());
    lp.upper = vec![1.0; n];
    lp.push_row((0..n).map(|_| -(rng.gen_range(10..=40) as f64)).collect(), -97.0);
    let limits = MilpLimits { max_nodes: Some(1), deadline: None };
    let s = solve_milp(&MilpModel::new(lp, vec![true; n]), &limits).unwrap();
    assert!(matches!(s.status, MilpStatus::Limit | MilpStatus::Optimal));
}

#[test]
fn unbounded_relaxation_is_an_error() {
    let lp = LpModel::new(vec![-1.0]);
    assert!(solve_milp(&MilpModel::new(lp, vec![false]), &MilpLimits::default()).is_err());
}

#[test]
fn matches_enumeration_on_random_milps() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..300 {
        let (lp, integer) = random_milp(&mut rng);
        let want = enumerate_milp(&lp, &integer);
        let s = solve_milp(&MilpModel::new(lp, integer.clone()), &MilpLimits::default()).unwrap();
        match want {
            None => assert_eq!(s.status, MilpStatus::Infeasible, "case {k}"),
            Some(v) => {
                assert_eq!(s.status, MilpStatus::Optimal, "case {k}");
                assert!((s.objective - v).abs() <= 1e-9 * (1.0 + v.abs()), "case {k}: {} vs {v}", s.objective);
                let x = s.x.unwrap();
                assert!(integer.iter().zip(&x).all(|(&i, v)| !i || v.fract() == 0.0));
            }
        }
    }
}

fn pure_integer_model(seed: u64, n: usize) -> (LpModel, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lp = LpModel::new((0..n).map(|_| rng.gen_range(-7..=7) as f64).collect());
    for j in 0..n {
        lp.lower[j] = rng.gen_range(-2..=0) as f64;
        lp.upper[j] = lp.lower[j] + rng.gen_range(1..=3) as f64;
    }
    for _ in 0..rng.gen_range(1..=4) {
        lp.push_row((0..n).map(|_| rng.gen_range(-5..=5) as f64).collect(), rng.gen_range(-10..=2) as f64);
    }
    (lp, vec![true; n])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn equals_enumeration_exactly(seed in any::<u64>(), n in 1usize..=6) {
        let (lp, integer) = pure_integer_model(seed, n);
        let want = enumerate_milp(&lp, &integer);
        let s = solve_milp(&MilpModel::new(lp, integer), &MilpLimits::default()).unwrap();
        match want {
            None => prop_assert_eq!(s.status, MilpStatus::Infeasible),
            Some(v) => prop_assert_eq!((s.status, s.objective), (MilpStatus::Optimal, v)),
        }
    }

    #[test]
    fn adding_a_row_never_lowers_the_minimum(seed in any::<u64>(), row in proptest::collection::vec(-5i32..=5, 4), rhs in -8i32..=2) {
        let (lp, integer) = pure_integer_model(seed, 4);
        let before = solve_milp(&MilpModel::new(lp.clone(), integer.clone()), &MilpLimits::default()).unwrap();
        let tighter = lp.add_rows(&[(row.iter().map(|&v| v as f64).collect(), rhs as f64)]).unwrap();
        let after = solve_milp(&MilpModel::new(tighter, integer), &MilpLimits::default()).unwrap();
        if after.status == MilpStatus::Optimal {
            prop_assert_eq!(before.status, MilpStatus::Optimal);
            prop_assert!(after.objective >= before.objective);
        }
    }

    #[test]
    fn cutoff_below_optimum_is_exceeded(seed in any::<u64>()) {
        let (lp, integer) = pure_integer_model(seed, 4);
        let m = MilpModel::new(lp, integer);
        let s = solve_milp(&m, &MilpLimits::default()).unwrap();
        if s.status == MilpStatus::Optimal {
            let cut = solve_milp(&m.clone().with_cutoff(s.objective - 1e-6), &MilpLimits::default()).unwrap();
            prop_assert_eq!(cut.status, MilpStatus::CutoffExceeded);
        }
    }
}
