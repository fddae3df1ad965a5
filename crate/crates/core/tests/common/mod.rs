#![allow(dead_code)]

use bilevel_bnc::lp::{solve_lp, LpModel, LpStatus};
use bilevel_bnc::model::MiblpInstance;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Tolerance on objective agreement: zero for pure integer instances with
/// integral data, the LP feasibility tolerance (relative) for mixed
/// instances with integral data, whose values come out of floating-point
/// LPs with a follower-optimality slack, and 1e-6 otherwise.
pub fn value_tolerance(inst: &MiblpInstance) -> Tolerance {
    let p = inst.classify();
    match (p.integer_data && p.integral_objective, p.pure_integer) {
        (true, true) => Tolerance::Exact,
        (true, false) => Tolerance::Relative(1e-7),
        _ => Tolerance::Absolute(1e-6),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Exact,
    Relative(f64),
    Absolute(f64),
}

impl Tolerance {
    pub fn admits(self, a: f64, b: f64) -> bool {
        match self {
            Tolerance::Exact => a == b,
            Tolerance::Relative(t) => (a - b).abs() <= t * (1.0 + a.abs()),
            Tolerance::Absolute(t) => (a - b).abs() <= t,
        }
    }
}

pub fn values_agree(a: Option<f64>, b: Option<f64>, tol: Tolerance) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => tol.admits(a, b),
        _ => false,
    }
}

pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize, integral: bool) -> LpModel {
    let draw = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| -> f64 {
        if integral {
            rng.gen_range(lo..=hi) as f64
        } else {
            rng.gen_range(lo as f64..hi as f64)
        }
    };
    let obj: Vec<f64> = (0..n).map(|_| draw(rng, -10, 10)).collect();
    let mut lp = LpModel::new(obj);
    for j in 0..n {
        lp.lower[j] = if rng.gen_bool(0.2) { f64::NEG_INFINITY } else { draw(rng, -5, 0) };
        lp.upper[j] = if rng.gen_bool(0.2) { f64::INFINITY } else { lp.lower[j].max(-5.0) + draw(rng, 1, 8) };
    }
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| draw(rng, -9, 9)).collect();
        let rhs = draw(rng, -30, 10);
        lp.push_row(row, rhs);
    }
    lp
}

/// A small bounded MILP: integer columns first, then up to two continuous.
pub fn random_milp(rng: &mut ChaCha8Rng) -> (LpModel, Vec<bool>) {
    let ni = rng.gen_range(1..=4);
    let nc = rng.gen_range(0..=2);
    let n = ni + nc;
    let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-9..=9) as f64).collect();
    let mut lp = LpModel::new(obj);
    for j in 0..n {
        lp.lower[j] = rng.gen_range(-2..=0) as f64;
        lp.upper[j] = lp.lower[j] + rng.gen_range(1..=4) as f64;
    }
    for _ in 0..rng.gen_range(1..=4) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-6..=6) as f64).collect();
        lp.push_row(row, rng.gen_range(-12..=3) as f64);
    }
    let integer = (0..n).map(|j| j < ni).collect();
    (lp, integer)
}

/// Exhaustive optimum: every integer assignment, with an LP over the
/// continuous columns. `None` when infeasible.
pub fn enumerate_milp(lp: &LpModel, integer: &[bool]) -> Option<f64> {
    let ints: Vec<usize> = (0..integer.len()).filter(|&j| integer[j]).collect();
    let mut best: Option<f64> = None;
    let mut point: Vec<f64> = ints.iter().map(|&j| lp.lower[j]).collect();
    loop {
        let mut fixed = lp.clone();
        for (k, &j) in ints.iter().enumerate() {
            fixed.lower[j] = point[k];
            fixed.upper[j] = point[k];
        }
        let s = solve_lp(&fixed, None).expect("lp");
        if s.status == LpStatus::Optimal && best.is_none_or(|b| s.objective < b) {
            best = Some(s.objective);
        }
        let mut k = 0;
        loop {
            if k == ints.len() {
                return best;
            }
            if point[k] < lp.upper[ints[k]] {
                point[k] += 1.0;
                break;
            }
            point[k] = lp.lower[ints[k]];
            k += 1;
        }
    }
}
