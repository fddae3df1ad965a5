//! Named instances and seeded random generators.
//!
//! Coefficient distributions: constraint matrices are uniform integers in
//! `[-50, 50]`, objectives uniform integers in `[-100, -1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::{build_interdiction, FollowerMilp, UNIT_COLUMN_NAME};
use crate::model::MiblpInstance;

/// An instance whose first-level column 0 is the fixed unit column.
fn with_unit(n1: usize, n2: usize, r1: usize, r2: usize) -> MiblpInstance {
    let mut inst = MiblpInstance::empty(n1 + 1, n2, r1 + 1, r2);
    inst.unit_column = Some(0);
    inst.lb_x[0] = 1.0;
    inst.ub_x[0] = 1.0;
    inst.x_names[0] = UNIT_COLUMN_NAME.to_string();
    for j in 1..=n1 {
        inst.x_names[j] = format!("x{}", j - 1);
    }
    inst
}

/// Moore and Bard's example:
///
/// ```text
/// min -x - 10y
/// y in argmin { y : -25x + 20y <= 30, x + 2y <= 10, 2x - y <= 15, 2x + 10y >= 15 }
/// x, y integer, 0 <= x <= 10
/// ```
///
/// Column 0 is the unit column, column 1 is `x`.
pub fn moore_bard() -> MiblpInstance {
    let mut inst = with_unit(1, 1, 1, 1);
    inst.name = "moore-bard".into();
    inst.c = vec![0.0, -1.0];
    inst.d1 = vec![-10.0];
    inst.d2 = vec![1.0];
    inst.ub_x[1] = 10.0;
    inst.y_names = vec!["y".into()];
    inst.x_names[1] = "x".into();
    // G2 y >= A2 (1, x)
    inst.push_second_level_row(vec![-30.0, -25.0], vec![-20.0]);
    inst.push_second_level_row(vec![-10.0, 1.0], vec![-2.0]);
    inst.push_second_level_row(vec![-15.0, 2.0], vec![1.0]);
    inst.push_second_level_row(vec![15.0, -2.0], vec![10.0]);
    inst.tighten_integer_bounds();
    inst
}

/// Two-item knapsack interdiction: the follower maximizes `3y1 + 2y2` with
/// `y1 + y2 <= 1`; the leader removes at most `budget` items.
pub fn interdiction_toy(budget: usize) -> MiblpInstance {
    let follower = FollowerMilp {
        profit: vec![3.0, 2.0],
        rows: vec![(vec![-1.0, -1.0], -1.0)],
        upper: vec![1.0, 1.0],
        integer: vec![true, true],
    };
    build_interdiction(&follower, &[(vec![-1.0, -1.0], -(budget as f64))]).expect("valid toy data")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    IblpDen,
    MiblpXu,
    Interdiction,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "iblp-den" => Ok(Profile::IblpDen),
            "miblp-xu" => Ok(Profile::MiblpXu),
            "interdiction" => Ok(Profile::Interdiction),
            _ => Err(format!("unknown profile '{s}' (iblp-den, miblp-xu, interdiction)")),
        }
    }
}

pub fn generate(profile: Profile, size: usize, seed: u64) -> Result<MiblpInstance, String> {
    if size < 2 {
        return Err(format!("size must be at least 2, got {size}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = match profile {
        Profile::MiblpXu => miblp_xu(&mut rng, size),
        Profile::IblpDen => iblp_den(&mut rng, size),
        Profile::Interdiction => knapsack_interdiction(&mut rng, size),
    };
    inst.name = format!("{}-{size}-{seed}", profile_name(profile));
    Ok(inst)
}

fn profile_name(p: Profile) -> &'static str {
    match p {
        Profile::IblpDen => "iblp-den",
        Profile::MiblpXu => "miblp-xu",
        Profile::Interdiction => "interdiction",
    }
}

fn coeff(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-50..=50) as f64
}

fn objective(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-100..=-1) as f64
}

/// Adds `a x + g y <= b` at the given level, with `b` drawn so the origin is
/// feasible.
fn push_le_row(inst: &mut MiblpInstance, rng: &mut ChaCha8Rng, second_level: bool, scale: usize) {
    let n1 = inst.n1;
    let mut a: Vec<f64> = (0..n1).map(|_| coeff(rng)).collect();
    a[0] = 0.0;
    let g: Vec<f64> = (0..inst.n2).map(|_| coeff(rng)).collect();
    let b = rng.gen_range(10 * scale..=50 * scale) as f64;
    if second_level {
        // -g y >= a x - b
        let mut a2 = a;
        a2[0] = -b;
        inst.push_second_level_row(a2, g.iter().map(|v| -v + 0.0).collect());
    } else {
        let mut a1: Vec<f64> = a.iter().map(|v| -v + 0.0).collect();
        a1[0] = 0.0;
        inst.push_first_level_row(a1, g.iter().map(|v| -v + 0.0).collect(), -b);
    }
}

fn miblp_xu(rng: &mut ChaCha8Rng, size: usize) -> MiblpInstance {
    let n = size;
    let continuous: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let r2 = continuous.iter().filter(|&&c| !c).count();
    let mut inst = with_unit(n, n, n, r2);
    for j in 1..=n {
        inst.ub_x[j] = 10.0;
        inst.c[j] = objective(rng);
    }
    for j in 0..n {
        inst.d1[j] = objective(rng);
        inst.d2[j] = objective(rng);
        inst.ub_y[j] = if j < r2 { 1500.0 } else { 100.0 };
    }
    let rows = ((0.4 * n as f64).round() as usize).max(1);
    for _ in 0..rows {
        push_le_row(&mut inst, rng, false, n);
    }
    for _ in 0..rows {
        push_le_row(&mut inst, rng, true, n);
    }
    inst
}

fn iblp_den(rng: &mut ChaCha8Rng, size: usize) -> MiblpInstance {
    let n = size;
    let mut inst = with_unit(n, n, n, n);
    for j in 1..=n {
        inst.ub_x[j] = 10.0;
        inst.c[j] = objective(rng);
    }
    for j in 0..n {
        inst.d1[j] = objective(rng);
        inst.d2[j] = objective(rng);
        inst.ub_y[j] = 10.0;
    }
    for _ in 0..20 {
        push_le_row(&mut inst, rng, true, n);
    }
    inst
}

fn knapsack_interdiction(rng: &mut ChaCha8Rng, size: usize) -> MiblpInstance {
    let n = size;
    let profit: Vec<f64> = (0..n).map(|_| -objective(rng)).collect();
    let weight: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=50) as f64).collect();
    let cost: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=50) as f64).collect();
    let cap = (weight.iter().sum::<f64>() / 2.0).floor();
    let budget = (cost.iter().sum::<f64>() / 2.0).floor();
    let follower = FollowerMilp {
        profit,
        rows: vec![(weight.iter().map(|w| -w).collect(), -cap)],
        upper: vec![1.0; n],
        integer: vec![true; n],
    };
    build_interdiction(&follower, &[(cost.iter().map(|c| -c).collect(), -budget)]).expect("generated data is consistent")
}

/// Small random instance for exhaustive cross-checks: at most five
/// integer leader columns (plus the unit column) with ranges of at most five
/// values, at most four follower columns (continuous ones in about half the instances), and
/// occasionally fractional coefficients.
pub fn small_random(seed: u64) -> MiblpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n1 = rng.gen_range(1..=5);
    let n2 = rng.gen_range(1..=4);
    let mixed = rng.gen_bool(0.5);
    let r2 = if mixed { rng.gen_range(0..n2) } else { n2 };
    let binary = rng.gen_bool(0.3);
    let fractional = rng.gen_bool(0.2);
    let mut inst = with_unit(n1, n2, n1, r2);
    inst.name = format!("small-{seed}");
    let num = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| -> f64 {
        let v = rng.gen_range(lo..=hi) as f64;
        if fractional && rng.gen_bool(0.3) {
            v + rng.gen_range(1..=3) as f64 / 4.0
        } else {
            v
        }
    };
    for j in 1..=n1 {
        inst.ub_x[j] = if binary { 1.0 } else { rng.gen_range(1..=4) as f64 };
        inst.c[j] = rng.gen_range(-6..=6) as f64;
    }
    for j in 0..n2 {
        inst.d1[j] = rng.gen_range(-6..=6) as f64;
        inst.d2[j] = rng.gen_range(-6..=6) as f64;
        inst.ub_y[j] = rng.gen_range(1..=4) as f64;
    }
    let m1 = rng.gen_range(0..=2);
    let m2 = rng.gen_range(1..=4);
    for _ in 0..m1 {
        let a: Vec<f64> = std::iter::once(0.0).chain((0..n1).map(|_| num(&mut rng, -4, 4))).collect();
        let g: Vec<f64> = (0..n2).map(|_| num(&mut rng, -4, 4)).collect();
        let b = num(&mut rng, -8, 2);
        inst.push_first_level_row(a, g, b);
    }
    for _ in 0..m2 {
        // g y >= a x + const
        let mut a: Vec<f64> = std::iter::once(0.0).chain((0..n1).map(|_| num(&mut rng, -4, 4))).collect();
        a[0] = num(&mut rng, -8, 2);
        let g: Vec<f64> = (0..n2).map(|_| num(&mut rng, -4, 4)).collect();
        inst.push_second_level_row(a, g);
    }
    inst
}
