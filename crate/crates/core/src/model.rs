//! Problem data for mixed integer bilevel linear programs.
//!
//! ```text
//! min  c x + d1 y
//! s.t. A1 x + G1 y >= b1
//!      x integer on the first r1 columns, lb_x <= x <= ub_x
//!      y in argmin { d2 y : G2 y >= A2 x, y integer on the first r2 columns, lb_y <= y <= ub_y }
//! ```
//!
//! The follower problem has no constant right-hand side. Constants are
//! carried by a first-level column fixed to 1 (see [`MiblpInstance::unit_column`]).

use std::fmt;

use crate::lp::{dot, solve_lp, LpModel, LpStatus, FEAS_TOL, INT_TOL};

const DATA_INT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MiblpInstance {
    pub name: String,
    pub n1: usize,
    pub n2: usize,
    pub r1: usize,
    pub r2: usize,
    pub c: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub a1: Vec<Vec<f64>>,
    pub g1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub a2: Vec<Vec<f64>>,
    pub g2: Vec<Vec<f64>>,
    pub lb_x: Vec<f64>,
    pub ub_x: Vec<f64>,
    pub lb_y: Vec<f64>,
    pub ub_y: Vec<f64>,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    /// First-level column fixed to 1 whose second-level coefficients are the
    /// negated right-hand-side constants of the follower rows.
    pub unit_column: Option<usize>,
}

impl MiblpInstance {
    /// An instance with no rows, zero objectives and bounds `[0, +inf)`.
    pub fn empty(n1: usize, n2: usize, r1: usize, r2: usize) -> Self {
        MiblpInstance {
            name: String::new(),
            n1,
            n2,
            r1,
            r2,
            c: vec![0.0; n1],
            d1: vec![0.0; n2],
            d2: vec![0.0; n2],
            a1: Vec::new(),
            g1: Vec::new(),
            b1: Vec::new(),
            a2: Vec::new(),
            g2: Vec::new(),
            lb_x: vec![0.0; n1],
            ub_x: vec![f64::INFINITY; n1],
            lb_y: vec![0.0; n2],
            ub_y: vec![f64::INFINITY; n2],
            x_names: (0..n1).map(|i| format!("x{i}")).collect(),
            y_names: (0..n2).map(|i| format!("y{i}")).collect(),
            unit_column: None,
        }
    }

    pub fn m1(&self) -> usize {
        self.b1.len()
    }

    pub fn m2(&self) -> usize {
        self.g2.len()
    }

    pub fn num_cols(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn push_first_level_row(&mut self, a: Vec<f64>, g: Vec<f64>, b: f64) {
        self.a1.push(a);
        self.g1.push(g);
        self.b1.push(b);
    }

    /// Adds `G2 y >= A2 x`.
    pub fn push_second_level_row(&mut self, a: Vec<f64>, g: Vec<f64>) {
        self.a2.push(a);
        self.g2.push(g);
    }

    /// Integrality over the stacked `(x, y)` columns.
    pub fn integer_mask(&self) -> Vec<bool> {
        (0..self.n1)
            .map(|i| i < self.r1)
            .chain((0..self.n2).map(|j| j < self.r2))
            .collect()
    }

    pub fn leader_objective(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.c, x) + dot(&self.d1, y)
    }

    pub fn follower_objective(&self, y: &[f64]) -> f64 {
        dot(&self.d2, y)
    }

    /// `A2 x`, the follower's right-hand side.
    pub fn second_level_rhs(&self, x: &[f64]) -> Vec<f64> {
        self.a2.iter().map(|row| dot(row, x)).collect()
    }

    /// The relaxation over `(x, y)`: first-level rows, then second-level rows
    /// written as `-A2 x + G2 y >= 0`, original bounds.
    pub fn relaxation(&self) -> LpModel {
        let mut obj = self.c.clone();
        obj.extend_from_slice(&self.d1);
        let mut lp = LpModel::new(obj);
        for i in 0..self.m1() {
            let mut row = self.a1[i].clone();
            row.extend_from_slice(&self.g1[i]);
            lp.push_row(row, self.b1[i]);
        }
        for i in 0..self.m2() {
            let mut row: Vec<f64> = self.a2[i].iter().map(|v| -v).collect();
            row.extend_from_slice(&self.g2[i]);
            lp.push_row(row, 0.0);
        }
        lp.lower = self.lb_x.iter().chain(&self.lb_y).copied().collect();
        lp.upper = self.ub_x.iter().chain(&self.ub_y).copied().collect();
        lp
    }

    /// The follower problem for a fixed `x`: `min d2 y` over `G2 y >= A2 x`
    /// and the follower's own bounds.
    pub fn follower_lp(&self, x: &[f64]) -> LpModel {
        let mut lp = LpModel::new(self.d2.clone());
        for (row, rhs) in self.g2.iter().zip(self.second_level_rhs(x)) {
            lp.push_row(row.clone(), rhs);
        }
        lp.lower.clone_from(&self.lb_y);
        lp.upper.clone_from(&self.ub_y);
        lp
    }

    pub fn follower_integer_mask(&self) -> Vec<bool> {
        (0..self.n2).map(|j| j < self.r2).collect()
    }

    pub fn x_integral(&self, x: &[f64]) -> bool {
        x[..self.r1].iter().all(|v| (v - v.round()).abs() <= INT_TOL)
    }

    pub fn y_integral(&self, y: &[f64]) -> bool {
        y[..self.r2].iter().all(|v| (v - v.round()).abs() <= INT_TOL)
    }

    /// Whether `(x, y)` lies in the relaxation polyhedron (all rows and bounds).
    pub fn in_relaxation(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        let xy: Vec<f64> = x.iter().chain(y).copied().collect();
        self.relaxation().max_violation(&xy) <= tol
    }

    /// Whether `(x, y)` satisfies the first-level rows.
    pub fn first_level_feasible(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        (0..self.m1()).all(|i| dot(&self.a1[i], x) + dot(&self.g1[i], y) >= self.b1[i] - tol)
    }

    /// Linking columns: first-level columns with a nonzero entry in `A2`.
    pub fn linking_set(&self) -> Vec<usize> {
        (0..self.n1)
            .filter(|&j| self.a2.iter().any(|row| row[j] != 0.0))
            .collect()
    }

    /// Replaces infinite bounds of integer columns by bounds implied by the
    /// rows. First-level columns use the whole relaxation; follower columns
    /// only the follower rows and the first-level bounds, since the follower
    /// does not see first-level rows.
    pub fn tighten_integer_bounds(&mut self) {
        let full = self.relaxation();
        let mut follower_only = full.clone();
        let m1 = self.m1();
        follower_only.rows.drain(..m1);
        follower_only.rhs.drain(..m1);
        for col in 0..self.num_cols() {
            let integer = if col < self.n1 { col < self.r1 } else { col - self.n1 < self.r2 };
            if !integer {
                continue;
            }
            let base = if col < self.n1 { &full } else { &follower_only };
            for sense in [1.0, -1.0] {
                let (cur_lo, cur_hi) = if col < self.n1 {
                    (self.lb_x[col], self.ub_x[col])
                } else {
                    (self.lb_y[col - self.n1], self.ub_y[col - self.n1])
                };
                let finite = if sense > 0.0 { cur_lo.is_finite() } else { cur_hi.is_finite() };
                if finite {
                    continue;
                }
                let mut lp = base.clone();
                lp.objective = vec![0.0; lp.num_cols()];
                lp.objective[col] = sense;
                let Ok(sol) = solve_lp(&lp, None) else { continue };
                if sol.status != LpStatus::Optimal {
                    continue;
                }
                let v = sol.objective * sense;
                let target = if col < self.n1 {
                    if sense > 0.0 { &mut self.lb_x[col] } else { &mut self.ub_x[col] }
                } else if sense > 0.0 {
                    &mut self.lb_y[col - self.n1]
                } else {
                    &mut self.ub_y[col - self.n1]
                };
                *target = if sense > 0.0 { (v - INT_TOL).ceil() } else { (v + INT_TOL).floor() };
            }
        }
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let dim = |out: &mut Vec<Diagnostic>, what: &str, got: usize, want: usize| {
            if got != want {
                out.push(Diagnostic::Dimension(format!("{what}: expected {want}, found {got}")));
            }
        };
        dim(&mut out, "c", self.c.len(), self.n1);
        dim(&mut out, "d1", self.d1.len(), self.n2);
        dim(&mut out, "d2", self.d2.len(), self.n2);
        dim(&mut out, "lb_x", self.lb_x.len(), self.n1);
        dim(&mut out, "ub_x", self.ub_x.len(), self.n1);
        dim(&mut out, "lb_y", self.lb_y.len(), self.n2);
        dim(&mut out, "ub_y", self.ub_y.len(), self.n2);
        dim(&mut out, "G1 rows", self.g1.len(), self.m1());
        dim(&mut out, "A1 rows", self.a1.len(), self.m1());
        dim(&mut out, "A2 rows", self.a2.len(), self.m2());
        for (i, r) in self.a1.iter().enumerate() {
            dim(&mut out, &format!("A1 row {i}"), r.len(), self.n1);
        }
        for (i, r) in self.g1.iter().enumerate() {
            dim(&mut out, &format!("G1 row {i}"), r.len(), self.n2);
        }
        for (i, r) in self.a2.iter().enumerate() {
            dim(&mut out, &format!("A2 row {i}"), r.len(), self.n1);
        }
        for (i, r) in self.g2.iter().enumerate() {
            dim(&mut out, &format!("G2 row {i}"), r.len(), self.n2);
        }
        if self.r1 > self.n1 || self.r2 > self.n2 {
            out.push(Diagnostic::Dimension("integer count exceeds variable count".into()));
        }
        if !out.is_empty() {
            return out;
        }

        for j in self.linking_set() {
            if j >= self.r1 {
                out.push(Diagnostic::LinkingNotInteger(j));
            } else if !self.lb_x[j].is_finite() || !self.ub_x[j].is_finite() {
                out.push(Diagnostic::LinkingUnbounded(j));
            }
        }
        for j in 0..self.n1 {
            if self.lb_x[j] > self.ub_x[j] {
                out.push(Diagnostic::EmptyBounds(format!("x{j}")));
            }
        }
        for j in 0..self.n2 {
            if self.lb_y[j] > self.ub_y[j] {
                out.push(Diagnostic::EmptyBounds(format!("y{j}")));
            }
        }
        for j in 0..self.r2 {
            if !self.lb_y[j].is_finite() || !self.ub_y[j].is_finite() {
                out.push(Diagnostic::IntegerUnbounded(format!("y{j}")));
            }
        }
        for j in 0..self.r1 {
            if (!self.lb_x[j].is_finite() || !self.ub_x[j].is_finite())
                && !self.linking_set().contains(&j) {
                    out.push(Diagnostic::IntegerUnbounded(format!("x{j}")));
                }
        }
        if self.has_follower_ray() {
            out.push(Diagnostic::SecondLevelRay);
        }
        out
    }

    /// Looks for a recession direction `r` of the follower region with
    /// `G2 r >= 0` and `d2 r < 0`.
    fn has_follower_ray(&self) -> bool {
        if self.n2 == 0 {
            return false;
        }
        let mut lp = LpModel::new(self.d2.clone());
        for row in &self.g2 {
            lp.push_row(row.clone(), 0.0);
        }
        for j in 0..self.n2 {
            lp.lower[j] = if self.lb_y[j].is_finite() { 0.0 } else { -1.0 };
            lp.upper[j] = if self.ub_y[j].is_finite() { 0.0 } else { 1.0 };
        }
        match solve_lp(&lp, None) {
            Ok(sol) => sol.is_optimal() && sol.objective < -FEAS_TOL,
            Err(_) => false,
        }
    }

    pub fn classify(&self) -> InstanceProperties {
        let linking_set = self.linking_set();
        let all_linking_binary = linking_set.iter().all(|&j| {
            Some(j) == self.unit_column || (j < self.r1 && self.lb_x[j] >= 0.0 && self.ub_x[j] <= 1.0)
        });
        let is_int = |v: f64| (v - v.round()).abs() <= DATA_INT_TOL;
        let rows_int = |m: &[Vec<f64>]| m.iter().flatten().all(|&v| is_int(v));
        let integer_data = rows_int(&self.a1)
            && rows_int(&self.g1)
            && rows_int(&self.a2)
            && rows_int(&self.g2)
            && self.b1.iter().all(|&v| is_int(v));
        let integral_objective = self.c.iter().chain(&self.d1).all(|&v| is_int(v));
        let zero_sum = self.d1.iter().zip(&self.d2).all(|(a, b)| (a + b).abs() <= DATA_INT_TOL);
        InstanceProperties {
            pure_integer: self.r1 == self.n1 && self.r2 == self.n2,
            integer_data,
            integral_objective,
            zero_sum,
            is_interdiction: zero_sum && self.interdiction_structure(),
            all_linking_binary,
            linking_set,
        }
    }

    /// Every follower column is switched off by exactly one binary leader
    /// column through a row `y_i <= u_i (1 - x_k)`.
    fn interdiction_structure(&self) -> bool {
        let Some(unit) = self.unit_column else { return false };
        let leaders: Vec<usize> = (0..self.n1).filter(|&j| j != unit).collect();
        if leaders.len() != self.n2 || self.n2 == 0 {
            return false;
        }
        if leaders.iter().any(|&k| k >= self.r1 || self.lb_x[k] != 0.0 || self.ub_x[k] != 1.0) {
            return false;
        }
        let mut used = vec![false; self.n1];
        for i in 0..self.n2 {
            let found = (0..self.m2()).find_map(|r| {
                let g = &self.g2[r];
                if g[i] != -1.0 || g.iter().enumerate().any(|(j, &v)| j != i && v != 0.0) {
                    return None;
                }
                let a = &self.a2[r];
                let u = -a[unit];
                if u <= 0.0 {
                    return None;
                }
                let nz: Vec<usize> = leaders.iter().copied().filter(|&k| a[k] != 0.0).collect();
                (nz.len() == 1 && a[nz[0]] == u && !used[nz[0]]).then_some(nz[0])
            });
            match found {
                Some(k) => used[k] = true,
                None => return false,
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceProperties {
    pub linking_set: Vec<usize>,
    pub all_linking_binary: bool,
    pub pure_integer: bool,
    /// All constraint coefficients and right-hand sides are integers.
    pub integer_data: bool,
    pub integral_objective: bool,
    pub zero_sum: bool,
    pub is_interdiction: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    Dimension(String),
    LinkingNotInteger(usize),
    LinkingUnbounded(usize),
    IntegerUnbounded(String),
    EmptyBounds(String),
    SecondLevelRay,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Dimension(s) => write!(f, "dimension mismatch: {s}"),
            Diagnostic::LinkingNotInteger(j) => write!(f, "linking variable not integer (x{j})"),
            Diagnostic::LinkingUnbounded(j) => write!(f, "linking variable x{j} has an infinite bound"),
            Diagnostic::IntegerUnbounded(v) => write!(f, "integer variable {v} has an infinite bound"),
            Diagnostic::EmptyBounds(v) => write!(f, "variable {v} has lower bound above upper bound"),
            Diagnostic::SecondLevelRay => write!(f, "second-level unbounded ray exists"),
        }
    }
}
