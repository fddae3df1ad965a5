//! Linear programming: dense bounded-variable primal/dual simplex.
//!
//! Every constraint row is stored in `a x >= b` form. Column bounds may be
//! infinite on either side.

mod simplex;

pub use simplex::{nonbasic_rays, solve_lp, NonbasicRay};

use thiserror::Error;

/// Primal feasibility tolerance for rows and bounds.
pub const FEAS_TOL: f64 = 1e-7;
/// Optimality (reduced cost / objective comparison) tolerance.
pub const OPT_TOL: f64 = 1e-7;
/// Integrality tolerance used by the MILP and bilevel layers.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid bounds on column {col}: [{lo}, {hi}]")]
    InvalidBounds { col: usize, lo: f64, hi: f64 },
    #[error("simplex iteration limit ({0}) exceeded")]
    IterationLimit(usize),
}

/// `min c x  s.t.  rows[i] . x >= rhs[i],  lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpModel {
    /// An empty model over `n` columns with bounds `[0, +inf)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpModel {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_cols());
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    /// Returns the model extended by `rows` (each `(coefficients, rhs)` in `>=` form).
    /// A basis of the original model stays usable as a warm start via [`Basis::extend_rows`].
    pub fn add_rows(&self, rows: &[(Vec<f64>, f64)]) -> Result<LpModel, LpError> {
        let mut out = self.clone();
        for (coeffs, rhs) in rows {
            if coeffs.len() != self.num_cols() {
                return Err(LpError::Dimension(format!(
                    "row has {} coefficients, model has {} columns",
                    coeffs.len(),
                    self.num_cols()
                )));
            }
            out.push_row(coeffs.clone(), *rhs);
        }
        Ok(out)
    }

    /// Returns the model with column `col` restricted to `[lo, hi]` intersected
    /// with its current bounds.
    pub fn fix_bounds(&self, col: usize, lo: f64, hi: f64) -> Result<LpModel, LpError> {
        if col >= self.num_cols() {
            return Err(LpError::Dimension(format!("column {col} out of range")));
        }
        if lo > hi {
            return Err(LpError::InvalidBounds { col, lo, hi });
        }
        let mut out = self.clone();
        out.lower[col] = out.lower[col].max(lo);
        out.upper[col] = out.upper[col].min(hi);
        if out.lower[col] > out.upper[col] {
            return Err(LpError::InvalidBounds {
                col,
                lo: out.lower[col],
                hi: out.upper[col],
            });
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_cols();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension("bound vectors".into()));
        }
        if self.rhs.len() != self.rows.len() {
            return Err(LpError::Dimension("rhs length".into()));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(LpError::Dimension(format!("row {i} length")));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo.is_nan() || hi.is_nan() {
                return Err(LpError::InvalidBounds { col: j, lo, hi });
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.rows.iter().zip(&self.rhs) {
            worst = worst.max(b - dot(row, x));
        }
        for j in 0..self.num_cols() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Basis descriptor over columns followed by row logicals (`n + m` entries).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

impl Basis {
    /// Extends a basis after `extra` rows were appended: the new row logicals are basic.
    pub fn extend_rows(&self, extra: usize) -> Basis {
        let mut status = self.status.clone();
        status.extend(std::iter::repeat_n(VarStatus::Basic, extra));
        Basis { status }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Column values (meaningful when optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    pub basis: Option<Basis>,
    /// Row multipliers `y` (nonnegative at optimality for `>=` rows).
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    /// Unbounded: a primal ray over columns. Infeasible: row multipliers of the
    /// final infeasibility proof.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Objective of the dual `max b'y + l'd+ - u'd-` built from the reported
    /// multipliers; equals the primal objective at a proven optimum.
    pub fn dual_objective(&self, model: &LpModel) -> f64 {
        let mut val = dot(&self.row_duals, &model.rhs);
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            if d > 0.0 {
                val += d * model.lower[j];
            } else if d < 0.0 {
                val += d * model.upper[j];
            }
        }
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fix_bounds_tightens_only() {
        let mut m = LpModel::new(vec![1.0, 1.0]);
        m.upper = vec![5.0, 5.0];
        let t = m.fix_bounds(0, -3.0, 2.0).unwrap();
        assert_eq!((t.lower[0], t.upper[0]), (0.0, 2.0));
        assert!(m.fix_bounds(0, 3.0, 2.0).is_err());
        assert!(m.fix_bounds(0, 6.0, 9.0).is_err());
    }

    #[test]
    fn add_rows_checks_width() {
        let m = LpModel::new(vec![1.0, 1.0]);
        assert!(m.add_rows(&[(vec![1.0], 0.0)]).is_err());
        let m2 = m.add_rows(&[(vec![1.0, 0.0], 1.0)]).unwrap();
        assert_eq!(m2.num_rows(), 1);
    }
}
