//! Valid inequalities that remove bilevel infeasible relaxation solutions.
//!
//! All cuts are `coeffs . (x, y) >= rhs` over the stacked columns. They are
//! valid for every bilevel feasible point whose objective is strictly below
//! the incumbent value at generation time; local cuts additionally only for
//! the subtree where they were generated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{dot, nonbasic_rays, Basis, LpModel};
use crate::model::MiblpInstance;
use crate::oracle::{Oracle, OracleError, Region};

/// A point is on a row when its slack is within this.
pub const BINDING_TOL: f64 = 1e-6;
/// Minimum violation of the generating point.
pub const MIN_VIOLATION: f64 = 1e-6;
const STEP_TOL: f64 = 1e-9;
const COEFF_ZERO: f64 = 1e-12;
const DATA_INT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutClass {
    IntegerNoGood,
    GeneralizedNoGood,
    HypercubeIc,
}

impl CutClass {
    pub const ALL: [CutClass; 3] = [CutClass::IntegerNoGood, CutClass::GeneralizedNoGood, CutClass::HypercubeIc];

    pub fn name(self) -> &'static str {
        match self {
            CutClass::IntegerNoGood => "integer-no-good",
            CutClass::GeneralizedNoGood => "generalized-no-good",
            CutClass::HypercubeIc => "hypercube-ic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub class: CutClass,
    pub node: usize,
    /// Valid only in the subtree of `node`.
    pub local: bool,
}

impl Cut {
    /// `rhs - coeffs . z`; positive when `z` violates the cut.
    pub fn violation(&self, z: &[f64]) -> f64 {
        self.rhs - dot(&self.coeffs, z)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutRefusal {
    #[error("instance is not pure integer with integer data")]
    NotPureInteger,
    #[error("point is not integral")]
    FractionalPoint,
    #[error("a binding row has fractional data")]
    FractionalRow,
    #[error("binding rows do not determine the point")]
    RankDeficient,
    #[error("linking column {0} is not binary")]
    NotBinaryLinking(usize),
    #[error("linking values are not integral")]
    FractionalLinking,
    #[error("basis is singular or has a free nonbasic")]
    BadBasis,
    #[error("a ray leaves the box after a near-zero step")]
    Degenerate,
    #[error("every ray stays inside the box")]
    ConeInsideBox,
    #[error("generating point violates the cut by only {0:e}")]
    NotViolated(f64),
}

fn is_int(v: f64) -> bool {
    (v - v.round()).abs() <= DATA_INT_TOL
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())) else { break };
        if m[p][c].abs() < 1e-9 {
            continue;
        }
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c] / m[r][c];
                if f != 0.0 {
                    for k in c..cols {
                        m[i][k] -= f * m[r][k];
                    }
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Sums the rows and bounds of `lp` that are binding at `z` and raises the
/// right-hand side by one. Any other integral point of the node relaxation
/// slackens one of these rows by at least one, so only `z` is removed.
/// The unit column (if any) is folded into the right-hand side.
pub fn integer_no_good(
    inst: &MiblpInstance,
    lp: &LpModel,
    z: &[f64],
    node: usize,
) -> Result<Cut, CutRefusal> {
    let props = inst.classify();
    if !(props.pure_integer && props.integer_data) {
        return Err(CutRefusal::NotPureInteger);
    }
    if z.iter().any(|&v| (v - v.round()).abs() > crate::lp::INT_TOL) {
        return Err(CutRefusal::FractionalPoint);
    }
    let n = lp.num_cols();
    let unit = inst.unit_column;
    let mut binding: Vec<(Vec<f64>, f64)> = Vec::new();
    for (row, &b) in lp.rows.iter().zip(&lp.rhs) {
        if (dot(row, z) - b).abs() > BINDING_TOL {
            continue;
        }
        if row.iter().any(|&v| !is_int(v)) || !is_int(b) {
            return Err(CutRefusal::FractionalRow);
        }
        let mut row = row.clone();
        let mut b = b;
        if let Some(u) = unit {
            b -= row[u];
            row[u] = 0.0;
        }
        binding.push((row, b));
    }
    for j in 0..n {
        if Some(j) == unit {
            continue;
        }
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let mut e = vec![0.0; n];
        if lo == hi || (z[j] - lo).abs() <= BINDING_TOL {
            e[j] = 1.0;
            binding.push((e, lo));
        } else if (z[j] - hi).abs() <= BINDING_TOL {
            e[j] = -1.0;
            binding.push((e, -hi));
        }
    }
    let reduced: Vec<Vec<f64>> = binding
        .iter()
        .map(|(r, _)| r.iter().enumerate().filter(|&(j, _)| Some(j) != unit).map(|(_, &v)| v).collect())
        .collect();
    let dims = n - usize::from(unit.is_some());
    if rank(&reduced) < dims {
        return Err(CutRefusal::RankDeficient);
    }
    let mut coeffs = vec![0.0; n];
    let mut rhs = 1.0;
    for (row, b) in &binding {
        for (c, v) in coeffs.iter_mut().zip(row) {
            *c += v;
        }
        rhs += b;
    }
    finish(Cut { coeffs, rhs, class: CutClass::IntegerNoGood, node, local: true }, z)
}

/// Removes the fiber `x_L = gamma` from the binary lattice:
/// `sum_{gamma_i = 0} x_i + sum_{gamma_i = 1} (1 - x_i) >= 1`.
/// `linking` excludes the unit column; `gamma` lists the values in the same order.
pub fn generalized_no_good(
    inst: &MiblpInstance,
    linking: &[usize],
    gamma: &[f64],
    node: usize,
) -> Result<Cut, CutRefusal> {
    let mut coeffs = vec![0.0; inst.num_cols()];
    let mut rhs = 1.0;
    for (&j, &g) in linking.iter().zip(gamma) {
        if j >= inst.r1 || inst.lb_x[j] < 0.0 || inst.ub_x[j] > 1.0 {
            return Err(CutRefusal::NotBinaryLinking(j));
        }
        if (g - g.round()).abs() > crate::lp::INT_TOL {
            return Err(CutRefusal::FractionalLinking);
        }
        if g.round() == 0.0 {
            coeffs[j] = 1.0;
        } else {
            coeffs[j] = -1.0;
            rhs -= 1.0;
        }
    }
    let mut z = vec![0.0; inst.num_cols()];
    for (&j, &g) in linking.iter().zip(gamma) {
        z[j] = g.round();
    }
    finish(Cut { coeffs, rhs, class: CutClass::GeneralizedNoGood, node, local: false }, &z)
}

/// Intersection cut from the cone of `basis` at `z` against the box
/// `|x_L - gamma| < 1`, whose only integral linking vector is `gamma = z_L`.
/// The box is bilevel free for improving points once the best point with
/// `x_L = gamma` is known (or none exists).
pub fn hypercube_intersection(
    lp: &LpModel,
    basis: &Basis,
    z: &[f64],
    linking: &[usize],
    node: usize,
) -> Result<Cut, CutRefusal> {
    if linking.iter().any(|&j| (z[j] - z[j].round()).abs() > crate::lp::INT_TOL) {
        return Err(CutRefusal::FractionalLinking);
    }
    let rays = nonbasic_rays(lp, basis).ok_or(CutRefusal::BadBasis)?;
    let n = lp.num_cols();
    let mut coeffs = vec![0.0; n];
    let mut rhs = 1.0;
    let mut any_finite = false;
    for ray in &rays {
        let mut step = f64::INFINITY;
        for &j in linking {
            let r = ray.direction[j];
            if r.abs() > COEFF_ZERO {
                step = step.min(1.0 / r.abs());
            }
        }
        if step.is_infinite() {
            continue;
        }
        if step < STEP_TOL {
            return Err(CutRefusal::Degenerate);
        }
        any_finite = true;
        let w = 1.0 / step;
        if ray.var < n {
            let j = ray.var;
            if ray.at_upper {
                coeffs[j] -= w;
                rhs -= w * lp.upper[j];
            } else {
                coeffs[j] += w;
                rhs += w * lp.lower[j];
            }
        } else {
            let i = ray.var - n;
            for (c, a) in coeffs.iter_mut().zip(&lp.rows[i]) {
                *c += w * a;
            }
            rhs += w * lp.rhs[i];
        }
    }
    if !any_finite {
        return Err(CutRefusal::ConeInsideBox);
    }
    for c in coeffs.iter_mut() {
        if c.abs() < COEFF_ZERO {
            *c = 0.0;
        }
    }
    finish(Cut { coeffs, rhs, class: CutClass::HypercubeIc, node, local: true }, z)
}

fn finish(cut: Cut, z: &[f64]) -> Result<Cut, CutRefusal> {
    let v = cut.violation(z);
    if v < MIN_VIOLATION {
        return Err(CutRefusal::NotViolated(v));
    }
    Ok(cut)
}

/// A bilevel feasible, improving point that violates a cut.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
}

/// Looks for the bilevel feasible point with objective at most
/// `incumbent - 1e-6` (inside `node_box` for local cuts) that minimizes the
/// cut's left-hand side. Returns it when it violates the cut.
pub fn audit_cut(
    cut: &Cut,
    inst: &MiblpInstance,
    oracle: &Oracle<'_>,
    incumbent: f64,
    node_box: Option<(&[f64], &[f64])>,
) -> Result<Option<AuditViolation>, OracleError> {
    let mut region = Region::full(inst);
    if let (true, Some((lo, hi))) = (cut.local, node_box) {
        let n1 = inst.n1;
        region.lx = lo[..n1].to_vec();
        region.ux = hi[..n1].to_vec();
        region.ly = lo[n1..].to_vec();
        region.uy = hi[n1..].to_vec();
    }
    if incumbent.is_finite() {
        region = region.with_objective_at_most(inst, incumbent - 1e-6);
    }
    Ok(match oracle.minimize(&region, &cut.coeffs)? {
        Some((lhs, x, y)) if lhs < cut.rhs - 1e-6 => Some(AuditViolation { x, y, lhs }),
        _ => None,
    })
}
