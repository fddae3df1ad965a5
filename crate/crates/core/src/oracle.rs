//! Exhaustive reference solver for small instances.
//!
//! Every first-level point on the integer grid is evaluated: the follower
//! value `phi(A2 x)` is found by enumerating the integer follower columns and
//! solving an LP over the continuous ones, and the optimistic reaction is the
//! best leader objective among follower-optimal responses.

use thiserror::Error;

use crate::lp::{dot, solve_lp, LpError, LpModel, LpStatus};
use crate::model::MiblpInstance;

/// Slack allowed when comparing follower objectives against `phi`.
const PHI_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("first-level column {0} is continuous and not fixed")]
    ContinuousFirstLevel(usize),
    #[error("integer column {0} has an infinite bound")]
    Unbounded(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy)]
pub struct OracleCaps {
    pub max_x_points: usize,
    /// Bound on first-level points times integer follower points.
    pub max_pairs: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_x_points: 1_000_000,
            max_pairs: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal { x: Vec<f64>, y: Vec<f64>, value: f64 },
    Infeasible,
}

impl OracleOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { value, .. } => Some(*value),
            OracleOutcome::Infeasible => None,
        }
    }
}

/// A box over `(x, y)` plus extra `>=` rows over the stacked columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lx: Vec<f64>,
    pub ux: Vec<f64>,
    pub ly: Vec<f64>,
    pub uy: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl Region {
    pub fn full(inst: &MiblpInstance) -> Region {
        Region {
            lx: inst.lb_x.clone(),
            ux: inst.ub_x.clone(),
            ly: inst.lb_y.clone(),
            uy: inst.ub_y.clone(),
            rows: Vec::new(),
        }
    }

    /// Restricts to points with leader objective at most `bound`.
    pub fn with_objective_at_most(mut self, inst: &MiblpInstance, bound: f64) -> Region {
        let coeffs: Vec<f64> = inst.c.iter().chain(&inst.d1).map(|v| -v).collect();
        self.rows.push((coeffs, -bound));
        self
    }
}

struct XEntry {
    x: Vec<f64>,
    phi: Option<f64>,
    /// Integer parts of follower responses whose fiber attains `phi`.
    reacting: Vec<Vec<f64>>,
}

/// Precomputed follower values for every first-level grid point.
pub struct Oracle<'a> {
    inst: &'a MiblpInstance,
    points: Vec<XEntry>,
}

fn grid(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(lo.len())];
    for (&l, &h) in lo.iter().zip(hi) {
        let mut next = Vec::new();
        for p in &out {
            let mut v = l;
            while v <= h {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
                v += 1.0;
            }
        }
        out = next;
    }
    out
}

fn grid_size(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(l, h)| (h - l + 1.0).max(0.0)).product()
}

impl<'a> Oracle<'a> {
    pub fn new(inst: &'a MiblpInstance, caps: OracleCaps) -> Result<Self, OracleError> {
        for j in inst.r1..inst.n1 {
            if inst.lb_x[j] != inst.ub_x[j] {
                return Err(OracleError::ContinuousFirstLevel(j));
            }
        }
        let (xlo, xhi) = int_box(&inst.lb_x[..inst.r1], &inst.ub_x[..inst.r1], "x")?;
        let (ylo, yhi) = int_box(&inst.lb_y[..inst.r2], &inst.ub_y[..inst.r2], "y")?;
        let nx = grid_size(&xlo, &xhi);
        if nx > caps.max_x_points as f64 {
            return Err(OracleError::CapExceeded(format!("{nx} first-level points")));
        }
        let ny = grid_size(&ylo, &yhi);
        if nx * ny > caps.max_pairs as f64 {
            return Err(OracleError::CapExceeded(format!("{} point pairs", nx * ny)));
        }
        let ygrid = grid(&ylo, &yhi);
        let mut points = Vec::new();
        for xi in grid(&xlo, &xhi) {
            let mut x = xi;
            x.extend_from_slice(&inst.lb_x[inst.r1..]);
            let rhs = inst.second_level_rhs(&x);
            let mut values = Vec::new();
            let mut phi: Option<f64> = None;
            for yi in &ygrid {
                if let Some(v) = follower_fiber_min(inst, &rhs, yi)? {
                    phi = Some(phi.map_or(v, |p: f64| p.min(v)));
                    values.push((yi.clone(), v));
                }
            }
            let reacting = match phi {
                Some(p) => values
                    .into_iter()
                    .filter(|(_, v)| *v <= p + PHI_TOL * (1.0 + p.abs()))
                    .map(|(y, _)| y)
                    .collect(),
                None => Vec::new(),
            };
            points.push(XEntry { x, phi, reacting });
        }
        Ok(Oracle { inst, points })
    }

    /// `phi(A2 x)` for a grid point `x`; `None` when the follower is infeasible.
    pub fn phi(&self, x: &[f64]) -> Option<f64> {
        self.entry(x).and_then(|e| e.phi)
    }

    fn entry(&self, x: &[f64]) -> Option<&XEntry> {
        self.points
            .iter()
            .find(|e| e.x.iter().zip(x).all(|(a, b)| (a - b).abs() <= 1e-6))
    }

    /// Minimizes `objective . (x, y)` over bilevel feasible points inside
    /// `region`. Returns `(value, x, y)`.
    pub fn minimize(&self, region: &Region, objective: &[f64]) -> Result<Option<(f64, Vec<f64>, Vec<f64>)>, OracleError> {
        let inst = self.inst;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for e in &self.points {
            let Some(phi) = e.phi else { continue };
            let inside = e
                .x
                .iter()
                .enumerate()
                .all(|(j, &v)| v >= region.lx[j] - 1e-9 && v <= region.ux[j] + 1e-9);
            if !inside {
                continue;
            }
            for yi in &e.reacting {
                if (0..inst.r2).any(|j| yi[j] < region.ly[j] - 1e-9 || yi[j] > region.uy[j] + 1e-9) {
                    continue;
                }
                if let Some((v, y)) = self.leader_fiber_min(&e.x, yi, phi, region, objective)? {
                    if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                        best = Some((v, e.x.clone(), y));
                    }
                }
            }
        }
        Ok(best)
    }

    /// `min objective` over the continuous follower columns of one fiber,
    /// restricted to follower-optimal responses and the region.
    fn leader_fiber_min(
        &self,
        x: &[f64],
        yi: &[f64],
        phi: f64,
        region: &Region,
        objective: &[f64],
    ) -> Result<Option<(f64, Vec<f64>)>, OracleError> {
        let inst = self.inst;
        let (n1, r2, n2) = (inst.n1, inst.r2, inst.n2);
        let nc = n2 - r2;
        let const_obj = dot(&objective[..n1], x) + dot(&objective[n1..n1 + r2], yi);
        let mut lp = LpModel::new(objective[n1 + r2..].to_vec());
        for i in 0..inst.m2() {
            let g = &inst.g2[i];
            lp.push_row(g[r2..].to_vec(), dot(&inst.a2[i], x) - dot(&g[..r2], yi));
        }
        for i in 0..inst.m1() {
            let g = &inst.g1[i];
            lp.push_row(g[r2..].to_vec(), inst.b1[i] - dot(&inst.a1[i], x) - dot(&g[..r2], yi));
        }
        let d2c: Vec<f64> = inst.d2[r2..].iter().map(|v| -v).collect();
        lp.push_row(d2c, -(phi - dot(&inst.d2[..r2], yi)) - PHI_TOL * (1.0 + phi.abs()));
        for (coeffs, rhs) in &region.rows {
            let fixed = dot(&coeffs[..n1], x) + dot(&coeffs[n1..n1 + r2], yi);
            lp.push_row(coeffs[n1 + r2..].to_vec(), rhs - fixed);
        }
        for j in 0..nc {
            lp.lower[j] = inst.lb_y[r2 + j].max(region.ly[r2 + j]);
            lp.upper[j] = inst.ub_y[r2 + j].min(region.uy[r2 + j]);
            if lp.lower[j] > lp.upper[j] {
                return Ok(None);
            }
        }
        if nc == 0 {
            let ok = lp.rhs.iter().all(|&b| b <= 1e-9);
            return Ok(ok.then(|| (const_obj, yi.to_vec())));
        }
        let sol = solve_lp(&lp, None)?;
        match sol.status {
            LpStatus::Optimal => {
                let mut y = yi.to_vec();
                y.extend_from_slice(&sol.x);
                Ok(Some((const_obj + sol.objective, y)))
            }
            LpStatus::Infeasible => Ok(None),
            // Bounded follower columns make this unreachable for valid instances.
            LpStatus::Unbounded => Ok(Some((f64::NEG_INFINITY, yi.to_vec()))),
        }
    }

    pub fn solve(&self) -> Result<OracleOutcome, OracleError> {
        let obj: Vec<f64> = self.inst.c.iter().chain(&self.inst.d1).copied().collect();
        Ok(match self.minimize(&Region::full(self.inst), &obj)? {
            Some((value, x, y)) => OracleOutcome::Optimal { x, y, value },
            None => OracleOutcome::Infeasible,
        })
    }

    /// One optimistic representative per follower-optimal fiber. For pure
    /// integer followers this is exactly the bilevel feasible set.
    pub fn feasible_points(&self) -> Result<Vec<(Vec<f64>, Vec<f64>)>, OracleError> {
        let inst = self.inst;
        let obj: Vec<f64> = inst.c.iter().chain(&inst.d1).copied().collect();
        let region = Region::full(inst);
        let mut out = Vec::new();
        for e in &self.points {
            let Some(phi) = e.phi else { continue };
            for yi in &e.reacting {
                if let Some((_, y)) = self.leader_fiber_min(&e.x, yi, phi, &region, &obj)? {
                    out.push((e.x.clone(), y));
                }
            }
        }
        Ok(out)
    }

    /// `Xi(x)`: the best leader value `d1 y` among follower-optimal responses
    /// that also satisfy the first-level rows.
    pub fn xi(&self, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>, OracleError> {
        let inst = self.inst;
        let Some(e) = self.entry(x) else { return Ok(None) };
        let Some(phi) = e.phi else { return Ok(None) };
        let mut obj = vec![0.0; inst.n1];
        obj.extend_from_slice(&inst.d1);
        let region = Region::full(inst);
        let mut best: Option<(f64, Vec<f64>)> = None;
        for yi in &e.reacting {
            if let Some((v, y)) = self.leader_fiber_min(&e.x, yi, phi, &region, &obj)? {
                if best.as_ref().is_none_or(|(b, _)| v < *b) {
                    best = Some((v, y));
                }
            }
        }
        Ok(best)
    }
}

fn int_box(lo: &[f64], hi: &[f64], what: &str) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let mut l = Vec::with_capacity(lo.len());
    let mut h = Vec::with_capacity(lo.len());
    for j in 0..lo.len() {
        if !lo[j].is_finite() || !hi[j].is_finite() {
            return Err(OracleError::Unbounded(format!("{what}{j}")));
        }
        l.push((lo[j] - 1e-6).ceil());
        h.push((hi[j] + 1e-6).floor());
    }
    Ok((l, h))
}

/// Minimum follower objective over the fiber with integer part `yi`.
fn follower_fiber_min(inst: &MiblpInstance, rhs: &[f64], yi: &[f64]) -> Result<Option<f64>, OracleError> {
    let r2 = inst.r2;
    let base = dot(&inst.d2[..r2], yi);
    if r2 == inst.n2 {
        let ok = inst.g2.iter().zip(rhs).all(|(g, &b)| dot(g, yi) >= b - 1e-9);
        return Ok(ok.then_some(base));
    }
    let mut lp = LpModel::new(inst.d2[r2..].to_vec());
    for (g, &b) in inst.g2.iter().zip(rhs) {
        lp.push_row(g[r2..].to_vec(), b - dot(&g[..r2], yi));
    }
    lp.lower = inst.lb_y[r2..].to_vec();
    lp.upper = inst.ub_y[r2..].to_vec();
    let sol = solve_lp(&lp, None)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(base + sol.objective),
        LpStatus::Infeasible => None,
        LpStatus::Unbounded => Some(f64::NEG_INFINITY),
    })
}

pub fn brute_force_solve(inst: &MiblpInstance, caps: OracleCaps) -> Result<OracleOutcome, OracleError> {
    Oracle::new(inst, caps)?.solve()
}

pub fn enumerate_bilevel_feasible(inst: &MiblpInstance, caps: OracleCaps) -> Result<Vec<(Vec<f64>, Vec<f64>)>, OracleError> {
    Oracle::new(inst, caps)?.feasible_points()
}
