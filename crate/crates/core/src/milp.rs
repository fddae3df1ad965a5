//! Best-first branch and bound over the simplex solver.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::lp::{solve_lp, Basis, LpError, LpModel, LpStatus, INT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("unbounded MILP: LP relaxation is unbounded")]
    Unbounded,
}

pub type IncumbentFilter = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct MilpModel {
    pub lp: LpModel,
    pub integer: Vec<bool>,
    /// Integral points with objective above `cutoff` are not accepted.
    pub cutoff: Option<f64>,
    filter: Option<IncumbentFilter>,
}

impl fmt::Debug for MilpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MilpModel")
            .field("lp", &self.lp)
            .field("integer", &self.integer)
            .field("cutoff", &self.cutoff)
            .field("filter", &self.filter.is_some())
            .finish()
    }
}

impl MilpModel {
    pub fn new(lp: LpModel, integer: Vec<bool>) -> Self {
        MilpModel {
            lp,
            integer,
            cutoff: None,
            filter: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    /// Installs a predicate consulted before any integral point is accepted as
    /// incumbent. A rejected point does not end the search in its subtree: the
    /// node is split on an unfixed integer column instead.
    pub fn set_incumbent_filter(&mut self, filter: IncumbentFilter) {
        self.filter = Some(filter);
    }

    pub fn clear_incumbent_filter(&mut self) {
        self.filter = None;
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MilpLimits {
    pub max_nodes: Option<usize>,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// Feasible integral points may exist, but none beats the cutoff.
    CutoffExceeded,
    /// Node or time limit reached; `x` holds the best point found, if any.
    Limit,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl MilpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == MilpStatus::Optimal
    }
}

struct OpenNode {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Option<Basis>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // BinaryHeap is a max-heap: smaller bound, then earlier insertion, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn prune_tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

pub fn solve_milp(model: &MilpModel, limits: &MilpLimits) -> Result<MilpSolution, MilpError> {
    let n = model.lp.num_cols();
    if model.integer.len() != n {
        return Err(LpError::Dimension("integrality mask length".into()).into());
    }
    model.lp.validate()?;
    let mut lower = model.lp.lower.clone();
    let mut upper = model.lp.upper.clone();
    for j in 0..n {
        if model.integer[j] {
            lower[j] = (lower[j] - INT_TOL).ceil();
            upper[j] = (upper[j] + INT_TOL).floor();
        }
    }
    let mut out = MilpSolution {
        status: MilpStatus::Infeasible,
        x: None,
        objective: f64::INFINITY,
        nodes: 0,
        lp_iterations: 0,
    };
    if (0..n).any(|j| lower[j] > upper[j]) {
        return Ok(out);
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(OpenNode {
        bound: f64::NEG_INFINITY,
        seq,
        lower,
        upper,
        basis: None,
    });
    let mut cut_by_cutoff = false;
    let mut lp = model.lp.clone();

    while let Some(node) = heap.pop() {
        if let Some(inc) = out.x.as_ref().map(|_| out.objective) {
            if node.bound >= inc - prune_tol(inc) {
                continue;
            }
        }
        let limit_hit = limits.max_nodes.is_some_and(|m| out.nodes >= m)
            || limits.deadline.is_some_and(|d| Instant::now() >= d);
        if limit_hit {
            out.status = MilpStatus::Limit;
            return Ok(out);
        }
        out.nodes += 1;
        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let sol = solve_lp(&lp, node.basis.as_ref())?;
        out.lp_iterations += sol.iterations;
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => return Err(MilpError::Unbounded),
            LpStatus::Optimal => {}
        }
        let z = sol.objective;
        if let Some(c) = model.cutoff {
            if z > c + prune_tol(c) {
                cut_by_cutoff = true;
                continue;
            }
        }
        if out.x.is_some() && z >= out.objective - prune_tol(out.objective) {
            continue;
        }

        // Most fractional integer column, lowest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        let mut best_frac = INT_TOL;
        for j in 0..n {
            if !model.integer[j] {
                continue;
            }
            let v = sol.x[j];
            let f = (v - v.floor()).min(v.ceil() - v);
            if f > best_frac {
                best_frac = f;
                branch = Some((j, v));
            }
        }

        let children: Vec<(usize, f64, f64, f64, f64)> = match branch {
            Some((j, v)) => vec![
                (j, node.lower[j], v.floor(), v.ceil(), node.upper[j]),
            ],
            None => {
                let mut x = sol.x.clone();
                for j in 0..n {
                    if model.integer[j] {
                        x[j] = x[j].round();
                    }
                }
                let accepted = model.filter.as_ref().is_none_or(|f| f(&x));
                if accepted {
                    out.objective = model.lp.objective_value(&x);
                    out.x = Some(x);
                    continue;
                }
                // Rejected: split the integral point's value range on the first
                // unfixed integer column so the subtree is still explored.
                let Some(j) = (0..n).find(|&j| model.integer[j] && node.lower[j] < node.upper[j]) else {
                    continue;
                };
                let v = x[j];
                if v + 1.0 <= node.upper[j] {
                    vec![(j, node.lower[j], v, v + 1.0, node.upper[j])]
                } else {
                    vec![(j, node.lower[j], v - 1.0, v, node.upper[j])]
                }
            }
        };
        for (j, dlo, dhi, ulo, uhi) in children {
            for (lo, hi) in [(dlo, dhi), (ulo, uhi)] {
                if lo > hi {
                    continue;
                }
                let mut l = node.lower.clone();
                let mut u = node.upper.clone();
                l[j] = lo;
                u[j] = hi;
                seq += 1;
                heap.push(OpenNode {
                    bound: z,
                    seq,
                    lower: l,
                    upper: u,
                    basis: sol.basis.clone(),
                });
            }
        }
    }

    out.status = if out.x.is_some() {
        MilpStatus::Optimal
    } else if cut_by_cutoff {
        MilpStatus::CutoffExceeded
    } else {
        MilpStatus::Infeasible
    };
    Ok(out)
}
