//! Branching candidates and pseudocost selection.

use crate::engine::BranchStrategy;
use crate::lp::INT_TOL;

const SCORE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// `x_i <= floor(v)` / `x_i >= floor(v) + 1` for fractional `v`.
    Fractional,
    /// A split around an integral value of an unfixed linking column.
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub column: usize,
    pub value: f64,
    pub kind: SplitKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchDecision {
    pub column: usize,
    pub value: f64,
    pub kind: SplitKind,
    /// Upper bound of the down child.
    pub down_upper: f64,
    /// Lower bound of the up child.
    pub up_lower: f64,
    /// Whether the down child is explored first in depth-first search.
    pub down_first: bool,
}

impl BranchDecision {
    /// `upper` is the column's current upper bound at the node.
    pub fn new(c: Candidate, upper: f64) -> Self {
        match c.kind {
            SplitKind::Fractional => {
                let f = c.value.floor();
                BranchDecision { column: c.column, value: c.value, kind: c.kind, down_upper: f, up_lower: f + 1.0, down_first: true }
            }
            SplitKind::Integral => {
                let v = c.value.round();
                if v <= upper - 1.0 {
                    BranchDecision { column: c.column, value: c.value, kind: c.kind, down_upper: v, up_lower: v + 1.0, down_first: true }
                } else {
                    BranchDecision { column: c.column, value: c.value, kind: c.kind, down_upper: v - 1.0, up_lower: v, down_first: false }
                }
            }
        }
    }

    /// Distances the parent value moves in each child, used for pseudocosts.
    pub fn distances(&self) -> (f64, f64) {
        match self.kind {
            SplitKind::Fractional => (self.value - self.down_upper, self.up_lower - self.value),
            SplitKind::Integral => (1.0, 1.0),
        }
    }
}

fn fractional(v: f64) -> bool {
    (v - v.round()).abs() > INT_TOL
}

/// Branching candidates at a node. `z` is the relaxation solution over
/// `(x, y)`, `lower`/`upper` the node bounds, `integer` the integrality mask
/// and `linking` the linking columns without the unit column.
///
/// Linking: fractional linking columns; if there are none, unfixed linking
/// columns with an integral split; otherwise nothing. Fractional: every
/// fractional integer column.
pub fn candidates(
    strategy: BranchStrategy,
    z: &[f64],
    lower: &[f64],
    upper: &[f64],
    integer: &[bool],
    linking: &[usize],
) -> Vec<Candidate> {
    match strategy {
        BranchStrategy::Linking => {
            let frac: Vec<Candidate> = linking
                .iter()
                .filter(|&&j| fractional(z[j]))
                .map(|&j| Candidate { column: j, value: z[j], kind: SplitKind::Fractional })
                .collect();
            if !frac.is_empty() {
                return frac;
            }
            linking
                .iter()
                .filter(|&&j| lower[j] < upper[j])
                .map(|&j| Candidate { column: j, value: z[j], kind: SplitKind::Integral })
                .collect()
        }
        BranchStrategy::Fractional => fractional_candidates(z, integer, &[]),
    }
}

/// Fractional integer columns outside `exclude`.
pub fn fractional_candidates(z: &[f64], integer: &[bool], exclude: &[usize]) -> Vec<Candidate> {
    (0..z.len())
        .filter(|&j| integer[j] && fractional(z[j]) && !exclude.contains(&j))
        .map(|j| Candidate { column: j, value: z[j], kind: SplitKind::Fractional })
        .collect()
}

/// Running averages of the objective degradation per unit change.
#[derive(Debug, Clone, Default)]
pub struct PseudocostTable {
    down_sum: Vec<f64>,
    down_count: Vec<usize>,
    up_sum: Vec<f64>,
    up_count: Vec<usize>,
}

impl PseudocostTable {
    pub fn new(n: usize) -> Self {
        PseudocostTable {
            down_sum: vec![0.0; n],
            down_count: vec![0; n],
            up_sum: vec![0.0; n],
            up_count: vec![0; n],
        }
    }

    pub fn count(&self, column: usize, up: bool) -> usize {
        if up {
            self.up_count[column]
        } else {
            self.down_count[column]
        }
    }

    /// Average per-unit degradation; uninitialized columns use the mean over
    /// initialized ones in the same direction, or 1 if there are none.
    pub fn estimate(&self, column: usize, up: bool) -> f64 {
        let (sum, count) = if up { (&self.up_sum, &self.up_count) } else { (&self.down_sum, &self.down_count) };
        if count[column] > 0 {
            return sum[column] / count[column] as f64;
        }
        let (total, k) = sum
            .iter()
            .zip(count)
            .filter(|(_, &c)| c > 0)
            .fold((0.0, 0usize), |(t, k), (s, &c)| (t + s / c as f64, k + 1));
        if k == 0 {
            1.0
        } else {
            total / k as f64
        }
    }

    /// Records one observation: the child bound moved from `parent_bound`
    /// to `child_bound` after shifting the column by `distance`.
    pub fn update(&mut self, column: usize, up: bool, parent_bound: f64, child_bound: f64, distance: f64) {
        if distance <= 0.0 || !parent_bound.is_finite() || !child_bound.is_finite() {
            return;
        }
        let per_unit = (child_bound - parent_bound).max(0.0) / distance;
        if up {
            self.up_sum[column] += per_unit;
            self.up_count[column] += 1;
        } else {
            self.down_sum[column] += per_unit;
            self.down_count[column] += 1;
        }
    }
}

/// Product score of two estimated degradations.
pub fn product_score(down: f64, up: f64) -> f64 {
    down.max(SCORE_EPS) * up.max(SCORE_EPS)
}

/// Index of the best-scoring candidate; ties go to the lowest column.
pub fn argmax_score(cands: &[Candidate], scores: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..cands.len() {
        let better = scores[k] > scores[best] || (scores[k] == scores[best] && cands[k].column < cands[best].column);
        if better {
            best = k;
        }
    }
    best
}

/// Chooses among nonempty `cands` by pseudocost product score.
pub fn select(cands: &[Candidate], table: &PseudocostTable, upper: &[f64]) -> BranchDecision {
    let scores: Vec<f64> = cands
        .iter()
        .map(|c| {
            let (dd, du) = BranchDecision::new(*c, upper[c.column]).distances();
            product_score(table.estimate(c.column, false) * dd, table.estimate(c.column, true) * du)
        })
        .collect();
    let k = argmax_score(cands, &scores);
    BranchDecision::new(cands[k], upper[cands[k].column])
}
