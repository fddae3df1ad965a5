//! Bilevel branch and cut.
//!
//! Each node solves the relaxation over its bounds and active cuts, then
//! decides whether to evaluate the follower problem at the linking part of
//! the relaxation solution, whether to compute the best bilevel point with
//! that linking part, and finally whether to cut or branch. A pool of
//! linking vectors avoids repeating follower and best-bound solves.

mod events;
mod params;
mod pool;

pub use events::{Event, PruneReason};
pub use params::{BranchStrategy, CutSelection, HeuristicParams, Preset, Search, SolverParams};
pub use pool::{pool_key, LinkingPool, PoolTag};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::branching::{self, BranchDecision, Candidate, PseudocostTable, SplitKind};
use crate::cutgen::{self, Cut, CutClass};
use crate::heuristics;
use crate::lp::{dot, solve_lp, Basis, LpError, LpModel, LpSolution, LpStatus, VarStatus, INT_TOL, OPT_TOL};
use crate::milp::{solve_milp, MilpError, MilpLimits, MilpModel, MilpStatus};
use crate::model::{InstanceProperties, MiblpInstance};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("the root relaxation is unbounded")]
    UnboundedRelaxation,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    /// A subsolver hit the deadline; handled inside the search.
    #[error("time limit reached")]
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BilevelStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

impl fmt::Display for BilevelStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BilevelStatus::Optimal => "Optimal",
            BilevelStatus::Infeasible => "Infeasible",
            BilevelStatus::TimeLimit => "TimeLimit",
            BilevelStatus::NodeLimit => "NodeLimit",
        })
    }
}

impl std::str::FromStr for BilevelStatus {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Optimal" => Ok(BilevelStatus::Optimal),
            "Infeasible" => Ok(BilevelStatus::Infeasible),
            "TimeLimit" => Ok(BilevelStatus::TimeLimit),
            "NodeLimit" => Ok(BilevelStatus::NodeLimit),
            _ => Err(format!("unknown status '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CutCounts {
    pub integer_no_good: usize,
    pub generalized_no_good: usize,
    pub hypercube_ic: usize,
}

impl CutCounts {
    pub fn get(&self, class: CutClass) -> usize {
        match class {
            CutClass::IntegerNoGood => self.integer_no_good,
            CutClass::GeneralizedNoGood => self.generalized_no_good,
            CutClass::HypercubeIc => self.hypercube_ic,
        }
    }

    pub fn set(&mut self, class: CutClass, v: usize) {
        match class {
            CutClass::IntegerNoGood => self.integer_no_good = v,
            CutClass::GeneralizedNoGood => self.generalized_no_good = v,
            CutClass::HypercubeIc => self.hypercube_ic = v,
        }
    }

    pub fn total(&self) -> usize {
        self.integer_no_good + self.generalized_no_good + self.hypercube_ic
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: usize,
    /// Fresh follower MILP solves (pool hits excluded).
    pub sl_milp_solves: usize,
    /// Fresh best-bound solves.
    pub ub_solves: usize,
    pub pool_hits: usize,
    pub cuts: CutCounts,
    pub lp_iterations: usize,
    pub heuristic_incumbents: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct BilevelResult {
    pub status: BilevelStatus,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    /// `U`; infinite when no bilevel feasible point was found.
    pub upper: f64,
    /// `L`.
    pub lower: f64,
    pub stats: SolveStats,
    pub events: Vec<Event>,
    /// The incumbent passed a final check against a freshly solved follower problem.
    pub verified: bool,
}

impl BilevelResult {
    pub fn objective(&self) -> Option<f64> {
        self.x.as_ref().map(|_| self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    BilevelFeasible,
    IntegralityViolated,
    RowsViolated,
    OptimalityViolated,
}

/// Slack allowed in `d2 y <= phi`.
pub fn phi_tol(phi: f64) -> f64 {
    OPT_TOL * (1.0 + phi.abs())
}

/// Checks `x in X`, then `y in Y`, then the rows, then follower optimality
/// `d2 y <= phi` where `phi` is the follower value at `x` (`None` when the
/// follower problem is infeasible).
pub fn check_feasibility(inst: &MiblpInstance, x: &[f64], y: &[f64], phi: Option<f64>) -> Feasibility {
    if !inst.x_integral(x) || !inst.y_integral(y) {
        return Feasibility::IntegralityViolated;
    }
    if !inst.in_relaxation(x, y, 1e-6) {
        return Feasibility::RowsViolated;
    }
    match phi {
        Some(p) if inst.follower_objective(y) <= p + phi_tol(p) => Feasibility::BilevelFeasible,
        _ => Feasibility::OptimalityViolated,
    }
}

/// Pruning by bound. With a pure integer instance and integral objective
/// every improving point is at least one unit better than `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub integral: bool,
}

impl Improvement {
    pub fn from_properties(p: &InstanceProperties) -> Self {
        Improvement { integral: p.pure_integer && p.integral_objective }
    }

    pub fn prunes(&self, bound: f64, upper: f64) -> bool {
        if !upper.is_finite() {
            return false;
        }
        if self.integral {
            bound > upper - 1.0 + 1e-6
        } else {
            bound >= upper - 1e-9 * (1.0 + upper.abs())
        }
    }

    /// Right-hand side for "objective strictly better than `upper`".
    pub fn target(&self, upper: f64) -> f64 {
        if self.integral {
            upper - 1.0
        } else {
            upper - 1e-6
        }
    }
}

/// The pruning test applied right after the node relaxation is solved.
pub fn should_prune(
    imp: Improvement,
    bound: Option<f64>,
    upper: f64,
    linking_fixed: bool,
    tag: Option<&PoolTag>,
) -> Option<PruneReason> {
    let Some(bound) = bound else { return Some(PruneReason::Infeasible) };
    if imp.prunes(bound, upper) {
        return Some(PruneReason::Bound);
    }
    if linking_fixed {
        match tag {
            Some(PoolTag::SecondLevelInfeasible) => return Some(PruneReason::LinkingFixedInfeasible),
            Some(PoolTag::UbSolved { .. }) => return Some(PruneReason::LinkingFixedUbSolved),
            _ => {}
        }
    }
    None
}

/// Follower outcome at a linking vector.
#[derive(Debug, Clone, PartialEq)]
pub enum SecondLevel {
    Infeasible,
    Feasible { y_hat: Vec<f64>, phi: f64 },
}

pub fn solve(inst: &MiblpInstance, params: &SolverParams) -> Result<BilevelResult, EngineError> {
    Solver::new(inst, params.clone())?.run()
}

#[derive(Debug, Clone)]
struct WarmStart {
    basis: Basis,
    /// Cut id of each row after the base rows.
    rows: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Node {
    id: usize,
    depth: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Local cuts active in this subtree.
    cuts: Vec<usize>,
    /// Bound inherited from the parent.
    bound: f64,
    warm: Option<WarmStart>,
    /// Column, direction and distance of the branching that created the node.
    branched: Option<(usize, bool, f64)>,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // max-heap: smallest bound first, then earliest id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.bound.total_cmp(&self.0.bound).then(other.0.id.cmp(&self.0.id))
    }
}

enum OpenNodes {
    Best(BinaryHeap<Queued>),
    Depth(Vec<Node>),
}

impl OpenNodes {
    fn push(&mut self, n: Node) {
        match self {
            OpenNodes::Best(h) => h.push(Queued(n)),
            OpenNodes::Depth(v) => v.push(n),
        }
    }
    fn pop(&mut self) -> Option<Node> {
        match self {
            OpenNodes::Best(h) => h.pop().map(|q| q.0),
            OpenNodes::Depth(v) => v.pop(),
        }
    }
    fn min_bound(&self) -> f64 {
        match self {
            OpenNodes::Best(h) => h.peek().map_or(f64::INFINITY, |q| q.0.bound),
            OpenNodes::Depth(v) => v.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
        }
    }
}

enum Outcome {
    Pruned,
    Branched(Vec<Node>),
    Interrupted(Node),
}

enum CutAttempt {
    Added(Cut),
    Pruned(PruneReason),
    None,
}

/// Search state of one solve.
pub struct Solver<'a> {
    inst: &'a MiblpInstance,
    params: SolverParams,
    strategy: BranchStrategy,
    props: InstanceProperties,
    improvement: Improvement,
    /// Linking columns including the unit column.
    linking: Vec<usize>,
    /// Linking columns that can vary.
    linking_free: Vec<usize>,
    integer: Vec<bool>,
    base: LpModel,
    families: Vec<CutClass>,
    cuts: Vec<Cut>,
    global_cuts: Vec<usize>,
    pool: LinkingPool,
    upper: f64,
    incumbent: Option<(Vec<f64>, Vec<f64>)>,
    stats: SolveStats,
    events: Vec<Event>,
    pseudo: PseudocostTable,
    start: Instant,
    deadline: Option<Instant>,
    next_id: usize,
    current_node: usize,
}

impl<'a> Solver<'a> {
    pub fn new(inst: &'a MiblpInstance, params: SolverParams) -> Result<Self, EngineError> {
        params.check().map_err(EngineError::Params)?;
        let diags = inst.validate();
        if !diags.is_empty() {
            return Err(EngineError::Invalid(diags.iter().map(|d| d.to_string()).collect()));
        }
        let props = inst.classify();
        let linking = props.linking_set.clone();
        let linking_free: Vec<usize> = linking.iter().copied().filter(|&j| Some(j) != inst.unit_column).collect();
        let r1 = inst.r1 - usize::from(inst.unit_column.is_some_and(|u| u < inst.r1));
        let strategy = params.branch_strategy.unwrap_or(if r1 <= inst.r2 || params.cuts == CutSelection::None {
            BranchStrategy::Linking
        } else {
            BranchStrategy::Fractional
        });
        let families = match params.cuts {
            CutSelection::None => vec![],
            CutSelection::IntegerNoGood => vec![CutClass::IntegerNoGood],
            CutSelection::GeneralizedNoGood => vec![CutClass::GeneralizedNoGood],
            CutSelection::HypercubeIc => vec![CutClass::HypercubeIc],
            CutSelection::Auto => {
                let mut f = Vec::new();
                if props.pure_integer && props.integer_data {
                    f.push(CutClass::IntegerNoGood);
                }
                if props.all_linking_binary && !linking_free.is_empty() {
                    f.push(CutClass::GeneralizedNoGood);
                }
                f.push(CutClass::HypercubeIc);
                f
            }
        };
        let start = Instant::now();
        Ok(Solver {
            improvement: Improvement::from_properties(&props),
            integer: inst.integer_mask(),
            base: inst.relaxation(),
            pseudo: PseudocostTable::new(inst.num_cols()),
            deadline: params.time_limit.map(|t| start + t),
            inst,
            params,
            strategy,
            props,
            linking,
            linking_free,
            families,
            cuts: Vec::new(),
            global_cuts: Vec::new(),
            pool: LinkingPool::default(),
            upper: f64::INFINITY,
            incumbent: None,
            stats: SolveStats::default(),
            events: Vec::new(),
            start,
            next_id: 0,
            current_node: 0,
        })
    }

    pub fn strategy(&self) -> BranchStrategy {
        self.strategy
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn pool(&self) -> &LinkingPool {
        &self.pool
    }

    pub fn cut_families(&self) -> &[CutClass] {
        &self.families
    }

    fn emit(&mut self, e: Event) {
        if log::log_enabled!(log::Level::Debug) {
            if let Ok(s) = serde_json::to_string(&e) {
                log::debug!("{s}");
            }
        }
        if self.params.record_events {
            self.events.push(e);
        }
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn milp_limits(&self) -> MilpLimits {
        MilpLimits { max_nodes: None, deadline: self.deadline }
    }

    fn gamma(&self, x: &[f64]) -> Vec<f64> {
        self.linking.iter().map(|&j| x[j].round()).collect()
    }

    /// `x` with its linking entries rounded.
    fn snap(&self, x: &[f64]) -> Vec<f64> {
        let mut x = x.to_vec();
        for &j in &self.linking {
            x[j] = x[j].round();
        }
        x
    }

    /// Installs `(x, y)` as incumbent when it improves `U`.
    fn offer(&mut self, x: &[f64], y: &[f64], source: &str) -> bool {
        let value = self.inst.leader_objective(x, y);
        if value < self.upper - 1e-12 * (1.0 + value.abs()) {
            self.upper = value;
            self.incumbent = Some((x.to_vec(), y.to_vec()));
            self.emit(Event::Incumbent { value, x: x.to_vec(), y: y.to_vec(), source: source.to_string() });
            true
        } else {
            false
        }
    }

    /// Follower problem at `x` (only the linking part matters). Consults
    /// the pool first; fresh solves are counted.
    pub fn solve_second_level(&mut self, x: &[f64]) -> Result<SecondLevel, EngineError> {
        let gamma = self.gamma(x);
        if let Some(tag) = self.pool.get(&gamma) {
            let out = match tag.reaction() {
                Some((y, phi)) => SecondLevel::Feasible { y_hat: y.to_vec(), phi },
                None => SecondLevel::Infeasible,
            };
            self.stats.pool_hits += 1;
            self.emit(Event::PoolHit { node: self.current_node, gamma });
            return Ok(out);
        }
        let x = self.snap(x);
        let out = follower_solve(self.inst, &x, self.milp_limits())?;
        self.stats.sl_milp_solves += 1;
        let (tag, phi) = match &out {
            SecondLevel::Infeasible => (PoolTag::SecondLevelInfeasible, None),
            SecondLevel::Feasible { y_hat, phi } => (PoolTag::SecondLevelFeasible { y_hat: y_hat.clone(), phi: *phi }, Some(*phi)),
        };
        self.pool.insert(&gamma, tag);
        self.emit(Event::SecondLevelSolved { node: self.current_node, gamma, phi });
        Ok(out)
    }

    /// Best bilevel feasible point with the linking part of `x`: minimizes
    /// the leader objective over the integer relaxation with `x_L` fixed and
    /// `d2 y <= phi`. Updates the pool and `U`. `None` when the follower is
    /// infeasible or no point satisfies the first-level rows.
    pub fn solve_best_ub(&mut self, x: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>, EngineError> {
        let (y_hat, phi) = match self.solve_second_level(x)? {
            SecondLevel::Infeasible => return Ok(None),
            SecondLevel::Feasible { y_hat, phi } => (y_hat, phi),
        };
        let gamma = self.gamma(x);
        if let Some(PoolTag::UbSolved { best, .. }) = self.pool.get(&gamma) {
            let best = best.clone();
            self.stats.pool_hits += 1;
            self.emit(Event::PoolHit { node: self.current_node, gamma });
            return Ok(best.map(|(z, v)| {
                let (xs, ys) = z.split_at(self.inst.n1);
                (xs.to_vec(), ys.to_vec(), v)
            }));
        }
        let inst = self.inst;
        let mut lp = self.base.clone();
        for (&j, &g) in self.linking.iter().zip(&gamma) {
            lp.lower[j] = g;
            lp.upper[j] = g;
        }
        let mut row = vec![0.0; inst.n1];
        row.extend(inst.d2.iter().map(|v| -v));
        lp.push_row(row, -(phi + 1e-9 * (1.0 + phi.abs())));
        let sol = solve_milp(&MilpModel::new(lp, self.integer.clone()), &self.milp_limits())?;
        if sol.status == MilpStatus::Limit {
            return Err(EngineError::TimeLimit);
        }
        self.stats.ub_solves += 1;
        self.stats.lp_iterations += sol.lp_iterations;
        let best = match (sol.status, sol.x) {
            (MilpStatus::Optimal, Some(z)) => Some((z, sol.objective)),
            _ => None,
        };
        self.pool.insert(&gamma, PoolTag::UbSolved { y_hat, phi, best: best.clone() });
        self.emit(Event::UpperBoundSolved { node: self.current_node, gamma, value: best.as_ref().map(|b| b.1) });
        Ok(best.map(|(z, v)| {
            let (xs, ys) = z.split_at(inst.n1);
            self.offer(xs, ys, "best-ub");
            (xs.to_vec(), ys.to_vec(), v)
        }))
    }

    /// `Xi(x)`: the best `d1 y` over follower-optimal reactions that satisfy
    /// the first-level rows. `None` stands for `+inf`.
    pub fn evaluate_xi(&mut self, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>, EngineError> {
        let phi = match self.solve_second_level(x)? {
            SecondLevel::Infeasible => return Ok(None),
            SecondLevel::Feasible { phi, .. } => phi,
        };
        let inst = self.inst;
        let mut lp = LpModel::new(inst.d1.clone());
        for i in 0..inst.m1() {
            lp.push_row(inst.g1[i].clone(), inst.b1[i] - dot(&inst.a1[i], x));
        }
        for (g, b) in inst.g2.iter().zip(inst.second_level_rhs(x)) {
            lp.push_row(g.clone(), b);
        }
        lp.push_row(inst.d2.iter().map(|v| -v).collect(), -(phi + 1e-9 * (1.0 + phi.abs())));
        lp.lower.clone_from(&inst.lb_y);
        lp.upper.clone_from(&inst.ub_y);
        let sol = solve_milp(&MilpModel::new(lp, inst.follower_integer_mask()), &self.milp_limits())?;
        match (sol.status, sol.x) {
            (MilpStatus::Optimal, Some(y)) => Ok(Some((sol.objective, y))),
            (MilpStatus::Limit, _) => Err(EngineError::TimeLimit),
            _ => Ok(None),
        }
    }

    /// Checks a candidate from a heuristic and installs it (or `(x, y_hat)`)
    /// when bilevel feasible and improving.
    pub fn try_candidate(&mut self, z: &[f64], source: &str) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>, EngineError> {
        let inst = self.inst;
        let (x, y) = z.split_at(inst.n1);
        if !inst.x_integral(x) {
            return Ok(None);
        }
        let x = self.snap(x);
        match self.solve_second_level(&x)? {
            SecondLevel::Infeasible => Ok(None),
            SecondLevel::Feasible { y_hat, phi } => {
                // keep the candidate's own y only when it is follower optimal to
                // the slack the best-bound solve uses, so heuristics cannot trade
                // the check tolerance for objective
                let tight = inst.follower_objective(y) <= phi + 1e-9 * (1.0 + phi.abs());
                let pick = if tight && check_feasibility(inst, &x, y, Some(phi)) == Feasibility::BilevelFeasible {
                    y.to_vec()
                } else if inst.first_level_feasible(&x, &y_hat, 1e-6) {
                    y_hat
                } else {
                    return Ok(None);
                };
                let value = inst.leader_objective(&x, &pick);
                if self.offer(&x, &pick, source) {
                    self.stats.heuristic_incumbents += 1;
                }
                Ok(Some((x, pick, value)))
            }
        }
    }

    /// Runs the enabled heuristics. `point` is an integral relaxation
    /// solution with its follower value, used by the improving objective cut.
    pub fn run_heuristics(&mut self, point: Option<(&[f64], f64)>) -> Result<(), EngineError> {
        let h = self.params.heuristics.clone();
        let limits = self.milp_limits();
        if h.improving_objective_cut {
            if let Some((_, phi)) = point {
                if let Some(z) = heuristics::improving_objective_cut(self.inst, phi, &limits)? {
                    self.try_candidate(&z, "improving-objective-cut")?;
                }
            }
        }
        if h.second_level_priority && self.upper.is_finite() {
            let target = self.improvement.target(self.upper);
            if let Some(z) = heuristics::second_level_priority(self.inst, target, &limits)? {
                self.try_candidate(&z, "second-level-priority")?;
            }
        }
        if h.weighted_sums {
            for w in h.weights {
                if let Some(z) = heuristics::weighted_sum(self.inst, w, &limits)? {
                    self.try_candidate(&z, "weighted-sums")?;
                }
            }
        }
        Ok(())
    }

    fn node_lp(&self, node: &Node) -> (LpModel, Vec<usize>) {
        let mut lp = self.base.clone();
        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let mut ids: Vec<usize> = self.global_cuts.iter().chain(&node.cuts).copied().collect();
        ids.sort_unstable();
        ids.dedup();
        for &id in &ids {
            lp.push_row(self.cuts[id].coeffs.clone(), self.cuts[id].rhs);
        }
        (lp, ids)
    }

    fn map_basis(&self, warm: &WarmStart, rows: &[usize]) -> Basis {
        let fixed = self.inst.num_cols() + self.base.num_rows();
        let mut status = warm.basis.status[..fixed.min(warm.basis.status.len())].to_vec();
        for id in rows {
            let s = warm
                .rows
                .iter()
                .position(|r| r == id)
                .and_then(|k| warm.basis.status.get(fixed + k).copied())
                .unwrap_or(VarStatus::Basic);
            status.push(s);
        }
        Basis { status }
    }

    fn new_node(&mut self, lower: Vec<f64>, upper: Vec<f64>, cuts: Vec<usize>, bound: f64, depth: usize) -> Node {
        let id = self.next_id;
        self.next_id += 1;
        Node { id, depth, lower, upper, cuts, bound, warm: None, branched: None }
    }

    pub fn run(mut self) -> Result<BilevelResult, EngineError> {
        let inst = self.inst;
        let lower: Vec<f64> = inst.lb_x.iter().chain(&inst.lb_y).copied().collect();
        let upper: Vec<f64> = inst.ub_x.iter().chain(&inst.ub_y).copied().collect();
        let root = self.new_node(lower, upper, Vec::new(), f64::NEG_INFINITY, 0);
        let mut open = match self.params.search {
            Search::BestFirst => OpenNodes::Best(BinaryHeap::new()),
            Search::DepthFirst => OpenNodes::Depth(Vec::new()),
        };
        open.push(root);
        let mut status = None;
        while let Some(node) = open.pop() {
            if self.improvement.prunes(node.bound, self.upper) {
                self.emit(Event::Pruned { node: node.id, reason: PruneReason::Bound });
                continue;
            }
            if self.params.node_limit.is_some_and(|l| self.stats.nodes >= l) {
                open.push(node);
                status = Some(BilevelStatus::NodeLimit);
                break;
            }
            if self.stats.nodes > 0 && self.out_of_time() {
                open.push(node);
                status = Some(BilevelStatus::TimeLimit);
                break;
            }
            match self.process_node(node)? {
                Outcome::Pruned => {}
                Outcome::Branched(children) => {
                    for c in children {
                        open.push(c);
                    }
                }
                Outcome::Interrupted(n) => {
                    open.push(n);
                    status = Some(BilevelStatus::TimeLimit);
                    break;
                }
            }
            if self.params.record_events {
                let lower = self.upper.min(open.min_bound());
                self.emit(Event::Bounds { lower, upper: self.upper });
            }
        }
        let (status, lower) = match status {
            Some(s) => (s, self.upper.min(open.min_bound())),
            None if self.incumbent.is_some() => (BilevelStatus::Optimal, self.upper),
            None => (BilevelStatus::Infeasible, self.upper),
        };
        let verified = match &self.incumbent {
            Some((x, y)) => {
                let phi = match follower_solve(inst, x, MilpLimits::default())? {
                    SecondLevel::Feasible { phi, .. } => Some(phi),
                    SecondLevel::Infeasible => None,
                };
                let ok = check_feasibility(inst, x, y, phi) == Feasibility::BilevelFeasible;
                if !ok {
                    log::warn!("incumbent failed the final feasibility check");
                }
                ok
            }
            None => false,
        };
        self.stats.wall_time = self.start.elapsed();
        let (x, y) = match self.incumbent {
            Some((x, y)) => (Some(x), Some(y)),
            None => (None, None),
        };
        Ok(BilevelResult { status, x, y, upper: self.upper, lower, stats: self.stats, events: self.events, verified })
    }

    fn linking_fixed(&self, node: &Node) -> bool {
        self.linking.iter().all(|&j| node.lower[j] == node.upper[j])
    }

    fn process_node(&mut self, mut node: Node) -> Result<Outcome, EngineError> {
        self.current_node = node.id;
        self.stats.nodes += 1;
        let linking_fixed = self.linking_fixed(&node);
        let mut rounds = 0;
        let mut first = true;
        let mut warm = node.warm.take();
        loop {
            if !self.params.use_linking_pool {
                // Without the pool, results only live for one pass of the loop.
                self.pool.clear();
            }
            let (lp, rows) = self.node_lp(&node);
            let basis = warm.as_ref().map(|w| self.map_basis(w, &rows));
            let sol = solve_lp(&lp, basis.as_ref())?;
            self.stats.lp_iterations += sol.iterations;
            let bound = match sol.status {
                LpStatus::Optimal => sol.objective,
                LpStatus::Infeasible => {
                    self.emit(Event::Pruned { node: node.id, reason: PruneReason::Infeasible });
                    return Ok(Outcome::Pruned);
                }
                LpStatus::Unbounded => return Err(EngineError::UnboundedRelaxation),
            };
            if first {
                if let Some((col, up, dist)) = node.branched {
                    self.pseudo.update(col, up, node.bound, bound, dist);
                }
            }
            node.bound = node.bound.max(bound);
            self.emit(Event::NodeBound {
                node: node.id,
                depth: node.depth,
                bound,
                incumbent: self.upper,
                lower: node.lower.clone(),
                upper: node.upper.clone(),
            });
            if self.out_of_time() {
                node.warm = sol.basis.clone().map(|basis| WarmStart { basis, rows: rows.clone() });
                return Ok(Outcome::Interrupted(node));
            }
            match self.node_round(&mut node, &lp, &rows, &sol, linking_fixed, first, &mut rounds) {
                Ok(Some(outcome)) => return Ok(outcome),
                Ok(None) => {}
                Err(EngineError::TimeLimit) => return Ok(Outcome::Interrupted(node)),
                Err(e) => return Err(e),
            }
            warm = sol.basis.map(|basis| WarmStart { basis, rows });
            first = false;
        }
    }

    fn prune(&mut self, node: &Node, reason: PruneReason) -> Option<Outcome> {
        self.emit(Event::Pruned { node: node.id, reason });
        Some(Outcome::Pruned)
    }

    /// One pass of the node loop after the relaxation was solved. Returns
    /// `None` when a cut was added and the relaxation must be re-solved.
    #[allow(clippy::too_many_arguments)]
    fn node_round(
        &mut self,
        node: &mut Node,
        lp: &LpModel,
        rows: &[usize],
        sol: &LpSolution,
        linking_fixed: bool,
        first: bool,
        rounds: &mut usize,
    ) -> Result<Option<Outcome>, EngineError> {
        let inst = self.inst;
        let (x, y) = sol.x.split_at(inst.n1);
        let l_int = self.linking.iter().all(|&j| (x[j] - x[j].round()).abs() <= INT_TOL);
        let x_int = inst.x_integral(x);
        let xy_int = x_int && inst.y_integral(y);
        let gamma = l_int.then(|| self.gamma(x));
        let tag = |s: &Self| gamma.as_ref().and_then(|g| s.pool.get(g).cloned());
        let p = &self.params;

        if let Some(r) = should_prune(self.improvement, Some(sol.objective), self.upper, linking_fixed, tag(self).as_ref()) {
            return Ok(self.prune(node, r));
        }

        let linking = self.strategy == BranchStrategy::Linking;
        let fractional = self.strategy == BranchStrategy::Fractional;
        if let Some(g) = &gamma {
            let wanted = (linking && xy_int && linking_fixed)
                || (fractional && xy_int)
                || (p.solve_second_level_when_xy_vars_int && xy_int)
                || (p.solve_second_level_when_x_vars_int && x_int)
                || p.solve_second_level_when_l_vars_int
                || (p.solve_second_level_when_l_vars_fixed && linking_fixed);
            if wanted && !self.pool.contains(g) {
                let out = self.solve_second_level(x)?;
                if out == SecondLevel::Infeasible && linking_fixed {
                    return Ok(self.prune(node, PruneReason::LinkingFixedInfeasible));
                }
            }
        }

        let mut reaction: Option<(Vec<f64>, f64)> = None;
        if let Some(t) = tag(self) {
            if let Some((y_hat, phi)) = t.reaction() {
                let (y_hat, phi) = (y_hat.to_vec(), phi);
                reaction = Some((y_hat.clone(), phi));
                if xy_int && inst.follower_objective(y) <= phi + phi_tol(phi) {
                    let xs = self.snap(x);
                    self.offer(&xs, y, "relaxation");
                    return Ok(self.prune(node, PruneReason::BilevelFeasible));
                }
                let p = &self.params;
                let want_ub = (linking && xy_int && linking_fixed)
                    || (p.compute_best_ub_when_x_vars_int && x_int)
                    || (p.compute_best_ub_when_l_vars_fixed && linking_fixed)
                    || p.compute_best_ub_when_l_vars_int;
                if !t.ub_solved() && want_ub {
                    self.solve_best_ub(x)?;
                    if linking_fixed {
                        return Ok(self.prune(node, PruneReason::LinkingFixedUbSolved));
                    }
                } else if x_int && inst.first_level_feasible(x, &y_hat, 1e-6) {
                    let xs = self.snap(x);
                    self.offer(&xs, &y_hat, "reaction");
                }
            }
        }

        if first && self.params.heuristics.any() {
            let freq = self.params.heuristics.frequency.max(1);
            if self.stats.nodes == 1 || self.stats.nodes.is_multiple_of(freq) {
                let point = match (&reaction, xy_int) {
                    (Some((_, phi)), true) => Some((&sol.x[..], *phi)),
                    _ => None,
                };
                self.run_heuristics(point)?;
                if self.improvement.prunes(sol.objective, self.upper) {
                    return Ok(self.prune(node, PruneReason::Bound));
                }
            }
        }

        let in_pool = gamma.as_ref().is_some_and(|g| self.pool.contains(g));
        let must_cut = fractional && xy_int;
        let try_cut = if must_cut {
            true
        } else {
            !(xy_int && !in_pool)
        };
        if try_cut && *rounds < self.params.max_cut_rounds {
            let ctx = CutContext { lp, basis: sol.basis.as_ref(), z: &sol.x, gamma: gamma.as_deref(), xy_int, linking_fixed, on_demand: must_cut };
            match self.generate_cut(node, &ctx)? {
                CutAttempt::Added(cut) => {
                    let id = self.cuts.len();
                    if cut.local {
                        node.cuts.push(id);
                    } else {
                        self.global_cuts.push(id);
                    }
                    self.stats.cuts.set(cut.class, self.stats.cuts.get(cut.class) + 1);
                    self.emit(Event::CutAdded {
                        node: node.id,
                        class: cut.class,
                        coeffs: cut.coeffs.clone(),
                        rhs: cut.rhs,
                        local: cut.local,
                        incumbent: self.upper,
                        lower: node.lower.clone(),
                        upper: node.upper.clone(),
                    });
                    self.cuts.push(cut);
                    *rounds += 1;
                    return Ok(None);
                }
                CutAttempt::Pruned(r) => return Ok(self.prune(node, r)),
                CutAttempt::None => {}
            }
        }
        self.branch(node, lp, rows, sol, gamma.as_deref(), linking_fixed).map(Some)
    }

    fn generate_cut(&mut self, node: &Node, ctx: &CutContext<'_>) -> Result<CutAttempt, EngineError> {
        let inst = self.inst;
        for class in self.families.clone() {
            let Some(gamma) = ctx.gamma else {
                continue;
            };
            let mut tag = self.pool.get(gamma).cloned();
            let cut = match class {
                CutClass::IntegerNoGood => {
                    let infeasible = match &tag {
                        Some(t) => match t.reaction() {
                            None => true,
                            Some((_, phi)) => inst.follower_objective(&ctx.z[inst.n1..]) > phi + phi_tol(phi),
                        },
                        None => false,
                    };
                    if !(ctx.xy_int && infeasible) {
                        continue;
                    }
                    cutgen::integer_no_good(inst, ctx.lp, ctx.z, node.id)
                }
                CutClass::GeneralizedNoGood | CutClass::HypercubeIc => {
                    let usable = !self.linking_free.is_empty()
                        && if class == CutClass::GeneralizedNoGood { self.props.all_linking_binary } else { ctx.basis.is_some() };
                    if !usable {
                        continue;
                    }
                    if matches!(tag, Some(PoolTag::SecondLevelFeasible { .. })) && ctx.on_demand {
                        self.solve_best_ub(&ctx.z[..inst.n1])?;
                        if ctx.linking_fixed {
                            return Ok(CutAttempt::Pruned(PruneReason::LinkingFixedUbSolved));
                        }
                        tag = self.pool.get(gamma).cloned();
                    }
                    let settled = matches!(tag, Some(PoolTag::SecondLevelInfeasible | PoolTag::UbSolved { .. }));
                    if !settled {
                        continue;
                    }
                    if class == CutClass::GeneralizedNoGood {
                        let vals: Vec<f64> = self.linking_free.iter().map(|&j| ctx.z[j]).collect();
                        cutgen::generalized_no_good(inst, &self.linking_free, &vals, node.id)
                    } else {
                        let Some(basis) = ctx.basis else { continue };
                        cutgen::hypercube_intersection(ctx.lp, basis, ctx.z, &self.linking_free, node.id)
                    }
                }
            };
            match cut {
                Ok(c) => return Ok(CutAttempt::Added(c)),
                Err(e) => log::trace!("node {}: {} refused: {e}", node.id, class.name()),
            }
        }
        Ok(CutAttempt::None)
    }

    fn branch(
        &mut self,
        node: &mut Node,
        lp: &LpModel,
        rows: &[usize],
        sol: &LpSolution,
        gamma: Option<&[f64]>,
        linking_fixed: bool,
    ) -> Result<Outcome, EngineError> {
        let z = &sol.x;
        let mut cands = branching::candidates(self.strategy, z, &node.lower, &node.upper, &self.integer, &self.linking_free);
        if cands.is_empty() {
            cands = branching::fractional_candidates(z, &self.integer, &[]);
        }
        if cands.is_empty() {
            cands = self
                .linking_free
                .iter()
                .filter(|&&j| node.lower[j] < node.upper[j])
                .map(|&j| Candidate { column: j, value: z[j], kind: SplitKind::Integral })
                .collect();
        }
        if cands.is_empty() {
            // Every linking column is fixed and the point is integral: the
            // best point of this fiber settles the node.
            debug_assert!(linking_fixed && gamma.is_some());
            self.solve_best_ub(&z[..self.inst.n1])?;
            return Ok(self.prune(node, PruneReason::LinkingFixedUbSolved).unwrap());
        }
        let decision = if self.params.strong_branching && cands.len() > 1 && cands.len() <= 20 {
            self.strong_branch(node, lp, sol, &cands)?
        } else {
            branching::select(&cands, &self.pseudo, &node.upper)
        };
        let j = decision.column;
        let (dd, du) = decision.distances();
        let warm = sol.basis.clone().map(|basis| WarmStart { basis, rows: rows.to_vec() });
        let mut down = self.new_node(node.lower.clone(), node.upper.clone(), node.cuts.clone(), node.bound, node.depth + 1);
        down.upper[j] = decision.down_upper;
        down.warm = warm.clone();
        down.branched = Some((j, false, dd));
        let mut up = self.new_node(node.lower.clone(), node.upper.clone(), node.cuts.clone(), node.bound, node.depth + 1);
        up.lower[j] = decision.up_lower;
        up.warm = warm;
        up.branched = Some((j, true, du));
        if !decision.down_first {
            std::mem::swap(&mut down.id, &mut up.id);
        }
        self.emit(Event::Branched {
            node: node.id,
            column: j,
            down_upper: decision.down_upper,
            up_lower: decision.up_lower,
            children: [down.id, up.id],
        });
        let mut children = vec![down, up];
        children.sort_by_key(|c| c.id);
        if matches!(self.params.search, Search::DepthFirst) {
            children.reverse();
        }
        Ok(Outcome::Branched(children))
    }

    fn strong_branch(&mut self, node: &Node, lp: &LpModel, sol: &LpSolution, cands: &[Candidate]) -> Result<BranchDecision, EngineError> {
        let mut scores = Vec::with_capacity(cands.len());
        for c in cands {
            let d = BranchDecision::new(*c, node.upper[c.column]);
            let mut child_bound = |lo: f64, hi: f64| -> Result<f64, EngineError> {
                let m = lp.fix_bounds(c.column, lo, hi)?;
                let s = solve_lp(&m, sol.basis.as_ref())?;
                self.stats.lp_iterations += s.iterations;
                Ok(if s.is_optimal() { s.objective - sol.objective } else { f64::INFINITY })
            };
            let down = child_bound(node.lower[c.column], d.down_upper)?;
            let up = child_bound(d.up_lower, node.upper[c.column])?;
            scores.push(branching::product_score(down.min(1e12), up.min(1e12)));
        }
        let k = branching::argmax_score(cands, &scores);
        Ok(BranchDecision::new(cands[k], node.upper[cands[k].column]))
    }
}

struct CutContext<'a> {
    lp: &'a LpModel,
    basis: Option<&'a Basis>,
    z: &'a [f64],
    gamma: Option<&'a [f64]>,
    xy_int: bool,
    linking_fixed: bool,
    /// Whether the best-bound problem may be solved to enable a cut.
    on_demand: bool,
}

/// Solves the follower MILP at `x`.
pub fn follower_solve(inst: &MiblpInstance, x: &[f64], limits: MilpLimits) -> Result<SecondLevel, EngineError> {
    let model = MilpModel::new(inst.follower_lp(x), inst.follower_integer_mask());
    let sol = solve_milp(&model, &limits)?;
    match (sol.status, sol.x) {
        (MilpStatus::Optimal, Some(y)) => Ok(SecondLevel::Feasible { y_hat: y, phi: sol.objective }),
        (MilpStatus::Limit, _) => Err(EngineError::TimeLimit),
        _ => Ok(SecondLevel::Infeasible),
    }
}
