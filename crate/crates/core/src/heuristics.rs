//! Primal heuristics. Each one solves a single MILP over the integer
//! relaxation and returns its solution; the caller checks bilevel
//! feasibility, since none of these problems guarantees it.

use crate::milp::{solve_milp, MilpError, MilpLimits, MilpModel, MilpStatus};
use crate::model::MiblpInstance;

fn solve(inst: &MiblpInstance, objective: Vec<f64>, extra: Option<(Vec<f64>, f64)>, limits: &MilpLimits) -> Result<Option<Vec<f64>>, MilpError> {
    let mut lp = inst.relaxation();
    lp.objective = objective;
    if let Some((row, rhs)) = extra {
        lp.push_row(row, rhs);
    }
    let sol = solve_milp(&MilpModel::new(lp, inst.integer_mask()), limits)?;
    Ok(match sol.status {
        MilpStatus::Optimal => sol.x,
        _ => None,
    })
}

fn leader_costs(inst: &MiblpInstance) -> Vec<f64> {
    inst.c.iter().chain(&inst.d1).copied().collect()
}

fn follower_costs(inst: &MiblpInstance) -> Vec<f64> {
    std::iter::repeat_n(0.0, inst.n1).chain(inst.d2.iter().copied()).collect()
}

/// `min c x + d1 y` over the integer relaxation with `d2 y <= follower_value`,
/// where `follower_value` is the follower objective of a known reaction.
pub fn improving_objective_cut(inst: &MiblpInstance, follower_value: f64, limits: &MilpLimits) -> Result<Option<Vec<f64>>, MilpError> {
    let row = follower_costs(inst).iter().map(|v| -v + 0.0).collect();
    let rhs = -(follower_value + 1e-9 * (1.0 + follower_value.abs()));
    solve(inst, leader_costs(inst), Some((row, rhs)), limits)
}

/// `min d2 y` over the integer relaxation with `c x + d1 y <= target`.
pub fn second_level_priority(inst: &MiblpInstance, target: f64, limits: &MilpLimits) -> Result<Option<Vec<f64>>, MilpError> {
    let row = leader_costs(inst).iter().map(|v| -v + 0.0).collect();
    solve(inst, follower_costs(inst), Some((row, -target)), limits)
}

/// `min w (c x + d1 y) + (1 - w) d2 y` over the integer relaxation.
pub fn weighted_sum(inst: &MiblpInstance, w: f64, limits: &MilpLimits) -> Result<Option<Vec<f64>>, MilpError> {
    let obj = leader_costs(inst)
        .iter()
        .zip(follower_costs(inst))
        .map(|(l, f)| w * l + (1.0 - w) * f)
        .collect();
    solve(inst, obj, None, limits)
}
