use super::IoError;
use crate::model::MiblpInstance;

/// A follower MILP in maximization form: `max profit y` s.t. `rows`
/// (each `coeffs . y >= rhs`), `0 <= y <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerMilp {
    pub profit: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

/// Builds the interdiction bilevel program: the leader picks binary `x`
/// subject to `leader_rows` (each `coeffs . x >= rhs`), the follower
/// maximizes profit with `y_i <= u_i (1 - x_i)`, and the leader minimizes
/// the follower's profit.
///
/// Column 0 of the result is the fixed unit column; leader column `i` is
/// stored at index `i + 1`. Follower columns are reordered integers first.
pub fn build_interdiction(follower: &FollowerMilp, leader_rows: &[(Vec<f64>, f64)]) -> Result<MiblpInstance, IoError> {
    let n = follower.profit.len();
    if follower.upper.len() != n || follower.integer.len() != n {
        return Err(IoError::Assemble("follower bounds/integrality length mismatch".into()));
    }
    if let Some(i) = follower.upper.iter().position(|u| !u.is_finite() || *u < 0.0) {
        return Err(IoError::Assemble(format!("follower variable {i} needs a finite upper bound")));
    }
    if let Some((r, _)) = follower.rows.iter().find(|(r, _)| r.len() != n) {
        return Err(IoError::Assemble(format!("follower row has {} coefficients, expected {n}", r.len())));
    }
    if let Some((r, _)) = leader_rows.iter().find(|(r, _)| r.len() != n) {
        return Err(IoError::Assemble(format!("leader row has {} coefficients, expected {n}", r.len())));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| !follower.integer[i]);
    let r2 = follower.integer.iter().filter(|&&b| b).count();

    let mut inst = MiblpInstance::empty(n + 1, n, n + 1, r2);
    inst.name = "interdiction".into();
    inst.unit_column = Some(0);
    inst.x_names[0] = super::UNIT_COLUMN_NAME.to_string();
    inst.lb_x[0] = 1.0;
    inst.ub_x[0] = 1.0;
    for (k, &i) in order.iter().enumerate() {
        inst.ub_x[i + 1] = 1.0;
        inst.x_names[i + 1] = format!("x{i}");
        inst.y_names[k] = format!("y{i}");
        inst.ub_y[k] = follower.upper[i];
        inst.d2[k] = -follower.profit[i] + 0.0;
        inst.d1[k] = follower.profit[i];
    }
    for (coeffs, rhs) in leader_rows {
        let mut a = vec![0.0; n + 1];
        a[1..].copy_from_slice(coeffs);
        inst.push_first_level_row(a, vec![0.0; n], *rhs);
    }
    for (coeffs, rhs) in &follower.rows {
        let mut a = vec![0.0; n + 1];
        a[0] = *rhs;
        let g = order.iter().map(|&i| coeffs[i]).collect();
        inst.push_second_level_row(a, g);
    }
    for (k, &i) in order.iter().enumerate() {
        // -y_i >= u_i x_i - u_i
        let u = follower.upper[i];
        let mut a = vec![0.0; n + 1];
        a[0] = -u;
        a[i + 1] = u;
        let mut g = vec![0.0; n];
        g[k] = -1.0;
        inst.push_second_level_row(a, g);
    }
    Ok(inst)
}
