use super::{dot, Basis, LpError, LpModel, LpSolution, LpStatus, VarStatus, FEAS_TOL, OPT_TOL};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 50;
/// Pivots without objective progress before Bland's rule takes over.
const BLAND_AFTER: usize = 5_000;

/// Solves `model`, starting from `warm` when it is a usable basis.
///
/// A dual-feasible warm basis is reoptimized with the dual simplex; any other
/// start runs the composite primal simplex (phase 1 minimizes the sum of
/// bound infeasibilities of the basic variables).
pub fn solve_lp(model: &LpModel, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    model.validate()?;
    let mut s = Simplex::new(model);
    let mut started = false;
    if let Some(b) = warm {
        if s.load_basis(b) {
            started = true;
            if s.make_dual_feasible() {
                match s.dual()? {
                    DualEnd::Optimal => {}
                    DualEnd::Infeasible(ray) => return Ok(s.infeasible(ray)),
                    DualEnd::LostDualFeasibility => {}
                }
            }
        }
    }
    if !started {
        s.slack_basis();
    }
    loop {
        match s.primal()? {
            PrimalEnd::Optimal => {}
            PrimalEnd::Infeasible(ray) => return Ok(s.infeasible(ray)),
            PrimalEnd::Unbounded(ray) => return Ok(s.unbounded(ray)),
        }
        // Verify on a fresh factorization; drift sends us back into the loop.
        if s.refactor().is_err() {
            s.slack_basis();
            continue;
        }
        s.compute_primal();
        if s.max_basic_infeasibility() <= FEAS_TOL && s.dual_infeasibility(&s.cost.clone()) <= OPT_TOL {
            return Ok(s.optimal());
        }
    }
}

/// Direction of the polyhedral cone spanned at a basic solution when nonbasic
/// variable `var` moves away from its bound by one unit.
#[derive(Debug, Clone)]
pub struct NonbasicRay {
    /// Index into columns (`< n`) or row logicals (`n + i`).
    pub var: usize,
    pub at_upper: bool,
    /// Change of the structural columns per unit step.
    pub direction: Vec<f64>,
}

/// Rays of the basis cone for every non-fixed nonbasic variable. Returns
/// `None` when the basis cannot be factorized or holds a free nonbasic.
pub fn nonbasic_rays(model: &LpModel, basis: &Basis) -> Option<Vec<NonbasicRay>> {
    let mut s = Simplex::new(model);
    if !s.load_basis(basis) {
        return None;
    }
    let n = s.n;
    let mut rays = Vec::new();
    for j in 0..n + s.m {
        let dir = match s.status[j] {
            VarStatus::Basic => continue,
            VarStatus::Free => return None,
            _ if s.lo[j] == s.hi[j] => continue,
            VarStatus::AtLower => 1.0,
            VarStatus::AtUpper => -1.0,
        };
        let alpha = s.ftran(j);
        let mut direction = vec![0.0; n];
        if j < n {
            direction[j] = dir;
        }
        for (k, &p) in s.head.iter().enumerate() {
            if p < n {
                direction[p] = -dir * alpha[k];
            }
        }
        rays.push(NonbasicRay {
            var: j,
            at_upper: dir < 0.0,
            direction,
        });
    }
    Some(rays)
}

enum PrimalEnd {
    Optimal,
    Infeasible(Vec<f64>),
    Unbounded(Vec<f64>),
}

enum DualEnd {
    Optimal,
    Infeasible(Vec<f64>),
    LostDualFeasibility,
}

struct Simplex<'a> {
    model: &'a LpModel,
    n: usize,
    m: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    x: Vec<f64>,
    /// Row-major dense basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(model: &'a LpModel) -> Self {
        let n = model.num_cols();
        let m = model.num_rows();
        let mut lo = model.lower.clone();
        let mut hi = model.upper.clone();
        lo.extend(model.rhs.iter().copied());
        hi.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut cost = model.objective.clone();
        cost.extend(std::iter::repeat_n(0.0, m));
        Simplex {
            model,
            n,
            m,
            lo,
            hi,
            cost,
            status: vec![VarStatus::AtLower; n + m],
            head: Vec::new(),
            x: vec![0.0; n + m],
            binv: Vec::new(),
            since_refactor: 0,
            iterations: 0,
            max_iterations: 50_000 + 200 * (n + m),
        }
    }

    fn nonbasic_status(&self, j: usize) -> VarStatus {
        if self.lo[j].is_finite() {
            VarStatus::AtLower
        } else if self.hi[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn slack_basis(&mut self) {
        for j in 0..self.n {
            self.status[j] = self.nonbasic_status(j);
        }
        self.head = (self.n..self.n + self.m).collect();
        for j in self.n..self.n + self.m {
            self.status[j] = VarStatus::Basic;
        }
        // The slack basis matrix is -I.
        self.binv = vec![0.0; self.m * self.m];
        for i in 0..self.m {
            self.binv[i * self.m + i] = -1.0;
        }
        self.since_refactor = 0;
    }

    fn load_basis(&mut self, basis: &Basis) -> bool {
        let mut st = basis.status.clone();
        if st.len() < self.n + self.m && st.len() >= self.n {
            st.extend(std::iter::repeat_n(VarStatus::Basic, self.n + self.m - st.len()));
        }
        if st.len() != self.n + self.m {
            return false;
        }
        let head: Vec<usize> = (0..st.len()).filter(|&j| st[j] == VarStatus::Basic).collect();
        if head.len() != self.m {
            return false;
        }
        for (j, s) in st.iter_mut().enumerate() {
            let fixed = match *s {
                VarStatus::Basic => continue,
                VarStatus::AtLower if self.lo[j].is_finite() => continue,
                VarStatus::AtUpper if self.hi[j].is_finite() => continue,
                VarStatus::Free if !self.lo[j].is_finite() && !self.hi[j].is_finite() => continue,
                _ => self.nonbasic_status(j),
            };
            *s = fixed;
        }
        self.status = st;
        self.head = head;
        self.refactor().is_ok()
    }

    fn column_entry(&self, i: usize, j: usize) -> f64 {
        if j < self.n {
            self.model.rows[i][j]
        } else if j - self.n == i {
            -1.0
        } else {
            0.0
        }
    }

    fn refactor(&mut self) -> Result<(), ()> {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting.
        let mut a = vec![0.0; m * m];
        for (k, &j) in self.head.iter().enumerate() {
            for i in 0..m {
                a[i * m + k] = self.column_entry(i, j);
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-11 {
                return Err(());
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let p = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
        // Solving B z = e gives z = inv * e; rows of `inv` index basis positions.
        self.binv = inv;
        self.since_refactor = 0;
        Ok(())
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.hi[j],
            VarStatus::Free => 0.0,
            VarStatus::Basic => self.x[j],
        }
    }

    fn compute_primal(&mut self) {
        let (n, m) = (self.n, self.m);
        let mut r = vec![0.0; m];
        for j in 0..n + m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < n {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri += self.model.rows[i][j] * v;
                }
            } else {
                r[j - n] -= v;
            }
        }
        for k in 0..m {
            let row = &self.binv[k * m..(k + 1) * m];
            self.x[self.head[k]] = -dot(row, &r);
        }
    }

    /// Row duals `y = c_B B^-1` and reduced costs for all variables.
    fn compute_duals(&self, cost: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let mut y = vec![0.0; m];
        for k in 0..m {
            let c = cost[self.head[k]];
            if c != 0.0 {
                let row = &self.binv[k * m..(k + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        let mut d = vec![0.0; n + m];
        for j in 0..n {
            let mut s = 0.0;
            for (i, yi) in y.iter().enumerate() {
                s += yi * self.model.rows[i][j];
            }
            d[j] = cost[j] - s;
        }
        for i in 0..m {
            d[n + i] = cost[n + i] + y[i];
        }
        for &p in &self.head {
            d[p] = 0.0;
        }
        (y, d)
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut alpha = vec![0.0; m];
        for (k, a) in alpha.iter_mut().enumerate() {
            let row = &self.binv[k * m..(k + 1) * m];
            *a = if j < n {
                (0..m).map(|i| row[i] * self.model.rows[i][j]).sum()
            } else {
                -row[j - n]
            };
        }
        alpha
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], leaving: VarStatus) {
        let m = self.m;
        let p = self.head[r];
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            for k in 0..m {
                self.binv[i * m + k] -= f * self.binv[r * m + k];
            }
        }
        self.head[r] = q;
        self.status[q] = VarStatus::Basic;
        self.status[p] = leaving;
        self.since_refactor += 1;
        self.iterations += 1;
        if self.since_refactor >= REFACTOR_EVERY && self.refactor().is_err() {
            // Fall back to the slack basis; the outer loops restart from it.
            self.slack_basis();
        }
    }

    fn infeasibility_of(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lo[j] {
            self.lo[j] - v
        } else if v > self.hi[j] {
            v - self.hi[j]
        } else {
            0.0
        }
    }

    fn max_basic_infeasibility(&self) -> f64 {
        self.head.iter().map(|&p| self.infeasibility_of(p)).fold(0.0, f64::max)
    }

    fn dual_infeasibility(&self, cost: &[f64]) -> f64 {
        let (_, d) = self.compute_duals(cost);
        let mut worst: f64 = 0.0;
        for j in 0..self.n + self.m {
            if self.lo[j] == self.hi[j] {
                continue;
            }
            let v = match self.status[j] {
                VarStatus::Basic => 0.0,
                VarStatus::AtLower => -d[j],
                VarStatus::AtUpper => d[j],
                VarStatus::Free => d[j].abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    fn check_iterations(&self) -> Result<(), LpError> {
        if self.iterations > self.max_iterations {
            Err(LpError::IterationLimit(self.max_iterations))
        } else {
            Ok(())
        }
    }

    fn primal(&mut self) -> Result<PrimalEnd, LpError> {
        let (n, m) = (self.n, self.m);
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;
        let mut last_phase1 = true;
        loop {
            self.check_iterations()?;
            self.compute_primal();
            let phase1 = self.head.iter().any(|&p| self.infeasibility_of(p) > FEAS_TOL);
            let cost: Vec<f64> = if phase1 {
                let mut c = vec![0.0; n + m];
                for &p in &self.head {
                    if self.x[p] < self.lo[p] - FEAS_TOL {
                        c[p] = -1.0;
                    } else if self.x[p] > self.hi[p] + FEAS_TOL {
                        c[p] = 1.0;
                    }
                }
                c
            } else {
                self.cost.clone()
            };
            let obj: f64 = if phase1 {
                self.head.iter().map(|&p| self.infeasibility_of(p)).sum()
            } else {
                (0..n).map(|j| self.cost[j] * self.x[j]).sum()
            };
            if phase1 != last_phase1 || obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                stall = 0;
                last_obj = obj;
                last_phase1 = phase1;
            } else {
                stall += 1;
                if stall > BLAND_AFTER {
                    bland = true;
                }
            }
            let (y, d) = self.compute_duals(&cost);

            // Entering variable.
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..n + m {
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                let (gain, dir) = match self.status[j] {
                    VarStatus::Basic => continue,
                    VarStatus::AtLower if d[j] < -OPT_TOL => (-d[j], 1.0),
                    VarStatus::AtUpper if d[j] > OPT_TOL => (d[j], -1.0),
                    VarStatus::Free if d[j].abs() > OPT_TOL => (d[j].abs(), -d[j].signum()),
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if gain > best {
                    best = gain;
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return Ok(if phase1 {
                    PrimalEnd::Infeasible(y)
                } else {
                    PrimalEnd::Optimal
                });
            };

            let alpha = self.ftran(q);
            let mut best_t = if self.lo[q].is_finite() && self.hi[q].is_finite() {
                self.hi[q] - self.lo[q]
            } else {
                f64::INFINITY
            };
            let mut leave: Option<(usize, VarStatus)> = None;
            let mut best_piv = 0.0;
            for k in 0..m {
                let a = alpha[k];
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                let p = self.head[k];
                let delta = -dir * a;
                let xp = self.x[p];
                let (limit, side) = if phase1 && xp < self.lo[p] - FEAS_TOL {
                    if delta > 0.0 {
                        ((self.lo[p] - xp) / delta, VarStatus::AtLower)
                    } else {
                        continue;
                    }
                } else if phase1 && xp > self.hi[p] + FEAS_TOL {
                    if delta < 0.0 {
                        ((xp - self.hi[p]) / -delta, VarStatus::AtUpper)
                    } else {
                        continue;
                    }
                } else if delta > 0.0 {
                    if !self.hi[p].is_finite() {
                        continue;
                    }
                    ((self.hi[p] - xp).max(0.0) / delta, VarStatus::AtUpper)
                } else {
                    if !self.lo[p].is_finite() {
                        continue;
                    }
                    ((xp - self.lo[p]).max(0.0) / -delta, VarStatus::AtLower)
                };
                let better = if limit < best_t - 1e-12 {
                    true
                } else if limit <= best_t + 1e-12 {
                    match leave {
                        None => best_t.is_infinite() || a.abs() > best_piv,
                        Some((r, _)) => {
                            if bland {
                                p < self.head[r]
                            } else {
                                a.abs() > best_piv
                            }
                        }
                    }
                } else {
                    false
                };
                if better {
                    best_t = limit.min(best_t);
                    leave = Some((k, side));
                    best_piv = a.abs();
                }
            }
            if best_t.is_infinite() {
                if phase1 {
                    // Phase 1 is bounded below; an unlimited step is numerical noise.
                    if self.refactor().is_err() {
                        self.slack_basis();
                    }
                    self.iterations += 1;
                    continue;
                }
                let mut ray = vec![0.0; n];
                if q < n {
                    ray[q] = dir;
                }
                for (k, &p) in self.head.iter().enumerate() {
                    if p < n {
                        ray[p] = -dir * alpha[k];
                    }
                }
                return Ok(PrimalEnd::Unbounded(ray));
            }
            match leave {
                None => {
                    // Bound flip of the entering variable.
                    self.status[q] = if dir > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.iterations += 1;
                }
                Some((r, side)) => self.pivot(r, q, &alpha, side),
            }
        }
    }

    /// Moves boxed nonbasics to the bound matching their reduced-cost sign.
    /// Returns false if dual feasibility cannot be reached that way.
    fn make_dual_feasible(&mut self) -> bool {
        let (_, d) = self.compute_duals(&self.cost.clone());
        for j in 0..self.n + self.m {
            if self.lo[j] == self.hi[j] {
                continue;
            }
            match self.status[j] {
                VarStatus::Basic => {}
                VarStatus::AtLower if d[j] < -OPT_TOL => {
                    if self.hi[j].is_finite() {
                        self.status[j] = VarStatus::AtUpper;
                    } else {
                        return false;
                    }
                }
                VarStatus::AtUpper if d[j] > OPT_TOL => {
                    if self.lo[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                    } else {
                        return false;
                    }
                }
                VarStatus::Free if d[j].abs() > OPT_TOL => return false,
                _ => {}
            }
        }
        true
    }

    fn dual(&mut self) -> Result<DualEnd, LpError> {
        let (n, m) = (self.n, self.m);
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        loop {
            self.check_iterations()?;
            self.compute_primal();
            let cost = self.cost.clone();
            let (_, d) = self.compute_duals(&cost);
            if self.dual_infeasibility(&cost) > 1e3 * OPT_TOL {
                return Ok(DualEnd::LostDualFeasibility);
            }
            let obj: f64 = (0..n).map(|j| self.cost[j] * self.x[j]).sum();
            if obj > last_obj + 1e-12 * (1.0 + obj.abs()) {
                last_obj = obj;
                stall = 0;
            } else {
                stall += 1;
                if stall > BLAND_AFTER {
                    bland = true;
                }
            }

            // Leaving row: largest bound violation among basics.
            let mut leave: Option<usize> = None;
            let mut worst = FEAS_TOL;
            for k in 0..m {
                let inf = self.infeasibility_of(self.head[k]);
                if inf > FEAS_TOL && bland {
                    if leave.is_none_or(|r| self.head[k] < self.head[r]) {
                        leave = Some(k);
                    }
                } else if inf > worst {
                    worst = inf;
                    leave = Some(k);
                }
            }
            let Some(r) = leave else {
                return Ok(DualEnd::Optimal);
            };
            let p = self.head[r];
            let to_lower = self.x[p] < self.lo[p];

            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_piv = 0.0;
            for j in 0..n + m {
                if self.status[j] == VarStatus::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let a = if j < n {
                    (0..m).map(|i| row[i] * self.model.rows[i][j]).sum::<f64>()
                } else {
                    -row[j - n]
                };
                if a.abs() < PIVOT_TOL {
                    continue;
                }
                // The basic variable moves by -a per unit increase of x_j.
                let eligible = match (self.status[j], to_lower) {
                    (VarStatus::AtLower, true) => a < 0.0,
                    (VarStatus::AtUpper, true) => a > 0.0,
                    (VarStatus::AtLower, false) => a > 0.0,
                    (VarStatus::AtUpper, false) => a < 0.0,
                    (VarStatus::Free, _) => true,
                    (VarStatus::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = d[j].abs() / a.abs();
                let better = if bland {
                    ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && enter.is_none_or(|e| j < e))
                } else {
                    ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > best_piv)
                };
                if better {
                    best_ratio = ratio.min(best_ratio);
                    best_piv = a.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                let mut ray = row;
                if !to_lower {
                    ray.iter_mut().for_each(|v| *v = -*v);
                }
                return Ok(DualEnd::Infeasible(ray));
            };
            let alpha = self.ftran(q);
            if alpha[r].abs() < PIVOT_TOL {
                if self.refactor().is_err() {
                    return Ok(DualEnd::LostDualFeasibility);
                }
                self.iterations += 1;
                continue;
            }
            let side = if to_lower {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
            self.pivot(r, q, &alpha, side);
        }
    }

    fn base_solution(&self, status: LpStatus) -> LpSolution {
        LpSolution {
            status,
            x: self.x[..self.n].to_vec(),
            objective: match status {
                LpStatus::Infeasible => f64::INFINITY,
                LpStatus::Unbounded => f64::NEG_INFINITY,
                LpStatus::Optimal => 0.0,
            },
            basis: None,
            row_duals: Vec::new(),
            reduced_costs: Vec::new(),
            ray: None,
            iterations: self.iterations,
        }
    }

    fn infeasible(&self, ray: Vec<f64>) -> LpSolution {
        LpSolution {
            ray: Some(ray),
            ..self.base_solution(LpStatus::Infeasible)
        }
    }

    fn unbounded(&self, ray: Vec<f64>) -> LpSolution {
        LpSolution {
            ray: Some(ray),
            ..self.base_solution(LpStatus::Unbounded)
        }
    }

    fn optimal(&self) -> LpSolution {
        let n = self.n;
        let (y, d) = self.compute_duals(&self.cost);
        let mut x = self.x[..n].to_vec();
        // Snap values within tolerance onto their bounds.
        for (j, v) in x.iter_mut().enumerate() {
            if *v < self.lo[j] {
                *v = self.lo[j];
            } else if *v > self.hi[j] {
                *v = self.hi[j];
            }
        }
        let objective = self.model.objective_value(&x);
        LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            basis: Some(Basis {
                status: self.status.clone(),
            }),
            row_duals: y,
            reduced_costs: d[..n].to_vec(),
            ray: None,
            iterations: self.iterations,
        }
    }
}
