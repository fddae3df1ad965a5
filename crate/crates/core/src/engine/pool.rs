use std::collections::HashMap;

/// Status of a linking vector in the pool.
#[derive(Debug, Clone, PartialEq)]
pub enum PoolTag {
    SecondLevelInfeasible,
    /// The follower problem was solved; `y_hat` is an optimal reaction and
    /// `phi` its value.
    SecondLevelFeasible { y_hat: Vec<f64>, phi: f64 },
    /// The best bilevel feasible point with this linking vector is known.
    /// `best` is `None` when no such point satisfies the first-level rows.
    UbSolved {
        y_hat: Vec<f64>,
        phi: f64,
        best: Option<(Vec<f64>, f64)>,
    },
}

impl PoolTag {
    pub fn reaction(&self) -> Option<(&[f64], f64)> {
        match self {
            PoolTag::SecondLevelInfeasible => None,
            PoolTag::SecondLevelFeasible { y_hat, phi } | PoolTag::UbSolved { y_hat, phi, .. } => Some((y_hat, *phi)),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, PoolTag::SecondLevelInfeasible)
    }

    pub fn ub_solved(&self) -> bool {
        matches!(self, PoolTag::UbSolved { .. })
    }
}

/// Linking vectors seen so far, keyed by their rounded values.
#[derive(Debug, Default, Clone)]
pub struct LinkingPool {
    map: HashMap<Vec<i64>, PoolTag>,
}

pub fn pool_key(gamma: &[f64]) -> Vec<i64> {
    gamma.iter().map(|v| v.round() as i64).collect()
}

impl LinkingPool {
    pub fn get(&self, gamma: &[f64]) -> Option<&PoolTag> {
        self.map.get(&pool_key(gamma))
    }

    pub fn contains(&self, gamma: &[f64]) -> bool {
        self.map.contains_key(&pool_key(gamma))
    }

    /// Inserts or upgrades an entry. Tags only move from feasible to
    /// UB-solved; any other overwrite is ignored.
    pub fn insert(&mut self, gamma: &[f64], tag: PoolTag) {
        let key = pool_key(gamma);
        match self.map.get(&key) {
            None => {
                self.map.insert(key, tag);
            }
            Some(PoolTag::SecondLevelFeasible { .. }) if tag.ub_solved() => {
                self.map.insert(key, tag);
            }
            Some(_) => {}
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }
}
