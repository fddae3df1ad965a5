//! Structured search log. Each event serializes to one JSON object, tagged
//! by `event`.

use serde::{Deserialize, Serialize};

use crate::cutgen::CutClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// A relaxation was solved at a node. `lower`/`upper` are the node's
    /// column bounds over `(x, y)`; `incumbent` is `U` at that moment.
    NodeBound {
        node: usize,
        depth: usize,
        bound: f64,
        incumbent: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Pruned { node: usize, reason: PruneReason },
    PoolHit { node: usize, gamma: Vec<f64> },
    SecondLevelSolved { node: usize, gamma: Vec<f64>, phi: Option<f64> },
    /// The best bilevel objective with `x_L = gamma` (`None`: no such point).
    UpperBoundSolved { node: usize, gamma: Vec<f64>, value: Option<f64> },
    CutAdded {
        node: usize,
        class: CutClass,
        coeffs: Vec<f64>,
        rhs: f64,
        local: bool,
        incumbent: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Branched { node: usize, column: usize, down_upper: f64, up_lower: f64, children: [usize; 2] },
    Incumbent { value: f64, x: Vec<f64>, y: Vec<f64>, source: String },
    /// Global bounds after a node was processed.
    Bounds { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    Infeasible,
    Bound,
    LinkingFixedInfeasible,
    LinkingFixedUbSolved,
    BilevelFeasible,
}
