//! Branch and cut for mixed integer bilevel linear programs.

pub mod branching;
pub mod cutgen;
pub mod engine;
pub mod gen;
pub mod heuristics;
pub mod io;
pub mod lp;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod profile;
