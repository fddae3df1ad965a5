//! Solution file format, one record per line:
//!
//! ```text
//! status Optimal
//! objective -22
//! upper -22
//! lower -22
//! x <name> <value>        (one per first-level variable)
//! y <name> <value>        (one per second-level variable)
//! nodes 3
//! sl_milp_solves 2
//! ub_solves 1
//! cuts <class> <count>    (one per cut class)
//! lp_iterations 17
//! wall_time 0.0012
//! ```
//!
//! `objective` is `none` without an incumbent, and then no `x`/`y` records
//! follow. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::mps::fmt_num;
use super::IoError;
use crate::cutgen::CutClass;
use crate::engine::{BilevelResult, BilevelStatus};
use crate::model::MiblpInstance;

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub status: BilevelStatus,
    pub objective: Option<f64>,
    pub upper: f64,
    pub lower: f64,
    pub x: Vec<(String, f64)>,
    pub y: Vec<(String, f64)>,
    pub nodes: usize,
    pub sl_milp_solves: usize,
    pub ub_solves: usize,
    pub cuts: Vec<(String, usize)>,
    pub lp_iterations: usize,
    pub wall_time: f64,
}

impl SolutionRecord {
    pub fn from_result(result: &BilevelResult, inst: &MiblpInstance) -> Self {
        let named = |names: &[String], vals: &Option<Vec<f64>>| -> Vec<(String, f64)> {
            vals.as_ref()
                .map(|v| names.iter().cloned().zip(v.iter().copied()).collect())
                .unwrap_or_default()
        };
        SolutionRecord {
            status: result.status,
            objective: result.objective(),
            upper: result.upper,
            lower: result.lower,
            x: named(&inst.x_names, &result.x),
            y: named(&inst.y_names, &result.y),
            nodes: result.stats.nodes,
            sl_milp_solves: result.stats.sl_milp_solves,
            ub_solves: result.stats.ub_solves,
            cuts: CutClass::ALL.iter().map(|c| (c.name().to_string(), result.stats.cuts.get(*c))).collect(),
            lp_iterations: result.stats.lp_iterations,
            wall_time: result.stats.wall_time.as_secs_f64(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status {}", self.status);
        match self.objective {
            Some(v) => writeln!(s, "objective {}", fmt_num(v)),
            None => writeln!(s, "objective none"),
        }
        .ok();
        let _ = writeln!(s, "upper {}", fmt_num(self.upper));
        let _ = writeln!(s, "lower {}", fmt_num(self.lower));
        for (n, v) in &self.x {
            let _ = writeln!(s, "x {n} {}", fmt_num(*v));
        }
        for (n, v) in &self.y {
            let _ = writeln!(s, "y {n} {}", fmt_num(*v));
        }
        let _ = writeln!(s, "nodes {}", self.nodes);
        let _ = writeln!(s, "sl_milp_solves {}", self.sl_milp_solves);
        let _ = writeln!(s, "ub_solves {}", self.ub_solves);
        for (c, k) in &self.cuts {
            let _ = writeln!(s, "cuts {c} {k}");
        }
        let _ = writeln!(s, "lp_iterations {}", self.lp_iterations);
        let _ = writeln!(s, "wall_time {:?}", self.wall_time);
        s
    }
}

pub fn render_solution(result: &BilevelResult, inst: &MiblpInstance) -> String {
    SolutionRecord::from_result(result, inst).render()
}

pub fn write_solution(result: &BilevelResult, inst: &MiblpInstance, path: impl AsRef<Path>) -> Result<(), IoError> {
    std::fs::write(path, render_solution(result, inst))?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<SolutionRecord, IoError> {
    parse_solution(&std::fs::read_to_string(path)?)
}

pub fn parse_solution(text: &str) -> Result<SolutionRecord, IoError> {
    let mut rec = SolutionRecord {
        status: BilevelStatus::Infeasible,
        objective: None,
        upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
        x: Vec::new(),
        y: Vec::new(),
        nodes: 0,
        sl_milp_solves: 0,
        ub_solves: 0,
        cuts: Vec::new(),
        lp_iterations: 0,
        wall_time: 0.0,
    };
    let mut seen_status = false;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |msg: String| IoError::Solution { line: line_no, msg };
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() || t[0].starts_with('#') {
            continue;
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number '{s}'")));
        let count = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad count '{s}'")));
        let arity = |n: usize| if t.len() == n { Ok(()) } else { Err(err(format!("'{}' expects {} fields", t[0], n - 1))) };
        match t[0] {
            "status" => {
                arity(2)?;
                rec.status = t[1].parse().map_err(err)?;
                seen_status = true;
            }
            "objective" => {
                arity(2)?;
                rec.objective = if t[1] == "none" { None } else { Some(num(t[1])?) };
            }
            "upper" => {
                arity(2)?;
                rec.upper = num(t[1])?;
            }
            "lower" => {
                arity(2)?;
                rec.lower = num(t[1])?;
            }
            "x" | "y" => {
                arity(3)?;
                let entry = (t[1].to_string(), num(t[2])?);
                if t[0] == "x" { rec.x.push(entry) } else { rec.y.push(entry) }
            }
            "nodes" => {
                arity(2)?;
                rec.nodes = count(t[1])?;
            }
            "sl_milp_solves" => {
                arity(2)?;
                rec.sl_milp_solves = count(t[1])?;
            }
            "ub_solves" => {
                arity(2)?;
                rec.ub_solves = count(t[1])?;
            }
            "cuts" => {
                arity(3)?;
                rec.cuts.push((t[1].to_string(), count(t[2])?));
            }
            "lp_iterations" => {
                arity(2)?;
                rec.lp_iterations = count(t[1])?;
            }
            "wall_time" => {
                arity(2)?;
                rec.wall_time = num(t[1])?;
            }
            other => return Err(err(format!("unknown record '{other}'"))),
        }
    }
    if !seen_status {
        return Err(IoError::Solution { line: 0, msg: "missing status record".into() });
    }
    Ok(rec)
}
