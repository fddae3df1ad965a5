//! Instance and solution files.

mod aux;
mod interdiction;
mod mps;
mod solution;

pub use aux::{parse_aux, AuxInfo};
pub use interdiction::{build_interdiction, FollowerMilp};
pub use mps::{parse_mps, GeRow, MpsProblem, RowKind};
pub use solution::{parse_solution, read_solution, render_solution, write_solution, SolutionRecord};

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::model::MiblpInstance;
use mps::fmt_num;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("MPS line {line}: {msg}")]
    Mps { line: usize, msg: String },
    #[error("aux line {line}: {msg}")]
    Aux { line: usize, msg: String },
    #[error("{0}")]
    Assemble(String),
    #[error("solution line {line}: {msg}")]
    Solution { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_mps(path: impl AsRef<Path>) -> Result<MpsProblem, IoError> {
    parse_mps(&std::fs::read_to_string(path)?)
}

pub fn read_aux(path: impl AsRef<Path>) -> Result<AuxInfo, IoError> {
    parse_aux(&std::fs::read_to_string(path)?)
}

/// Name of the column introduced to carry second-level constants.
pub const UNIT_COLUMN_NAME: &str = "__one";

#[derive(Debug, Clone, Copy, Default)]
pub struct AssembleOptions {
    /// Accept second-level rows with a nonzero right-hand side by adding a
    /// first-level column fixed to 1.
    pub introduce_unit_column: bool,
}

/// Splits an MPS problem into the two levels described by `aux`.
pub fn assemble(mps: &MpsProblem, aux: &AuxInfo, opts: AssembleOptions) -> Result<MiblpInstance, IoError> {
    let n = mps.num_cols();
    let m = mps.num_rows();
    if let Some(&c) = aux.lower_cols.iter().find(|&&c| c >= n) {
        return Err(IoError::Assemble(format!("second-level column index {c} out of range (MPS has {n} columns)")));
    }
    if let Some(&r) = aux.lower_rows.iter().find(|&&r| r >= m) {
        return Err(IoError::Assemble(format!("second-level row index {r} out of range (MPS has {m} rows)")));
    }
    let lower_cols: HashSet<usize> = aux.lower_cols.iter().copied().collect();
    let lower_rows: HashSet<usize> = aux.lower_rows.iter().copied().collect();

    let mut xs: Vec<usize> = (0..n).filter(|c| !lower_cols.contains(c)).collect();
    xs.sort_by_key(|&c| !mps.integer[c]);
    let mut ys: Vec<(usize, f64)> = aux.lower_cols.iter().copied().zip(aux.lower_obj.iter().copied()).collect();
    ys.sort_by_key(|&(c, _)| !mps.integer[c]);

    let second_rows: Vec<GeRow> = (0..m).filter(|r| lower_rows.contains(r)).flat_map(|r| mps.ge_rows(r)).collect();
    let first_rows: Vec<GeRow> = (0..m).filter(|r| !lower_rows.contains(r)).flat_map(|r| mps.ge_rows(r)).collect();
    let needs_unit = second_rows.iter().any(|r| r.rhs != 0.0);
    if needs_unit && !opts.introduce_unit_column {
        let r = second_rows.iter().find(|r| r.rhs != 0.0).unwrap();
        return Err(IoError::Assemble(format!(
            "second-level row '{}' has a nonzero right-hand side; enable the fixed unit column to accept it",
            mps.row_names[r.source]
        )));
    }
    let shift = usize::from(needs_unit);
    let n1 = xs.len() + shift;
    let n2 = ys.len();
    let r1 = xs.iter().filter(|&&c| mps.integer[c]).count() + shift;
    let r2 = ys.iter().filter(|&&(c, _)| mps.integer[c]).count();
    let mut inst = MiblpInstance::empty(n1, n2, r1, r2);
    inst.name = mps.name.clone();
    let sign = if mps.maximize { -1.0 } else { 1.0 };
    if needs_unit {
        inst.unit_column = Some(0);
        inst.lb_x[0] = 1.0;
        inst.ub_x[0] = 1.0;
        inst.x_names[0] = UNIT_COLUMN_NAME.to_string();
    }
    for (k, &c) in xs.iter().enumerate() {
        let j = k + shift;
        inst.c[j] = sign * mps.objective[c];
        inst.lb_x[j] = mps.lower[c];
        inst.ub_x[j] = mps.upper[c];
        inst.x_names[j] = mps.col_names[c].clone();
    }
    let lsign = if aux.obj_sense < 0 { -1.0 } else { 1.0 };
    for (j, &(c, o)) in ys.iter().enumerate() {
        inst.d1[j] = sign * mps.objective[c];
        inst.d2[j] = lsign * o;
        inst.lb_y[j] = mps.lower[c];
        inst.ub_y[j] = mps.upper[c];
        inst.y_names[j] = mps.col_names[c].clone();
    }
    let split = |row: &GeRow| -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; n1];
        for (k, &c) in xs.iter().enumerate() {
            a[k + shift] = row.coeffs[c];
        }
        let g = ys.iter().map(|&(c, _)| row.coeffs[c]).collect();
        (a, g)
    };
    for row in &first_rows {
        let (a, g) = split(row);
        inst.push_first_level_row(a, g, row.rhs);
    }
    for row in &second_rows {
        // a x + g y >= b  <=>  g y >= -a x + b
        let (a, g) = split(row);
        let mut a2: Vec<f64> = a.iter().map(|v| -v + 0.0).collect();
        if needs_unit {
            a2[0] = row.rhs;
        }
        inst.push_second_level_row(a2, g);
    }
    let has_unbounded_int = (0..r1).any(|j| !inst.lb_x[j].is_finite() || !inst.ub_x[j].is_finite())
        || (0..r2).any(|j| !inst.lb_y[j].is_finite() || !inst.ub_y[j].is_finite());
    if has_unbounded_int {
        inst.tighten_integer_bounds();
    }
    Ok(inst)
}

/// Writes the instance as MPS. Second-level constants carried by the unit
/// column become right-hand sides, so reading back needs the unit-column
/// option.
pub fn write_mps(inst: &MiblpInstance) -> String {
    let unit = inst.unit_column;
    let xcols: Vec<usize> = (0..inst.n1).filter(|&j| Some(j) != unit).collect();
    let mut s = String::new();
    let name = if inst.name.is_empty() { "BILEVEL" } else { &inst.name };
    let _ = writeln!(s, "NAME          {name}");
    s.push_str("ROWS\n N  OBJ\n");
    for i in 0..inst.m1() {
        let _ = writeln!(s, " G  R{i}");
    }
    for i in 0..inst.m2() {
        let _ = writeln!(s, " G  S{i}");
    }
    s.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    let mut column = |s: &mut String, name: &str, integer: bool, entries: Vec<(String, f64)>| {
        if integer != in_int {
            let tag = if integer { "INTORG" } else { "INTEND" };
            let _ = writeln!(s, "    M{marker}  'MARKER'  '{tag}'");
            marker += 1;
            in_int = integer;
        }
        let mut any = false;
        for (row, v) in entries {
            if v != 0.0 {
                let _ = writeln!(s, "    {name}  {row}  {}", fmt_num(v));
                any = true;
            }
        }
        if !any {
            let _ = writeln!(s, "    {name}  OBJ  0");
        }
    };
    let mut names = Vec::new();
    for &j in &xcols {
        let mut e = vec![("OBJ".to_string(), inst.c[j])];
        e.extend((0..inst.m1()).map(|i| (format!("R{i}"), inst.a1[i][j])));
        e.extend((0..inst.m2()).map(|i| (format!("S{i}"), -inst.a2[i][j])));
        column(&mut s, &inst.x_names[j], j < inst.r1, e);
        names.push((inst.x_names[j].clone(), inst.lb_x[j], inst.ub_x[j], j < inst.r1));
    }
    for j in 0..inst.n2 {
        let mut e = vec![("OBJ".to_string(), inst.d1[j])];
        e.extend((0..inst.m1()).map(|i| (format!("R{i}"), inst.g1[i][j])));
        e.extend((0..inst.m2()).map(|i| (format!("S{i}"), inst.g2[i][j])));
        column(&mut s, &inst.y_names[j], j < inst.r2, e);
        names.push((inst.y_names[j].clone(), inst.lb_y[j], inst.ub_y[j], j < inst.r2));
    }
    if in_int {
        let _ = writeln!(s, "    M{marker}  'MARKER'  'INTEND'");
    }
    s.push_str("RHS\n");
    for i in 0..inst.m1() {
        let b = inst.b1[i] - unit.map_or(0.0, |u| inst.a1[i][u]);
        if b != 0.0 {
            let _ = writeln!(s, "    RHS  R{i}  {}", fmt_num(b));
        }
    }
    for i in 0..inst.m2() {
        let b = unit.map_or(0.0, |u| inst.a2[i][u]);
        if b != 0.0 {
            let _ = writeln!(s, "    RHS  S{i}  {}", fmt_num(b));
        }
    }
    s.push_str("BOUNDS\n");
    for (name, lo, hi, _) in names {
        if lo == hi {
            let _ = writeln!(s, " FX BND  {name}  {}", fmt_num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(s, " FR BND  {name}");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(s, " MI BND  {name}");
        } else if lo != 0.0 {
            let _ = writeln!(s, " LO BND  {name}  {}", fmt_num(lo));
        }
        if hi != f64::INFINITY {
            let _ = writeln!(s, " UP BND  {name}  {}", fmt_num(hi));
        }
    }
    s.push_str("ENDATA\n");
    s
}

/// The aux file matching [`write_mps`]'s column and row order.
pub fn write_aux(inst: &MiblpInstance) -> String {
    let nx = inst.n1 - usize::from(inst.unit_column.is_some());
    let mut s = String::new();
    let _ = writeln!(s, "N {}", inst.n2);
    let _ = writeln!(s, "M {}", inst.m2());
    for j in 0..inst.n2 {
        let _ = writeln!(s, "LC {}", nx + j);
    }
    for i in 0..inst.m2() {
        let _ = writeln!(s, "LR {}", inst.m1() + i);
    }
    for j in 0..inst.n2 {
        let _ = writeln!(s, "LO {}", fmt_num(inst.d2[j]));
    }
    s.push_str("OS 1\n");
    s
}

/// Reads an MPS/aux pair and assembles the instance.
pub fn read_instance(mps: impl AsRef<Path>, aux: impl AsRef<Path>, opts: AssembleOptions) -> Result<MiblpInstance, IoError> {
    assemble(&read_mps(mps)?, &read_aux(aux)?, opts)
}
