use std::collections::HashSet;

use super::IoError;

/// Second-level description accompanying an MPS file.
///
/// ```text
/// N <count of second-level columns>
/// M <count of second-level rows>
/// LC <column index>     (N times, 0-based MPS column order)
/// LR <row index>        (M times, 0-based MPS row order, objective row excluded)
/// LO <coefficient>      (N times, aligned with LC)
/// OS <1 for min, -1 for max>
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct AuxInfo {
    pub n_lower: usize,
    pub m_lower: usize,
    pub lower_cols: Vec<usize>,
    pub lower_rows: Vec<usize>,
    pub lower_obj: Vec<f64>,
    pub obj_sense: i32,
}

pub fn parse_aux(text: &str) -> Result<AuxInfo, IoError> {
    let err = |line: usize, msg: String| IoError::Aux { line, msg };
    let mut n = None;
    let mut m = None;
    let mut cols = Vec::new();
    let mut rows = Vec::new();
    let mut obj = Vec::new();
    let mut sense = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t: Vec<&str> = raw.split_whitespace().collect();
        if t.is_empty() || t[0].starts_with('#') {
            continue;
        }
        if t.len() != 2 {
            return Err(err(line, format!("expected '<record> <value>', found '{}'", raw.trim())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(line, format!("bad index '{s}'")));
        match t[0] {
            "N" => n = Some(int(t[1])?),
            "M" => m = Some(int(t[1])?),
            "LC" => cols.push(int(t[1])?),
            "LR" => rows.push(int(t[1])?),
            "LO" => obj.push(t[1].parse::<f64>().map_err(|_| err(line, format!("bad coefficient '{}'", t[1])))?),
            "OS" => {
                sense = Some(match t[1] {
                    "1" | "+1" => 1,
                    "-1" => -1,
                    s => return Err(err(line, format!("objective sense must be 1 or -1, found '{s}'"))),
                })
            }
            k => return Err(err(line, format!("unknown record '{k}'"))),
        }
    }
    let n = n.ok_or_else(|| err(0, "missing N record".into()))?;
    let m = m.ok_or_else(|| err(0, "missing M record".into()))?;
    if cols.len() != n {
        return Err(err(0, format!("N is {n} but {} LC records found", cols.len())));
    }
    if rows.len() != m {
        return Err(err(0, format!("M is {m} but {} LR records found", rows.len())));
    }
    if obj.len() != n {
        return Err(err(0, format!("N is {n} but {} LO records found", obj.len())));
    }
    if cols.iter().collect::<HashSet<_>>().len() != n {
        return Err(err(0, "duplicate LC index".into()));
    }
    if rows.iter().collect::<HashSet<_>>().len() != m {
        return Err(err(0, "duplicate LR index".into()));
    }
    Ok(AuxInfo {
        n_lower: n,
        m_lower: m,
        lower_cols: cols,
        lower_rows: rows,
        lower_obj: obj,
        obj_sense: sense.unwrap_or(1),
    })
}
