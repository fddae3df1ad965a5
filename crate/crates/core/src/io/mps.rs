use std::collections::HashMap;

use super::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

/// A flat LP/MILP as read from an MPS file. Rows keep their file order and
/// sense; coefficients are stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsProblem {
    pub name: String,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
    pub row_kinds: Vec<RowKind>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
    pub objective: Vec<f64>,
    pub maximize: bool,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
}

/// One `>=` row derived from an MPS row.
#[derive(Debug, Clone, PartialEq)]
pub struct GeRow {
    pub source: usize,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl MpsProblem {
    pub fn num_cols(&self) -> usize {
        self.col_names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.row_names.len()
    }

    /// Row `i` as one or two `>=` rows: `<=` rows are negated, equality and
    /// ranged rows become a pair.
    pub fn ge_rows(&self, i: usize) -> Vec<GeRow> {
        let a = &self.rows[i];
        let b = self.rhs[i];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let (lo, hi) = match (self.row_kinds[i], self.ranges[i]) {
            (RowKind::Ge, None) => (Some(b), None),
            (RowKind::Le, None) => (None, Some(b)),
            (RowKind::Eq, None) => (Some(b), Some(b)),
            (RowKind::Ge, Some(r)) => (Some(b), Some(b + r.abs())),
            (RowKind::Le, Some(r)) => (Some(b - r.abs()), Some(b)),
            (RowKind::Eq, Some(r)) if r >= 0.0 => (Some(b), Some(b + r)),
            (RowKind::Eq, Some(r)) => (Some(b + r), Some(b)),
        };
        let mut out = Vec::new();
        if let Some(lo) = lo {
            out.push(GeRow {
                source: i,
                coeffs: a.clone(),
                rhs: lo,
            });
        }
        if let Some(hi) = hi {
            out.push(GeRow {
                source: i,
                coeffs: neg,
                rhs: -hi,
            });
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    ObjSense,
}

pub fn parse_mps(text: &str) -> Result<MpsProblem, IoError> {
    let err = |line: usize, msg: String| IoError::Mps { line, msg };
    let mut p = MpsProblem {
        name: String::new(),
        col_names: Vec::new(),
        row_names: Vec::new(),
        row_kinds: Vec::new(),
        rows: Vec::new(),
        rhs: Vec::new(),
        ranges: Vec::new(),
        objective: Vec::new(),
        maximize: false,
        lower: Vec::new(),
        upper: Vec::new(),
        integer: Vec::new(),
    };
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    // sparse entries until the column count is known
    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    let mut obj_entries: HashMap<usize, f64> = HashMap::new();
    let mut in_int = false;
    let mut section = Section::None;
    let mut seen_rhs: HashMap<usize, ()> = HashMap::new();
    let mut seen_range: HashMap<usize, ()> = HashMap::new();
    let mut ended = false;
    let mut bounds_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = match tokens[0].to_ascii_uppercase().as_str() {
                "NAME" => {
                    p.name = tokens.get(1..).map(|t| t.join(" ")).unwrap_or_default();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "OBJSENSE" => {
                    if let Some(s) = tokens.get(1) {
                        p.maximize = parse_sense(s).ok_or_else(|| err(line, format!("unknown objective sense '{s}'")))?;
                        Section::None
                    } else {
                        Section::ObjSense
                    }
                }
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(line, format!("unknown section '{other}'"))),
            };
            continue;
        }
        match section {
            Section::None => return Err(err(line, "data line outside of a section".into())),
            Section::ObjSense => {
                p.maximize = parse_sense(tokens[0]).ok_or_else(|| err(line, format!("unknown objective sense '{}'", tokens[0])))?;
            }
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(err(line, "ROWS entry needs a type and a name".into()));
                }
                let name = tokens[1].to_string();
                if row_index.contains_key(&name) || obj_row.as_deref() == Some(&name) {
                    return Err(err(line, format!("duplicate row '{name}'")));
                }
                let kind = match tokens[0].to_ascii_uppercase().as_str() {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name);
                        } else {
                            log::warn!("line {line}: extra free row '{name}' ignored");
                        }
                        continue;
                    }
                    "L" => RowKind::Le,
                    "G" => RowKind::Ge,
                    "E" => RowKind::Eq,
                    t => return Err(err(line, format!("unknown row type '{t}'"))),
                };
                row_index.insert(name.clone(), p.row_names.len());
                p.row_names.push(name);
                p.row_kinds.push(kind);
            }
            Section::Columns => {
                if tokens.len() >= 3 && tokens[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    match tokens[2].trim_matches('\'').to_ascii_uppercase().as_str() {
                        "INTORG" => in_int = true,
                        "INTEND" => in_int = false,
                        m => return Err(err(line, format!("unknown marker '{m}'"))),
                    }
                    continue;
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line, "COLUMNS entry needs a column and one or two (row, value) pairs".into()));
                }
                let col = match col_index.get(tokens[0]) {
                    Some(&c) => c,
                    None => {
                        let c = p.col_names.len();
                        col_index.insert(tokens[0].to_string(), c);
                        p.col_names.push(tokens[0].to_string());
                        p.integer.push(in_int);
                        c
                    }
                };
                for pair in tokens[1..].chunks(2) {
                    let v = parse_num(pair[1]).ok_or_else(|| err(line, format!("bad number '{}'", pair[1])))?;
                    if obj_row.as_deref() == Some(pair[0]) {
                        if obj_entries.insert(col, v).is_some() {
                            return Err(err(line, format!("duplicate entry for column '{}' in objective", tokens[0])));
                        }
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        if entries.insert((r, col), v).is_some() {
                            return Err(err(line, format!("duplicate entry for column '{}' in row '{}'", tokens[0], pair[0])));
                        }
                    } else {
                        return Err(err(line, format!("unknown row '{}'", pair[0])));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = if tokens.len() % 2 == 1 { &tokens[1..] } else { &tokens[..] };
                if pairs.is_empty() || pairs.len() > 4 {
                    return Err(err(line, "malformed RHS/RANGES entry".into()));
                }
                for pair in pairs.chunks(2) {
                    let v = parse_num(pair[1]).ok_or_else(|| err(line, format!("bad number '{}'", pair[1])))?;
                    if obj_row.as_deref() == Some(pair[0]) {
                        if section == Section::Rhs {
                            log::warn!("line {line}: objective constant {} ignored", -v);
                        }
                        continue;
                    }
                    let &r = row_index.get(pair[0]).ok_or_else(|| err(line, format!("unknown row '{}'", pair[0])))?;
                    let seen = if section == Section::Rhs { &mut seen_rhs } else { &mut seen_range };
                    if seen.insert(r, ()).is_some() {
                        return Err(err(line, format!("duplicate entry for row '{}'", pair[0])));
                    }
                    if section == Section::Rhs {
                        p.rhs.resize(p.row_names.len(), 0.0);
                        p.rhs[r] = v;
                    } else {
                        p.ranges.resize(p.row_names.len(), None);
                        p.ranges[r] = Some(v);
                    }
                }
            }
            Section::Bounds => {
                if !bounds_seen {
                    bounds_seen = true;
                    init_bounds(&mut p);
                }
                let kind = tokens[0].to_ascii_uppercase();
                let needs_value = !matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
                let (col_tok, val_tok) = match (needs_value, tokens.len()) {
                    (true, 4) => (tokens[2], Some(tokens[3])),
                    (true, 3) => (tokens[1], Some(tokens[2])),
                    (false, 3) => (tokens[2], None),
                    (false, 2) => (tokens[1], None),
                    (false, 4) if kind == "BV" => (tokens[2], None),
                    _ => return Err(err(line, "malformed BOUNDS entry".into())),
                };
                let &c = col_index.get(col_tok).ok_or_else(|| err(line, format!("unknown column '{col_tok}'")))?;
                let v = match val_tok {
                    Some(t) => parse_num(t).ok_or_else(|| err(line, format!("bad number '{t}'")))?,
                    None => 0.0,
                };
                match kind.as_str() {
                    "UP" => {
                        if v < 0.0 && p.lower[c] == 0.0 {
                            log::warn!("line {line}: negative upper bound on '{col_tok}' makes its lower bound -inf");
                            p.lower[c] = f64::NEG_INFINITY;
                        }
                        p.upper[c] = v;
                    }
                    "LO" => p.lower[c] = v,
                    "FX" => {
                        p.lower[c] = v;
                        p.upper[c] = v;
                    }
                    "FR" => {
                        p.lower[c] = f64::NEG_INFINITY;
                        p.upper[c] = f64::INFINITY;
                    }
                    "MI" => p.lower[c] = f64::NEG_INFINITY,
                    "PL" => p.upper[c] = f64::INFINITY,
                    "BV" => {
                        p.integer[c] = true;
                        p.lower[c] = 0.0;
                        p.upper[c] = 1.0;
                    }
                    "LI" => {
                        p.integer[c] = true;
                        p.lower[c] = v;
                    }
                    "UI" => {
                        p.integer[c] = true;
                        p.upper[c] = v;
                    }
                    t => return Err(err(line, format!("unknown bound type '{t}'"))),
                }
            }
        }
    }
    if !ended {
        log::warn!("MPS input has no ENDATA record");
    }
    if p.col_names.is_empty() {
        return Err(err(0, "no variables".into()));
    }
    if !bounds_seen {
        init_bounds(&mut p);
    }
    let (m, n) = (p.row_names.len(), p.col_names.len());
    p.rhs.resize(m, 0.0);
    p.ranges.resize(m, None);
    p.rows = vec![vec![0.0; n]; m];
    for ((r, c), v) in entries {
        p.rows[r][c] = v;
    }
    p.objective = vec![0.0; n];
    for (c, v) in obj_entries {
        p.objective[c] = v;
    }
    Ok(p)
}

fn init_bounds(p: &mut MpsProblem) {
    let n = p.col_names.len();
    p.lower = vec![0.0; n];
    p.upper = vec![f64::INFINITY; n];
}

fn parse_sense(s: &str) -> Option<bool> {
    match s.to_ascii_uppercase().as_str() {
        "MAX" | "MAXIMIZE" => Some(true),
        "MIN" | "MINIMIZE" => Some(false),
        _ => None,
    }
}

fn parse_num(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "1e30" | "1e+30" => Some(f64::INFINITY),
        "-inf" | "-infinity" | "-1e30" | "-1e+30" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

/// Number formatting that parses back to the same value.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}
