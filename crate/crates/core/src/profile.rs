//! Benchmark harness: runs named parameter sets over a corpus and reports
//! one CSV row per (instance, configuration).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::{solve, BranchStrategy, CutSelection, Preset, SolverParams};
use crate::io::{read_instance, AssembleOptions, IoError};
use crate::model::MiblpInstance;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    pub name: String,
    pub params: SolverParams,
}

/// Builds a configuration from `+`-separated tokens applied to the
/// defaults, e.g. `fractional+no-pool` or `whenLInt-LInt+linking`.
///
/// Tokens: `default`, `linking`, `fractional`, `pool`, `no-pool`, any preset
/// name, any cut selection (`auto`, `integer-no-good`, `generalized-no-good`,
/// `hypercube-ic`, `no-cuts`), `heuristics`, `depth-first`.
pub fn parse_config(name: &str) -> Result<ProfileConfig, String> {
    let mut p = SolverParams::default();
    for tok in name.split('+') {
        match tok {
            "default" => {}
            "linking" => p.branch_strategy = Some(BranchStrategy::Linking),
            "fractional" => p.branch_strategy = Some(BranchStrategy::Fractional),
            "pool" => p.use_linking_pool = true,
            "no-pool" => p.use_linking_pool = false,
            "no-cuts" => p.cuts = CutSelection::None,
            "heuristics" => {
                p.heuristics.improving_objective_cut = true;
                p.heuristics.second_level_priority = true;
                p.heuristics.weighted_sums = true;
            }
            "depth-first" => p.search = crate::engine::Search::DepthFirst,
            t => {
                if let Ok(preset) = t.parse::<Preset>() {
                    p.apply_preset(preset);
                } else if let Ok(c) = t.parse::<CutSelection>() {
                    p.cuts = c;
                } else {
                    return Err(format!("unknown configuration token '{t}'"));
                }
            }
        }
    }
    p.check()?;
    Ok(ProfileConfig { name: name.to_string(), params: p })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub instance: String,
    pub config: String,
    pub status: String,
    pub value: Option<f64>,
    pub time: f64,
    pub nodes: usize,
    pub sl_count: usize,
    pub ub_count: usize,
}

/// Runs every configuration on every instance in order, each with the
/// given time budget.
pub fn run_profile(corpus: &[(String, MiblpInstance)], configs: &[ProfileConfig], budget: Duration) -> Result<Vec<ProfileRow>, String> {
    if corpus.is_empty() {
        return Err("corpus is empty".into());
    }
    let mut rows = Vec::new();
    for (name, inst) in corpus {
        for cfg in configs {
            let mut params = cfg.params.clone();
            params.time_limit = Some(budget);
            params.record_events = false;
            let t = Instant::now();
            let row = match solve(inst, &params) {
                Ok(r) => ProfileRow {
                    instance: name.clone(),
                    config: cfg.name.clone(),
                    status: r.status.to_string(),
                    value: r.objective(),
                    time: t.elapsed().as_secs_f64(),
                    nodes: r.stats.nodes,
                    sl_count: r.stats.sl_milp_solves,
                    ub_count: r.stats.ub_solves,
                },
                Err(e) => {
                    log::warn!("{name} / {}: {e}", cfg.name);
                    ProfileRow {
                        instance: name.clone(),
                        config: cfg.name.clone(),
                        status: "Error".into(),
                        value: None,
                        time: t.elapsed().as_secs_f64(),
                        nodes: 0,
                        sl_count: 0,
                        ub_count: 0,
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ProfileRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["instance", "config", "status", "value", "time", "nodes", "sl_count", "ub_count"])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads every `name.mps` in `dir` that has a matching `name.aux`, sorted
/// by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, MiblpInstance)>, IoError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "mps") && p.with_extension("aux").exists())
        .collect();
    paths.sort();
    let opts = AssembleOptions { introduce_unit_column: true };
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            read_instance(&p, p.with_extension("aux"), opts).map(|i| (name, i))
        })
        .collect()
}
