use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use bilevel_bnc::engine::{solve, BranchStrategy, CutSelection, Preset, Search, SolverParams};
use bilevel_bnc::gen::{generate, Profile};
use bilevel_bnc::io::{read_instance, write_aux, write_mps, write_solution, AssembleOptions};
use bilevel_bnc::profile::{load_corpus, parse_config, run_profile, write_csv};
use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bilevel-bnc", version, about = "Branch and cut for mixed integer bilevel linear programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance given as an MPS file and its auxiliary file.
    Solve(SolveArgs),
    /// Check an instance and print its structural properties.
    Validate(InstanceArgs),
    /// Write a random instance as MPS and auxiliary files.
    Gen(GenArgs),
    /// Run parameter sets over a corpus and write one CSV row per run.
    Profile(ProfileArgs),
}

#[derive(Args)]
struct InstanceArgs {
    mps: PathBuf,
    aux: PathBuf,
    /// Add a fixed column x = 1 that carries constant follower right-hand sides.
    #[arg(long = "introduceUnitColumn", action = ArgAction::Set, default_value_t = true, value_name = "BOOL")]
    unit_column: bool,
}

impl InstanceArgs {
    fn load(&self) -> Result<bilevel_bnc::model::MiblpInstance> {
        let opts = AssembleOptions { introduce_unit_column: self.unit_column };
        read_instance(&self.mps, &self.aux, opts).with_context(|| format!("reading {}", self.mps.display()))
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// linking or fractional; chosen from the instance when omitted.
    #[arg(long = "branchStrategy", value_name = "STRATEGY")]
    branch_strategy: Option<BranchStrategy>,
    #[arg(long = "useLinkingSolutionPool", action = ArgAction::Set, default_value_t = true, value_name = "BOOL")]
    use_linking_pool: bool,
    /// Sets all solveSecondLevelWhen*/computeBestUBWhen* flags at once;
    /// individual flags given alongside override it.
    #[arg(long, value_name = "NAME")]
    preset: Option<Preset>,
    #[arg(long = "solveSecondLevelWhenLVarsFixed", action = ArgAction::Set, value_name = "BOOL")]
    sl_l_fixed: Option<bool>,
    #[arg(long = "solveSecondLevelWhenLVarsInt", action = ArgAction::Set, value_name = "BOOL")]
    sl_l_int: Option<bool>,
    #[arg(long = "solveSecondLevelWhenXVarsInt", action = ArgAction::Set, value_name = "BOOL")]
    sl_x_int: Option<bool>,
    #[arg(long = "solveSecondLevelWhenXYVarsInt", action = ArgAction::Set, value_name = "BOOL")]
    sl_xy_int: Option<bool>,
    #[arg(long = "computeBestUBWhenLVarsFixed", action = ArgAction::Set, value_name = "BOOL")]
    ub_l_fixed: Option<bool>,
    #[arg(long = "computeBestUBWhenLVarsInt", action = ArgAction::Set, value_name = "BOOL")]
    ub_l_int: Option<bool>,
    #[arg(long = "computeBestUBWhenXVarsInt", action = ArgAction::Set, value_name = "BOOL")]
    ub_x_int: Option<bool>,
    /// auto, integer-no-good, generalized-no-good, hypercube-ic or none.
    #[arg(long, default_value = "auto", value_name = "CUTS")]
    cuts: CutSelection,
    #[arg(long = "improvingObjectiveCut", action = ArgAction::Set, default_value_t = false, value_name = "BOOL")]
    improving_objective_cut: bool,
    #[arg(long = "secondLevelPriority", action = ArgAction::Set, default_value_t = false, value_name = "BOOL")]
    second_level_priority: bool,
    #[arg(long = "weightedSums", action = ArgAction::Set, default_value_t = false, value_name = "BOOL")]
    weighted_sums: bool,
    /// Heuristics run at the root and then every N nodes.
    #[arg(long = "heuristicFrequency", default_value_t = 100, value_name = "N")]
    heuristic_frequency: usize,
    /// best-first or depth-first.
    #[arg(long, default_value = "best-first", value_name = "ORDER")]
    search: Search,
    /// Wall-clock limit in seconds.
    #[arg(long = "timeLimit", value_name = "SECONDS")]
    time_limit: Option<f64>,
    #[arg(long = "nodeLimit", value_name = "N")]
    node_limit: Option<usize>,
    #[arg(long = "strongBranching", action = ArgAction::Set, default_value_t = false, value_name = "BOOL")]
    strong_branching: bool,
    #[arg(long = "maxCutRounds", default_value_t = 25, value_name = "N")]
    max_cut_rounds: usize,
    /// Follower solver; only the built-in one is available.
    #[arg(long = "feasCheckSolver", default_value = "internal", value_parser = ["internal"])]
    feas_check_solver: String,
    /// Where to write the solution file.
    #[arg(long, value_name = "PATH")]
    solution: Option<PathBuf>,
}

impl SolveArgs {
    fn params(&self) -> Result<SolverParams> {
        let mut p = SolverParams::default();
        if let Some(preset) = self.preset {
            p.apply_preset(preset);
        }
        p.branch_strategy = self.branch_strategy;
        p.use_linking_pool = self.use_linking_pool;
        let overrides = [
            (self.sl_l_fixed, &mut p.solve_second_level_when_l_vars_fixed),
            (self.sl_l_int, &mut p.solve_second_level_when_l_vars_int),
            (self.sl_x_int, &mut p.solve_second_level_when_x_vars_int),
            (self.sl_xy_int, &mut p.solve_second_level_when_xy_vars_int),
            (self.ub_l_fixed, &mut p.compute_best_ub_when_l_vars_fixed),
            (self.ub_l_int, &mut p.compute_best_ub_when_l_vars_int),
            (self.ub_x_int, &mut p.compute_best_ub_when_x_vars_int),
        ];
        for (value, field) in overrides {
            if let Some(v) = value {
                *field = v;
            }
        }
        p.cuts = self.cuts;
        p.heuristics.improving_objective_cut = self.improving_objective_cut;
        p.heuristics.second_level_priority = self.second_level_priority;
        p.heuristics.weighted_sums = self.weighted_sums;
        p.heuristics.frequency = self.heuristic_frequency;
        p.search = self.search;
        p.time_limit = match self.time_limit {
            Some(t) if !(t >= 0.0 && t.is_finite()) => bail!("--timeLimit must be a non-negative number of seconds"),
            Some(t) => Some(Duration::from_secs_f64(t)),
            None => None,
        };
        p.node_limit = self.node_limit;
        p.strong_branching = self.strong_branching;
        p.max_cut_rounds = self.max_cut_rounds;
        p.check().map_err(anyhow::Error::msg)?;
        Ok(p)
    }
}

#[derive(Args)]
struct GenArgs {
    /// iblp-den, miblp-xu or interdiction.
    #[arg(long)]
    profile: Profile,
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; files are named after the instance.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    /// Directory of .mps files with matching .aux files.
    corpus: PathBuf,
    /// Parameter set such as `fractional+no-pool`; repeat for more.
    #[arg(long = "config", required = true)]
    configs: Vec<String>,
    /// Time budget per run in seconds.
    #[arg(long, default_value_t = 3600.0)]
    budget: f64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let params = args.params()?;
    let inst = args.instance.load()?;
    let r = solve(&inst, &params)?;
    println!("status: {}", r.status);
    match r.objective() {
        Some(v) => println!("objective: {v}"),
        None => println!("objective: none"),
    }
    println!("lower bound: {}", r.lower);
    println!("upper bound: {}", r.upper);
    if let (Some(x), Some(y)) = (&r.x, &r.y) {
        println!("x: {}", join(x));
        println!("y: {}", join(y));
    }
    let s = &r.stats;
    println!("nodes: {}", s.nodes);
    println!("sl count: {}", s.sl_milp_solves);
    println!("ub count: {}", s.ub_solves);
    println!("pool hits: {}", s.pool_hits);
    println!(
        "cuts: integer-no-good {} generalized-no-good {} hypercube-ic {}",
        s.cuts.integer_no_good, s.cuts.generalized_no_good, s.cuts.hypercube_ic
    );
    println!("time: {:.3}s", s.wall_time.as_secs_f64());
    if let Some(path) = &args.solution {
        write_solution(&r, &inst, path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_validate(args: &InstanceArgs) -> Result<bool> {
    let inst = args.load()?;
    let diags = inst.validate();
    for d in &diags {
        println!("error: {d}");
    }
    let p = inst.classify();
    println!("columns: x {} ({} integer) y {} ({} integer)", inst.n1, inst.r1, inst.n2, inst.r2);
    println!("rows: first level {} second level {}", inst.m1(), inst.m2());
    println!("linking: {}", p.linking_set.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "));
    println!("all linking binary: {}", p.all_linking_binary);
    println!("pure integer: {}", p.pure_integer);
    println!("integer data: {}", p.integer_data);
    println!("zero sum: {}", p.zero_sum);
    println!("interdiction: {}", p.is_interdiction);
    Ok(diags.is_empty())
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let inst = generate(args.profile, args.size, args.seed).map_err(anyhow::Error::msg)?;
    std::fs::create_dir_all(&args.out)?;
    let mps = args.out.join(format!("{}.mps", inst.name));
    let aux = args.out.join(format!("{}.aux", inst.name));
    std::fs::write(&mps, write_mps(&inst)).with_context(|| format!("writing {}", mps.display()))?;
    std::fs::write(&aux, write_aux(&inst)).with_context(|| format!("writing {}", aux.display()))?;
    println!("{}", mps.display());
    println!("{}", aux.display());
    Ok(())
}

fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    if !(args.budget >= 0.0 && args.budget.is_finite()) {
        bail!("--budget must be a non-negative number of seconds");
    }
    let configs = args.configs.iter().map(|c| parse_config(c)).collect::<Result<Vec<_>, _>>().map_err(anyhow::Error::msg)?;
    let corpus = load_corpus(&args.corpus).with_context(|| format!("loading {}", args.corpus.display()))?;
    let rows = run_profile(&corpus, &configs, Duration::from_secs_f64(args.budget)).map_err(anyhow::Error::msg)?;
    match &args.out {
        Some(path) => write_csv(&rows, create(path)?)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("BILEVEL_BNC_LOG")).init();
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a).map(|_| true),
        Cmd::Validate(a) => cmd_validate(a),
        Cmd::Gen(a) => cmd_gen(a).map(|_| true),
        Cmd::Profile(a) => cmd_profile(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
