use std::str::FromStr;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchStrategy {
    /// Branch on linking variables while any is unfixed, fractional ones first.
    Linking,
    /// Branch on any fractional integer variable.
    Fractional,
}

impl FromStr for BranchStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linking" => Ok(BranchStrategy::Linking),
            "fractional" => Ok(BranchStrategy::Fractional),
            _ => Err(format!("unknown branch strategy '{s}' (linking, fractional)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSelection {
    /// Chosen from the instance properties.
    Auto,
    IntegerNoGood,
    GeneralizedNoGood,
    HypercubeIc,
    None,
}

impl FromStr for CutSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(CutSelection::Auto),
            "integer-no-good" => Ok(CutSelection::IntegerNoGood),
            "generalized-no-good" => Ok(CutSelection::GeneralizedNoGood),
            "hypercube-ic" => Ok(CutSelection::HypercubeIc),
            "none" => Ok(CutSelection::None),
            _ => Err(format!(
                "unknown cut selection '{s}' (auto, integer-no-good, generalized-no-good, hypercube-ic, none)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Search {
    BestFirst,
    DepthFirst,
}

impl FromStr for Search {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "best-first" => Ok(Search::BestFirst),
            "depth-first" => Ok(Search::DepthFirst),
            _ => Err(format!("unknown search '{s}' (best-first, depth-first)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicParams {
    pub improving_objective_cut: bool,
    pub second_level_priority: bool,
    pub weighted_sums: bool,
    /// Heuristics run at the root and then every `frequency` nodes.
    pub frequency: usize,
    pub weights: Vec<f64>,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            improving_objective_cut: false,
            second_level_priority: false,
            weighted_sums: false,
            frequency: 100,
            weights: vec![0.9, 0.5, 0.1],
        }
    }
}

impl HeuristicParams {
    pub fn any(&self) -> bool {
        self.improving_objective_cut || self.second_level_priority || self.weighted_sums
    }
}

/// When to solve the second-level problem and the best-bound problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    WhenLIntLInt,
    WhenLIntLFixed,
    WhenLFixedLFixed,
    WhenXYIntLFixed,
    WhenXYIntOrLFixedLFixed,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::WhenLIntLInt,
        Preset::WhenLIntLFixed,
        Preset::WhenLFixedLFixed,
        Preset::WhenXYIntLFixed,
        Preset::WhenXYIntOrLFixedLFixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::WhenLIntLInt => "whenLInt-LInt",
            Preset::WhenLIntLFixed => "whenLInt-LFixed",
            Preset::WhenLFixedLFixed => "whenLFixed-LFixed",
            Preset::WhenXYIntLFixed => "whenXYInt-LFixed",
            Preset::WhenXYIntOrLFixedLFixed => "whenXYIntOrLFixed-LFixed",
        }
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// `None` picks linking when `r1 <= r2`, fractional otherwise.
    pub branch_strategy: Option<BranchStrategy>,
    pub use_linking_pool: bool,
    pub solve_second_level_when_l_vars_fixed: bool,
    pub solve_second_level_when_l_vars_int: bool,
    pub solve_second_level_when_x_vars_int: bool,
    pub solve_second_level_when_xy_vars_int: bool,
    pub compute_best_ub_when_l_vars_fixed: bool,
    pub compute_best_ub_when_l_vars_int: bool,
    pub compute_best_ub_when_x_vars_int: bool,
    pub cuts: CutSelection,
    pub heuristics: HeuristicParams,
    pub search: Search,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
    pub strong_branching: bool,
    /// Cut rounds at one node before falling back to branching.
    pub max_cut_rounds: usize,
    /// Keep the structured event log in the result.
    pub record_events: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        let mut p = SolverParams {
            branch_strategy: None,
            use_linking_pool: true,
            solve_second_level_when_l_vars_fixed: false,
            solve_second_level_when_l_vars_int: false,
            solve_second_level_when_x_vars_int: false,
            solve_second_level_when_xy_vars_int: false,
            compute_best_ub_when_l_vars_fixed: false,
            compute_best_ub_when_l_vars_int: false,
            compute_best_ub_when_x_vars_int: false,
            cuts: CutSelection::Auto,
            heuristics: HeuristicParams::default(),
            search: Search::BestFirst,
            time_limit: None,
            node_limit: None,
            strong_branching: false,
            max_cut_rounds: 25,
            record_events: false,
        };
        p.apply_preset(Preset::WhenXYIntOrLFixedLFixed);
        p
    }
}

impl SolverParams {
    pub fn apply_preset(&mut self, preset: Preset) {
        self.solve_second_level_when_l_vars_fixed = false;
        self.solve_second_level_when_l_vars_int = false;
        self.solve_second_level_when_x_vars_int = false;
        self.solve_second_level_when_xy_vars_int = false;
        self.compute_best_ub_when_l_vars_fixed = false;
        self.compute_best_ub_when_l_vars_int = false;
        self.compute_best_ub_when_x_vars_int = false;
        match preset {
            Preset::WhenLIntLInt => {
                self.solve_second_level_when_l_vars_int = true;
                self.compute_best_ub_when_l_vars_int = true;
            }
            Preset::WhenLIntLFixed => {
                self.solve_second_level_when_l_vars_int = true;
                self.compute_best_ub_when_l_vars_fixed = true;
            }
            Preset::WhenLFixedLFixed => {
                self.solve_second_level_when_l_vars_fixed = true;
                self.compute_best_ub_when_l_vars_fixed = true;
            }
            Preset::WhenXYIntLFixed => {
                self.solve_second_level_when_xy_vars_int = true;
                self.compute_best_ub_when_l_vars_fixed = true;
            }
            Preset::WhenXYIntOrLFixedLFixed => {
                self.solve_second_level_when_xy_vars_int = true;
                self.solve_second_level_when_l_vars_fixed = true;
                self.compute_best_ub_when_l_vars_fixed = true;
            }
        }
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.apply_preset(preset);
        self
    }

    pub fn with_branch_strategy(mut self, s: BranchStrategy) -> Self {
        self.branch_strategy = Some(s);
        self
    }

    pub fn with_pool(mut self, on: bool) -> Self {
        self.use_linking_pool = on;
        self
    }

    /// Rejects combinations that leave no way to remove an integral,
    /// bilevel infeasible relaxation solution.
    pub fn check(&self) -> Result<(), String> {
        if self.branch_strategy == Some(BranchStrategy::Fractional) && self.cuts == CutSelection::None {
            return Err("fractional branching needs cuts: with all cuts disabled a pure branch and bound is not possible".into());
        }
        if self.heuristics.any() && self.heuristics.frequency == 0 {
            return Err("heuristic frequency must be positive".into());
        }
        Ok(())
    }
}
