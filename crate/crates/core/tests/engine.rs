use std::collections::HashMap;
use std::time::Duration;

use bilevel_bnc::engine::{
    check_feasibility, pool_key, should_prune, solve, BilevelStatus, BranchStrategy, CutSelection, EngineError, Event, Feasibility, Improvement,
    PoolTag, Preset, PruneReason, SecondLevel, Solver, SolverParams,
};
use bilevel_bnc::gen::{moore_bard, small_random};
use bilevel_bnc::oracle::{brute_force_solve, OracleCaps};

#[test]
fn moore_bard_all_configurations() {
    let inst = moore_bard();
    for s in [BranchStrategy::Linking, BranchStrategy::Fractional] {
        for pool in [true, false] {
            for p in Preset::ALL {
                let params = SolverParams::default().with_preset(p).with_branch_strategy(s).with_pool(pool);
                let r = solve(&inst, &params).unwrap();
                assert_eq!(r.objective(), Some(-22.0), "{s:?} pool={pool} {}", p.name());
                assert_eq!(r.x.as_ref().unwrap()[1], 2.0);
                assert_eq!(r.y.as_ref().unwrap()[0], 2.0);
                assert!(r.verified);
            }
        }
    }
}

#[test]
fn small_random_matches_oracle() {
    for seed in 0..200 {
        let inst = small_random(seed);
        let want = brute_force_solve(&inst, OracleCaps::default()).unwrap().value();
        for s in [BranchStrategy::Linking, BranchStrategy::Fractional] {
            let r = solve(&inst, &SolverParams::default().with_branch_strategy(s)).unwrap();
            match (want, r.objective()) {
                (None, None) => {}
                (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-6, "seed {seed} {s:?}: oracle {a} engine {b}"),
                (a, b) => panic!("seed {seed} {s:?}: oracle {a:?} engine {b:?}"),
            }
        }
    }
}

#[test]
fn feasibility_check_examples() {
    let inst = moore_bard();
    assert_eq!(check_feasibility(&inst, &[1.0, 2.0], &[2.0], Some(2.0)), Feasibility::BilevelFeasible);
    assert_eq!(check_feasibility(&inst, &[1.0, 2.0], &[4.0], Some(2.0)), Feasibility::OptimalityViolated);
    assert_eq!(check_feasibility(&inst, &[1.0, 1.5], &[2.0], Some(2.0)), Feasibility::IntegralityViolated);
    assert_eq!(check_feasibility(&inst, &[1.0, 9.0], &[1.0], None), Feasibility::RowsViolated);
}

#[test]
fn second_level_and_pool() {
    let inst = moore_bard();
    let mut s = Solver::new(&inst, SolverParams::default()).unwrap();
    assert_eq!(s.solve_second_level(&[1.0, 2.0]).unwrap(), SecondLevel::Feasible { y_hat: vec![2.0], phi: 2.0 });
    assert_eq!(s.pool().get(&[1.0, 2.0]), Some(&PoolTag::SecondLevelFeasible { y_hat: vec![2.0], phi: 2.0 }));
    assert_eq!(s.solve_second_level(&[1.0, 0.0]).unwrap(), SecondLevel::Infeasible);
    assert_eq!(s.pool().get(&[1.0, 0.0]), Some(&PoolTag::SecondLevelInfeasible));
    assert_eq!(s.stats().sl_milp_solves, 2);
    // a repeat is a cache hit
    s.solve_second_level(&[1.0, 2.0]).unwrap();
    assert_eq!((s.stats().sl_milp_solves, s.stats().pool_hits), (2, 1));
}

#[test]
fn best_upper_bound_examples() {
    let inst = moore_bard();
    let mut s = Solver::new(&inst, SolverParams::default()).unwrap();
    assert_eq!(s.solve_best_ub(&[1.0, 8.0]).unwrap().map(|b| b.2), Some(-18.0));
    assert_eq!(s.upper_bound(), -18.0);
    let (x, y, v) = s.solve_best_ub(&[1.0, 2.0]).unwrap().unwrap();
    assert_eq!((x, y, v), (vec![1.0, 2.0], vec![2.0], -22.0));
    assert_eq!(s.upper_bound(), -22.0);
    assert!(s.pool().get(&[1.0, 2.0]).unwrap().ub_solved());
    assert_eq!(s.solve_best_ub(&[1.0, 0.0]).unwrap(), None);
    let ub = s.stats().ub_solves;
    s.solve_best_ub(&[1.0, 2.0]).unwrap();
    assert_eq!(s.stats().ub_solves, ub);
}

#[test]
fn xi_examples() {
    let inst = moore_bard();
    let mut s = Solver::new(&inst, SolverParams::default()).unwrap();
    assert_eq!(s.evaluate_xi(&[1.0, 2.0]).unwrap().map(|v| v.0), Some(-20.0));
    assert_eq!(s.evaluate_xi(&[1.0, 0.0]).unwrap(), None);
}

#[test]
fn prune_examples() {
    let int = Improvement { integral: true };
    let cont = Improvement { integral: false };
    assert_eq!(should_prune(int, None, f64::INFINITY, false, None), Some(PruneReason::Infeasible));
    assert_eq!(should_prune(int, Some(-20.0), -22.0, false, None), Some(PruneReason::Bound));
    assert_eq!(should_prune(int, Some(-22.5), -22.0, false, None), Some(PruneReason::Bound));
    assert_eq!(should_prune(cont, Some(-22.5), -22.0, false, None), None);
    assert_eq!(should_prune(int, Some(-23.0), -22.0, false, None), None);
    assert_eq!(should_prune(int, Some(-42.0), f64::INFINITY, false, None), None);
    let inf = PoolTag::SecondLevelInfeasible;
    assert_eq!(should_prune(int, Some(-42.0), -22.0, true, Some(&inf)), Some(PruneReason::LinkingFixedInfeasible));
    assert_eq!(should_prune(int, Some(-42.0), -22.0, false, Some(&inf)), None);
    let done = PoolTag::UbSolved { y_hat: vec![2.0], phi: 2.0, best: None };
    assert_eq!(should_prune(int, Some(-42.0), -22.0, true, Some(&done)), Some(PruneReason::LinkingFixedUbSolved));
}

#[test]
fn infeasible_instance() {
    let mut inst = moore_bard();
    inst.ub_x[1] = 0.0;
    let r = solve(&inst, &SolverParams::default()).unwrap();
    assert_eq!((r.status, r.objective()), (BilevelStatus::Infeasible, None));
}

#[test]
fn zero_time_limit_reports_root_bound() {
    let mut params = SolverParams::default();
    params.time_limit = Some(Duration::ZERO);
    let r = solve(&moore_bard(), &params).unwrap();
    assert_eq!(r.status, BilevelStatus::TimeLimit);
    assert!(r.lower <= -22.0);
}

#[test]
fn node_limit_stops_the_search() {
    let mut params = SolverParams::default().with_branch_strategy(BranchStrategy::Linking);
    params.node_limit = Some(1);
    params.cuts = CutSelection::None;
    let r = solve(&moore_bard(), &params).unwrap();
    assert!(matches!(r.status, BilevelStatus::NodeLimit | BilevelStatus::Optimal));
    assert!(r.stats.nodes <= 1);
    assert!(r.lower <= -22.0);
}

#[test]
fn fractional_without_cuts_is_rejected() {
    let mut params = SolverParams::default().with_branch_strategy(BranchStrategy::Fractional);
    params.cuts = CutSelection::None;
    assert!(matches!(Solver::new(&moore_bard(), params), Err(EngineError::Params(_))));
}

#[test]
fn pool_solves_each_linking_vector_once() {
    for seed in 0..100 {
        let inst = small_random(seed);
        for s in [BranchStrategy::Linking, BranchStrategy::Fractional] {
            let mut params = SolverParams::default().with_branch_strategy(s);
            params.record_events = true;
            let r = solve(&inst, &params).unwrap();
            let mut sl: HashMap<Vec<i64>, usize> = HashMap::new();
            let mut ub: HashMap<Vec<i64>, usize> = HashMap::new();
            for e in &r.events {
                match e {
                    Event::SecondLevelSolved { gamma, .. } => *sl.entry(pool_key(gamma)).or_default() += 1,
                    Event::UpperBoundSolved { gamma, .. } => *ub.entry(pool_key(gamma)).or_default() += 1,
                    _ => {}
                }
            }
            assert!(sl.values().chain(ub.values()).all(|&n| n == 1), "seed {seed} {s:?}");
            assert_eq!(sl.values().sum::<usize>(), r.stats.sl_milp_solves);
        }
    }
}

#[test]
fn presets_agree_and_incumbents_are_verified() {
    for seed in 0..60 {
        let inst = small_random(seed);
        let base = solve(&inst, &SolverParams::default()).unwrap();
        for p in Preset::ALL {
            for pool in [true, false] {
                let r = solve(&inst, &SolverParams::default().with_preset(p).with_pool(pool)).unwrap();
                match (base.objective(), r.objective()) {
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-6, "seed {seed} {}", p.name()),
                    (a, b) => assert_eq!(a, b, "seed {seed} {}", p.name()),
                }
                assert_eq!(r.verified, r.x.is_some(), "seed {seed}");
                assert!(r.lower <= r.upper + 1e-9);
            }
        }
    }
}

#[test]
fn events_serialize_as_tagged_json() {
    let mut params = SolverParams::default();
    params.record_events = true;
    let r = solve(&moore_bard(), &params).unwrap();
    assert!(!r.events.is_empty());
    for e in &r.events {
        let text = serde_json::to_string(e).unwrap();
        assert!(text.starts_with("{\"event\":"), "{text}");
        // infinite bounds become null, so only finite events read back
        if let Ok(back) = serde_json::from_str::<Event>(&text) {
            assert_eq!(&back, e);
        }
    }
}
