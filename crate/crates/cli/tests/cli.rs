use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MPS: &str = "\
NAME          MOOREBARD
ROWS
 N  OBJ
 L  R0
 L  R1
 L  R2
 G  R3
COLUMNS
    MARKER                 'MARKER'                 'INTORG'
    x         OBJ       -1             R0        -25
    x         R1        1              R2        2
    x         R3        2
    y         OBJ       -10            R0        20
    y         R1        2              R2        -1
    y         R3        10
    MARKER                 'MARKER'                 'INTEND'
RHS
    RHS       R0        30             R1        10
    RHS       R2        15             R3        15
BOUNDS
 UP BND       x         10
ENDATA
";

const AUX: &str = "N 1\nM 4\nLC 1\nLR 0\nLR 1\nLR 2\nLR 3\nLO 1\nOS 1\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilevel-bnc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn moore_bard(dir: &Path) -> (String, String) {
    let (m, a) = (dir.join("mb.mps"), dir.join("mb.aux"));
    std::fs::write(&m, MPS).unwrap();
    std::fs::write(&a, AUX).unwrap();
    (m.to_string_lossy().into(), a.to_string_lossy().into())
}

fn line<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key)).unwrap_or_else(|| panic!("no '{key}' in\n{text}")).trim()
}

#[test]
fn solves_moore_bard() {
    let dir = tempfile::tempdir().unwrap();
    let (m, a) = moore_bard(dir.path());
    let sol: PathBuf = dir.path().join("mb.sol");
    let o = run(&["solve", &m, &a, "--solution", sol.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let out = stdout(&o);
    assert_eq!(line(&out, "status:"), "Optimal");
    assert_eq!(line(&out, "objective:"), "-22");
    assert_eq!(line(&out, "y:"), "2");
    let text = std::fs::read_to_string(sol).unwrap();
    assert!(text.contains("objective -22"));
}

#[test]
fn every_configuration_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let (m, a) = moore_bard(dir.path());
    for strategy in ["linking", "fractional"] {
        for pool in ["true", "false"] {
            let o = run(&[
                "solve", &m, &a, "--branchStrategy", strategy, "--useLinkingSolutionPool", pool, "--preset", "whenLInt-LInt",
                "--solveSecondLevelWhenXVarsInt", "true", "--computeBestUBWhenXVarsInt", "false", "--improvingObjectiveCut", "true",
                "--secondLevelPriority", "true", "--weightedSums", "true", "--heuristicFrequency", "5", "--search", "depth-first",
                "--strongBranching", "true", "--maxCutRounds", "10", "--feasCheckSolver", "internal", "--nodeLimit", "1000",
                "--timeLimit", "60",
            ]);
            assert!(o.status.success(), "{o:?}");
            assert_eq!(line(&stdout(&o), "objective:"), "-22");
        }
    }
}

#[test]
fn zero_time_limit_reports_root_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (m, a) = moore_bard(dir.path());
    let out = stdout(&run(&["solve", &m, &a, "--timeLimit", "0"]));
    assert_eq!(line(&out, "status:"), "TimeLimit");
    assert_eq!(line(&out, "lower bound:"), "-42");
}

#[test]
fn rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let (m, a) = moore_bard(dir.path());
    let o = run(&["solve", &m, &a, "--branchStrategy", "fractional", "--cuts", "none"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not possible"));
    assert!(!run(&["solve", &m, &a, "--feasCheckSolver", "cplex"]).status.success());
    assert!(!run(&["solve", &m, &a, "--branchStrategy", "depth"]).status.success());
    assert!(!run(&["solve", &m, &a, "--timeLimit", "-1"]).status.success());
    assert!(!run(&["solve", &m, "missing.aux"]).status.success());
}

#[test]
fn help_lists_every_flag() {
    let help = stdout(&run(&["solve", "--help"]));
    for flag in [
        "--branchStrategy", "--useLinkingSolutionPool", "--preset", "--solveSecondLevelWhenLVarsFixed", "--solveSecondLevelWhenLVarsInt",
        "--solveSecondLevelWhenXVarsInt", "--solveSecondLevelWhenXYVarsInt", "--computeBestUBWhenLVarsFixed", "--computeBestUBWhenLVarsInt",
        "--computeBestUBWhenXVarsInt", "--cuts", "--improvingObjectiveCut", "--secondLevelPriority", "--weightedSums",
        "--heuristicFrequency", "--search", "--timeLimit", "--nodeLimit", "--strongBranching", "--maxCutRounds", "--feasCheckSolver",
        "--solution", "--introduceUnitColumn",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn validate_reports_properties() {
    let dir = tempfile::tempdir().unwrap();
    let (m, a) = moore_bard(dir.path());
    let o = run(&["validate", &m, &a]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(line(&out, "linking:"), "0 1");
    assert_eq!(line(&out, "pure integer:"), "true");
}

#[test]
fn gen_is_deterministic() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        let o = run(&["gen", "--profile", "miblp-xu", "--size", "10", "--seed", "4", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success(), "{o:?}");
    }
    for ext in ["mps", "aux"] {
        let name = format!("miblp-xu-10-4.{ext}");
        assert_eq!(std::fs::read(d1.path().join(&name)).unwrap(), std::fs::read(d2.path().join(&name)).unwrap());
    }
    let p = d1.path().join("miblp-xu-10-4");
    let o = run(&["validate", p.with_extension("mps").to_str().unwrap(), p.with_extension("aux").to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    assert!(!run(&["gen", "--profile", "iblp-den", "--size", "1"]).status.success());
}

#[test]
fn profile_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    moore_bard(dir.path());
    let csv = dir.path().join("out.csv");
    let o = run(&[
        "profile", dir.path().to_str().unwrap(), "--config", "fractional+pool", "--config", "fractional+no-pool", "--budget", "10", "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "instance,config,status,value,time,nodes,sl_count,ub_count");
    assert_eq!(lines.len(), 3);
    let empty = tempfile::tempdir().unwrap();
    assert!(!run(&["profile", empty.path().to_str().unwrap(), "--config", "default"]).status.success());
}
