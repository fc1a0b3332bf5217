use std::path::Path;
use std::process::{Command, Output};

use gqsd::cli::ReportJson;
use gqsd::{DiscriminationProblem, HermitianMatrix, Povm, SolveStatus};

fn gqsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqsd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn write_problem(dir: &Path, name: &str, p: &DiscriminationProblem) -> String {
    let file = path(dir, name);
    std::fs::write(&file, p.to_json()).unwrap();
    file
}

fn diag(d: &[f64]) -> HermitianMatrix {
    HermitianMatrix::from_diagonal(d)
}

#[test]
fn gen_writes_expected_shapes_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    for out in [&a, &b] {
        let o = gqsd(&["gen", "--kind", "outcome0", "--r", "4", "--t", "1", "--seed", "9", "--out", out]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(summary["pc_opt"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let p = DiscriminationProblem::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!((p.dim(), p.num_outcomes(), p.num_constraints()), (4, 4, 1));

    let c = path(dir.path(), "c.json");
    let o = gqsd(&["gen", "--kind", "per-outcome", "--r", "4", "--t", "2", "--out", &c]);
    assert_eq!(o.status.code(), Some(0));
    let p = DiscriminationProblem::from_json(&std::fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!((p.dim(), p.num_constraints()), (8, 4));

    let o = gqsd(&["gen", "--kind", "eq99", "--r", "4", "--t", "2", "--out", &c]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_reports_converged_run_with_trace_and_povm() {
    let dir = tempfile::tempdir().unwrap();
    let problem = path(dir.path(), "p.json");
    let trace = path(dir.path(), "trace.csv");
    let povm = path(dir.path(), "povm.json");
    let dual = path(dir.path(), "dual.json");
    assert_eq!(
        gqsd(&["gen", "--kind", "outcome0", "--r", "4", "--t", "2", "--seed", "3", "--out", &problem])
            .status
            .code(),
        Some(0)
    );
    let o = gqsd(&[
        "solve", &problem, "--trace", &trace, "--out-povm", &povm, "--out-dual", &dual,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: ReportJson = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report.status, SolveStatus::Converged);
    assert!(report.gap < 1e-9);
    assert!(report.povm_feasible);
    // the JSON schema round-trips
    let again: ReportJson = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);

    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("iter,f_upper,f_lower,gap,lambda_0,beta_0\n"));
    assert_eq!(csv.lines().count(), report.iterations + 1);

    let p = DiscriminationProblem::from_json(&std::fs::read_to_string(&problem).unwrap()).unwrap();
    let solved = Povm::from_json(&std::fs::read_to_string(&povm).unwrap()).unwrap();
    assert!(p.is_feasible(&solved).unwrap());

    let o = gqsd(&["check", &problem, &povm, "--dual", &dual]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["certificate"]["accepted"].as_bool().unwrap());
    assert!(v["certificate"]["gap"].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn solve_exit_codes_for_bad_input_and_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"M\": ").unwrap();
    let o = gqsd(&["solve", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));

    let o = gqsd(&["solve", &path(dir.path(), "missing.json")]);
    assert_eq!(o.status.code(), Some(1));

    let infeasible = DiscriminationProblem::new(
        vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])],
        vec![vec![diag(&[1.0, 0.0]), HermitianMatrix::zeros(2)]],
        vec![1.5],
    )
    .unwrap();
    let file = write_problem(dir.path(), "inf.json", &infeasible);
    let o = gqsd(&["solve", &file]);
    assert_eq!(o.status.code(), Some(3));

    let o = gqsd(&["solve", &file, "--max-iter", "3"]);
    assert_eq!(o.status.code(), Some(2));

    let o = gqsd(&["solve", &file, "--kappa", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(1));

    let o = gqsd(&["solve", &file, "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = DiscriminationProblem::new(
        vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])],
        vec![vec![diag(&[1.0, 0.0]), HermitianMatrix::zeros(2)]],
        vec![0.3],
    )
    .unwrap();
    let problem = write_problem(dir.path(), "p.json", &p);
    let write_povm = |name: &str, povm: &Povm| {
        let f = path(dir.path(), name);
        std::fs::write(&f, povm.to_json()).unwrap();
        f
    };

    let matched = write_povm("m.json", &Povm::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap());
    let o = gqsd(&["check", &problem, &matched, "--auto-dual"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["f"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["feasible"].as_bool().unwrap());
    assert!(v["certificate"]["gap"].as_f64().unwrap().abs() < 1e-8);

    let uniform = write_povm("u.json", &Povm::uniform(2, 2));
    let o = gqsd(&["check", &problem, &uniform, "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["certificate"]["accepted"].as_bool().unwrap());
    assert!(v["certificate"]["gap"].as_f64().unwrap() > 0.1);

    let swapped = write_povm("s.json", &Povm::new(vec![diag(&[0.0, 1.0]), diag(&[1.0, 0.0])]).unwrap());
    let o = gqsd(&["check", &problem, &swapped]);
    assert_eq!(o.status.code(), Some(4));

    let broken = path(dir.path(), "b.json");
    std::fs::write(
        &broken,
        Povm::new_unchecked(vec![diag(&[1.0, 0.0]), diag(&[0.5, 1.0])]).unwrap().to_json(),
    )
    .unwrap();
    let o = gqsd(&["check", &problem, &broken]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PovmViolation"));
}

#[test]
fn minerr_and_bench_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = DiscriminationProblem::new(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])], vec![], vec![]).unwrap();
    let problem = write_problem(dir.path(), "p.json", &p);
    let o = gqsd(&["minerr", &problem]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let out = path(dir.path(), "r.csv");
    let o = gqsd(&["bench", "--ranks", "1,2", "--trials", "2", "--seed", "5", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(&out).unwrap();
    assert_eq!(first.lines().count(), 5);
    assert!(first.starts_with("kind,R,T,trial,seed,status,iterations,f_upper,f_lower,gap\n"));
    let o = gqsd(&["bench", "--ranks", "1,2", "--trials", "2", "--seed", "5", "--sequential", "--out", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}
