use std::path::Path;
use std::process::{Command, Output};

use ccsg_core::io::{load_game, save_game, save_policy};
use ccsg_core::model::{ConstraintSpec, CostTable, CostValues, GameModel, PlayerModel};
use ccsg_core::stationary::MultiPolicy;
use serde_json::Value;
use tempfile::TempDir;

fn ccsg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccsg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn chain() -> PlayerModel {
    PlayerModel {
        states: vec!["lo".into(), "hi".into()],
        actions: vec![vec!["a".into(), "b".into()], vec!["a".into(), "b".into()]],
        transitions: vec![vec![vec![0.7, 0.3], vec![0.2, 0.8]], vec![vec![0.6, 0.4], vec![0.1, 0.9]]],
        initial: vec![1.0, 0.0],
    }
}

fn decoupled(bound: f64) -> GameModel {
    GameModel {
        name: "decoupled".into(),
        players: vec![chain(), chain()],
        costs: vec![
            CostTable { owner: 0, index: 0, values: CostValues::Separable(vec![0.9, 0.1, 0.4, 0.7]) },
            CostTable { owner: 1, index: 0, values: CostValues::Separable(vec![0.2, 0.6, 0.8, 0.3]) },
            CostTable { owner: 1, index: 1, values: CostValues::Separable(vec![0.0, 1.0, 0.0, 1.0]) },
        ],
        constraints: vec![ConstraintSpec { owner: 1, bounds: vec![bound] }],
        ..Default::default()
    }
}

#[test]
fn solve_decoupled_game() {
    let dir = TempDir::new().unwrap();
    save_game(&decoupled(0.4), dir.path().join("game.json")).unwrap();
    let out = ccsg(&["solve", "game.json", "--seed", "0", "--out", "result.json", "--policy-out", "policy.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result["status"]["status"], "converged");
    assert_eq!(result["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(result["config"]["damping"], 0.5);
    for g in result["gaps"].as_array().unwrap() {
        assert!(g.as_f64().unwrap() <= 1e-8);
    }
    let verify = ccsg(&["verify", "game.json", "policy.json"], dir.path());
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(json(&verify)["verification"]["verdict"], "PASS");
}

#[test]
fn verify_rejects_a_perturbed_equilibrium() {
    let dir = TempDir::new().unwrap();
    let m = decoupled(0.4);
    save_game(&m, dir.path().join("game.json")).unwrap();
    assert_eq!(ccsg(&["solve", "game.json", "--seed", "0", "--policy-out", "eq.json"], dir.path()).status.code(), Some(0));
    let eq = ccsg_core::io::load_policy(&m, dir.path().join("eq.json")).unwrap();
    let mut u = eq.clone();
    for row in &mut u.policies[0].dist {
        for v in row.iter_mut() {
            *v = 0.9 * *v + 0.05;
        }
    }
    save_policy(&m, &u, dir.path().join("perturbed.json")).unwrap();
    let out = ccsg(&["verify", "game.json", "perturbed.json", "--epsilon", "1e-6"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let rep = json(&out);
    assert_eq!(rep["verification"]["verdict"], "FAIL");
    assert!(rep["verification"]["players"][0]["gap"].as_f64().unwrap() > 1e-6);
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("player") && table.lines().count() >= 3, "{table}");
}

#[test]
fn malformed_file_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"name\": \"x\",\n \"players\": [{\"states\": 3}]}").unwrap();
    let out = ccsg(&["validate", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("players[0].states") || err.contains("line 2"), "{err}");
    let out = ccsg(&["validate", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(ccsg(&["solve"], dir.path()).status.code(), Some(1));
    assert_eq!(ccsg(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(ccsg(&["--version"], dir.path()).status.code(), Some(0));
}

#[test]
fn unreachable_budget_exits_three() {
    let dir = TempDir::new().unwrap();
    save_game(&decoupled(-1.0), dir.path().join("game.json")).unwrap();
    let out = ccsg(&["solve", "game.json", "--seed", "1", "--restarts", "1"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["status"]["player"], 1);
}

#[test]
fn generators_write_loadable_games() {
    let dir = TempDir::new().unwrap();
    let out = ccsg(&["generate", "random", "--players", "2", "--states", "3", "--seed", "4", "--out", "a.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    ccsg(&["generate", "random", "--players", "2", "--states", "3", "--seed", "4", "--out", "b.json"], dir.path());
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    assert_eq!(ccsg(&["validate", "a.json"], dir.path()).status.code(), Some(0));

    let out = ccsg(&["generate", "power-control", "--power-levels", "0,1,2", "--out", "pc.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let m = load_game(dir.path().join("pc.json")).unwrap();
    assert!(m.validate().is_clean());
    assert_eq!(ccsg(&["validate", "pc.json"], dir.path()).status.code(), Some(0));

    let bad = ccsg(&["generate", "power-control", "--noise", "0"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn missing_seed_warns() {
    let dir = TempDir::new().unwrap();
    let out = ccsg(&["generate", "random"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let again = ccsg(&["generate", "random", "--seed", "0"], dir.path());
    assert_eq!(out.stdout, again.stdout);
    assert!(again.stderr.is_empty());
}

#[test]
fn simulate_reports_and_dumps_trajectory() {
    let dir = TempDir::new().unwrap();
    let m = decoupled(0.4);
    save_game(&m, dir.path().join("game.json")).unwrap();
    save_policy(&m, &MultiPolicy::uniform(&m), dir.path().join("u.json")).unwrap();
    let out = ccsg(&["simulate", "game.json", "u.json", "--horizon", "1", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["discrepancy"]["insufficient_sample"], true);

    let out = ccsg(
        &["simulate", "game.json", "u.json", "--horizon", "50000", "--seed", "3", "--trajectory", "t.csv"],
        dir.path(),
    );
    let rep = json(&out);
    assert_eq!(rep["config"]["horizon"], 50000);
    assert!(rep["discrepancy"]["max_abs_discrepancy"].as_f64().unwrap() < 0.05);
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 100_000);
    assert_eq!(lines[0].split(',').count(), 5);
    assert_eq!(lines[1].split(',').count(), 6);
}

#[test]
fn best_response_reports_named_policy() {
    let dir = TempDir::new().unwrap();
    let m = decoupled(0.4);
    save_game(&m, dir.path().join("game.json")).unwrap();
    save_policy(&m, &MultiPolicy::uniform(&m), dir.path().join("u.json")).unwrap();
    let out = ccsg(&["best-response", "game.json", "u.json", "--player", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["status"], "optimal");
    let z = rep["z_star"].as_object().unwrap();
    assert!(z.contains_key("lo:a") && z.contains_key("hi:b"));
    assert!(rep["constraint_values"][0].as_f64().unwrap() <= 0.4 + 1e-9);
    let out = ccsg(&["best-response", "game.json", "u.json", "--player", "5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
