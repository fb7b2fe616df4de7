//! Browser demo. Three operations, each returning a JSON string:
//!
//! * `power_budget_sweep`: equilibrium of the synthetic power-control game
//!   for a range of average-power budgets.
//! * `chain_explorer`: steady state and occupation measure of a
//!   single-player chain under a slider-controlled policy.
//! * `simulation_curve`: running time averages of a rollout against the
//!   analytic long-run costs.
//!
//! The `*_json` functions hold the logic and are plain Rust; the exported
//! wrappers only convert errors.

use ccsg_core::equilibrium::{solve, SolveStatus, SolverConfig};
use ccsg_core::model::PlayerModel;
use ccsg_core::scenario::{power_control_game, PowerControlParams};
use ccsg_core::simulate::{rollout, RolloutConfig};
use ccsg_core::stationary::{
    induced_transition, long_run_costs, occupation_measure, stationarity_residual, steady_state, MultiPolicy,
    StationaryPolicy,
};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn status_name(s: &SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::NoConvergence => "no_convergence",
        SolveStatus::PlayerInfeasible { .. } => "player_infeasible",
    }
}

fn power_params(players: usize, budget: f64, recharge_prob: f64) -> PowerControlParams {
    PowerControlParams {
        n_players: players,
        gains: PowerControlParams::linear_gains(players, 3),
        recharge_prob,
        power_budget: budget,
        ..Default::default()
    }
}

pub fn power_budget_sweep_json(players: usize, budgets: &[f64], recharge_prob: f64) -> Result<Value, String> {
    let mut points = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let model = power_control_game(&power_params(players, budget, recharge_prob)).map_err(|e| e.to_string())?;
        let r = solve(&model, &SolverConfig::default()).map_err(|e| e.to_string())?;
        points.push(json!({
            "budget": budget,
            "status": status_name(&r.status),
            "throughput": r.costs.iter().map(|c| -c[0]).collect::<Vec<_>>(),
            "power": r.costs.iter().map(|c| c[1]).collect::<Vec<_>>(),
            "max_gap": r.max_gap,
            "iterations": r.iterations,
        }));
    }
    Ok(json!({ "players": players, "points": points }))
}

/// Two-state, two-action chain; `stay[a]` is the probability that action
/// `a` keeps the chain where it is.
fn explorer_player(stay: [f64; 2]) -> PlayerModel {
    let row = |x: usize, p: f64| if x == 0 { vec![p, 1.0 - p] } else { vec![1.0 - p, p] };
    PlayerModel {
        states: vec!["s0".into(), "s1".into()],
        actions: vec![vec!["stay".into(), "move".into()]; 2],
        transitions: (0..2).map(|x| vec![row(x, stay[0]), row(x, stay[1])]).collect(),
        initial: vec![1.0, 0.0],
    }
}

/// `p_stay[x]` is the probability of choosing "stay" in state `x`.
pub fn chain_explorer_json(stay_strength: f64, move_strength: f64, p_stay: [f64; 2]) -> Result<Value, String> {
    let player = explorer_player([stay_strength, 1.0 - move_strength]);
    let policy = StationaryPolicy {
        owner: 0,
        dist: p_stay.iter().map(|&p| vec![p, 1.0 - p]).collect(),
    };
    policy.check(&player).map_err(|e| e.to_string())?;
    let p = induced_transition(&player, &policy).map_err(|e| e.to_string())?;
    let pi = steady_state(&p).map_err(|e| e.to_string())?;
    let z = occupation_measure(&player, &policy).map_err(|e| e.to_string())?;
    Ok(json!({
        "transition": p,
        "steady_state": pi,
        "residual": stationarity_residual(&p, &pi),
        "occupation": z.z,
    }))
}

/// Running averages of player 0's objective at `points` log-spaced times,
/// on the power-control game under the uniform policy.
pub fn simulation_curve_json(seed: u64, horizon: usize, points: usize) -> Result<Value, String> {
    let model = power_control_game(&power_params(2, 0.5, 0.5)).map_err(|e| e.to_string())?;
    let u = MultiPolicy::uniform(&model);
    let analytic = long_run_costs(&model, &u).map_err(|e| e.to_string())?;
    let config = RolloutConfig {
        horizon,
        seed,
        burn_in: 0,
        record_trajectory: true,
    };
    let run = rollout(&model, &u, &config).map_err(|e| e.to_string())?;
    let traj = run.trajectory.unwrap_or_default();
    let mut checkpoints: Vec<usize> = (0..points.max(2))
        .map(|k| {
            let f = k as f64 / (points.max(2) - 1) as f64;
            (horizon as f64).powf(f).round() as usize
        })
        .collect();
    checkpoints.dedup();
    let mut sum = 0.0;
    let mut curve = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for r in traj.iter().filter(|r| r.player == 0) {
        sum += r.costs[0];
        while next < checkpoints.len() && checkpoints[next] == r.t {
            curve.push(json!({"t": r.t, "average": sum / r.t as f64}));
            next += 1;
        }
    }
    Ok(json!({
        "analytic": analytic[0][0],
        "final": run.empirical_costs[0][0],
        "standard_error": run.standard_errors.map(|s| s[0][0]),
        "curve": curve,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn power_budget_sweep(players: u32, budgets: Vec<f64>, recharge_prob: f64) -> Result<String, JsValue> {
    to_js(power_budget_sweep_json(players as usize, &budgets, recharge_prob))
}

#[wasm_bindgen]
pub fn chain_explorer(stay_strength: f64, move_strength: f64, p_stay0: f64, p_stay1: f64) -> Result<String, JsValue> {
    to_js(chain_explorer_json(stay_strength, move_strength, [p_stay0, p_stay1]))
}

#[wasm_bindgen]
pub fn simulation_curve(seed: u32, horizon: u32, points: u32) -> Result<String, JsValue> {
    to_js(simulation_curve_json(seed.into(), horizon as usize, points as usize))
}
