//! JSON views of solver outputs with state and action names in place of indices.

use ccsg_core::best_response::BestResponseOutcome;
use ccsg_core::equilibrium::{EquilibriumResult, SolveStatus};
use ccsg_core::ergodicity::ErgodicityReport;
use ccsg_core::io::policy_to_value;
use ccsg_core::model::GameModel;
use ccsg_core::stationary::{MultiPolicy, OccupationMeasure, StationaryPolicy};
use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Wraps a command's payload with the tool version and its effective config.
pub fn envelope(command: &str, config: Value, body: Map<String, Value>) -> Value {
    let mut out = Map::new();
    out.insert("tool".into(), json!("ccsg"));
    out.insert("version".into(), json!(VERSION));
    out.insert("command".into(), json!(command));
    out.insert("config".into(), config);
    out.extend(body);
    Value::Object(out)
}

pub fn occupation(model: &GameModel, z: &OccupationMeasure) -> Value {
    let player = &model.players[z.owner];
    let mut map = Map::new();
    for (k, (x, a)) in player.pairs().enumerate() {
        map.insert(player.pair_label(x, a), json!(z.z[k]));
    }
    json!({"owner": z.owner, "z": map})
}

fn single_policy(model: &GameModel, p: &StationaryPolicy) -> Value {
    let mut u = MultiPolicy::uniform(model);
    u.policies[p.owner] = p.clone();
    policy_to_value(model, &u)["policies"][p.owner].clone()
}

pub fn status(s: &SolveStatus) -> Value {
    match s {
        SolveStatus::Converged => json!({"status": "converged"}),
        SolveStatus::NoConvergence => json!({"status": "no_convergence"}),
        SolveStatus::PlayerInfeasible { player } => json!({"status": "player_infeasible", "player": player}),
    }
}

pub fn equilibrium(model: &GameModel, r: &EquilibriumResult) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("status".into(), status(&r.status));
    m.insert("iterations".into(), json!(r.iterations));
    m.insert("run".into(), json!(r.run));
    m.insert("max_gap".into(), json!(r.max_gap));
    m.insert("gaps".into(), json!(r.gaps));
    m.insert("costs".into(), json!(r.costs));
    m.insert("slacks".into(), json!(r.slacks));
    m.insert("policy".into(), policy_to_value(model, &r.multi_policy));
    m.insert(
        "occupations".into(),
        Value::Array(r.occupations.iter().map(|z| occupation(model, z)).collect()),
    );
    m.insert("trace".into(), json!(r.trace));
    m.insert(
        "selection_log".into(),
        Value::Array(
            r.selection_log
                .iter()
                .map(|s| json!({"player": s.player, "state": model.players[s.player].states[s.state]}))
                .collect(),
        ),
    );
    m
}

pub fn best_response(model: &GameModel, br: &BestResponseOutcome) -> Map<String, Value> {
    let player = &model.players[br.owner];
    let mut m = Map::new();
    m.insert("player".into(), json!(br.owner));
    m.insert("status".into(), json!(if br.is_optimal() { "optimal" } else { "infeasible" }));
    m.insert("value".into(), json!(br.value));
    m.insert("z_star".into(), br.z_star.as_ref().map_or(Value::Null, |z| occupation(model, z)["z"].clone()));
    m.insert(
        "policy".into(),
        br.policy.as_ref().map_or(Value::Null, |p| single_policy(model, p)["dist"].clone()),
    );
    m.insert(
        "uniform_states".into(),
        json!(br.uniform_states.iter().map(|&x| &player.states[x]).collect::<Vec<_>>()),
    );
    m.insert("constraint_values".into(), json!(br.constraint_values));
    m.insert("consistency_error".into(), json!(br.consistency_error));
    m.insert("lp".into(), serde_json::to_value(&br.lp).expect("diagnostics serialize"));
    m
}

pub fn ergodicity(player: usize, r: &ErgodicityReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    v["player"] = json!(player);
    v
}
