//! JSON game and policy files.
//!
//! Game files name states and actions with strings; the loader assigns
//! integer indices in declaration order. Dense cost tables are keyed by
//! `"x1:a1|x2:a2|...|xN:aN"`, separable ones by `"x:a"`. Policy files have
//! the form `{"policies":[{"owner":i,"dist":{state:{action:prob}}}]}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{ConstraintSpec, CostTable, CostValues, GameModel, PlayerModel, PROB_TOL};
use crate::stationary::{MultiPolicy, StationaryPolicy};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    tags: Vec<String>,
    players: Vec<PlayerFile>,
    #[serde(default)]
    costs: Vec<CostFile>,
    #[serde(default)]
    constraints: Vec<ConstraintFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerFile {
    states: Vec<String>,
    actions: BTreeMap<String, Vec<String>>,
    transitions: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    initial: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CostFile {
    owner: usize,
    index: usize,
    #[serde(default)]
    separable: bool,
    values: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    owner: usize,
    bounds: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    policies: Vec<PolicyEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyEntry {
    owner: usize,
    dist: BTreeMap<String, BTreeMap<String, f64>>,
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => Error::schema(format!("line {}, column {}", e.line(), e.column()), e.to_string()),
            _ => Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })
}

/// Divides by the sum when it is off from one by more than rounding noise
/// but within [`PROB_TOL`]; leaves exactly-normalized input untouched so
/// save/load round-trips bit for bit.
fn renormalize(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    let err = (sum - 1.0).abs();
    if err <= PROB_TOL && err > 4.0 * f64::EPSILON * values.len() as f64 {
        for v in values.iter_mut() {
            *v /= sum;
        }
    }
}

fn check_name(path: &str, name: &str) -> Result<()> {
    if name.is_empty() || name.contains(':') || name.contains('|') {
        return Err(Error::schema(path, format!("name {name:?} must be non-empty and free of ':' and '|'")));
    }
    Ok(())
}

fn build_player(i: usize, pf: PlayerFile) -> Result<PlayerModel> {
    let base = format!("players[{i}]");
    let states = pf.states;
    for (x, s) in states.iter().enumerate() {
        check_name(&format!("{base}.states[{x}]"), s)?;
        if states[..x].contains(s) {
            return Err(Error::schema(format!("{base}.states"), format!("duplicate state {s:?}")));
        }
    }
    let index_of = |path: &str, name: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::schema(path, format!("unknown state {name:?}")))
    };
    for key in pf.actions.keys() {
        index_of(&format!("{base}.actions"), key)?;
    }
    let mut actions = Vec::with_capacity(states.len());
    for s in &states {
        let acts = pf.actions.get(s).cloned().unwrap_or_default();
        for (a, name) in acts.iter().enumerate() {
            check_name(&format!("{base}.actions.{s}[{a}]"), name)?;
            if acts[..a].contains(name) {
                return Err(Error::schema(format!("{base}.actions.{s}"), format!("duplicate action {name:?}")));
            }
        }
        actions.push(acts);
    }
    let n = states.len();
    let mut transitions: Vec<Vec<Vec<f64>>> = actions.iter().map(|a| vec![vec![0.0; n]; a.len()]).collect();
    for (from, by_action) in &pf.transitions {
        let x = index_of(&format!("{base}.transitions"), from)?;
        for (act, targets) in by_action {
            let path = format!("{base}.transitions.{from}");
            let a = actions[x]
                .iter()
                .position(|n| n == act)
                .ok_or_else(|| Error::schema(&path, format!("unknown action {act:?}")))?;
            for (to, &p) in targets {
                let y = index_of(&format!("{path}.{act}"), to)?;
                transitions[x][a][y] = p;
            }
            renormalize(&mut transitions[x][a]);
        }
    }
    let mut initial = vec![0.0; n];
    for (s, &p) in &pf.initial {
        initial[index_of(&format!("{base}.initial"), s)?] = p;
    }
    renormalize(&mut initial);
    Ok(PlayerModel {
        states,
        actions,
        transitions,
        initial,
    })
}

fn parse_pair(player: &PlayerModel, part: &str) -> Option<usize> {
    let (s, a) = part.split_once(':')?;
    let x = player.state_index(s)?;
    let a = player.action_index(x, a)?;
    Some(player.pair_offsets()[x] + a)
}

fn build_cost(k: usize, cf: CostFile, players: &[PlayerModel], strides: &[usize], global: usize) -> Result<CostTable> {
    let path = format!("costs[{k}]");
    let owner = players
        .get(cf.owner)
        .ok_or_else(|| Error::schema(format!("{path}.owner"), format!("no player {}", cf.owner)))?;
    let values = if cf.separable {
        let mut vals = vec![f64::NAN; owner.num_pairs()];
        for (key, v) in cf.values {
            if key.contains('|') {
                return Err(Error::schema(
                    format!("{path}.values"),
                    format!("separable table has full-tuple key {key:?}; ambiguous representation"),
                ));
            }
            let idx = parse_pair(owner, &key)
                .ok_or_else(|| Error::schema(format!("{path}.values"), format!("unknown pair {key:?}")))?;
            vals[idx] = v;
        }
        CostValues::Separable(vals)
    } else {
        let mut vals = vec![f64::NAN; global];
        for (key, v) in cf.values {
            let parts: Vec<&str> = key.split('|').collect();
            if parts.len() != players.len() {
                return Err(Error::schema(
                    format!("{path}.values"),
                    format!("key {key:?} has {} components, expected {}", parts.len(), players.len()),
                ));
            }
            let mut g = 0;
            for (l, part) in parts.iter().enumerate() {
                let idx = parse_pair(&players[l], part)
                    .ok_or_else(|| Error::schema(format!("{path}.values"), format!("unknown pair {part:?} in {key:?}")))?;
                g += idx * strides[l];
            }
            vals[g] = v;
        }
        CostValues::Dense(vals)
    };
    Ok(CostTable {
        owner: cf.owner,
        index: cf.index,
        values,
    })
}

/// Parses a game file. Entries missing from cost tables are loaded as NaN
/// and reported by validation.
pub fn game_from_str(text: &str) -> Result<GameModel> {
    let file: GameFile = from_json(text)?;
    if file.players.is_empty() {
        return Err(Error::schema("players", "at least one player is required"));
    }
    let players = file
        .players
        .into_iter()
        .enumerate()
        .map(|(i, p)| build_player(i, p))
        .collect::<Result<Vec<_>>>()?;
    let mut model = GameModel {
        name: file.name,
        description: file.description,
        tags: file.tags,
        players,
        costs: Vec::new(),
        constraints: file
            .constraints
            .into_iter()
            .map(|c| ConstraintSpec {
                owner: c.owner,
                bounds: c.bounds,
            })
            .collect(),
    };
    let strides = model.strides();
    let global = model
        .global_size()
        .ok_or_else(|| Error::schema("players", "global state-action space too large"))?;
    model.costs = file
        .costs
        .into_iter()
        .enumerate()
        .map(|(k, c)| build_cost(k, c, &model.players, &strides, global))
        .collect::<Result<_>>()?;
    Ok(model)
}

fn player_value(p: &PlayerModel) -> Value {
    let mut actions = Map::new();
    let mut transitions = Map::new();
    for (x, s) in p.states.iter().enumerate() {
        actions.insert(s.clone(), json!(p.actions[x]));
        let mut by_action = Map::new();
        for (a, name) in p.actions[x].iter().enumerate() {
            let mut targets = Map::new();
            for (y, &pr) in p.transitions[x][a].iter().enumerate() {
                if pr != 0.0 {
                    targets.insert(p.states[y].clone(), json!(pr));
                }
            }
            by_action.insert(name.clone(), Value::Object(targets));
        }
        transitions.insert(s.clone(), Value::Object(by_action));
    }
    let mut initial = Map::new();
    for (s, &pr) in p.states.iter().zip(&p.initial) {
        if pr != 0.0 {
            initial.insert(s.clone(), json!(pr));
        }
    }
    json!({
        "states": p.states,
        "actions": actions,
        "transitions": transitions,
        "initial": initial,
    })
}

/// JSON value of a game in the on-disk schema. Non-finite cost entries are
/// omitted.
pub fn game_to_value(model: &GameModel) -> Value {
    let labels: Vec<Vec<String>> = model
        .players
        .iter()
        .map(|p| p.pairs().map(|(x, a)| p.pair_label(x, a)).collect())
        .collect();
    let costs: Vec<Value> = model
        .costs
        .iter()
        .map(|t| {
            let mut values = Map::new();
            let separable = match &t.values {
                CostValues::Separable(v) => {
                    for (k, &c) in v.iter().enumerate() {
                        if c.is_finite() {
                            values.insert(labels[t.owner][k].clone(), json!(c));
                        }
                    }
                    true
                }
                CostValues::Dense(v) => {
                    for (g, &c) in v.iter().enumerate() {
                        if c.is_finite() {
                            let key = model
                                .decompose(g)
                                .iter()
                                .enumerate()
                                .map(|(l, &k)| labels[l][k].as_str())
                                .collect::<Vec<_>>()
                                .join("|");
                            values.insert(key, json!(c));
                        }
                    }
                    false
                }
            };
            json!({"owner": t.owner, "index": t.index, "separable": separable, "values": values})
        })
        .collect();
    let mut top = Map::new();
    top.insert("name".into(), json!(model.name));
    if !model.description.is_empty() {
        top.insert("description".into(), json!(model.description));
    }
    if !model.tags.is_empty() {
        top.insert("tags".into(), json!(model.tags));
    }
    top.insert("players".into(), Value::Array(model.players.iter().map(player_value).collect()));
    top.insert("costs".into(), Value::Array(costs));
    top.insert(
        "constraints".into(),
        Value::Array(
            model
                .constraints
                .iter()
                .map(|c| json!({"owner": c.owner, "bounds": c.bounds}))
                .collect(),
        ),
    );
    Value::Object(top)
}

pub fn game_to_string(model: &GameModel) -> String {
    serde_json::to_string_pretty(&game_to_value(model)).expect("game serializes")
}

pub fn read_game<R: Read>(mut reader: R) -> Result<GameModel> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    game_from_str(&text)
}

pub fn write_game<W: Write>(model: &GameModel, mut writer: W) -> Result<()> {
    writer.write_all(game_to_string(model).as_bytes())?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn load_game(path: impl AsRef<Path>) -> Result<GameModel> {
    game_from_str(&fs::read_to_string(path)?)
}

pub fn save_game(model: &GameModel, path: impl AsRef<Path>) -> Result<()> {
    write_game(model, fs::File::create(path)?)
}

/// Parses a policy file against `model`. Actions missing from a state's
/// distribution get probability zero; every state must be present.
pub fn policy_from_str(model: &GameModel, text: &str) -> Result<MultiPolicy> {
    let file: PolicyFile = from_json(text)?;
    let n = model.num_players();
    let mut slots: Vec<Option<StationaryPolicy>> = vec![None; n];
    for (k, entry) in file.policies.into_iter().enumerate() {
        let path = format!("policies[{k}]");
        let player = model
            .players
            .get(entry.owner)
            .ok_or_else(|| Error::schema(format!("{path}.owner"), format!("no player {}", entry.owner)))?;
        if slots[entry.owner].is_some() {
            return Err(Error::schema(path, format!("duplicate policy for player {}", entry.owner)));
        }
        let mut dist: Vec<Vec<f64>> = player.actions.iter().map(|a| vec![0.0; a.len()]).collect();
        for s in entry.dist.keys() {
            if player.state_index(s).is_none() {
                return Err(Error::schema(format!("{path}.dist"), format!("unknown state {s:?}")));
            }
        }
        for (x, s) in player.states.iter().enumerate() {
            let row = entry
                .dist
                .get(s)
                .ok_or_else(|| Error::schema(format!("{path}.dist"), format!("missing state {s:?}")))?;
            for (act, &p) in row {
                let a = player
                    .action_index(x, act)
                    .ok_or_else(|| Error::schema(format!("{path}.dist.{s}"), format!("unknown action {act:?}")))?;
                dist[x][a] = p;
            }
            renormalize(&mut dist[x]);
        }
        slots[entry.owner] = Some(StationaryPolicy {
            owner: entry.owner,
            dist,
        });
    }
    let policies = slots
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| Error::schema("policies", format!("missing policy for player {i}"))))
        .collect::<Result<Vec<_>>>()?;
    let u = MultiPolicy { policies };
    u.check(model)?;
    Ok(u)
}

pub fn policy_to_value(model: &GameModel, u: &MultiPolicy) -> Value {
    let policies: Vec<Value> = u
        .policies
        .iter()
        .map(|pol| {
            let player = &model.players[pol.owner];
            let mut dist = Map::new();
            for (x, s) in player.states.iter().enumerate() {
                let mut row = Map::new();
                for (a, name) in player.actions[x].iter().enumerate() {
                    row.insert(name.clone(), json!(pol.dist[x][a]));
                }
                dist.insert(s.clone(), Value::Object(row));
            }
            json!({"owner": pol.owner, "dist": dist})
        })
        .collect();
    json!({ "policies": policies })
}

pub fn policy_to_string(model: &GameModel, u: &MultiPolicy) -> String {
    serde_json::to_string_pretty(&policy_to_value(model, u)).expect("policy serializes")
}

pub fn load_policy(model: &GameModel, path: impl AsRef<Path>) -> Result<MultiPolicy> {
    policy_from_str(model, &fs::read_to_string(path)?)
}

pub fn save_policy(model: &GameModel, u: &MultiPolicy, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(policy_to_string(model, u).as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::two_player_model;

    #[test]
    fn round_trip_is_identity() {
        let m = two_player_model();
        assert_eq!(game_from_str(&game_to_string(&m)).unwrap(), m);
    }

    #[test]
    fn no_players_is_schema_error() {
        let err = game_from_str(r#"{"name":"x","players":[]}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = game_from_str("{\n  \"name\": \"x\",\n  \"players\": [,]\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn wrong_type_is_schema_error() {
        let err = game_from_str(r#"{"name":"x","players":{}}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    const ONE: &str = r#"{"name":"one","players":[{"states":["s"],"actions":{"s":["lo","hi"]},
        "transitions":{"s":{"lo":{"s":1.0},"hi":{"s":1.0}}},"initial":{"s":1.0}}],
        "costs":[{"owner":0,"index":0,"separable":true,"values":{"s:lo":1.0,"s:hi":0.0}}]}"#;

    #[test]
    fn separable_with_full_keys_is_ambiguous() {
        let text = ONE.replace(r#""s:lo":1.0"#, r#""s:lo|s:lo":1.0"#);
        let err = game_from_str(&text).unwrap_err();
        assert!(err.to_string().contains("ambiguous"), "{err}");
    }

    #[test]
    fn near_stochastic_rows_are_renormalized() {
        let text = ONE.replace(r#""lo":{"s":1.0}"#, r#""lo":{"s":0.9999999999999}"#);
        let m = game_from_str(&text).unwrap();
        assert_eq!(m.players[0].transitions[0][0], vec![1.0]);
        assert!(m.validate().is_clean());
    }

    #[test]
    fn missing_dense_entry_is_reported_by_validation() {
        let m = two_player_model();
        let text = game_to_string(&m).replacen(r#""p0:a|q0:a": 0.0,"#, "", 1);
        let loaded = game_from_str(&text).unwrap();
        let report = loaded.validate();
        assert_eq!(report.violations.len(), 1, "{report:?}");
        assert!(report.violations[0].to_string().contains("p0:a|q0:a"));
    }

    #[test]
    fn policy_round_trip() {
        let m = two_player_model();
        let u = MultiPolicy {
            policies: vec![
                StationaryPolicy { owner: 0, dist: vec![vec![0.25, 0.75], vec![1.0, 0.0]] },
                StationaryPolicy { owner: 1, dist: vec![vec![0.5, 0.5], vec![0.1, 0.9]] },
            ],
        };
        assert_eq!(policy_from_str(&m, &policy_to_string(&m, &u)).unwrap(), u);
        let err = policy_from_str(&m, r#"{"policies":[{"owner":0,"dist":{"p0":{"a":1.0}}}]}"#).unwrap_err();
        assert!(err.to_string().contains("missing state"), "{err}");
    }
}
