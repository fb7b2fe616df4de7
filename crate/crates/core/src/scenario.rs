//! Instance generators.
//!
//! `random_game` draws strictly positive transition rows so every chain is
//! unichain regardless of the policy. `power_control_game` builds a synthetic
//! uplink game: each player's state is a channel quality and a battery level,
//! actions are transmit powers, the objective is negated Shannon throughput
//! under interference from all other players, and the single constraint caps
//! average transmit power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::best_response::best_response;
use crate::equilibrium::random_multi_policy;
use crate::error::{Error, Result};
use crate::model::{ConstraintSpec, CostTable, CostValues, GameModel, PlayerModel};
use crate::stationary::{marginal_cost_from, occupations, MultiPolicy};

/// Tag set on generated games whose bounds could not be made feasible.
pub const TIGHT_TAG: &str = "constraints-tight";

const TRANSITION_FLOOR: f64 = 0.01;
const BOUND_SAMPLES: usize = 200;
const BOUND_ATTEMPTS: usize = 20;

fn exp_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

fn floored_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let row: Vec<f64> = exp_weights(rng, n).into_iter().map(|v| v.max(TRANSITION_FLOOR)).collect();
    let s: f64 = row.iter().sum();
    row.into_iter().map(|v| v / s).collect()
}

/// Random game with strictly positive transitions, i.i.d. uniform dense
/// costs and bounds at the midpoint of sampled long-run constraint costs.
pub fn random_game(
    n_players: usize,
    states_per_player: usize,
    actions_per_state: usize,
    n_constraints: usize,
    seed: u64,
) -> Result<GameModel> {
    if n_players == 0 || states_per_player == 0 || actions_per_state == 0 {
        return Err(Error::InvalidParams("all sizes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players: Vec<PlayerModel> = (0..n_players)
        .map(|_| PlayerModel {
            states: (0..states_per_player).map(|x| format!("s{x}")).collect(),
            actions: vec![(0..actions_per_state).map(|a| format!("a{a}")).collect(); states_per_player],
            transitions: (0..states_per_player)
                .map(|_| (0..actions_per_state).map(|_| floored_row(&mut rng, states_per_player)).collect())
                .collect(),
            initial: exp_weights(&mut rng, states_per_player),
        })
        .collect();
    let global: usize = players.iter().map(PlayerModel::num_pairs).product();
    let costs = (0..n_players)
        .flat_map(|i| (0..=n_constraints).map(move |j| (i, j)))
        .map(|(owner, index)| CostTable {
            owner,
            index,
            values: CostValues::Dense((0..global).map(|_| rng.random::<f64>()).collect()),
        })
        .collect();
    let mut model = GameModel {
        name: format!("random-{n_players}x{states_per_player}x{actions_per_state}-b{n_constraints}-seed{seed}"),
        description: "random cost-coupled game".into(),
        tags: vec!["random".into()],
        players,
        costs,
        constraints: Vec::new(),
    };
    if n_constraints == 0 {
        return Ok(model);
    }

    let uniform = MultiPolicy::uniform(&model);
    for attempt in 0..BOUND_ATTEMPTS {
        let mut lo = vec![vec![f64::INFINITY; n_constraints]; n_players];
        let mut hi = vec![vec![f64::NEG_INFINITY; n_constraints]; n_players];
        for s in 0..BOUND_SAMPLES {
            let sample_seed = rng.random::<u64>() ^ (s as u64);
            let u = random_multi_policy(&model, sample_seed);
            let occ = occupations(&model, &u)?;
            for i in 0..n_players {
                for j in 0..n_constraints {
                    let c = occ[i].expect(&marginal_cost_from(&model, i, j + 1, &occ)?.values);
                    lo[i][j] = lo[i][j].min(c);
                    hi[i][j] = hi[i][j].max(c);
                }
            }
        }
        model.constraints = (0..n_players)
            .map(|i| ConstraintSpec {
                owner: i,
                bounds: (0..n_constraints).map(|j| 0.5 * (lo[i][j] + hi[i][j])).collect(),
            })
            .collect();
        let mut feasible = true;
        for i in 0..n_players {
            feasible &= best_response(&model, i, &uniform)?.is_optimal();
        }
        if feasible {
            return Ok(model);
        }
        if attempt + 1 == BOUND_ATTEMPTS {
            model.tags.push(TIGHT_TAG.into());
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerControlParams {
    pub n_players: usize,
    pub n_channel_states: usize,
    /// Increasing transmit power levels.
    pub power_levels: Vec<f64>,
    pub noise_sigma: f64,
    /// `gains[i][h]`: channel gain of player `i` in channel state `h`.
    pub gains: Vec<Vec<f64>>,
    pub battery_states: usize,
    pub recharge_prob: f64,
    pub power_budget: f64,
}

impl PowerControlParams {
    /// Gains growing linearly with channel quality, `(h + 1) / H`, for every player.
    pub fn linear_gains(n_players: usize, n_channel_states: usize) -> Vec<Vec<f64>> {
        let row: Vec<f64> = (1..=n_channel_states)
            .map(|h| h as f64 / n_channel_states as f64)
            .collect();
        vec![row; n_players]
    }
}

impl Default for PowerControlParams {
    fn default() -> Self {
        PowerControlParams {
            n_players: 2,
            n_channel_states: 3,
            power_levels: vec![0.0, 0.5, 1.0],
            noise_sigma: 0.1,
            gains: Self::linear_gains(2, 3),
            battery_states: 2,
            recharge_prob: 0.5,
            power_budget: 0.5,
        }
    }
}

/// Channel moves up or down with probability 0.3 each and stays with 0.4;
/// a blocked move at either end stays.
fn channel_row(h: usize, n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    row[h] += 0.4;
    if h + 1 < n { row[h + 1] += 0.3 } else { row[h] += 0.3 }
    if h > 0 { row[h - 1] += 0.3 } else { row[h] += 0.3 }
    row
}

struct PowerPlayer {
    model: PlayerModel,
    /// `(channel, power)` of each local pair.
    pair_info: Vec<(usize, f64)>,
}

fn format_power(p: f64) -> String {
    format!("p{p}")
}

fn power_player(params: &PowerControlParams) -> PowerPlayer {
    let h_n = params.n_channel_states;
    let b_n = params.battery_states;
    let max_power = *params.power_levels.last().expect("levels checked non-empty");
    let unit = if b_n > 1 { max_power / (b_n - 1) as f64 } else { f64::INFINITY };
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut powers = Vec::new();
    for h in 0..h_n {
        for b in 0..b_n {
            states.push(format!("h{}b{}", h + 1, b));
            let avail = if b_n > 1 { b as f64 * unit } else { f64::INFINITY };
            let mut ps: Vec<f64> = params
                .power_levels
                .iter()
                .copied()
                .filter(|&p| p <= avail + 1e-12)
                .collect();
            if ps.is_empty() {
                ps.push(0.0);
            }
            actions.push(ps.iter().copied().map(format_power).collect());
            powers.push(ps);
        }
    }
    let n = h_n * b_n;
    let mut transitions = Vec::with_capacity(n);
    let mut pair_info = Vec::new();
    for h in 0..h_n {
        let ch = channel_row(h, h_n);
        for b in 0..b_n {
            let x = h * b_n + b;
            let mut rows = Vec::with_capacity(powers[x].len());
            for &p in &powers[x] {
                pair_info.push((h, p));
                let mut battery = vec![0.0; b_n];
                if b_n == 1 {
                    battery[0] = 1.0;
                } else {
                    let used = ((p / unit) - 1e-9).ceil().max(0.0) as usize;
                    let drained = b.saturating_sub(used);
                    battery[b_n - 1] += params.recharge_prob;
                    battery[drained] += 1.0 - params.recharge_prob;
                }
                let mut row = vec![0.0; n];
                for (h2, &pc) in ch.iter().enumerate() {
                    for (b2, &pb) in battery.iter().enumerate() {
                        row[h2 * b_n + b2] += pc * pb;
                    }
                }
                rows.push(row);
            }
            transitions.push(rows);
        }
    }
    // Start on the middle channel with a full battery.
    let mut initial = vec![0.0; n];
    initial[(h_n / 2) * b_n + (b_n - 1)] = 1.0;
    PowerPlayer {
        model: PlayerModel {
            states,
            actions,
            transitions,
            initial,
        },
        pair_info,
    }
}

/// Synthetic uplink power-control game. Each player's chain is built in
/// isolation, so transitions depend on the player's own state and action only.
pub fn power_control_game(params: &PowerControlParams) -> Result<GameModel> {
    let p = params;
    if p.n_players == 0 || p.n_channel_states == 0 || p.battery_states == 0 {
        return Err(Error::InvalidParams("player, channel and battery counts must be positive".into()));
    }
    if p.power_levels.is_empty() {
        return Err(Error::InvalidParams("power levels must be non-empty".into()));
    }
    if p.power_levels.iter().any(|&l| !(l >= 0.0) || !l.is_finite())
        || p.power_levels.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParams("power levels must be finite, non-negative and increasing".into()));
    }
    if !(p.noise_sigma > 0.0) {
        return Err(Error::InvalidParams(format!("noise must be positive, got {}", p.noise_sigma)));
    }
    if !(0.0..=1.0).contains(&p.recharge_prob) {
        return Err(Error::InvalidParams("recharge probability must lie in [0, 1]".into()));
    }
    if p.gains.len() != p.n_players
        || p.gains.iter().any(|g| g.len() != p.n_channel_states || g.iter().any(|v| !(*v >= 0.0)))
    {
        return Err(Error::InvalidParams(
            "gains must be non-negative with one row per player and one entry per channel state".into(),
        ));
    }
    if !p.power_budget.is_finite() {
        return Err(Error::InvalidParams("power budget must be finite".into()));
    }

    let built: Vec<PowerPlayer> = (0..p.n_players).map(|_| power_player(p)).collect();
    let counts: Vec<usize> = built.iter().map(|b| b.pair_info.len()).collect();
    let global: usize = counts.iter().product();
    let mut received = vec![0.0; p.n_players];
    let mut objectives: Vec<Vec<f64>> = vec![Vec::with_capacity(global); p.n_players];
    let mut ks = vec![0usize; p.n_players];
    for _ in 0..global {
        for (l, r) in received.iter_mut().enumerate() {
            let (h, power) = built[l].pair_info[ks[l]];
            *r = p.gains[l][h] * power;
        }
        let total: f64 = received.iter().sum();
        for (i, obj) in objectives.iter_mut().enumerate() {
            let interference = total - received[i];
            obj.push(-(received[i] / (p.noise_sigma + interference)).ln_1p());
        }
        // Advance the mixed-radix counter, last player fastest.
        for l in (0..p.n_players).rev() {
            ks[l] += 1;
            if ks[l] < counts[l] {
                break;
            }
            ks[l] = 0;
        }
    }
    let mut costs = Vec::with_capacity(2 * p.n_players);
    for (i, obj) in objectives.into_iter().enumerate() {
        costs.push(CostTable {
            owner: i,
            index: 0,
            values: CostValues::Dense(obj),
        });
        costs.push(CostTable {
            owner: i,
            index: 1,
            values: CostValues::Separable(built[i].pair_info.iter().map(|&(_, power)| power).collect()),
        });
    }
    Ok(GameModel {
        name: format!("power-control-{}p", p.n_players),
        description: "synthetic uplink power control: channel/battery chains, interference-coupled throughput, \
                      average-power budget"
            .into(),
        tags: vec!["power-control".into(), "synthetic".into()],
        players: built.into_iter().map(|b| b.model).collect(),
        costs,
        constraints: (0..p.n_players)
            .map(|i| ConstraintSpec {
                owner: i,
                bounds: vec![p.power_budget],
            })
            .collect(),
    })
}
