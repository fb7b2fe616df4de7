//! Monte Carlo rollouts of the decentralized game.
//!
//! Each player draws from its own ChaCha8 stream (same seed, stream id set to
//! the player index). A player's sampling path reads only its own state, its
//! own policy and its own stream; costs are looked up after all players moved.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CostValues, GameModel, PlayerModel};
use crate::stationary::{long_run_costs, MultiPolicy};

pub const BATCHES: usize = 20;

/// XOR'd into the player index to form the stream id.
const STREAM_KEY: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutConfig {
    pub horizon: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub record_trajectory: bool,
}

impl RolloutConfig {
    pub fn new(horizon: usize, seed: u64) -> Self {
        RolloutConfig {
            horizon,
            seed,
            burn_in: 0,
            record_trajectory: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} leaves no samples within horizon {}",
                self.burn_in, self.horizon
            )));
        }
        Ok(())
    }
}

/// One step of one player. `costs[j]` is the player's stage cost of index `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub player: usize,
    pub state: usize,
    pub action: usize,
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutResult {
    /// `empirical_costs[i][j]`, averaged over steps `burn_in+1..=T`.
    pub empirical_costs: Vec<Vec<f64>>,
    /// Batch-means standard errors; `None` with fewer than one sample per batch.
    pub standard_errors: Option<Vec<Vec<f64>>>,
    /// `visitation[i][x]`, fraction of counted steps player `i` spent in `x`.
    pub visitation: Vec<Vec<f64>>,
    pub samples: usize,
    #[serde(skip)]
    pub trajectory: Option<Vec<TrajectoryRecord>>,
}

struct Sampler {
    action_cdf: Vec<Vec<f64>>,
    next_cdf: Vec<Vec<Vec<f64>>>,
    offsets: Vec<usize>,
}

fn cdf(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let r = rng.random::<f64>() * cdf.last().copied().unwrap_or(1.0);
    // Strict comparison never selects a zero-probability outcome.
    cdf.iter().position(|&c| r < c).unwrap_or(cdf.len() - 1)
}

impl Sampler {
    fn new(player: &PlayerModel, dist: &[Vec<f64>]) -> Self {
        Sampler {
            action_cdf: dist.iter().map(|d| cdf(d)).collect(),
            next_cdf: player
                .transitions
                .iter()
                .map(|rows| rows.iter().map(|r| cdf(r)).collect())
                .collect(),
            offsets: player.pair_offsets(),
        }
    }
}

fn player_rng(seed: u64, player: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(player as u64 ^ STREAM_KEY);
    rng
}

/// Stage-cost lookup for a global tuple given per-player pair indices.
fn stage_cost(values: &CostValues, owner: usize, ks: &[usize], global: usize) -> f64 {
    match values {
        CostValues::Dense(v) => v[global],
        CostValues::Separable(v) => v[ks[owner]],
    }
}

pub fn rollout(model: &GameModel, u: &MultiPolicy, config: &RolloutConfig) -> Result<RolloutResult> {
    config.check()?;
    u.check(model)?;
    let n = model.num_players();
    let strides = model.strides();
    let samplers: Vec<Sampler> = model
        .players
        .iter()
        .zip(&u.policies)
        .map(|(p, pol)| Sampler::new(p, &pol.dist))
        .collect();
    let tables: Vec<Vec<&CostValues>> = (0..n)
        .map(|i| {
            (0..=model.num_constraints(i))
                .map(|j| {
                    model
                        .cost(i, j)
                        .map(|c| &c.values)
                        .ok_or(Error::MissingCost { owner: i, index: j })
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;

    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| player_rng(config.seed, i)).collect();
    let mut states: Vec<usize> = model
        .players
        .iter()
        .zip(rngs.iter_mut())
        .map(|(p, rng)| draw(&cdf(&p.initial), rng))
        .collect();
    let mut ks = vec![0usize; n];
    let mut actions = vec![0usize; n];

    let samples = config.horizon - config.burn_in;
    let batched = samples >= BATCHES;
    let mut counts = vec![
        0u64;
        model
            .global_size()
            .ok_or_else(|| Error::DimensionMismatch("global tuple space overflows".into()))?
    ];
    let mut visits: Vec<Vec<u64>> = model.players.iter().map(|p| vec![0; p.num_states()]).collect();
    let mut batch_sums: Vec<Vec<Vec<f64>>> = if batched {
        tables.iter().map(|t| vec![vec![0.0; BATCHES]; t.len()]).collect()
    } else {
        Vec::new()
    };
    let mut trajectory = config.record_trajectory.then(Vec::new);

    for t in 1..=config.horizon {
        for i in 0..n {
            let x = states[i];
            let a = draw(&samplers[i].action_cdf[x], &mut rngs[i]);
            actions[i] = a;
            ks[i] = samplers[i].offsets[x] + a;
        }
        let g: usize = ks.iter().zip(&strides).map(|(k, s)| k * s).sum();
        if t > config.burn_in {
            let s = t - config.burn_in - 1;
            counts[g] += 1;
            for i in 0..n {
                visits[i][states[i]] += 1;
            }
            if batched {
                let b = s * BATCHES / samples;
                for (i, row) in batch_sums.iter_mut().enumerate() {
                    for (j, sums) in row.iter_mut().enumerate() {
                        sums[b] += stage_cost(tables[i][j], i, &ks, g);
                    }
                }
            }
        }
        if let Some(traj) = trajectory.as_mut() {
            for i in 0..n {
                traj.push(TrajectoryRecord {
                    t,
                    player: i,
                    state: states[i],
                    action: actions[i],
                    costs: tables[i].iter().map(|v| stage_cost(v, i, &ks, g)).collect(),
                });
            }
        }
        for i in 0..n {
            states[i] = draw(&samplers[i].next_cdf[states[i]][actions[i]], &mut rngs[i]);
        }
    }

    // Exact reweighting of the visit counts; a constant table reproduces its
    // value up to summation rounding.
    let total = samples as f64;
    let mut empirical: Vec<Vec<f64>> = tables.iter().map(|t| vec![0.0; t.len()]).collect();
    let mut decomposed = vec![0usize; n];
    for (g, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let mut rest = g;
        for l in 0..n {
            decomposed[l] = rest / strides[l];
            rest %= strides[l];
        }
        let w = c as f64 / total;
        for (i, row) in empirical.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e += w * stage_cost(tables[i][j], i, &decomposed, g);
            }
        }
    }
    let standard_errors = batched.then(|| {
        batch_sums
            .iter()
            .map(|row| {
                row.iter()
                    .map(|sums| {
                        let means: Vec<f64> = sums
                            .iter()
                            .enumerate()
                            .map(|(b, s)| {
                                let len = (b + 1) * samples / BATCHES - b * samples / BATCHES;
                                s / len as f64
                            })
                            .collect();
                        let m = means.iter().sum::<f64>() / BATCHES as f64;
                        let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
                        (var / BATCHES as f64).sqrt()
                    })
                    .collect()
            })
            .collect()
    });
    Ok(RolloutResult {
        empirical_costs: empirical,
        standard_errors,
        visitation: visits
            .into_iter()
            .map(|v| v.into_iter().map(|c| c as f64 / total).collect())
            .collect(),
        samples,
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub analytic: Vec<Vec<f64>>,
    pub empirical: Vec<Vec<f64>>,
    pub standard_errors: Option<Vec<Vec<f64>>>,
    pub max_abs_discrepancy: f64,
    /// Largest `|empirical - analytic| / se`; zero where both numerator and
    /// standard error vanish.
    pub max_standard_scores: Option<f64>,
    pub within_three_se: Option<bool>,
    pub insufficient_sample: bool,
    pub samples: usize,
}

/// Absolute slack below which a discrepancy counts as zero.
const ZERO_DISCREPANCY: f64 = 1e-12;

fn standard_score(diff: f64, se: f64) -> f64 {
    if diff <= ZERO_DISCREPANCY {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    }
}

pub fn compare(analytic: Vec<Vec<f64>>, run: &RolloutResult) -> DiscrepancyReport {
    let mut max_abs = 0.0f64;
    let mut max_z = 0.0f64;
    for (i, row) in analytic.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            let d = (run.empirical_costs[i][j] - c).abs();
            max_abs = max_abs.max(d);
            if let Some(se) = &run.standard_errors {
                max_z = max_z.max(standard_score(d, se[i][j]));
            }
        }
    }
    let batched = run.standard_errors.is_some();
    DiscrepancyReport {
        analytic,
        empirical: run.empirical_costs.clone(),
        standard_errors: run.standard_errors.clone(),
        max_abs_discrepancy: max_abs,
        max_standard_scores: batched.then_some(max_z),
        within_three_se: batched.then_some(max_z <= 3.0),
        insufficient_sample: !batched,
        samples: run.samples,
    }
}

pub fn empirical_vs_analytic(
    model: &GameModel,
    u: &MultiPolicy,
    config: &RolloutConfig,
) -> Result<(DiscrepancyReport, RolloutResult)> {
    let analytic = long_run_costs(model, u)?;
    let run = rollout(model, u, config)?;
    Ok((compare(analytic, &run), run))
}

/// Writes `t,player,state,action,cost0..costB` lines with state and action names.
pub fn write_trajectory_csv<W: Write>(model: &GameModel, records: &[TrajectoryRecord], mut out: W) -> Result<()> {
    for r in records {
        let p = &model.players[r.player];
        write!(out, "{},{},{},{}", r.t, r.player, p.states[r.state], p.actions[r.state][r.action])?;
        for c in &r.costs {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostTable, PlayerModel};
    use crate::model::tests::two_player_model;
    use crate::stationary::StationaryPolicy;

    fn one_state_game() -> GameModel {
        let p = PlayerModel {
            states: vec!["x".into()],
            actions: vec![vec!["a".into(), "b".into()]],
            transitions: vec![vec![vec![1.0], vec![1.0]]],
            initial: vec![1.0],
        };
        GameModel {
            players: vec![p.clone(), p],
            costs: (0..2)
                .map(|i| CostTable {
                    owner: i,
                    index: 0,
                    values: CostValues::Dense(vec![0.3; 4]),
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn constant_costs_are_exact() {
        let m = one_state_game();
        let u = MultiPolicy {
            policies: (0..2).map(|i| StationaryPolicy::deterministic(i, &m.players[i], &[0])).collect(),
        };
        for horizon in [1, 7, 1000] {
            let (rep, _) = empirical_vs_analytic(&m, &u, &RolloutConfig::new(horizon, 3)).unwrap();
            assert_eq!(rep.max_abs_discrepancy, 0.0);
            assert_eq!(rep.empirical[0][0], 0.3);
        }
    }

    #[test]
    fn horizon_one_is_insufficient() {
        let m = one_state_game();
        let u = MultiPolicy::uniform(&m);
        let (rep, _) = empirical_vs_analytic(&m, &u, &RolloutConfig::new(1, 0)).unwrap();
        assert!(rep.insufficient_sample);
        assert!(rep.standard_errors.is_none() && rep.within_three_se.is_none());
    }

    #[test]
    fn rejects_empty_horizon() {
        let m = one_state_game();
        let u = MultiPolicy::uniform(&m);
        assert!(rollout(&m, &u, &RolloutConfig::new(0, 0)).is_err());
        let mut c = RolloutConfig::new(5, 0);
        c.burn_in = 5;
        assert!(rollout(&m, &u, &c).is_err());
    }

    #[test]
    fn seeded_rollouts_repeat() {
        let m = two_player_model();
        let u = MultiPolicy::uniform(&m);
        let mut c = RolloutConfig::new(500, 9);
        c.record_trajectory = true;
        let a = rollout(&m, &u, &c).unwrap();
        let b = rollout(&m, &u, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trajectory.as_ref().unwrap().len(), 1000);
        for v in &a.visitation {
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_lines() {
        let m = two_player_model();
        let u = MultiPolicy::uniform(&m);
        let mut c = RolloutConfig::new(2, 1);
        c.record_trajectory = true;
        let r = rollout(&m, &u, &c).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&m, r.trajectory.as_ref().unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        // player 0 has an objective and one constraint
        assert_eq!(lines[0].split(',').count(), 6);
        assert!(lines[0].starts_with("1,0,p"));
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
