//! Stationary-policy algebra: induced chains, steady states, occupation
//! measures and their inverse map, marginalized coupled costs and exact
//! long-run average costs.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CostValues, GameModel, PlayerModel, PROB_TOL};

/// Mass below which a state counts as unvisited when recovering a policy
/// from an occupation measure.
pub const ZERO_MASS: f64 = 1e-12;

/// Largest global state space the product-chain cross-check will build.
pub const PRODUCT_CHAIN_LIMIT: usize = 4096;

/// Time-invariant randomized decision rule of one player.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPolicy {
    pub owner: usize,
    /// `dist[x][a]`: probability of action `a` in state `x`.
    pub dist: Vec<Vec<f64>>,
}

impl StationaryPolicy {
    pub fn uniform(owner: usize, player: &PlayerModel) -> Self {
        let dist = player
            .actions
            .iter()
            .map(|acts| vec![1.0 / acts.len() as f64; acts.len()])
            .collect();
        StationaryPolicy { owner, dist }
    }

    /// Plays `choice[x]` with probability one in each state `x`.
    pub fn deterministic(owner: usize, player: &PlayerModel, choice: &[usize]) -> Self {
        let dist = player
            .actions
            .iter()
            .zip(choice)
            .map(|(acts, &c)| {
                let mut row = vec![0.0; acts.len()];
                row[c] = 1.0;
                row
            })
            .collect();
        StationaryPolicy { owner, dist }
    }

    /// Checks shape and row stochasticity against `player`.
    pub fn check(&self, player: &PlayerModel) -> Result<()> {
        if self.dist.len() != player.num_states() {
            return Err(Error::DimensionMismatch(format!(
                "policy of player {} has {} states, chain has {}",
                self.owner,
                self.dist.len(),
                player.num_states()
            )));
        }
        for (x, row) in self.dist.iter().enumerate() {
            if row.len() != player.num_actions(x) {
                return Err(Error::DimensionMismatch(format!(
                    "policy of player {} at state {}: {} probabilities for {} actions",
                    self.owner,
                    player.states[x],
                    row.len(),
                    player.num_actions(x)
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL || row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::DimensionMismatch(format!(
                    "policy of player {} at state {} is not a distribution (sum {sum})",
                    self.owner, player.states[x]
                )));
            }
        }
        Ok(())
    }

    /// Largest absolute difference between two policies of the same shape.
    pub fn max_abs_diff(&self, other: &StationaryPolicy) -> f64 {
        self.dist
            .iter()
            .flatten()
            .zip(other.dist.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One stationary policy per player, indexed by player.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiPolicy {
    pub policies: Vec<StationaryPolicy>,
}

impl MultiPolicy {
    pub fn uniform(model: &GameModel) -> Self {
        MultiPolicy {
            policies: model
                .players
                .iter()
                .enumerate()
                .map(|(i, p)| StationaryPolicy::uniform(i, p))
                .collect(),
        }
    }

    pub fn get(&self, player: usize) -> &StationaryPolicy {
        &self.policies[player]
    }

    /// `[u_{-i} | v_i]`: this multi-policy with player `i`'s coordinate replaced.
    pub fn replace_coordinate(&self, player: usize, policy: StationaryPolicy) -> Result<Self> {
        if player >= self.policies.len() {
            return Err(Error::PlayerOutOfRange(player));
        }
        if policy.owner != player {
            return Err(Error::OwnerMismatch {
                expected: player,
                found: policy.owner,
            });
        }
        let mut out = self.clone();
        out.policies[player] = policy;
        Ok(out)
    }

    /// Checks owners and every coordinate against the model.
    pub fn check(&self, model: &GameModel) -> Result<()> {
        if self.policies.len() != model.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "{} policies for {} players",
                self.policies.len(),
                model.num_players()
            )));
        }
        for (i, (pol, player)) in self.policies.iter().zip(&model.players).enumerate() {
            if pol.owner != i {
                return Err(Error::OwnerMismatch {
                    expected: i,
                    found: pol.owner,
                });
            }
            pol.check(player)?;
        }
        Ok(())
    }
}

/// Long-run joint frequency of a player's local state-action pairs,
/// flattened in canonical pair order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationMeasure {
    pub owner: usize,
    pub z: Vec<f64>,
}

impl OccupationMeasure {
    /// Rounding-level negatives (down to `-1e-12`) are clipped to zero.
    pub fn new(owner: usize, mut z: Vec<f64>) -> Self {
        for v in &mut z {
            if *v < 0.0 && *v >= -1e-12 {
                *v = 0.0;
            }
        }
        OccupationMeasure { owner, z }
    }

    /// State marginal `sum_a z(y, a)`.
    pub fn state_marginal(&self, player: &PlayerModel) -> Vec<f64> {
        let offsets = player.pair_offsets();
        offsets
            .windows(2)
            .map(|w| self.z[w[0]..w[1]].iter().sum())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.z.iter().sum()
    }

    /// Largest violation of the balance rows `sum z(y,a)[delta_r(y) - P(y,a,r)] = 0`.
    pub fn balance_residual(&self, player: &PlayerModel) -> f64 {
        let n = player.num_states();
        let mut flow = vec![0.0; n];
        for (k, (y, a)) in player.pairs().enumerate() {
            flow[y] += self.z[k];
            for (r, &p) in player.transitions[y][a].iter().enumerate() {
                flow[r] -= self.z[k] * p;
            }
        }
        flow.iter().map(|f| f.abs()).fold(0.0, f64::max)
    }

    /// Convex combination `(1 - alpha) * self + alpha * other`.
    pub fn mix(&self, other: &OccupationMeasure, alpha: f64) -> OccupationMeasure {
        let z = self
            .z
            .iter()
            .zip(&other.z)
            .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
            .collect();
        OccupationMeasure::new(self.owner, z)
    }

    /// Expected value of a local cost table under this measure.
    pub fn expect(&self, costs: &[f64]) -> f64 {
        self.z.iter().zip(costs).map(|(z, c)| z * c).sum()
    }
}

/// Coupled cost of one player with opponents averaged out, over the
/// player's local pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCostTable {
    pub owner: usize,
    pub index: usize,
    pub values: Vec<f64>,
}

/// Policy recovered from an occupation measure, with the states where the
/// measure had no mass and the uniform selection was used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveredPolicy {
    pub policy: StationaryPolicy,
    pub uniform_states: Vec<usize>,
}

/// Transition matrix of the chain driven by `policy`:
/// `P[x][y] = sum_a u(a|x) P(x, a, y)`.
pub fn induced_transition(player: &PlayerModel, policy: &StationaryPolicy) -> Result<Vec<Vec<f64>>> {
    policy.check(player)?;
    let n = player.num_states();
    let mut out = vec![vec![0.0; n]; n];
    for (x, row) in out.iter_mut().enumerate() {
        for (a, &w) in policy.dist[x].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (y, &p) in player.transitions[x][a].iter().enumerate() {
                row[y] += w * p;
            }
        }
    }
    Ok(out)
}

/// Unique invariant distribution of a unichain stochastic matrix, solved as
/// the square system obtained by replacing one balance row of
/// `(P^T - I) pi = 0` with `sum pi = 1`.
pub fn steady_state(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    if n == 0 || matrix.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("steady state needs a square matrix".into()));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (x, row) in matrix.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            a[(y, x)] += p;
        }
    }
    for k in 0..n {
        a[(k, k)] -= 1.0;
    }
    for x in 0..n {
        a[(n - 1, x)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;

    let lu = a.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|k| u[(k, k)].abs()).collect();
    let max_pivot = diag.iter().copied().fold(0.0, f64::max);
    let min_pivot = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * max_pivot.max(1.0)) {
        return Err(Error::NotUnichain {
            residual: f64::NAN,
        });
    }
    let sol = lu
        .solve(&b)
        .ok_or(Error::NotUnichain { residual: f64::NAN })?;
    let mut pi: Vec<f64> = sol.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
    let total: f64 = pi.iter().sum();
    for v in &mut pi {
        *v /= total;
    }
    let residual = stationarity_residual(matrix, &pi);
    if !(residual <= 1e-10) || sol.iter().any(|&v| v < -1e-9) {
        return Err(Error::NotUnichain { residual });
    }
    Ok(pi)
}

/// `max_y |(pi P)_y - pi_y|`.
pub fn stationarity_residual(matrix: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut next = vec![0.0; n];
    for (x, row) in matrix.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            next[y] += pi[x] * p;
        }
    }
    next.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `z(y, a) = pi(y) u(a|y)` for the steady state `pi` of the induced chain.
/// The initial distribution plays no part.
pub fn occupation_measure(player: &PlayerModel, policy: &StationaryPolicy) -> Result<OccupationMeasure> {
    let pi = steady_state(&induced_transition(player, policy)?)?;
    let z = policy
        .dist
        .iter()
        .zip(&pi)
        .flat_map(|(row, &p)| row.iter().map(move |&u| p * u))
        .collect();
    Ok(OccupationMeasure::new(policy.owner, z))
}

/// Occupation measures of every player under `u`.
pub fn occupations(model: &GameModel, u: &MultiPolicy) -> Result<Vec<OccupationMeasure>> {
    u.check(model)?;
    model
        .players
        .iter()
        .zip(&u.policies)
        .map(|(p, pol)| occupation_measure(p, pol))
        .collect()
}

/// Row-normalizes `z` per state; states with mass at most [`ZERO_MASS`]
/// get the uniform distribution.
pub fn policy_from_occupation(player: &PlayerModel, z: &OccupationMeasure) -> RecoveredPolicy {
    let offsets = player.pair_offsets();
    let mut uniform_states = Vec::new();
    let dist = offsets
        .windows(2)
        .enumerate()
        .map(|(y, w)| {
            let row = &z.z[w[0]..w[1]];
            let mass: f64 = row.iter().map(|v| v.max(0.0)).sum();
            if mass > ZERO_MASS {
                row.iter().map(|v| v.max(0.0) / mass).collect()
            } else {
                uniform_states.push(y);
                vec![1.0 / row.len() as f64; row.len()]
            }
        })
        .collect();
    RecoveredPolicy {
        policy: StationaryPolicy {
            owner: z.owner,
            dist,
        },
        uniform_states,
    }
}

/// Contracts axis `axis` of a row-major tensor with shape `dims` against `weights`.
fn contract_axis(data: &[f64], dims: &mut [usize], axis: usize, weights: &[f64]) -> Vec<f64> {
    let outer: usize = dims[..axis].iter().product();
    let mid = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (m, &w) in weights.iter().enumerate().take(mid) {
            if w == 0.0 {
                continue;
            }
            let src = &data[(o * mid + m) * inner..(o * mid + m + 1) * inner];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    dims[axis] = 1;
    out
}

/// Marginal cost `c_i^{j,u}` given every player's occupation measure. Only
/// opponents' measures are read.
pub fn marginal_cost_from(
    model: &GameModel,
    player: usize,
    index: usize,
    occupations: &[OccupationMeasure],
) -> Result<MarginalCostTable> {
    if player >= model.num_players() {
        return Err(Error::PlayerOutOfRange(player));
    }
    let table = model.cost(player, index).ok_or(Error::MissingCost {
        owner: player,
        index,
    })?;
    let values = match &table.values {
        CostValues::Separable(local) => local.clone(),
        CostValues::Dense(global) => {
            let mut dims = model.pair_counts();
            let mut data = global.clone();
            // Opponents' laws form a product measure, so the expectation
            // factors into one contraction per opponent.
            for l in (0..dims.len()).rev() {
                if l != player {
                    data = contract_axis(&data, &mut dims, l, &occupations[l].z);
                }
            }
            data
        }
    };
    Ok(MarginalCostTable {
        owner: player,
        index,
        values,
    })
}

/// Marginal cost `c_i^{j,u}` for player `i`, cost `j` under `u`.
pub fn marginal_cost(model: &GameModel, player: usize, index: usize, u: &MultiPolicy) -> Result<MarginalCostTable> {
    let occ = occupations(model, u)?;
    marginal_cost_from(model, player, index, &occ)
}

/// Long-run average cost `C^{i,j}(u)` via occupation measures.
pub fn long_run_cost(model: &GameModel, u: &MultiPolicy, player: usize, index: usize) -> Result<f64> {
    let occ = occupations(model, u)?;
    let c = marginal_cost_from(model, player, index, &occ)?;
    Ok(occ[player].expect(&c.values))
}

/// All long-run costs `C^{i,j}(u)`, one row per player, `j = 0..=B_i`.
pub fn long_run_costs(model: &GameModel, u: &MultiPolicy) -> Result<Vec<Vec<f64>>> {
    let occ = occupations(model, u)?;
    long_run_costs_from(model, &occ)
}

pub(crate) fn long_run_costs_from(model: &GameModel, occ: &[OccupationMeasure]) -> Result<Vec<Vec<f64>>> {
    (0..model.num_players())
        .map(|i| {
            (0..=model.num_constraints(i))
                .map(|j| Ok(occ[i].expect(&marginal_cost_from(model, i, j, occ)?.values)))
                .collect()
        })
        .collect()
}

/// Steady state of the joint chain on the global state space, solved
/// directly rather than as a product of per-player steady states.
pub fn product_chain_steady_state(model: &GameModel, u: &MultiPolicy) -> Result<Vec<f64>> {
    u.check(model)?;
    let sizes: Vec<usize> = model.players.iter().map(PlayerModel::num_states).collect();
    let total = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .filter(|&t| t <= PRODUCT_CHAIN_LIMIT)
        .ok_or(Error::SizeLimitExceeded {
            count: sizes.iter().map(|&s| s as u128).product(),
            cap: PRODUCT_CHAIN_LIMIT as u128,
        })?;
    let local: Vec<Vec<Vec<f64>>> = model
        .players
        .iter()
        .zip(&u.policies)
        .map(|(p, pol)| induced_transition(p, pol))
        .collect::<Result<_>>()?;
    let digits = |mut g: usize| {
        let mut d = vec![0; sizes.len()];
        for l in (0..sizes.len()).rev() {
            d[l] = g % sizes[l];
            g /= sizes[l];
        }
        d
    };
    let mut joint = vec![vec![0.0; total]; total];
    for (gx, row) in joint.iter_mut().enumerate() {
        let xs = digits(gx);
        for (gy, entry) in row.iter_mut().enumerate() {
            let ys = digits(gy);
            *entry = (0..sizes.len()).map(|l| local[l][xs[l]][ys[l]]).product();
        }
    }
    steady_state(&joint)
}

/// Long-run average cost from the joint product chain. Independent of the
/// occupation-measure route; used as a cross-check.
pub fn product_chain_cost(model: &GameModel, u: &MultiPolicy, player: usize, index: usize) -> Result<f64> {
    let pi = product_chain_steady_state(model, u)?;
    product_chain_cost_with(model, u, &pi, player, index)
}

pub(crate) fn product_chain_cost_with(
    model: &GameModel,
    u: &MultiPolicy,
    joint_pi: &[f64],
    player: usize,
    index: usize,
) -> Result<f64> {
    let table = model.cost(player, index).ok_or(Error::MissingCost {
        owner: player,
        index,
    })?;
    let pairs: Vec<Vec<(usize, usize)>> = model.players.iter().map(|p| p.pairs().collect()).collect();
    let sizes: Vec<usize> = model.players.iter().map(PlayerModel::num_states).collect();
    let global = model
        .global_size()
        .ok_or(Error::DimensionMismatch("global space too large".into()))?;
    let mut total = 0.0;
    for g in 0..global {
        let ks = model.decompose(g);
        let mut state_index = 0;
        let mut weight = 1.0;
        for (l, &k) in ks.iter().enumerate() {
            let (x, a) = pairs[l][k];
            state_index = state_index * sizes[l] + x;
            weight *= u.policies[l].dist[x][a];
        }
        if weight == 0.0 {
            continue;
        }
        let c = match &table.values {
            CostValues::Dense(v) => v[g],
            CostValues::Separable(v) => v[ks[player]],
        };
        total += joint_pi[state_index] * weight * c;
    }
    Ok(total)
}
