//! Damped best-response dynamics on occupation measures, and the
//! independent equilibrium certifier.
//!
//! Each sweep replaces `z_i` by `(1 - alpha) z_i + alpha z_i*` where `z_i*`
//! solves player `i`'s LP against the current opponents. The balance and
//! normalization rows do not depend on the opponents, so every iterate stays
//! on the same polytope; budget rows move with the opponents and are
//! re-checked after each sweep. A player whose costs are all separable has
//! a best response that ignores the opponents and takes an undamped step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::best_response::{best_response_from, build_program, check_anomaly, gap_from, GapReport};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpStatus};
use crate::model::GameModel;
use crate::stationary::{
    long_run_costs_from, occupations, policy_from_occupation, product_chain_cost_with,
    product_chain_steady_state, MultiPolicy, OccupationMeasure, StationaryPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    GaussSeidel,
    Jacobi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Uniform,
    Given(MultiPolicy),
    RandomSeeded(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub feasibility_tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub sweep_mode: SweepMode,
    pub init: Init,
    /// Additional runs from random starts when a run does not converge.
    pub restarts: usize,
    /// Base seed of the restart initializations.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-6,
            feasibility_tol: 1e-8,
            max_iters: 500,
            damping: 0.5,
            sweep_mode: SweepMode::GaussSeidel,
            init: Init::Uniform,
            restarts: 5,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!("damping {} not in (0, 1]", self.damping)));
        }
        if !(self.epsilon > 0.0 && self.feasibility_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    NoConvergence,
    PlayerInfeasible { player: usize },
}

/// A state where the recovered policy used the uniform selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub player: usize,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub status: SolveStatus,
    pub multi_policy: MultiPolicy,
    /// The candidate fixed point `z = (z_1, ..., z_N)`.
    pub occupations: Vec<OccupationMeasure>,
    /// `C^{i,j}` for `j = 0..=B_i`.
    pub costs: Vec<Vec<f64>>,
    /// Best-response gaps; infinite where no feasible response exists.
    pub gaps: Vec<f64>,
    pub slacks: Vec<Vec<f64>>,
    pub max_gap: f64,
    /// Sweeps performed by the run that produced this result.
    pub iterations: usize,
    /// Index of that run (0 is the configured start).
    pub run: usize,
    /// Max gap after each sweep of that run.
    pub trace: Vec<f64>,
    pub selection_log: Vec<Selection>,
}

struct Iterate {
    z: Vec<OccupationMeasure>,
    gaps: Vec<f64>,
    slacks: Vec<Vec<f64>>,
    max_gap: f64,
    feasible: bool,
}

fn random_policy(owner: usize, player: &crate::model::PlayerModel, rng: &mut ChaCha8Rng) -> StationaryPolicy {
    let dist = player
        .actions
        .iter()
        .map(|acts| {
            let w: Vec<f64> = (0..acts.len())
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        })
        .collect();
    StationaryPolicy { owner, dist }
}

/// A random stationary multi-policy; rows are normalized exponential draws.
pub fn random_multi_policy(model: &GameModel, seed: u64) -> MultiPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MultiPolicy {
        policies: model
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| random_policy(i, p, &mut rng))
            .collect(),
    }
}

fn evaluate(model: &GameModel, z: Vec<OccupationMeasure>, tol: f64) -> Result<Iterate> {
    let mut gaps = Vec::with_capacity(z.len());
    let mut slacks = Vec::with_capacity(z.len());
    let mut feasible = true;
    for i in 0..model.num_players() {
        let (report, _) = gap_from(model, i, &z, tol)?;
        gaps.push(report.gap.unwrap_or(f64::INFINITY));
        feasible &= report.feasible;
        slacks.push(report.slacks);
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(Iterate {
        z,
        gaps,
        slacks,
        max_gap,
        feasible,
    })
}

struct RunOutcome {
    best: Iterate,
    converged: bool,
    iterations: usize,
    trace: Vec<f64>,
    infeasible_at_start: Vec<usize>,
}

fn run_dynamics(model: &GameModel, config: &SolverConfig, start: &MultiPolicy) -> Result<RunOutcome> {
    let n = model.num_players();
    let mut z = occupations(model, start)?;
    let step: Vec<f64> = (0..n)
        .map(|i| if model.is_decoupled_for(i) { 1.0 } else { config.damping })
        .collect();

    let infeasible_at_start: Vec<usize> = (0..n)
        .map(|i| best_response_from(model, i, &z).map(|br| (i, br.is_optimal())))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(i, _)| i)
        .collect();

    let mut best: Option<Iterate> = None;
    let mut trace = Vec::new();
    for iter in 1..=config.max_iters {
        match config.sweep_mode {
            SweepMode::GaussSeidel => {
                for i in 0..n {
                    let br = best_response_from(model, i, &z)?;
                    if let Some(target) = br.z_star {
                        z[i] = z[i].mix(&target, step[i]);
                    }
                }
            }
            SweepMode::Jacobi => {
                let targets = (0..n)
                    .map(|i| best_response_from(model, i, &z).map(|br| br.z_star))
                    .collect::<Result<Vec<_>>>()?;
                for (i, target) in targets.into_iter().enumerate() {
                    if let Some(target) = target {
                        z[i] = z[i].mix(&target, step[i]);
                    }
                }
            }
        }
        let current = evaluate(model, z.clone(), config.feasibility_tol)?;
        trace.push(current.max_gap);
        let converged = current.feasible && current.max_gap <= config.epsilon;
        let better = best
            .as_ref()
            .is_none_or(|b| (current.feasible, -current.max_gap) > (b.feasible, -b.max_gap));
        if better || converged {
            best = Some(current);
        }
        if converged {
            return Ok(RunOutcome {
                best: best.expect("set above"),
                converged: true,
                iterations: iter,
                trace,
                infeasible_at_start,
            });
        }
    }
    let best = match best {
        Some(b) => b,
        None => evaluate(model, z, config.feasibility_tol)?,
    };
    Ok(RunOutcome {
        best,
        converged: false,
        iterations: config.max_iters,
        trace,
        infeasible_at_start,
    })
}

/// Searches for a stationary constrained Nash equilibrium by damped
/// best-response dynamics with restarts. Convergence is not guaranteed;
/// a non-converged result carries the best iterate seen.
pub fn solve(model: &GameModel, config: &SolverConfig) -> Result<EquilibriumResult> {
    config.check()?;
    let first = match &config.init {
        Init::Uniform => MultiPolicy::uniform(model),
        Init::Given(u) => {
            u.check(model)?;
            u.clone()
        }
        Init::RandomSeeded(seed) => random_multi_policy(model, *seed),
    };

    let mut chosen: Option<(usize, RunOutcome)> = None;
    let mut always_infeasible: Option<Vec<usize>> = None;
    for run in 0..=config.restarts {
        let start = if run == 0 {
            first.clone()
        } else {
            random_multi_policy(model, config.seed.wrapping_add(run as u64))
        };
        let outcome = run_dynamics(model, config, &start)?;
        always_infeasible = Some(match always_infeasible {
            None => outcome.infeasible_at_start.clone(),
            Some(prev) => prev
                .into_iter()
                .filter(|i| outcome.infeasible_at_start.contains(i))
                .collect(),
        });
        let converged = outcome.converged;
        let replace = chosen.as_ref().is_none_or(|(_, c)| {
            (outcome.best.feasible, -outcome.best.max_gap) > (c.best.feasible, -c.best.max_gap)
        });
        if replace || converged {
            chosen = Some((run, outcome));
        }
        if converged {
            break;
        }
    }
    let (run, outcome) = chosen.expect("at least one run");
    let status = if outcome.converged {
        SolveStatus::Converged
    } else if let Some(&player) = always_infeasible.as_ref().and_then(|v| v.first()) {
        SolveStatus::PlayerInfeasible { player }
    } else {
        SolveStatus::NoConvergence
    };

    let Iterate {
        z,
        gaps,
        slacks,
        max_gap,
        ..
    } = outcome.best;
    let mut selection_log = Vec::new();
    let policies = z
        .iter()
        .enumerate()
        .map(|(i, zi)| {
            let rec = policy_from_occupation(&model.players[i], zi);
            selection_log.extend(rec.uniform_states.iter().map(|&state| Selection { player: i, state }));
            rec.policy
        })
        .collect();
    let costs = long_run_costs_from(model, &z)?;
    Ok(EquilibriumResult {
        status,
        multi_policy: MultiPolicy { policies },
        occupations: z,
        costs,
        gaps,
        slacks,
        max_gap,
        iterations: outcome.iterations,
        run,
        trace: outcome.trace,
        selection_log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerVerification {
    #[serde(flatten)]
    pub gap: GapReport,
    /// `max_j |C^{i,j}` from the joint product chain minus `C^{i,j}` from
    /// occupation measures`|`; `None` when the product chain is too large
    /// or has no unique steady state.
    pub identity_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub epsilon: f64,
    pub feasibility_tol: f64,
    pub max_gap: f64,
    pub players: Vec<PlayerVerification>,
}

/// Feasibility tolerance used by [`verify_equilibrium`].
pub const VERIFY_FEASIBILITY_TOL: f64 = 1e-8;

/// Certifies `u` as an epsilon-constrained Nash equilibrium from freshly
/// built best-response LPs. Optimality is among stationary deviations.
pub fn verify_equilibrium(model: &GameModel, u: &MultiPolicy, epsilon: f64) -> Result<VerificationReport> {
    let occ = occupations(model, u)?;
    let joint = product_chain_steady_state(model, u).ok();
    let mut players = Vec::with_capacity(model.num_players());
    let mut pass = true;
    let mut max_gap = 0.0f64;
    for i in 0..model.num_players() {
        let (gap, _) = gap_from(model, i, &occ, VERIFY_FEASIBILITY_TOL)?;
        check_anomaly(&gap)?;
        let g = gap.gap.unwrap_or(f64::INFINITY);
        max_gap = max_gap.max(g);
        pass &= gap.feasible && g <= epsilon;
        let identity_error = match &joint {
            Some(pi) => Some(
                gap.costs
                    .iter()
                    .enumerate()
                    .map(|(j, c)| product_chain_cost_with(model, u, pi, i, j).map(|p| (p - c).abs()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max),
            ),
            None => None,
        };
        players.push(PlayerVerification { gap, identity_error });
    }
    Ok(VerificationReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        epsilon,
        feasibility_tol: VERIFY_FEASIBILITY_TOL,
        max_gap,
        players,
    })
}

/// Per-player distance of `z_i` from the optimal set of its LP against
/// `g(z)`: the larger of the objective shortfall and `z_i`'s own
/// infeasibility in that LP. Infinite when the LP is infeasible.
pub fn fixed_point_residuals(model: &GameModel, z: &[OccupationMeasure]) -> Result<Vec<f64>> {
    if z.len() != model.num_players() {
        return Err(Error::DimensionMismatch(format!(
            "{} occupation measures for {} players",
            z.len(),
            model.num_players()
        )));
    }
    let policies = z
        .iter()
        .enumerate()
        .map(|(i, zi)| policy_from_occupation(&model.players[i], zi).policy)
        .collect();
    let occ = occupations(model, &MultiPolicy { policies })?;
    let mut out = Vec::with_capacity(z.len());
    for (i, zi) in z.iter().enumerate() {
        let program = build_program(model, i, &occ)?;
        let lp = solve_lp(&program.lp)?;
        if lp.status != LpStatus::Optimal {
            out.push(f64::INFINITY);
            continue;
        }
        let player = &model.players[i];
        let shortfall = (zi.expect(&program.costs[0].values) - lp.value).abs();
        let mut infeasibility = zi
            .balance_residual(player)
            .max((zi.total() - 1.0).abs())
            .max(zi.z.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max));
        for (c, v) in program.costs[1..].iter().zip(model.bounds(i)) {
            infeasibility = infeasibility.max(zi.expect(&c.values) - v);
        }
        out.push(shortfall.max(infeasibility));
    }
    Ok(out)
}

/// `max_i` of [`fixed_point_residuals`].
pub fn fixed_point_residual(model: &GameModel, z: &[OccupationMeasure]) -> Result<f64> {
    Ok(fixed_point_residuals(model, z)?.into_iter().fold(0.0, f64::max))
}
