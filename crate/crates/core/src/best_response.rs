//! Best responses against fixed opponents via the occupation-measure LP.
//!
//! Variables are player `i`'s local pairs in canonical order. Equality rows
//! are one balance row per state (kept even though they sum to zero, so row
//! `r` always refers to state `r`) followed by the normalization row. One
//! inequality row per constraint bounds the marginalized constraint cost.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpDiagnostics, LpStatus};
use crate::model::GameModel;
use crate::stationary::{
    marginal_cost_from, occupation_measure, occupations, policy_from_occupation, MarginalCostTable,
    MultiPolicy, OccupationMeasure, StationaryPolicy, ZERO_MASS,
};

/// Slack allowed when judging a long-run constraint value against its bound.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResponseStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseOutcome {
    pub owner: usize,
    pub status: ResponseStatus,
    /// Optimal occupation measure (one vertex of the optimal face).
    pub z_star: Option<OccupationMeasure>,
    /// LP optimum; NaN when infeasible.
    pub value: f64,
    /// Policy recovered from `z_star`, uniform at zero-mass states.
    pub policy: Option<StationaryPolicy>,
    pub uniform_states: Vec<usize>,
    /// Constraint costs `j = 1..=B_i` at `z_star`.
    pub constraint_values: Vec<f64>,
    /// Largest gap between `z_star` and the occupation measure of the
    /// recovered policy, over states carrying mass.
    pub consistency_error: Option<f64>,
    pub lp: LpDiagnostics,
}

impl BestResponseOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == ResponseStatus::Optimal
    }
}

/// The best-response LP together with the marginal cost tables it was built from.
#[derive(Debug, Clone)]
pub struct ResponseProgram {
    pub lp: LinearProgram,
    /// `c_i^{j,u}` for `j = 0..=B_i`.
    pub costs: Vec<MarginalCostTable>,
}

pub(crate) fn build_program(model: &GameModel, player: usize, occ: &[OccupationMeasure]) -> Result<ResponseProgram> {
    let p = model.players.get(player).ok_or(Error::PlayerOutOfRange(player))?;
    let n = p.num_states();
    let k = p.num_pairs();
    let b = model.num_constraints(player);
    let costs = (0..=b)
        .map(|j| marginal_cost_from(model, player, j, occ))
        .collect::<Result<Vec<_>>>()?;

    let mut a_eq = vec![vec![0.0; k]; n + 1];
    for (col, (y, a)) in p.pairs().enumerate() {
        a_eq[y][col] += 1.0;
        for (r, &pr) in p.transitions[y][a].iter().enumerate() {
            a_eq[r][col] -= pr;
        }
        a_eq[n][col] = 1.0;
    }
    let mut b_eq = vec![0.0; n + 1];
    b_eq[n] = 1.0;
    let lp = LinearProgram {
        objective: costs[0].values.clone(),
        a_eq,
        b_eq,
        a_le: costs[1..].iter().map(|c| c.values.clone()).collect(),
        b_le: model.bounds(player).to_vec(),
    };
    Ok(ResponseProgram { lp, costs })
}

/// The LP of player `i` against the opponents in `u`.
pub fn build_lp(model: &GameModel, player: usize, u: &MultiPolicy) -> Result<LinearProgram> {
    let occ = occupations(model, u)?;
    Ok(build_program(model, player, &occ)?.lp)
}

pub(crate) fn best_response_from(model: &GameModel, player: usize, occ: &[OccupationMeasure]) -> Result<BestResponseOutcome> {
    let program = build_program(model, player, occ)?;
    let out = solve_lp(&program.lp)?;
    match out.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(BestResponseOutcome {
                owner: player,
                status: ResponseStatus::Infeasible,
                z_star: None,
                value: f64::NAN,
                policy: None,
                uniform_states: Vec::new(),
                constraint_values: Vec::new(),
                consistency_error: None,
                lp: out.diagnostics,
            })
        }
        LpStatus::Unbounded => {
            // The feasible set lies in a probability simplex.
            return Err(Error::NumericalBreakdown {
                iterations: out.diagnostics.iterations,
                reason: "best-response LP reported unbounded".into(),
            });
        }
    }
    let p = &model.players[player];
    let z = OccupationMeasure::new(player, out.solution);
    let recovered = policy_from_occupation(p, &z);
    let realized = occupation_measure(p, &recovered.policy)?;
    let marginal = z.state_marginal(p);
    let offsets = p.pair_offsets();
    let mut consistency = 0.0f64;
    for (y, w) in offsets.windows(2).enumerate() {
        if marginal[y] > ZERO_MASS {
            for k in w[0]..w[1] {
                consistency = consistency.max((z.z[k] - realized.z[k]).abs());
            }
        }
    }
    let constraint_values = program.costs[1..].iter().map(|c| z.expect(&c.values)).collect();
    Ok(BestResponseOutcome {
        owner: player,
        status: ResponseStatus::Optimal,
        value: out.value,
        z_star: Some(z),
        policy: Some(recovered.policy),
        uniform_states: recovered.uniform_states,
        constraint_values,
        consistency_error: Some(consistency),
        lp: out.diagnostics,
    })
}

/// Optimal stationary response of player `i` against `u_{-i}`.
pub fn best_response(model: &GameModel, player: usize, u: &MultiPolicy) -> Result<BestResponseOutcome> {
    let occ = occupations(model, u)?;
    best_response_from(model, player, &occ)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub player: usize,
    /// Current objective minus the best-response optimum; `None` when no
    /// feasible response exists.
    pub gap: Option<f64>,
    pub feasible: bool,
    /// `V_i^j - C^{i,j}(u)` for `j = 1..=B_i`.
    pub slacks: Vec<f64>,
    /// `C^{i,j}(u)` for `j = 0..=B_i`.
    pub costs: Vec<f64>,
    pub best_value: Option<f64>,
}

/// Gap evaluation that never fails on a missing best response: when the LP
/// is infeasible the gap is `None`, whatever the feasibility of `u`.
pub(crate) fn gap_from(
    model: &GameModel,
    player: usize,
    occ: &[OccupationMeasure],
    tol: f64,
) -> Result<(GapReport, BestResponseOutcome)> {
    let costs: Vec<f64> = (0..=model.num_constraints(player))
        .map(|j| Ok(occ[player].expect(&marginal_cost_from(model, player, j, occ)?.values)))
        .collect::<Result<_>>()?;
    let slacks: Vec<f64> = model
        .bounds(player)
        .iter()
        .zip(&costs[1..])
        .map(|(v, c)| v - c)
        .collect();
    let feasible = slacks.iter().all(|&s| s >= -tol);
    let br = best_response_from(model, player, occ)?;
    let (gap, best_value) = if br.is_optimal() {
        (Some(costs[0] - br.value), Some(br.value))
    } else {
        (None, None)
    };
    Ok((
        GapReport {
            player,
            gap,
            feasible,
            slacks,
            costs,
            best_value,
        },
        br,
    ))
}

pub(crate) fn check_anomaly(report: &GapReport) -> Result<()> {
    if report.gap.is_none() && report.feasible {
        let excess = report.slacks.iter().map(|s| (-s).max(0.0)).fold(0.0, f64::max);
        return Err(Error::GapUndefined {
            player: report.player,
            excess,
        });
    }
    Ok(())
}

/// How much player `i` could gain by deviating from `u_i` while keeping its
/// constraints, and how its constraints stand under `u`.
pub fn best_response_gap(model: &GameModel, player: usize, u: &MultiPolicy) -> Result<GapReport> {
    let occ = occupations(model, u)?;
    let report = gap_from(model, player, &occ, CONSTRAINT_TOL)?.0;
    check_anomaly(&report)?;
    Ok(report)
}

/// `min_j (V_i^j - C^{i,j}([u_{-i} | v_i]))`, or `+inf` without constraints.
pub fn slater_margin(model: &GameModel, player: usize, u: &MultiPolicy, candidate: &StationaryPolicy) -> Result<f64> {
    let w = u.replace_coordinate(player, candidate.clone())?;
    let occ = occupations(model, &w)?;
    model
        .bounds(player)
        .iter()
        .enumerate()
        .map(|(k, v)| Ok(v - occ[player].expect(&marginal_cost_from(model, player, k + 1, &occ)?.values)))
        .try_fold(f64::INFINITY, |acc, m: Result<f64>| Ok(acc.min(m?)))
}

/// Minimum Slater margin of `candidate` over the given opponent profiles.
/// A positive result is evidence for the strong Slater condition, not a proof.
pub fn slater_sweep(
    model: &GameModel,
    player: usize,
    opponents: &[MultiPolicy],
    candidate: &StationaryPolicy,
) -> Result<f64> {
    opponents
        .iter()
        .try_fold(f64::INFINITY, |acc, u| Ok(acc.min(slater_margin(model, player, u, candidate)?)))
}
