//! Game description: per-player controlled chains, coupled cost tables and
//! constraint budgets, plus structural validation.
//!
//! Local state-action pairs of a player are indexed state-major, action-minor
//! in declaration order. Global state-action tuples are indexed in mixed
//! radix with player 0 as the most significant digit.

use std::fmt;

use serde::Serialize;

/// Tolerance used when checking that probability vectors sum to one.
pub const PROB_TOL: f64 = 1e-12;

/// One player's finite controlled Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerModel {
    pub states: Vec<String>,
    /// Action names available in each state.
    pub actions: Vec<Vec<String>>,
    /// `transitions[x][a][y]`: probability of moving from `x` to `y` under action `a`.
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub initial: Vec<f64>,
}

impl PlayerModel {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self, state: usize) -> usize {
        self.actions[state].len()
    }

    /// Number of local state-action pairs.
    pub fn num_pairs(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    /// Offsets of each state's first pair in the flattened pair order; the
    /// final entry is the total pair count.
    pub fn pair_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.actions.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for acts in &self.actions {
            acc += acts.len();
            offsets.push(acc);
        }
        offsets
    }

    /// All local pairs `(state, action)` in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .flat_map(|(x, acts)| (0..acts.len()).map(move |a| (x, a)))
    }

    pub fn pair_label(&self, state: usize, action: usize) -> String {
        format!("{}:{}", self.states[state], self.actions[state][action])
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, state: usize, name: &str) -> Option<usize> {
        self.actions[state].iter().position(|a| a == name)
    }

    /// Number of deterministic stationary policies, saturating at `u128::MAX`.
    pub fn deterministic_policy_count(&self) -> u128 {
        self.actions
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostValues {
    /// One value per global state-action tuple.
    Dense(Vec<f64>),
    /// One value per local pair of the owner; independent of other players.
    Separable(Vec<f64>),
}

/// Immediate cost `j` of player `owner`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    pub owner: usize,
    pub index: usize,
    pub values: CostValues,
}

impl CostTable {
    pub fn is_separable(&self) -> bool {
        matches!(self.values, CostValues::Separable(_))
    }
}

/// Bounds `V_i^1..V_i^B` of one player's constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub owner: usize,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GameModel {
    pub name: String,
    pub description: String,
    pub tags: Vec<String>,
    pub players: Vec<PlayerModel>,
    pub costs: Vec<CostTable>,
    pub constraints: Vec<ConstraintSpec>,
}

impl GameModel {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// Number of constraints `B_i` of player `i`.
    pub fn num_constraints(&self, player: usize) -> usize {
        self.bounds(player).len()
    }

    pub fn bounds(&self, player: usize) -> &[f64] {
        self.constraints
            .iter()
            .find(|c| c.owner == player)
            .map(|c| c.bounds.as_slice())
            .unwrap_or(&[])
    }

    pub fn cost(&self, owner: usize, index: usize) -> Option<&CostTable> {
        self.costs
            .iter()
            .find(|c| c.owner == owner && c.index == index)
    }

    /// True when every cost table of `player` is separable.
    pub fn is_decoupled_for(&self, player: usize) -> bool {
        (0..=self.num_constraints(player))
            .all(|j| self.cost(player, j).is_some_and(CostTable::is_separable))
    }

    /// Pair counts `|K_l|` for every player.
    pub fn pair_counts(&self) -> Vec<usize> {
        self.players.iter().map(PlayerModel::num_pairs).collect()
    }

    /// Size of the global state-action space, or `None` on overflow.
    pub fn global_size(&self) -> Option<usize> {
        self.players
            .iter()
            .try_fold(1usize, |acc, p| acc.checked_mul(p.num_pairs()))
    }

    /// Mixed-radix strides of the global index (player 0 most significant).
    pub fn strides(&self) -> Vec<usize> {
        let counts = self.pair_counts();
        let mut strides = vec![1; counts.len()];
        for l in (0..counts.len().saturating_sub(1)).rev() {
            strides[l] = strides[l + 1] * counts[l + 1];
        }
        strides
    }

    /// Decomposes a global index into per-player local pair indices.
    pub fn decompose(&self, mut global: usize) -> Vec<usize> {
        let counts = self.pair_counts();
        let mut out = vec![0; counts.len()];
        for l in (0..counts.len()).rev() {
            out[l] = global % counts[l];
            global /= counts[l];
        }
        out
    }

    /// `"x1:a1|x2:a2|..."` label of a global tuple given local pair indices.
    pub fn tuple_label(&self, local_pairs: &[usize]) -> String {
        let mut parts = Vec::with_capacity(local_pairs.len());
        for (player, &k) in self.players.iter().zip(local_pairs) {
            let (x, a) = player.pairs().nth(k).expect("pair index in range");
            parts.push(player.pair_label(x, a));
        }
        parts.join("|")
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

/// One structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoPlayers,
    NoStates {
        player: usize,
    },
    NoActions {
        player: usize,
        state: String,
    },
    TransitionShape {
        player: usize,
        state: String,
        detail: String,
    },
    NegativeProbability {
        player: usize,
        state: String,
        action: String,
        target: String,
        value: f64,
    },
    RowNotStochastic {
        player: usize,
        state: String,
        action: String,
        sum: f64,
    },
    InitialShape {
        player: usize,
        expected: usize,
        found: usize,
    },
    InitialNotDistribution {
        player: usize,
        sum: f64,
        min: f64,
    },
    CostOwnerOutOfRange {
        owner: usize,
        index: usize,
    },
    DuplicateCost {
        owner: usize,
        index: usize,
    },
    MissingCost {
        owner: usize,
        index: usize,
    },
    UnexpectedCost {
        owner: usize,
        index: usize,
        constraints: usize,
    },
    CostShape {
        owner: usize,
        index: usize,
        expected: usize,
        found: usize,
    },
    CostMissingEntry {
        owner: usize,
        index: usize,
        tuple: String,
    },
    CostNotFinite {
        owner: usize,
        index: usize,
        tuple: String,
        value: f64,
    },
    ConstraintOwnerOutOfRange {
        owner: usize,
    },
    DuplicateConstraint {
        owner: usize,
    },
    BoundNotFinite {
        owner: usize,
        index: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoPlayers => write!(f, "game has no players"),
            NoStates { player } => write!(f, "player {player} has no states"),
            NoActions { player, state } => {
                write!(f, "player {player}, state {state}: no actions")
            }
            TransitionShape {
                player,
                state,
                detail,
            } => write!(f, "player {player}, state {state}: {detail}"),
            NegativeProbability {
                player,
                state,
                action,
                target,
                value,
            } => write!(
                f,
                "player {player}, ({state}, {action}) -> {target}: negative probability {value}"
            ),
            RowNotStochastic {
                player,
                state,
                action,
                sum,
            } => write!(
                f,
                "player {player}, ({state}, {action}): transition row sums to {sum}"
            ),
            InitialShape {
                player,
                expected,
                found,
            } => write!(
                f,
                "player {player}: initial distribution has {found} entries, expected {expected}"
            ),
            InitialNotDistribution { player, sum, min } => write!(
                f,
                "player {player}: initial distribution sums to {sum} (min entry {min})"
            ),
            CostOwnerOutOfRange { owner, index } => {
                write!(f, "cost ({owner}, {index}): owner out of range")
            }
            DuplicateCost { owner, index } => write!(f, "cost ({owner}, {index}) declared twice"),
            MissingCost { owner, index } => write!(f, "cost ({owner}, {index}) missing"),
            UnexpectedCost {
                owner,
                index,
                constraints,
            } => write!(
                f,
                "cost ({owner}, {index}) has no matching bound (player has {constraints} constraints)"
            ),
            CostShape {
                owner,
                index,
                expected,
                found,
            } => write!(
                f,
                "cost ({owner}, {index}): {found} values, expected {expected}"
            ),
            CostMissingEntry {
                owner,
                index,
                tuple,
            } => write!(f, "cost ({owner}, {index}): no entry for {tuple}"),
            CostNotFinite {
                owner,
                index,
                tuple,
                value,
            } => write!(f, "cost ({owner}, {index}) at {tuple}: non-finite value {value}"),
            ConstraintOwnerOutOfRange { owner } => {
                write!(f, "constraints for unknown player {owner}")
            }
            DuplicateConstraint { owner } => {
                write!(f, "player {owner} has more than one constraint block")
            }
            BoundNotFinite { owner, index } => {
                write!(f, "player {owner}: bound {index} is not finite")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every structural invariant violation of `model`. Never fails; an
/// empty report means the model is well formed.
pub fn validate(model: &GameModel) -> ValidationReport {
    let mut v = Vec::new();
    if model.players.is_empty() {
        v.push(Violation::NoPlayers);
    }
    let mut players_ok = true;
    for (i, p) in model.players.iter().enumerate() {
        players_ok &= validate_player(i, p, &mut v);
    }

    let n = model.num_players();
    let mut seen_constraints = vec![false; n];
    for c in &model.constraints {
        if c.owner >= n {
            v.push(Violation::ConstraintOwnerOutOfRange { owner: c.owner });
            continue;
        }
        if seen_constraints[c.owner] {
            v.push(Violation::DuplicateConstraint { owner: c.owner });
        }
        seen_constraints[c.owner] = true;
        for (j, b) in c.bounds.iter().enumerate() {
            if !b.is_finite() {
                v.push(Violation::BoundNotFinite {
                    owner: c.owner,
                    index: j + 1,
                });
            }
        }
    }

    let mut seen = std::collections::HashSet::new();
    for t in &model.costs {
        if t.owner >= n {
            v.push(Violation::CostOwnerOutOfRange {
                owner: t.owner,
                index: t.index,
            });
            continue;
        }
        if !seen.insert((t.owner, t.index)) {
            v.push(Violation::DuplicateCost {
                owner: t.owner,
                index: t.index,
            });
        }
        let b = model.num_constraints(t.owner);
        if t.index > b {
            v.push(Violation::UnexpectedCost {
                owner: t.owner,
                index: t.index,
                constraints: b,
            });
        }
        if players_ok {
            validate_cost_values(model, t, &mut v);
        }
    }
    for i in 0..n {
        for j in 0..=model.num_constraints(i) {
            if !seen.contains(&(i, j)) {
                v.push(Violation::MissingCost { owner: i, index: j });
            }
        }
    }
    ValidationReport { violations: v }
}

fn validate_player(i: usize, p: &PlayerModel, v: &mut Vec<Violation>) -> bool {
    let before = v.len();
    let n = p.states.len();
    if n == 0 {
        v.push(Violation::NoStates { player: i });
        return false;
    }
    if p.actions.len() != n || p.transitions.len() != n {
        v.push(Violation::TransitionShape {
            player: i,
            state: "*".into(),
            detail: format!(
                "{} states but {} action lists and {} transition blocks",
                n,
                p.actions.len(),
                p.transitions.len()
            ),
        });
        return false;
    }
    for x in 0..n {
        let state = &p.states[x];
        if p.actions[x].is_empty() {
            v.push(Violation::NoActions {
                player: i,
                state: state.clone(),
            });
        }
        if p.transitions[x].len() != p.actions[x].len() {
            v.push(Violation::TransitionShape {
                player: i,
                state: state.clone(),
                detail: format!(
                    "{} actions but {} transition rows",
                    p.actions[x].len(),
                    p.transitions[x].len()
                ),
            });
            continue;
        }
        for (a, row) in p.transitions[x].iter().enumerate() {
            let action = &p.actions[x][a];
            if row.len() != n {
                v.push(Violation::TransitionShape {
                    player: i,
                    state: state.clone(),
                    detail: format!("row for action {action} has {} entries", row.len()),
                });
                continue;
            }
            for (y, &pr) in row.iter().enumerate() {
                if !(pr >= 0.0) {
                    v.push(Violation::NegativeProbability {
                        player: i,
                        state: state.clone(),
                        action: action.clone(),
                        target: p.states[y].clone(),
                        value: pr,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if !((sum - 1.0).abs() <= PROB_TOL) {
                v.push(Violation::RowNotStochastic {
                    player: i,
                    state: state.clone(),
                    action: action.clone(),
                    sum,
                });
            }
        }
    }
    if p.initial.len() != n {
        v.push(Violation::InitialShape {
            player: i,
            expected: n,
            found: p.initial.len(),
        });
    } else {
        let sum: f64 = p.initial.iter().sum();
        let min = p.initial.iter().copied().fold(f64::INFINITY, f64::min);
        if !((sum - 1.0).abs() <= PROB_TOL) || !(min >= 0.0) {
            v.push(Violation::InitialNotDistribution {
                player: i,
                sum,
                min,
            });
        }
    }
    v.len() == before
}

fn validate_cost_values(model: &GameModel, t: &CostTable, v: &mut Vec<Violation>) {
    let (values, expected) = match &t.values {
        CostValues::Dense(vals) => match model.global_size() {
            Some(size) => (vals, size),
            None => {
                v.push(Violation::CostShape {
                    owner: t.owner,
                    index: t.index,
                    expected: usize::MAX,
                    found: vals.len(),
                });
                return;
            }
        },
        CostValues::Separable(vals) => (vals, model.players[t.owner].num_pairs()),
    };
    if values.len() != expected {
        v.push(Violation::CostShape {
            owner: t.owner,
            index: t.index,
            expected,
            found: values.len(),
        });
        return;
    }
    for (k, &c) in values.iter().enumerate() {
        if c.is_finite() {
            continue;
        }
        let tuple = match &t.values {
            CostValues::Dense(_) => model.tuple_label(&model.decompose(k)),
            CostValues::Separable(_) => {
                let p = &model.players[t.owner];
                let (x, a) = p.pairs().nth(k).expect("pair index in range");
                p.pair_label(x, a)
            }
        };
        // NaN marks an entry the loader could not find.
        if c.is_nan() {
            v.push(Violation::CostMissingEntry {
                owner: t.owner,
                index: t.index,
                tuple,
            });
        } else {
            v.push(Violation::CostNotFinite {
                owner: t.owner,
                index: t.index,
                tuple,
                value: c,
            });
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two players, two states, two actions each, one constraint for player 0.
    pub(crate) fn two_player_model() -> GameModel {
        let player = |name: &str| PlayerModel {
            states: vec![format!("{name}0"), format!("{name}1")],
            actions: vec![vec!["a".into(), "b".into()], vec!["a".into(), "b".into()]],
            transitions: vec![
                vec![vec![0.9, 0.1], vec![0.2, 0.8]],
                vec![vec![0.5, 0.5], vec![0.3, 0.7]],
            ],
            initial: vec![1.0, 0.0],
        };
        let global: Vec<f64> = (0..16).map(|k| (k as f64) * 0.25).collect();
        GameModel {
            name: "two".into(),
            players: vec![player("p"), player("q")],
            costs: vec![
                CostTable {
                    owner: 0,
                    index: 0,
                    values: CostValues::Dense(global.clone()),
                },
                CostTable {
                    owner: 0,
                    index: 1,
                    values: CostValues::Separable(vec![1.0, 0.0, 1.0, 0.0]),
                },
                CostTable {
                    owner: 1,
                    index: 0,
                    values: CostValues::Dense(global.iter().rev().copied().collect()),
                },
            ],
            constraints: vec![ConstraintSpec {
                owner: 0,
                bounds: vec![0.5],
            }],
            ..Default::default()
        }
    }

    #[test]
    fn well_formed_model_has_empty_report() {
        assert!(validate(&two_player_model()).is_clean());
    }

    #[test]
    fn short_transition_row_is_named() {
        let mut m = two_player_model();
        m.players[1].transitions[0][1] = vec![0.1, 0.8];
        let r = validate(&m);
        assert_eq!(r.violations.len(), 1);
        match &r.violations[0] {
            Violation::RowNotStochastic {
                player,
                state,
                action,
                sum,
            } => {
                assert_eq!((*player, state.as_str(), action.as_str()), (1, "q0", "b"));
                assert!((sum - 0.9).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_cost_entry_is_named() {
        let mut m = two_player_model();
        if let CostValues::Dense(v) = &mut m.costs[2].values {
            v[5] = f64::NAN;
        }
        let r = validate(&m);
        assert_eq!(
            r.violations,
            vec![Violation::CostMissingEntry {
                owner: 1,
                index: 0,
                tuple: "p0:b|q0:b".into()
            }]
        );
    }

    #[test]
    fn missing_and_unexpected_tables() {
        let mut m = two_player_model();
        m.costs.remove(1);
        m.costs.push(CostTable {
            owner: 1,
            index: 1,
            values: CostValues::Separable(vec![0.0; 4]),
        });
        let r = validate(&m);
        assert!(r.violations.contains(&Violation::MissingCost { owner: 0, index: 1 }));
        assert!(r.violations.contains(&Violation::UnexpectedCost {
            owner: 1,
            index: 1,
            constraints: 0
        }));
    }

    #[test]
    fn empty_action_set_and_bad_initial() {
        let mut m = two_player_model();
        m.players[0].initial = vec![0.5, 0.4];
        m.players[1].actions[1].clear();
        m.players[1].transitions[1].clear();
        let r = validate(&m);
        assert!(r.violations.iter().any(|v| matches!(
            v,
            Violation::InitialNotDistribution { player: 0, .. }
        )));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NoActions { player: 1, .. })));
    }

    #[test]
    fn validation_is_idempotent() {
        let mut m = two_player_model();
        m.players[0].transitions[1][0][0] = -0.5;
        let copy = m.clone();
        assert_eq!(validate(&m), validate(&m));
        assert_eq!(m, copy);
    }

    #[test]
    fn mixed_radix_indexing() {
        let m = two_player_model();
        assert_eq!(m.strides(), vec![4, 1]);
        assert_eq!(m.decompose(6), vec![1, 2]);
        assert_eq!(m.tuple_label(&[1, 2]), "p0:b|q1:a");
    }
}
