//! Unichain certification of a player's chain.
//!
//! A set closed under a randomized stationary policy is also closed under any
//! deterministic selection from that policy's support, so it suffices to show
//! that every deterministic stationary policy induces exactly one recurrent
//! class.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PlayerModel;

pub const DEFAULT_POLICY_CAP: u128 = 1_000_000;
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Closed strongly connected components of the graph with an edge `x -> y`
/// whenever `matrix[x][y] > 0`. Each class is sorted; classes are ordered by
/// their smallest state.
pub fn recurrent_classes(matrix: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = matrix.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for (x, row) in matrix.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                graph.add_edge(nodes[x], nodes[y], ());
            }
        }
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, scc)| {
            scc.iter().all(|node| {
                matrix[node.index()]
                    .iter()
                    .enumerate()
                    .all(|(y, &p)| p <= 0.0 || component[y] == *c)
            })
        })
        .map(|(_, scc)| {
            let mut class: Vec<usize> = scc.iter().map(|n| n.index()).collect();
            class.sort_unstable();
            class
        })
        .collect();
    classes.sort_unstable_by_key(|c| c[0]);
    classes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErgodicityVerdict {
    Pass,
    PassSampled,
    Fail,
}

/// A deterministic policy whose induced chain has two disjoint closed classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityWitness {
    /// Chosen action index per state.
    pub policy: Vec<usize>,
    /// Chosen action name per state.
    pub actions: Vec<String>,
    pub classes: [Vec<String>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub verdict: ErgodicityVerdict,
    pub policies_checked: u128,
    pub witness: Option<ErgodicityWitness>,
}

impl ErgodicityReport {
    pub fn passed(&self) -> bool {
        self.verdict != ErgodicityVerdict::Fail
    }
}

fn deterministic_matrix(player: &PlayerModel, choice: &[usize]) -> Vec<Vec<f64>> {
    choice
        .iter()
        .enumerate()
        .map(|(x, &a)| player.transitions[x][a].clone())
        .collect()
}

fn witness_for(player: &PlayerModel, choice: &[usize]) -> Option<ErgodicityWitness> {
    let classes = recurrent_classes(&deterministic_matrix(player, choice));
    if classes.len() < 2 {
        return None;
    }
    let names = |c: &Vec<usize>| c.iter().map(|&x| player.states[x].clone()).collect();
    Some(ErgodicityWitness {
        policy: choice.to_vec(),
        actions: choice
            .iter()
            .enumerate()
            .map(|(x, &a)| player.actions[x][a].clone())
            .collect(),
        classes: [names(&classes[0]), names(&classes[1])],
    })
}

/// Exhaustive check over all deterministic stationary policies.
pub fn check_ergodicity(player: &PlayerModel, cap: u128) -> Result<ErgodicityReport> {
    let count = player.deterministic_policy_count();
    if count > cap {
        return Err(Error::SizeLimitExceeded { count, cap });
    }
    let n = player.num_states();
    let mut choice = vec![0usize; n];
    let mut checked = 0u128;
    loop {
        checked += 1;
        if let Some(w) = witness_for(player, &choice) {
            return Ok(ErgodicityReport {
                verdict: ErgodicityVerdict::Fail,
                policies_checked: checked,
                witness: Some(w),
            });
        }
        // Odometer step, state 0 fastest.
        let mut x = 0;
        loop {
            if x == n {
                return Ok(ErgodicityReport {
                    verdict: ErgodicityVerdict::Pass,
                    policies_checked: checked,
                    witness: None,
                });
            }
            choice[x] += 1;
            if choice[x] < player.num_actions(x) {
                break;
            }
            choice[x] = 0;
            x += 1;
        }
    }
}

/// Checks `samples` uniformly drawn deterministic policies.
pub fn check_ergodicity_sampled(player: &PlayerModel, samples: usize, seed: u64) -> ErgodicityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut choice = vec![0usize; player.num_states()];
    for s in 0..samples {
        for (x, c) in choice.iter_mut().enumerate() {
            *c = rng.random_range(0..player.num_actions(x));
        }
        if let Some(w) = witness_for(player, &choice) {
            return ErgodicityReport {
                verdict: ErgodicityVerdict::Fail,
                policies_checked: s as u128 + 1,
                witness: Some(w),
            };
        }
    }
    ErgodicityReport {
        verdict: ErgodicityVerdict::PassSampled,
        policies_checked: samples as u128,
        witness: None,
    }
}

/// Exhaustive when the policy count is within `cap`, sampled otherwise.
pub fn check_ergodicity_auto(
    player: &PlayerModel,
    cap: u128,
    samples: usize,
    seed: u64,
) -> ErgodicityReport {
    match check_ergodicity(player, cap) {
        Ok(report) => report,
        Err(_) => check_ergodicity_sampled(player, samples, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(transitions: Vec<Vec<Vec<f64>>>) -> PlayerModel {
        let n = transitions.len();
        PlayerModel {
            states: (0..n).map(|x| format!("s{x}")).collect(),
            actions: transitions
                .iter()
                .map(|rows| (0..rows.len()).map(|a| format!("a{a}")).collect())
                .collect(),
            transitions,
            initial: {
                let mut b = vec![0.0; n];
                b[0] = 1.0;
                b
            },
        }
    }

    #[test]
    fn strictly_positive_rows_pass() {
        let p = chain(vec![
            vec![vec![0.3, 0.7], vec![0.9, 0.1]],
            vec![vec![0.5, 0.5], vec![0.01, 0.99]],
        ]);
        let r = check_ergodicity(&p, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(r.verdict, ErgodicityVerdict::Pass);
        assert_eq!(r.policies_checked, 4);
    }

    #[test]
    fn identity_chain_fails_with_two_absorbing_classes() {
        let p = chain(vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]);
        let r = check_ergodicity(&p, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(r.verdict, ErgodicityVerdict::Fail);
        let w = r.witness.unwrap();
        assert_eq!(w.classes, [vec!["s0".to_string()], vec!["s1".to_string()]]);
    }

    #[test]
    fn isolating_action_is_found() {
        // Action 1 at s1 keeps {s1, s2} closed while s0 loops on itself under
        // action 1. Enumerated by hand: the four policies (a@s0, a@s1) with
        // s2 having one action; only (1, 1) yields classes {s0} and {s1, s2}.
        let p = chain(vec![
            vec![vec![0.0, 0.5, 0.5], vec![1.0, 0.0, 0.0]],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5]],
            vec![vec![0.0, 1.0, 0.0]],
        ]);
        let r = check_ergodicity(&p, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(r.verdict, ErgodicityVerdict::Fail);
        assert_eq!(r.policies_checked, 4);
        let w = r.witness.unwrap();
        assert_eq!(w.policy, vec![1, 1, 0]);
        assert_eq!(
            w.classes,
            [vec!["s0".to_string()], vec!["s1".to_string(), "s2".to_string()]]
        );
    }

    #[test]
    fn transient_states_are_allowed() {
        let p = chain(vec![vec![vec![0.5, 0.5]], vec![vec![0.0, 1.0]]]);
        assert!(check_ergodicity(&p, DEFAULT_POLICY_CAP).unwrap().passed());
        assert_eq!(recurrent_classes(&p.transitions.iter().map(|r| r[0].clone()).collect::<Vec<_>>()), vec![vec![1]]);
    }

    #[test]
    fn cap_and_sampled_fallback() {
        let p = chain(vec![
            vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]],
        ]);
        assert!(matches!(
            check_ergodicity(&p, 8),
            Err(Error::SizeLimitExceeded { count: 9, cap: 8 })
        ));
        let r = check_ergodicity_auto(&p, 8, 50, 7);
        assert_eq!(r.verdict, ErgodicityVerdict::PassSampled);
        assert_eq!(r.policies_checked, 50);
    }
}
