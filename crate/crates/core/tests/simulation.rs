use ccsg_core::equilibrium::random_multi_policy;
use ccsg_core::model::{CostTable, CostValues, GameModel, PlayerModel};
use ccsg_core::scenario::random_game;
use ccsg_core::simulate::{empirical_vs_analytic, rollout, RolloutConfig};
use ccsg_core::stationary::{MultiPolicy, StationaryPolicy};

fn two_state() -> GameModel {
    // Under action "a" the chain has pi = (2/3, 1/3).
    let p = PlayerModel {
        states: vec!["x0".into(), "x1".into()],
        actions: vec![vec!["a".into()], vec!["a".into()]],
        transitions: vec![vec![vec![0.75, 0.25]], vec![vec![0.5, 0.5]]],
        initial: vec![0.0, 1.0],
    };
    GameModel {
        players: vec![p],
        costs: vec![CostTable { owner: 0, index: 0, values: CostValues::Separable(vec![1.0, 0.0]) }],
        ..Default::default()
    }
}

#[test]
fn visitation_matches_steady_state() {
    let m = two_state();
    let u = MultiPolicy::uniform(&m);
    let r = rollout(&m, &u, &RolloutConfig::new(1_000_000, 17)).unwrap();
    assert!((r.visitation[0][0] - 2.0 / 3.0).abs() <= 0.005, "{:?}", r.visitation);
    // Cost 1 in x0 only, so the empirical cost is the visitation of x0.
    assert!((r.empirical_costs[0][0] - r.visitation[0][0]).abs() <= 1e-12);
}

#[test]
fn seeds_determine_runs() {
    let m = random_game(2, 3, 2, 1, 1).unwrap();
    let u = random_multi_policy(&m, 1);
    let mut c = RolloutConfig::new(2000, 5);
    c.record_trajectory = true;
    let a = rollout(&m, &u, &c).unwrap();
    assert_eq!(a, rollout(&m, &u, &c).unwrap());
    c.seed = 6;
    assert_ne!(a.trajectory, rollout(&m, &u, &c).unwrap().trajectory);
}

#[test]
fn other_players_costs_do_not_steer_sampling() {
    let m = random_game(3, 2, 2, 1, 8).unwrap();
    let u = random_multi_policy(&m, 8);
    let mut shuffled = m.clone();
    for c in shuffled.costs.iter_mut().filter(|c| c.owner != 0) {
        if let CostValues::Dense(v) = &mut c.values {
            v.reverse();
        }
    }
    let mut c = RolloutConfig::new(3000, 2);
    c.record_trajectory = true;
    let a = rollout(&m, &u, &c).unwrap().trajectory.unwrap();
    let b = rollout(&shuffled, &u, &c).unwrap().trajectory.unwrap();
    let path = |t: &[ccsg_core::simulate::TrajectoryRecord]| t.iter().map(|r| (r.t, r.player, r.state, r.action)).collect::<Vec<_>>();
    assert_eq!(path(&a), path(&b));
    assert_ne!(a, b);
}

#[test]
fn a_player_path_ignores_opponent_policies() {
    let m = random_game(2, 3, 2, 0, 4).unwrap();
    let u = random_multi_policy(&m, 4);
    let v = u
        .replace_coordinate(1, StationaryPolicy::deterministic(1, &m.players[1], &[1, 0, 1]))
        .unwrap();
    let mut c = RolloutConfig::new(1000, 3);
    c.record_trajectory = true;
    let own = |u: &MultiPolicy| {
        rollout(&m, u, &c)
            .unwrap()
            .trajectory
            .unwrap()
            .into_iter()
            .filter(|r| r.player == 0)
            .map(|r| (r.state, r.action))
            .collect::<Vec<_>>()
    };
    assert_eq!(own(&u), own(&v));
}

#[test]
fn longer_runs_are_closer() {
    let m = random_game(2, 2, 2, 1, 21).unwrap();
    let u = random_multi_policy(&m, 21);
    let mut wins = 0;
    for seed in 0..5 {
        let short = empirical_vs_analytic(&m, &u, &RolloutConfig::new(10_000, seed)).unwrap().0;
        let long = empirical_vs_analytic(&m, &u, &RolloutConfig::new(1_000_000, seed)).unwrap().0;
        wins += usize::from(long.max_abs_discrepancy < short.max_abs_discrepancy);
    }
    assert!(wins >= 4, "10^6 beat 10^4 on {wins}/5 seeds");
}

#[test]
fn burn_in_drops_early_steps() {
    let m = two_state();
    let u = MultiPolicy::uniform(&m);
    let mut c = RolloutConfig::new(100, 1);
    c.burn_in = 40;
    let r = rollout(&m, &u, &c).unwrap();
    assert_eq!(r.samples, 60);
    assert!((r.visitation[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
}
