//! `ccsg`: validate, solve, verify, simulate and generate cost-coupled
//! constrained stochastic games.
//!
//! Exit codes: 0 success, 1 I/O, parse or input errors, 2 no convergence or
//! a failed check, 3 a player without a feasible response.

mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccsg_core::best_response::best_response;
use ccsg_core::equilibrium::{solve, verify_equilibrium, Init, SolveStatus, SolverConfig, SweepMode, Verdict};
use ccsg_core::ergodicity::{check_ergodicity_auto, DEFAULT_POLICY_CAP, DEFAULT_SAMPLES};
use ccsg_core::io::{game_to_string, load_game, load_policy, save_policy};
use ccsg_core::model::GameModel;
use ccsg_core::scenario::{power_control_game, random_game, PowerControlParams};
use ccsg_core::simulate::{empirical_vs_analytic, write_trajectory_csv, RolloutConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "ccsg", version, about = "Stationary constrained Nash equilibria of cost-coupled stochastic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file and the unichain property of every player.
    Validate {
        game: PathBuf,
        #[arg(long, default_value_t = DEFAULT_POLICY_CAP)]
        policy_cap: u128,
        /// Seed for sampled unichain checks on players above the cap.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Search for an equilibrium by damped best-response dynamics.
    Solve(SolveArgs),
    /// Certify a policy file as an epsilon-equilibrium.
    Verify {
        game: PathBuf,
        policy: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
    },
    /// Solve one player's best-response LP against a policy file.
    BestResponse {
        game: PathBuf,
        policy: PathBuf,
        #[arg(long)]
        player: usize,
    },
    /// Compare simulated time averages with the analytic long-run costs.
    Simulate {
        game: PathBuf,
        policy: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        /// Write `t,player,state,action,cost0..costB` lines here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Generate a game file.
    #[command(subcommand)]
    Generate(Generate),
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    Gs,
    Jacobi,
}

#[derive(Args)]
struct SolveArgs {
    game: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = Sweep::Gs)]
    sweep: Sweep,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-8)]
    feasibility_tol: f64,
    /// Write the result here and print a summary instead.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the equilibrium policy in policy-file format.
    #[arg(long)]
    policy_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Generate {
    /// Strictly positive transitions, uniform costs, midpoint bounds.
    Random {
        #[arg(long, default_value_t = 2)]
        players: usize,
        #[arg(long, default_value_t = 2)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        #[arg(long, default_value_t = 1)]
        constraints: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic uplink power control with channel and battery states.
    PowerControl {
        #[arg(long, default_value_t = 2)]
        players: usize,
        #[arg(long, default_value_t = 3)]
        channel_states: usize,
        /// Increasing transmit powers, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
        power_levels: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Per-player gains, `g11,g12,...;g21,...`; linear in channel quality by default.
        #[arg(long)]
        gains: Option<String>,
        #[arg(long, default_value_t = 2)]
        battery_states: usize,
        #[arg(long, default_value_t = 0.5)]
        recharge_prob: f64,
        #[arg(long, default_value_t = 0.5)]
        power_budget: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code; code 1 messages go to the error stream.
struct Failure(u8, String);

impl From<ccsg_core::Error> for Failure {
    fn from(e: ccsg_core::Error) -> Self {
        Failure(1, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(1, e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn seed_or_default(seed: Option<u64>, what: &str) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("warning: no --seed given for {what}; using seed 0");
        0
    })
}

fn load_checked(path: &Path) -> Result<GameModel, Failure> {
    let model = load_game(path).map_err(|e| Failure(1, format!("{}: {e}", path.display())))?;
    let report = model.validate();
    if !report.is_clean() {
        let lines: Vec<String> = report.violations.iter().map(|v| format!("  {v}")).collect();
        return Err(Failure(1, format!("{}: invalid game\n{}", path.display(), lines.join("\n"))));
    }
    Ok(model)
}

fn emit(value: &Value) -> io::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    fs::write(path, text)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_validate(game: &Path, cap: u128, seed: Option<u64>) -> Outcome {
    let model = load_game(game).map_err(|e| Failure(1, format!("{}: {e}", game.display())))?;
    let report = model.validate();
    let sampled = model.players.iter().any(|p| p.deterministic_policy_count() > cap);
    let seed = if sampled && report.is_clean() {
        seed_or_default(seed, "sampled unichain checks")
    } else {
        seed.unwrap_or(0)
    };
    let ergodicity: Vec<_> = if report.is_clean() {
        model
            .players
            .iter()
            .enumerate()
            .map(|(i, p)| check_ergodicity_auto(p, cap, DEFAULT_SAMPLES, seed.wrapping_add(i as u64)))
            .collect()
    } else {
        Vec::new()
    };
    let clean = report.is_clean() && ergodicity.iter().all(|r| r.passed());
    for v in &report.violations {
        eprintln!("{}: {v}", game.display());
    }
    let mut body = Map::new();
    body.insert("clean".into(), json!(clean));
    body.insert("validation".into(), serde_json::to_value(&report).expect("report serializes"));
    body.insert(
        "ergodicity".into(),
        Value::Array(ergodicity.iter().enumerate().map(|(i, r)| report::ergodicity(i, r)).collect()),
    );
    let config = json!({"game": path_str(game), "policy_cap": cap, "samples": DEFAULT_SAMPLES, "seed": seed});
    emit(&report::envelope("validate", config, body))?;
    Ok(if clean { 0 } else { 2 })
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    let model = load_checked(&a.game)?;
    let seed = seed_or_default(a.seed, "restart initializations");
    let config = SolverConfig {
        epsilon: a.epsilon,
        feasibility_tol: a.feasibility_tol,
        max_iters: a.max_iters,
        damping: a.damping,
        sweep_mode: match a.sweep {
            Sweep::Gs => SweepMode::GaussSeidel,
            Sweep::Jacobi => SweepMode::Jacobi,
        },
        init: Init::Uniform,
        restarts: a.restarts,
        seed,
    };
    let result = solve(&model, &config)?;
    let mut effective = serde_json::to_value(&config).expect("config serializes");
    effective["game"] = json!(path_str(&a.game));
    let doc = report::envelope("solve", effective, report::equilibrium(&model, &result));
    if let Some(p) = &a.policy_out {
        save_policy(&model, &result.multi_policy, p)?;
    }
    match &a.out {
        Some(out) => {
            write_json(out, &doc)?;
            println!(
                "{}: {:?}, max gap {:.3e}, {} iterations in run {}; wrote {}",
                model.name,
                result.status,
                result.max_gap,
                result.iterations,
                result.run,
                out.display()
            );
        }
        None => emit(&doc)?,
    }
    Ok(match result.status {
        SolveStatus::Converged => 0,
        SolveStatus::NoConvergence => 2,
        SolveStatus::PlayerInfeasible { .. } => 3,
    })
}

fn cmd_verify(game: &Path, policy: &Path, epsilon: f64) -> Outcome {
    let model = load_checked(game)?;
    let u = load_policy(&model, policy).map_err(|e| Failure(1, format!("{}: {e}", policy.display())))?;
    let rep = verify_equilibrium(&model, &u, epsilon)?;
    let config = json!({"game": path_str(game), "policy": path_str(policy), "epsilon": epsilon});
    let mut body = Map::new();
    body.insert("verification".into(), serde_json::to_value(&rep).expect("report serializes"));
    emit(&report::envelope("verify", config, body))?;
    if rep.verdict == Verdict::Fail {
        eprintln!("{:>6}  {:>12}  {:>8}  {:>12}", "player", "gap", "feasible", "min slack");
        for p in &rep.players {
            let slack = p.gap.slacks.iter().copied().fold(f64::INFINITY, f64::min);
            let gap = p.gap.gap.map_or("undefined".to_string(), |g| format!("{g:.3e}"));
            eprintln!("{:>6}  {:>12}  {:>8}  {:>12.3e}", p.gap.player, gap, p.gap.feasible, slack);
        }
        return Ok(2);
    }
    Ok(0)
}

fn cmd_best_response(game: &Path, policy: &Path, player: usize) -> Outcome {
    let model = load_checked(game)?;
    let u = load_policy(&model, policy).map_err(|e| Failure(1, format!("{}: {e}", policy.display())))?;
    let br = best_response(&model, player, &u)?;
    let config = json!({"game": path_str(game), "policy": path_str(policy), "player": player});
    emit(&report::envelope("best-response", config, report::best_response(&model, &br)))?;
    Ok(if br.is_optimal() { 0 } else { 3 })
}

fn cmd_simulate(
    game: &Path,
    policy: &Path,
    horizon: usize,
    seed: Option<u64>,
    burn_in: usize,
    trajectory: Option<&Path>,
) -> Outcome {
    let model = load_checked(game)?;
    let u = load_policy(&model, policy).map_err(|e| Failure(1, format!("{}: {e}", policy.display())))?;
    let config = RolloutConfig {
        horizon,
        seed: seed_or_default(seed, "simulation"),
        burn_in,
        record_trajectory: trajectory.is_some(),
    };
    let (rep, run) = empirical_vs_analytic(&model, &u, &config)?;
    if let (Some(path), Some(records)) = (trajectory, &run.trajectory) {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        write_trajectory_csv(&model, records, &mut f)?;
        f.flush()?;
    }
    let mut effective = serde_json::to_value(&config).expect("config serializes");
    effective["game"] = json!(path_str(game));
    effective["policy"] = json!(path_str(policy));
    effective["trajectory"] = json!(trajectory.map(path_str));
    let mut body = Map::new();
    body.insert("discrepancy".into(), serde_json::to_value(&rep).expect("report serializes"));
    body.insert("visitation".into(), json!(run.visitation));
    emit(&report::envelope("simulate", effective, body))?;
    Ok(if rep.within_three_se == Some(false) { 2 } else { 0 })
}

fn parse_gains(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Failure(1, format!("gains: {v:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn finish_generate(model: &GameModel, config: Value, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => {
            fs::write(p, game_to_string(model) + "\n")?;
            let summary = json!({"name": model.name, "players": model.num_players(), "tags": model.tags, "out": path_str(p)});
            let mut body = Map::new();
            body.insert("game".into(), summary);
            emit(&report::envelope("generate", config, body))?;
        }
        None => println!("{}", game_to_string(model)),
    }
    Ok(0)
}

fn cmd_generate(g: &Generate) -> Outcome {
    match g {
        Generate::Random { players, states, actions, constraints, seed, out } => {
            let seed = seed_or_default(*seed, "random game generation");
            let model = random_game(*players, *states, *actions, *constraints, seed)?;
            let config = json!({
                "kind": "random", "players": players, "states": states, "actions": actions,
                "constraints": constraints, "seed": seed,
            });
            finish_generate(&model, config, out.as_deref())
        }
        Generate::PowerControl {
            players,
            channel_states,
            power_levels,
            noise,
            gains,
            battery_states,
            recharge_prob,
            power_budget,
            out,
        } => {
            let gains = match gains {
                Some(g) => parse_gains(g)?,
                None => PowerControlParams::linear_gains(*players, *channel_states),
            };
            let params = PowerControlParams {
                n_players: *players,
                n_channel_states: *channel_states,
                power_levels: power_levels.clone(),
                noise_sigma: *noise,
                gains: gains.clone(),
                battery_states: *battery_states,
                recharge_prob: *recharge_prob,
                power_budget: *power_budget,
            };
            let model = power_control_game(&params)?;
            let config = json!({
                "kind": "power-control", "players": players, "channel_states": channel_states,
                "power_levels": power_levels, "noise": noise, "gains": gains,
                "battery_states": battery_states, "recharge_prob": recharge_prob, "power_budget": power_budget,
            });
            finish_generate(&model, config, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Validate { game, policy_cap, seed } => cmd_validate(game, *policy_cap, *seed),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify { game, policy, epsilon } => cmd_verify(game, policy, *epsilon),
        Command::BestResponse { game, policy, player } => cmd_best_response(game, policy, *player),
        Command::Simulate { game, policy, horizon, seed, burn_in, trajectory } => {
            cmd_simulate(game, policy, *horizon, *seed, *burn_in, trajectory.as_deref())
        }
        Command::Generate(g) => cmd_generate(g),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
