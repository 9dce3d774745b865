use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use ibrl::chain::{build_chain, mixing_time, stationary, stationary_closeness_scan};
use ibrl::config::{resolve_game, Experiment, ExperimentConfig};
use ibrl::dynamics::{monte_carlo, run, HorizonMode};
use ibrl::ic::ic_experiment;
use ibrl::reduction::{classify_with, clear_outcome_check, ic_margin_check, Classification, NbrMode};
use ibrl::repro::{run_named, EXPERIMENTS};
use ibrl::rules::{uniform_rules, PlayerRule, ResponseRule};
use ibrl::schedule::{estimate_fairness, Schedule};
use ibrl::zoo::{ZooSpec, ZOO_NAMES};
use ibrl::TieBreak;

#[derive(Parser)]
#[command(name = "ibrl", version, about = "Imperfect best-response dynamics on finite games")]
struct Cli {
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// State-space cap for enumeration and exact chains (sets IBRL_CAP).
    #[arg(long, global = true)]
    cap: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimates of an event, or a single trajectory without one.
    Simulate(ExperimentArgs),
    /// Exact Markov-chain analysis of logit (or any memoryless) dynamics.
    AnalyzeChain(ChainArgs),
    /// NBR elimination, classification, clear outcome and margin checks.
    Reduce(ReduceArgs),
    /// Incentive-compatibility experiment for one player.
    IcTest(IcArgs),
    /// Estimate the (R, ε)-fairness of a schedule.
    Fairness(FairnessArgs),
    /// Built-in games.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
    /// Run named acceptance experiments and write their artifacts.
    Repro(ReproArgs),
}

#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// JSON experiment file; its fields take precedence over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `zoo:name[:k=v]*` or a game file path.
    #[arg(long)]
    game: Option<String>,
    /// Schedule name or JSON descriptor.
    #[arg(long)]
    schedule: Option<String>,
    /// Rule name or JSON descriptor used by every player.
    #[arg(long)]
    rule: Option<String>,
    /// Per-player rule override, `i:descriptor`; repeatable.
    #[arg(long = "rule-for")]
    rule_for: Vec<String>,
    /// Comma-separated start profile or `uniform_random`.
    #[arg(long)]
    start: Option<String>,
    /// `ne`, `all`, `reduced` or a JSON event.
    #[arg(long)]
    event: Option<String>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated checkpoint steps.
    #[arg(long)]
    checkpoints: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the JSON summary here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long)]
    game: String,
    /// Schedule name or JSON descriptor.
    #[arg(long, default_value = "uniform_one")]
    schedule: String,
    /// Rule to analyze; defaults to logit over `--beta-grid`.
    #[arg(long)]
    rule: Option<String>,
    /// Comma-separated logit β values.
    #[arg(long = "beta-grid", default_value = "1")]
    beta_grid: String,
    /// Mixing-time accuracy.
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strict,
    Tiebreak,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    game: String,
    #[arg(long, value_enum, default_value = "strict")]
    mode: ModeArg,
    /// Also evaluate the margin condition at this δ.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    Finite,
    Limsup,
}

#[derive(Args)]
struct IcArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    player: Option<usize>,
    /// JSON list of deviation rules; default every constant strategy.
    #[arg(long)]
    deviations: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<HorizonArg>,
    /// Tail windows in limsup mode.
    #[arg(long, default_value_t = 10)]
    windows: usize,
}

#[derive(Args)]
struct FairnessArgs {
    /// Schedule name or JSON descriptor.
    #[arg(long)]
    schedule: String,
    /// Number of players, when the descriptor does not give it.
    #[arg(long)]
    players: Option<usize>,
    /// Window length R; defaults to the declared one.
    #[arg(long)]
    window: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    windows: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand)]
enum ZooCommand {
    List,
    /// Print (or write) the game file of `name[:k=v]*`.
    Emit {
        spec: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ReproArgs {
    /// Experiment name, or `all`.
    name: String,
    #[arg(long, default_value = "repro-out")]
    out: PathBuf,
}

enum Failure {
    Lib(ibrl::Error),
    Checks,
}

impl From<ibrl::Error> for Failure {
    fn from(e: ibrl::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Lib(ibrl::Error::Input(msg.into()))
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(cap) = cli.cap {
        std::env::set_var(ibrl::game::CAP_ENV, cap.to_string());
    }
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::AnalyzeChain(a) => analyze_chain(&a),
        Command::Reduce(a) => reduce(&a),
        Command::IcTest(a) => ic_test(&a),
        Command::Fairness(a) => fairness(&a),
        Command::Zoo { command } => zoo(&command),
        Command::Repro(a) => repro(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(3),
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

/// A JSON descriptor, or a bare word taken as a string.
fn descriptor(text: &str) -> CliResult<Value> {
    let t = text.trim();
    if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        Ok(serde_json::from_str(t)?)
    } else {
        Ok(Value::String(t.to_string()))
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|x| x.trim().parse().map_err(|_| invalid(format!("bad {what} entry {x:?}"))))
        .collect()
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Flags become a config object; a `--config` file's fields override them.
fn experiment_config(a: &ExperimentArgs) -> CliResult<(ExperimentConfig, Option<PathBuf>)> {
    let mut obj = Map::new();
    if let Some(g) = &a.game {
        obj.insert("game".into(), g.clone().into());
    }
    if let Some(s) = &a.schedule {
        obj.insert("schedule".into(), descriptor(s)?);
    }
    if let Some(r) = &a.rule {
        obj.insert("rule".into(), descriptor(r)?);
    }
    if let Some(s) = &a.start {
        let v = if s.trim() == "uniform_random" { Value::from("uniform_random") } else { json!(parse_list::<usize>(s, "start")?) };
        obj.insert("start".into(), v);
    }
    if let Some(e) = &a.event {
        obj.insert("event".into(), descriptor(e)?);
    }
    for (key, v) in [("runs", a.runs), ("horizon", a.horizon), ("seed", a.seed)] {
        if let Some(v) = v {
            obj.insert(key.into(), v.into());
        }
    }
    if let Some(c) = &a.checkpoints {
        obj.insert("checkpoints".into(), json!(parse_list::<u64>(c, "checkpoint")?));
    }
    let mut base = None;
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)?;
        // Parse the file on its own first so diagnostics carry its line numbers;
        // fields missing from the file may still come from flags.
        if let Err(e) = serde_json::from_str::<ExperimentConfig>(&text) {
            if !e.to_string().starts_with("missing field") {
                return Err(invalid(format!("{}: {e}", path.display())));
            }
        }
        let file: Value = serde_json::from_str(&text)?;
        let Value::Object(fields) = file else {
            return Err(invalid(format!("{}: expected a JSON object", path.display())));
        };
        obj.extend(fields);
        base = path.parent().map(Path::to_path_buf);
    }
    Ok((serde_json::from_value(Value::Object(obj))?, base))
}

fn resolve_experiment(a: &ExperimentArgs) -> CliResult<(ExperimentConfig, Experiment)> {
    let (cfg, base) = experiment_config(a)?;
    let mut exp = cfg.resolve(base.as_deref())?;
    for spec in &a.rule_for {
        let (i, d) = spec.split_once(':').ok_or_else(|| invalid(format!("--rule-for expects i:descriptor, got {spec:?}")))?;
        let i: usize = i.trim().parse().map_err(|_| invalid(format!("bad player index in {spec:?}")))?;
        exp.game.check_player(i)?;
        exp.run.rules[i] = PlayerRule::Memoryless(ResponseRule::from_value(descriptor(d)?, &exp.game, i)?);
    }
    Ok((cfg, exp))
}

fn output_paths(a: &ExperimentArgs, cfg: &ExperimentConfig) -> (Option<PathBuf>, Option<PathBuf>) {
    let out = cfg.output.as_ref();
    let csv = a.csv.clone().or_else(|| out.and_then(|o| o.csv.clone()).map(PathBuf::from));
    let json = a.json.clone().or_else(|| out.and_then(|o| o.json.clone()).map(PathBuf::from));
    (csv, json)
}

fn simulate(a: &ExperimentArgs) -> CliResult<()> {
    let (cfg, exp) = resolve_experiment(a)?;
    let (csv_path, json_path) = output_paths(a, &cfg);
    let Some(event) = exp.event.clone() else {
        let trajectory = run(&exp.game, &exp.run, &[])?;
        return emit(&trajectory, json_path.as_deref());
    };
    let report = monte_carlo(&exp.game, &exp.run, exp.runs, &[event])?;
    match &csv_path {
        Some(p) => report.write_csv(0, std::fs::File::create(p)?)?,
        None if json_path.is_none() => report.write_csv(0, std::io::stdout().lock())?,
        None => {}
    }
    if let Some(p) = json_path {
        emit(&report, Some(&p))?;
    }
    Ok(())
}

fn analyze_chain(a: &ChainArgs) -> CliResult<()> {
    let game = resolve_game(&a.game, None)?;
    let schedule = Schedule::from_value(descriptor(&a.schedule)?, game.n())?;
    let rules: Vec<(Value, Vec<PlayerRule>)> = match &a.rule {
        Some(r) => {
            let v = descriptor(r)?;
            let rules = (0..game.n()).map(|i| Ok(PlayerRule::Memoryless(ResponseRule::from_value(v.clone(), &game, i)?))).collect::<CliResult<Vec<_>>>()?;
            vec![(v, rules)]
        }
        None => parse_list::<f64>(&a.beta_grid, "beta")?
            .into_iter()
            .map(|beta| (json!({"kind": "logit", "beta": beta}), uniform_rules(&game, &ResponseRule::Logit { beta })))
            .collect(),
    };
    let mut entries = Vec::new();
    for (rule, players) in rules {
        let p = build_chain(&game, &players, &schedule)?;
        let pi = stationary(&p).map_err(|e| e.to_string());
        let mix = mixing_time(&p, a.epsilon).map_err(|e| e.to_string());
        entries.push(json!({
            "rule": rule,
            "states": p.len(),
            "stationary": pi.as_ref().ok().map(|d| d.probs().to_vec()),
            "stationary_error": pi.err(),
            "mixing_time": mix.as_ref().ok(),
            "mixing_error": mix.as_ref().err(),
        }));
    }
    let mut out = json!({ "game": a.game, "schedule": schedule, "chains": entries });
    if a.rule.is_none() && matches!(schedule, Schedule::UniformOne { .. }) {
        let reduced = classify_with(&game, &TieBreak::ascending(), NbrMode::Strict)?;
        if reduced.classification == Classification::ReducibleOnly {
            let betas = parse_list::<f64>(&a.beta_grid, "beta")?;
            out["closeness_scan"] = serde_json::to_value(stationary_closeness_scan(&game, reduced.reduced(), &betas)?)?;
        }
    }
    emit(&out, a.out.as_deref())
}

fn reduce(a: &ReduceArgs) -> CliResult<()> {
    let game = resolve_game(&a.game, None)?;
    let mode = match a.mode {
        ModeArg::Strict => NbrMode::Strict,
        ModeArg::Tiebreak => NbrMode::TieBreak,
    };
    let tb = TieBreak::ascending();
    let result = classify_with(&game, &tb, mode)?;
    let mut out = json!({
        "classification": result.classification,
        "ell_hat": result.ell_hat(),
        "sequence": result.sequence.steps,
        "reduced": result.reduced().allowed(),
        "equilibrium": result.equilibrium,
    });
    if result.classification == Classification::Solvable {
        out["clear_outcome"] = serde_json::to_value(clear_outcome_check(&game, &tb, mode)?)?;
        if let Some(delta) = a.delta {
            out["margin"] = serde_json::to_value(ic_margin_check(&game, delta, &tb, mode)?)?;
        }
    }
    emit(&out, a.out.as_deref())
}

fn ic_test(a: &IcArgs) -> CliResult<()> {
    let (cfg, exp) = resolve_experiment(&a.experiment)?;
    let (from_config, config_devs, config_mode) = match exp.ic.clone() {
        Some((p, d, m)) => (Some(p), d, Some(m)),
        None => (None, Vec::new(), None),
    };
    let player = a.player.or(from_config).ok_or_else(|| invalid("ic-test needs --player or an ic section"))?;
    exp.game.check_player(player)?;
    let deviations = match &a.deviations {
        Some(text) => {
            let list = match descriptor(text)? {
                Value::Array(items) => items,
                one => vec![one],
            };
            list.into_iter().map(|v| Ok(PlayerRule::Memoryless(ResponseRule::from_value(v, &exp.game, player)?))).collect::<CliResult<Vec<_>>>()?
        }
        None => config_devs,
    };
    let mode = match a.mode {
        Some(HorizonArg::Finite) => HorizonMode::Finite,
        Some(HorizonArg::Limsup) => HorizonMode::Limsup { windows: a.windows },
        None => config_mode.unwrap_or_default(),
    };
    let report = ic_experiment(&exp.game, &exp.run, player, &deviations, exp.run.horizon, exp.runs, mode)?;
    let (_, json_path) = output_paths(&a.experiment, &cfg);
    emit(&report, json_path.as_deref())
}

fn fairness(a: &FairnessArgs) -> CliResult<()> {
    let value = descriptor(&a.schedule)?;
    let n = a.players.or_else(|| value.get("n").and_then(Value::as_u64).map(|n| n as usize)).ok_or_else(|| invalid("give --players or an n in the descriptor"))?;
    let schedule = Schedule::from_value(value, n)?;
    let declared = schedule.declared_fairness();
    let r = a.window.or(declared.map(|d| d.r)).ok_or_else(|| invalid("no declared window; give --window"))?;
    let estimate = estimate_fairness(&schedule, r, a.windows, a.seed)?;
    emit(&json!({ "schedule": schedule, "declared": declared, "estimate": estimate }), None)
}

fn zoo(cmd: &ZooCommand) -> CliResult<()> {
    match cmd {
        ZooCommand::List => {
            for name in ZOO_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        ZooCommand::Emit { spec, out } => {
            let game = ZooSpec::parse(spec)?.build()?;
            let text = game.to_json() + "\n";
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
    }
}

fn repro(a: &ReproArgs) -> CliResult<()> {
    let names: Vec<&str> = if a.name == "all" { EXPERIMENTS.to_vec() } else { vec![a.name.as_str()] };
    let mut ok = true;
    for name in names {
        let outcome = run_named(name)?;
        outcome.write_artifacts(&a.out)?;
        for c in &outcome.checks {
            println!("{name}: {} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        println!("{name}: {} in {:.1}s", if outcome.passed() { "passed" } else { "FAILED" }, outcome.seconds);
        ok &= outcome.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}
