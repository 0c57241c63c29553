//! Command-line front-end.
//!
//! Exit codes: 0 success, 1 internal/numerical failure, 2 usage or config
//! error, 3 infeasible constraint, 4 sweep finished with failed points.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::channel::FadingParams;
use crate::config::{Action, RunConfig, Scheme};
use crate::engine::{Engine, ExperimentPlan, SweepTable};
use crate::error::{Error, Result};
use crate::harq::{
    optimize_static_powers, outage_probability, simulate_alg2, simulate_harq_static_with, stop_probabilities,
    tune_alg2, uniform_power_for_outage, HarqSimResult, PowerController, StaticPowerPolicy,
};
use crate::numerics::{db_to_linear, linear_to_db};
use crate::rate_adapt::{
    optimize_static_quantizer, simulate_alg1, simulate_static_quantizer, static_throughput, throughput_no_csit,
    throughput_perfect_csit, tune_alg1, QuantizerConfig, RateController,
};

pub const SEED_ENV: &str = "LINKSIM_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "linksim", version, about = "Reinforcement link adaptation over correlated Rayleigh fading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config with flat dotted keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; falls back to run.seed, then $LINKSIM_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Packets per HARQ evaluation/validation run.
    #[arg(long, global = true)]
    pub packets: Option<usize>,
    /// Slots per rate-adaptation evaluation/final run.
    #[arg(long, global = true)]
    pub slots: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Evaluate the configured scheme (run.action defaults to evaluate).
    Simulate,
    /// Tune the configured scheme (run.action defaults to tune).
    Optimize,
    /// Throughput vs SNR.
    ReproduceFig1,
    /// Relative gain of the rate controller over the static quantizer.
    ReproduceFig2,
    /// Outage-limited average power of the HARQ schemes.
    ReproduceFig3,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Optimize => "optimize",
            Command::ReproduceFig1 => "reproduce-fig1",
            Command::ReproduceFig2 => "reproduce-fig2",
            Command::ReproduceFig3 => "reproduce-fig3",
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_infeasible() {
        return 3;
    }
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } => 2,
        Error::Replication { source, .. } => exit_code(source),
        _ => 1,
    }
}

/// Config with command-line overrides applied, and the resolved seed.
pub fn resolve(common: &CommonArgs, env_seed: Option<&str>) -> Result<(RunConfig, u64)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    let seed = match (common.seed, cfg.run.seed, env_seed) {
        (Some(s), _, _) | (None, Some(s), _) => s,
        (None, None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={text:?} is not an unsigned integer")))?,
        (None, None, None) => DEFAULT_SEED,
    };
    cfg.run.seed = Some(seed);
    if let Some(w) = common.workers {
        cfg.run.workers = w;
    }
    if let Some(p) = common.packets {
        if p == 0 {
            return Err(Error::Config("--packets must be at least 1".into()));
        }
        cfg.run.packets = p;
    }
    if let Some(s) = common.slots {
        if s == 0 {
            return Err(Error::Config("--slots must be at least 1".into()));
        }
        cfg.run.slots = s;
    }
    if let Some(o) = &common.out {
        cfg.run.out = Some(o.display().to_string());
    }
    Ok((cfg, seed))
}

/// Echoed inputs: every setting that can change results.
pub fn inputs_json(cfg: &RunConfig) -> Value {
    let mut v = cfg.to_json();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("run.workers");
        obj.remove("run.out");
    }
    v
}

pub fn config_hash(inputs: &Value) -> String {
    hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
}

/// Parse `args` (including the program name) and run. Output goes to
/// `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "{text}") };
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match execute(&cli, env_seed.as_deref(), stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, env_seed: Option<&str>, stdout: &mut dyn Write) -> Result<i32> {
    let (cfg, seed) = resolve(&cli.common, env_seed)?;
    let engine = Engine::new(cfg.run.workers)?;
    let started = Instant::now();
    match cli.command {
        Command::Simulate | Command::Optimize => {
            let scheme = cfg
                .run
                .scheme
                .ok_or_else(|| Error::Config(format!("run.scheme must name one of {}", scheme_list())))?;
            let default_action = match cli.command {
                Command::Optimize => Action::Tune,
                _ => Action::Evaluate,
            };
            let action = cfg.run.action.unwrap_or(default_action);
            let results = engine.install(|| run_scheme(&cfg, scheme, action, seed, &engine))?;
            let doc = json!({
                "command": cli.command.name(),
                "scheme": scheme.name(),
                "action": action.name(),
                "inputs": inputs_json(&cfg),
                "results": results,
                "seeds": { "base": seed },
                "version": env!("CARGO_PKG_VERSION"),
                "wall_time_s": started.elapsed().as_secs_f64(),
            });
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            stdout.write_all(text.as_bytes())?;
            if let Some(dir) = &cfg.run.out {
                let dir = Path::new(dir);
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(format!("{}-{}.json", scheme.name(), action.name())), &text)?;
            }
            Ok(0)
        }
        Command::ReproduceFig1 | Command::ReproduceFig2 | Command::ReproduceFig3 => {
            let (stem, table) = match cli.command {
                Command::ReproduceFig1 => ("fig1", crate::figures::fig1(&cfg, seed, &engine)?),
                Command::ReproduceFig2 => ("fig2", crate::figures::fig2(&cfg, seed, &engine)?),
                _ => ("fig3", crate::figures::fig3(&cfg, seed, &engine)?),
            };
            let dir = PathBuf::from(cfg.run.out.as_deref().unwrap_or("."));
            write_figure(&dir, stem, &cfg, seed, &table, started.elapsed().as_secs_f64())?;
            writeln!(
                stdout,
                "wrote {} ({} rows, {} failed)",
                dir.join(format!("{stem}.csv")).display(),
                table.rows.len(),
                table.failures()
            )?;
            Ok(if table.failures() > 0 { 4 } else { 0 })
        }
    }
}

fn scheme_list() -> String {
    Scheme::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
}

/// `<stem>.csv` plus the `<stem>.json` metadata sidecar.
pub fn write_figure(dir: &Path, stem: &str, cfg: &RunConfig, seed: u64, table: &SweepTable, wall_time_s: f64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
    let inputs = inputs_json(cfg);
    let failures: Vec<Value> = table
        .rows
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| json!({ "coords": r.coords, "error": e })))
        .collect();
    let meta = json!({
        "figure": stem,
        "csv": format!("{stem}.csv"),
        "config_hash": config_hash(&inputs),
        "inputs": inputs,
        "seeds": {
            "base": seed,
            "points": table.rows.iter().map(|r| r.seed).collect::<Vec<_>>(),
        },
        "rows": table.rows.len(),
        "failures": failures,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": wall_time_s,
    });
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn harq_json(r: &HarqSimResult) -> Value {
    json!({
        "avg_power_db": r.avg_power_db,
        "avg_power": r.avg_power,
        "avg_power_ci": r.avg_power_ci,
        "avg_power_ci_db": r.avg_power_ci_db(),
        "per_packet_power": r.per_packet_power,
        "outage_prob": r.outage_prob,
        "outage_ci": r.outage_ci,
        "outage_interval": [r.outage_interval.0, r.outage_interval.1],
        "packets": r.packets,
        "slots": r.slots,
        "stop_histogram": r.stop_histogram,
    })
}

fn db_list(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(linear_to_db).collect()
}

fn controller_json(c: &PowerController) -> Value {
    json!({ "initial_power_db": linear_to_db(c.power()), "d": c.d(), "d_up": c.d_up() })
}

/// Closed-form probabilities for `M ≤ 2`; omitted for Monte Carlo cases.
fn analytic_json(params: FadingParams, cfg: &RunConfig, policy: &StaticPowerPolicy) -> Result<Value> {
    if cfg.harq.max_rounds > 2 {
        return Ok(Value::Null);
    }
    let harq = cfg.harq_config()?;
    let stops = stop_probabilities(params, &harq, policy)?;
    Ok(json!({
        "outage_prob": outage_probability(params, &harq, policy)?,
        "stop_probabilities": stops,
        "avg_power_db": linear_to_db(crate::harq::average_power(policy, &stops)),
    }))
}

fn run_scheme(cfg: &RunConfig, scheme: Scheme, action: Action, seed: u64, engine: &Engine) -> Result<Value> {
    let params = FadingParams::new(cfg.beta, seed)?;
    let p = cfg.link_power();
    let packets = cfg.run.packets;
    let start = cfg.harq.packet_start;
    match (scheme, action) {
        (Scheme::StaticQuantizer, _) => {
            let q = match action {
                Action::Tune => optimize_static_quantizer(cfg.quantizer.levels, p, &cfg.quantizer.grid.to_grid()?)?,
                Action::Evaluate => {
                    let t = cfg.quantizer.thresholds.clone().ok_or_else(|| {
                        Error::Config("quantizer.thresholds is required to evaluate a static quantizer".into())
                    })?;
                    QuantizerConfig::new(t, p)?
                }
            };
            let sim = simulate_static_quantizer(params, &q, cfg.run.slots)?;
            Ok(json!({
                "thresholds": q.thresholds(),
                "rates": q.rates(),
                "throughput": static_throughput(&q),
                "throughput_sim": sim.throughput,
                "throughput_sim_ci": sim.ci_halfwidth,
                "slots": sim.slots,
                "no_csit": throughput_no_csit(p)?,
                "perfect_csit": throughput_perfect_csit(p)?,
            }))
        }
        (Scheme::Alg1, Action::Evaluate) => {
            let controller = RateController::with_floor(
                cfg.alg1.initial_rate,
                cfg.alg1.delta,
                cfg.alg1.timing,
                cfg.alg1.rate_floor,
            )?;
            let plan = ExperimentPlan::new(seed, cfg.run.replications, cfg.run.slots);
            let est = engine.run_replicated(&plan, |s, slots| {
                Ok(simulate_alg1(params.with_seed(s), p, controller, slots)?.throughput)
            })?;
            Ok(json!({
                "throughput": est.mean,
                "throughput_ci": est.halfwidth_95,
                "replications": est.n,
                "slots": cfg.run.slots,
                "replication_seeds": (0..cfg.run.replications).map(|i| seed.wrapping_add(i as u64)).collect::<Vec<_>>(),
                "no_csit": throughput_no_csit(p)?,
                "perfect_csit": throughput_perfect_csit(p)?,
            }))
        }
        (Scheme::Alg1, Action::Tune) => {
            let (c, r) = tune_alg1(params, p, &cfg.alg1_tuning()?)?;
            Ok(json!({
                "initial_rate": c.rate(),
                "delta": c.delta(),
                "timing": cfg.alg1.timing,
                "throughput": r.throughput,
                "throughput_ci": r.ci_halfwidth,
                "slots": r.slots,
                "no_csit": throughput_no_csit(p)?,
                "perfect_csit": throughput_perfect_csit(p)?,
            }))
        }
        (Scheme::HarqStatic, _) => {
            let harq = cfg.harq_config()?;
            let policy = match action {
                Action::Tune => optimize_static_powers(params, &harq, &cfg.static_power_search())?,
                Action::Evaluate => StaticPowerPolicy::new(cfg.harq_powers().ok_or_else(|| {
                    Error::Config("harq.powers_db is required to evaluate a static policy".into())
                })?)?,
            };
            let sim = simulate_harq_static_with(params, &harq, &policy, packets, start)?;
            Ok(json!({
                "powers_db": db_list(policy.powers()),
                "simulation": harq_json(&sim),
                "analytic": analytic_json(params, cfg, &policy)?,
            }))
        }
        (Scheme::HarqUniform, _) => {
            let harq = cfg.harq_config()?;
            let power = match (action, cfg.harq_powers()) {
                (Action::Evaluate, Some(p)) => p[0],
                _ => uniform_power_for_outage(params, &harq)?,
            };
            let policy = StaticPowerPolicy::uniform(power, harq.max_rounds())?;
            let sim = simulate_harq_static_with(params, &harq, &policy, packets, start)?;
            Ok(json!({
                "power_db": linear_to_db(power),
                "simulation": harq_json(&sim),
                "analytic": analytic_json(params, cfg, &policy)?,
            }))
        }
        (Scheme::Alg2, Action::Evaluate) => {
            let harq = cfg.harq_config()?;
            let missing = |k: &str| Error::Config(format!("{k} is required to evaluate the power controller"));
            let d = cfg.alg2.d.clone().ok_or_else(|| missing("alg2.d"))?;
            let d_up = cfg.alg2.d_up.clone().ok_or_else(|| missing("alg2.d_up"))?;
            let p0 = match cfg.alg2.initial_power_db {
                Some(db) => db_to_linear(db),
                None => uniform_power_for_outage(params, &harq)?,
            };
            let c = PowerController::with_bounds(p0, d, d_up, cfg.harq.power_floor, cfg.harq.power_cap)?;
            let sim = simulate_alg2(params, &harq, &c, packets)?;
            Ok(json!({ "controller": controller_json(&c), "simulation": harq_json(&sim) }))
        }
        (Scheme::Alg2, Action::Tune) => {
            let harq = cfg.harq_config()?;
            let out = tune_alg2(params, &harq, &cfg.alg2_tuning()?)?;
            Ok(json!({
                "controller": controller_json(&out.controller),
                "simulation": harq_json(&out.validation),
                "reference_power_db": linear_to_db(out.reference_power),
                "rejected_candidates": out.rejected,
            }))
        }
    }
}
