//! Figure tables: throughput vs SNR, relative gain of the rate controller,
//! and outage-limited HARQ power.
//!
//! Each function runs one sweep on the given [`Engine`]; per-point seeds
//! come from [`point_seed`](crate::engine::point_seed) so rows are
//! independent of scheduling.

use crate::channel::FadingParams;
use crate::config::RunConfig;
use crate::engine::{Engine, ExperimentPlan, Metric, SweepTable};
use crate::error::Result;
use crate::harq::{
    average_power, optimize_static_powers, simulate_harq_static_with, stop_probabilities, tune_alg2,
    uniform_power_for_outage, HarqConfig, StaticPowerPolicy,
};
use crate::numerics::{db_to_linear, linear_to_db};
use crate::rate_adapt::{
    optimize_static_quantizer, static_throughput, throughput_no_csit, throughput_perfect_csit, tune_alg1,
};

/// Optimised two-region static quantizer throughput at linear power `p`.
pub fn static_n2(cfg: &RunConfig, p: f64) -> Result<f64> {
    let q = optimize_static_quantizer(2, p, &cfg.quantizer.grid.to_grid()?)?;
    Ok(static_throughput(&q))
}

/// Columns `perfect_csit`, `no_csit`, `static_n2`, `alg1_tuned` (+CI),
/// `alg1_rate`, `alg1_delta` per `snr_db`.
pub fn fig1(cfg: &RunConfig, seed: u64, engine: &Engine) -> Result<SweepTable> {
    let plan = ExperimentPlan::new(seed, 1, cfg.run.slots).with_axis("snr_db", cfg.figures.fig1_snr_db.clone());
    let tuning = cfg.alg1_tuning()?;
    engine.run_sweep(&plan, |x, point_seed| {
        let p = db_to_linear(x[0]);
        let (controller, alg1) = tune_alg1(FadingParams::new(cfg.beta, point_seed)?, p, &tuning)?;
        Ok(vec![
            Metric::exact("perfect_csit", throughput_perfect_csit(p)?),
            Metric::exact("no_csit", throughput_no_csit(p)?),
            Metric::exact("static_n2", static_n2(cfg, p)?),
            Metric::estimate("alg1_tuned", alg1.throughput, alg1.ci_halfwidth),
            Metric::exact("alg1_rate", controller.rate()),
            Metric::exact("alg1_delta", controller.delta()),
        ])
    })
}

/// `Δ% = 100·(η_alg1 − η_static)/η_static` per (`beta`, `snr_db`).
pub fn fig2(cfg: &RunConfig, seed: u64, engine: &Engine) -> Result<SweepTable> {
    let plan = ExperimentPlan::new(seed, 1, cfg.run.slots)
        .with_axis("beta", cfg.figures.fig2_beta.clone())
        .with_axis("snr_db", cfg.figures.fig2_snr_db.clone());
    let tuning = cfg.alg1_tuning()?;
    engine.run_sweep(&plan, |x, point_seed| {
        let p = db_to_linear(x[1]);
        let base = static_n2(cfg, p)?;
        let (_, alg1) = tune_alg1(FadingParams::new(x[0], point_seed)?, p, &tuning)?;
        Ok(vec![
            Metric::exact("static_n2", base),
            Metric::estimate("alg1_tuned", alg1.throughput, alg1.ci_halfwidth),
            Metric::estimate(
                "delta_pct",
                100.0 * (alg1.throughput - base) / base,
                100.0 * alg1.ci_halfwidth / base,
            ),
        ])
    })
}

/// Average power (dB) of uniform, optimised static and reinforcement
/// HARQ per `epsilon`, each with its validated outage.
pub fn fig3(cfg: &RunConfig, seed: u64, engine: &Engine) -> Result<SweepTable> {
    let plan = ExperimentPlan::new(seed, 1, cfg.run.packets).with_axis("epsilon", cfg.figures.fig3_epsilon.clone());
    let tuning = cfg.alg2_tuning()?;
    let search = cfg.static_power_search();
    let m = cfg.harq.max_rounds;
    engine.run_sweep(&plan, |x, point_seed| {
        let harq = HarqConfig::new(cfg.harq.rate, m, x[0])?;
        let params = FadingParams::new(cfg.beta, point_seed)?;
        let packets = cfg.run.packets;
        let start = cfg.harq.packet_start;

        let uniform = uniform_power_for_outage(params, &harq)?;
        let uniform_policy = StaticPowerPolicy::uniform(uniform, m)?;
        let uniform_sim = simulate_harq_static_with(params, &harq, &uniform_policy, packets, start)?;

        let policy = optimize_static_powers(params, &harq, &search)?;
        let static_avg = average_power(&policy, &stop_probabilities(params, &harq, &policy)?);
        let static_sim = simulate_harq_static_with(params, &harq, &policy, packets, start)?;

        let alg2 = tune_alg2(params, &harq, &tuning)?;
        let v = &alg2.validation;
        let uniform_db = linear_to_db(uniform);
        let static_db = linear_to_db(static_avg);
        Ok(vec![
            Metric::exact("uniform_db", uniform_db),
            Metric::estimate("uniform_outage", uniform_sim.outage_prob, uniform_sim.outage_ci),
            Metric::exact("static_opt_db", static_db),
            Metric::estimate("static_opt_sim_db", static_sim.avg_power_db, static_sim.avg_power_ci_db()),
            Metric::estimate("static_opt_outage", static_sim.outage_prob, static_sim.outage_ci),
            Metric::estimate("alg2_db", v.avg_power_db, v.avg_power_ci_db()),
            Metric::estimate("alg2_outage", v.outage_prob, v.outage_ci),
            Metric::exact("saving_vs_uniform_db", uniform_db - v.avg_power_db),
            Metric::exact("saving_vs_static_db", static_db - v.avg_power_db),
        ])
    })
}
