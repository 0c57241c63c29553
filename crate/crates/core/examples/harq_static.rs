//! Outage-constrained static HARQ powers: uniform and optimised policies,
//! quadrature against Monte Carlo.

use linksim::channel::FadingParams;
use linksim::harq::{
    average_power, optimize_static_powers, outage_probability, simulate_harq_static_with, stop_probabilities,
    uniform_power_for_outage, HarqConfig, PacketStart, StaticPowerPolicy, StaticPowerSearch,
};
use linksim::numerics::linear_to_db;

fn main() -> linksim::Result<()> {
    let params = FadingParams::new(0.9, 5)?;
    let harq = HarqConfig::new(1.0, 2, 1e-2)?;

    let uniform = StaticPowerPolicy::uniform(uniform_power_for_outage(params, &harq)?, 2)?;
    let optimised = optimize_static_powers(params, &harq, &StaticPowerSearch::default())?;

    for (name, policy) in [("uniform", &uniform), ("optimised", &optimised)] {
        let stops = stop_probabilities(params, &harq, policy)?;
        let sim = simulate_harq_static_with(params, &harq, policy, 500_000, PacketStart::Independent)?;
        println!(
            "{name:9}  powers_db {:?}",
            policy.powers().iter().map(|&p| (linear_to_db(p) * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
        println!(
            "           avg power {:.3} dB (sim {:.3} dB)  outage {:.5} (sim {:.5} ± {:.5})",
            linear_to_db(average_power(policy, &stops)),
            sim.avg_power_db,
            outage_probability(params, &harq, policy)?,
            sim.outage_prob,
            sim.outage_ci,
        );
        println!("           Pr(A_m) {stops:.5?}  sim {:.5?}", sim.stop_histogram);
    }
    Ok(())
}
