//! Optimised N-region rate quantizers, checked against a slot simulation.

use linksim::channel::FadingParams;
use linksim::numerics::db_to_linear;
use linksim::rate_adapt::{
    default_quantizer_grid, optimize_static_quantizer, simulate_static_quantizer, static_throughput,
    throughput_perfect_csit,
};

fn main() -> linksim::Result<()> {
    let p = db_to_linear(12.0);
    let grid = default_quantizer_grid();
    println!("P = 12 dB, perfect CSIT {:.4}", throughput_perfect_csit(p)?);
    for levels in 1..=3 {
        let q = optimize_static_quantizer(levels, p, &grid)?;
        let sim = simulate_static_quantizer(FadingParams::new(0.5, 3)?, &q, 200_000)?;
        println!(
            "N={levels}  thresholds {:?}\n     analytic {:.4}  simulated {:.4} ± {:.4}",
            q.thresholds().iter().map(|t| (t * 1e4).round() / 1e4).collect::<Vec<_>>(),
            static_throughput(&q),
            sim.throughput,
            sim.ci_halfwidth,
        );
    }
    Ok(())
}
