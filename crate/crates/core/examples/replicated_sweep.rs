//! Seeded replications and a parameter sweep on the worker pool; the table
//! is identical for any worker count.

use linksim::channel::FadingParams;
use linksim::engine::{Engine, ExperimentPlan, Metric};
use linksim::numerics::db_to_linear;
use linksim::rate_adapt::{simulate_alg1, throughput_no_csit, FeedbackTiming, RateController};

fn main() -> linksim::Result<()> {
    let engine = Engine::new(0)?;
    let controller = RateController::new(2.0, 0.1, FeedbackTiming::SameBlock)?;
    let p = db_to_linear(12.0);

    let plan = ExperimentPlan::new(100, 8, 50_000);
    let est = engine.run_replicated(&plan, |seed, slots| {
        Ok(simulate_alg1(FadingParams::new(0.9, seed)?, p, controller, slots)?.throughput)
    })?;
    println!("8 replications: {:.4} ± {:.4}\n", est.mean, est.halfwidth_95);

    let sweep = ExperimentPlan::new(100, 1, 50_000)
        .with_axis("beta", vec![0.2, 0.9])
        .with_axis("snr_db", vec![4.0, 12.0, 20.0]);
    let table = engine.run_sweep(&sweep, |x, seed| {
        let p = db_to_linear(x[1]);
        let r = simulate_alg1(FadingParams::new(x[0], seed)?, p, controller, 50_000)?;
        Ok(vec![
            Metric::exact("no_csit", throughput_no_csit(p)?),
            Metric::estimate("alg1", r.throughput, r.ci_halfwidth),
        ])
    })?;
    table.write_csv(std::io::stdout())
}
