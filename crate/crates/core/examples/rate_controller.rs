//! 1-bit reinforcement rate control: a slot trace, a fixed controller and a
//! small (R_init, δ) search.

use linksim::channel::FadingParams;
use linksim::numerics::{db_to_linear, SearchGrid};
use linksim::rate_adapt::{simulate_alg1, tune_alg1, Alg1Tuning, FeedbackTiming, RateAdaptSession, RateController};

fn main() -> linksim::Result<()> {
    let p = db_to_linear(12.0);
    let params = FadingParams::new(0.9, 42)?;
    let controller = RateController::new(2.0, 0.1, FeedbackTiming::SameBlock)?;

    println!("slot  gain    rate    decoded");
    for (t, s) in RateAdaptSession::new(params, p, controller).take(10).enumerate() {
        println!("{t:4}  {:.3}  {:.3}  {}", s.gain, s.rate, s.decoded);
    }

    let fixed = simulate_alg1(params, p, controller, 200_000)?;
    println!("\nR=2, δ=0.1: throughput {:.4} ± {:.4}", fixed.throughput, fixed.ci_halfwidth);

    let tuning = Alg1Tuning {
        rate_grid: SearchGrid::new(0.5, 4.0, 8)?.with_refinement(1),
        delta_grid: SearchGrid::new(0.02, 0.4, 6)?.with_refinement(1),
        search_slots: 20_000,
        final_slots: 200_000,
        ..Alg1Tuning::default()
    };
    let (best, result) = tune_alg1(params, p, &tuning)?;
    println!(
        "tuned R={:.3}, δ={:.3}: throughput {:.4} ± {:.4}",
        best.rate(),
        best.delta(),
        result.throughput,
        result.ci_halfwidth
    );
    Ok(())
}
