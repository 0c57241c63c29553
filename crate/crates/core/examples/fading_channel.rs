//! Gauss-Markov block fading: sample moments against the model.
//!
//! `cargo run --example fading_channel -- 0.9`

use linksim::channel::{gain_cdf, joint_gain_pdf, marginal_gain_pdf, FadingParams, GaussMarkovChannel};
use linksim::numerics::quadrature_1d;

fn main() -> linksim::Result<()> {
    let beta: f64 = std::env::args().nth(1).map_or(Ok(0.9), |s| s.parse()).expect("beta must be a number");
    let n = 200_000;
    let mut ch = GaussMarkovChannel::new(FadingParams::new(beta, 7)?);
    let gains: Vec<f64> = (0..n).map(|_| ch.next_gain()).collect();

    let mean = gains.iter().sum::<f64>() / n as f64;
    let var = gains.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n as f64;
    let lag1 = gains.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / ((n - 1) as f64 * var);
    println!("beta = {beta}");
    println!("mean gain      {mean:.4}  (model 1)");
    println!("variance       {var:.4}  (model 1)");
    println!("lag-1 autocorr {lag1:.4}  (model {:.4})", beta * beta);

    println!("\n   x   empirical cdf   1 - e^-x   pdf");
    for x in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let emp = gains.iter().filter(|&&g| g <= x).count() as f64 / n as f64;
        println!("{x:4.1}   {emp:.4}          {:.4}     {:.4}", gain_cdf(x)?, marginal_gain_pdf(x)?);
    }

    if beta < 1.0 {
        // integrating out y must give back the marginal
        let x = 0.7;
        let marginal = quadrature_1d(|y| joint_gain_pdf(x, y, beta).unwrap_or(0.0), 0.0, f64::INFINITY, 1e-10)?;
        println!("\n∫ f(0.7, y) dy = {marginal:.10}, e^-0.7 = {:.10}", (-x).exp());
    }
    Ok(())
}
