//! Temporally-correlated Rayleigh block fading.
//!
//! The complex coefficient follows a first-order Gauss–Markov recursion
//!
//! ```text
//! h(t+1) = β·h(t) + sqrt(1 - β²)·ε,   ε ~ CN(0, 1)
//! ```
//!
//! with one step per codeword (or retransmission) slot. `h(0)` is drawn from
//! the stationary law CN(0, 1), so every slot has gain `g = |h|² ~ Exp(1)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bessel_i0_scaled;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingParams {
    beta: f64,
    seed: u64,
}

impl FadingParams {
    pub fn new(beta: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid("beta", beta, "correlation factor must lie in [0, 1]"));
        }
        Ok(FadingParams { beta, seed })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(self, seed: u64) -> Self {
        FadingParams { seed, ..self }
    }
}

/// Fading coefficient at slot `t`. The gain is always derived from `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    h: Complex64,
    t: u64,
}

impl ChannelState {
    pub fn h(&self) -> Complex64 {
        self.h
    }

    /// Channel gain `g = |h|²`.
    pub fn gain(&self) -> f64 {
        self.h.norm_sqr()
    }

    pub fn slot(&self) -> u64 {
        self.t
    }
}

/// A seeded Gauss–Markov fading generator. One per simulation stream.
#[derive(Debug, Clone)]
pub struct GaussMarkovChannel {
    beta: f64,
    innovation_scale: f64,
    rng: ChaCha8Rng,
    state: ChannelState,
}

impl GaussMarkovChannel {
    /// Draws `h(0) ~ CN(0, 1)`.
    pub fn new(params: FadingParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let h = complex_gaussian(&mut rng);
        GaussMarkovChannel {
            beta: params.beta,
            innovation_scale: (1.0 - params.beta * params.beta).max(0.0).sqrt(),
            rng,
            state: ChannelState { h, t: 0 },
        }
    }

    pub fn state(&self) -> ChannelState {
        self.state
    }

    pub fn gain(&self) -> f64 {
        self.state.gain()
    }

    /// Advance one block.
    pub fn step(&mut self) -> ChannelState {
        let eps = complex_gaussian(&mut self.rng);
        self.state = ChannelState {
            h: self.state.h * self.beta + eps * self.innovation_scale,
            t: self.state.t + 1,
        };
        self.state
    }

    /// Replace `h` by a fresh stationary draw, independent of the past.
    /// The slot counter keeps running.
    pub fn restart(&mut self) {
        self.state.h = complex_gaussian(&mut self.rng);
    }

    /// Current gain, then advance. Convenient for slot loops.
    pub fn next_gain(&mut self) -> f64 {
        let g = self.gain();
        self.step();
        g
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn check_gain(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, x, "channel gain must be non-negative"))
    }
}

/// Stationary gain density `e^{-x}`.
pub fn marginal_gain_pdf(x: f64) -> Result<f64> {
    check_gain("x", x)?;
    Ok((-x).exp())
}

/// `1 - e^{-x}`.
pub fn gain_cdf(x: f64) -> Result<f64> {
    check_gain("x", x)?;
    Ok(-(-x).exp_m1())
}

/// Joint density of two consecutive gains,
/// `1/(1-β²) · exp(-(x+y)/(1-β²)) · I₀(2β√(xy)/(1-β²))`.
///
/// Evaluated in log space with the scaled Bessel function so large arguments
/// do not overflow.
pub fn joint_gain_pdf(x: f64, y: f64, beta: f64) -> Result<f64> {
    log_joint_gain_pdf(x, y, beta).map(f64::exp)
}

pub fn log_joint_gain_pdf(x: f64, y: f64, beta: f64) -> Result<f64> {
    check_gain("x", x)?;
    check_gain("y", y)?;
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid("beta", beta, "correlation factor must lie in [0, 1]"));
    }
    if beta == 1.0 {
        return Err(Error::DegenerateDensity { beta });
    }
    let s = 1.0 - beta * beta;
    let z = 2.0 * beta * (x * y).sqrt() / s;
    Ok(-s.ln() - (x + y) / s + z + bessel_i0_scaled(z).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{quadrature_1d, quadrature_2d};

    fn lag1_corr(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        cov / var
    }

    fn trace(beta: f64, seed: u64, n: usize) -> Vec<ChannelState> {
        let mut ch = GaussMarkovChannel::new(FadingParams::new(beta, seed).unwrap());
        (0..n).map(|_| {
            let s = ch.state();
            ch.step();
            s
        })
        .collect()
    }

    #[test]
    fn beta_out_of_range_rejected() {
        assert!(FadingParams::new(1.3, 0).is_err());
        assert!(FadingParams::new(-0.1, 0).is_err());
        assert!(FadingParams::new(f64::NAN, 0).is_err());
        assert!(FadingParams::new(1.0, 0).is_ok());
    }

    #[test]
    fn same_seed_same_trajectory() {
        assert_eq!(trace(0.9, 1, 1000), trace(0.9, 1, 1000));
        assert_ne!(trace(0.9, 1, 10), trace(0.9, 2, 10));
    }

    #[test]
    fn initial_gain_has_unit_mean_across_seeds() {
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|s| GaussMarkovChannel::new(FadingParams::new(0.9, s).unwrap()).gain())
            .sum::<f64>()
            / n as f64;
        // std of the mean is 1/sqrt(n)
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn fully_correlated_channel_is_frozen() {
        let t = trace(1.0, 5, 100);
        assert!(t.iter().all(|s| s.h() == t[0].h()));
        assert_eq!(t[99].slot(), 99);
    }

    #[test]
    fn lag_one_autocorrelation_tracks_beta() {
        for &beta in &[0.0, 0.2, 0.5, 0.9] {
            let t = trace(beta, 11, 1_000_000);
            let re: Vec<f64> = t.iter().map(|s| s.h().re).collect();
            let im: Vec<f64> = t.iter().map(|s| s.h().im).collect();
            for (part, xs) in [("re", re), ("im", im)] {
                let r = lag1_corr(&xs);
                assert!((r - beta).abs() < 0.01, "beta={beta} {part}: {r}");
            }
        }
    }

    #[test]
    fn gain_is_unit_exponential_ks() {
        for &beta in &[0.0, 0.5, 0.9] {
            let mut g: Vec<f64> = trace(beta, 3, 1_000_000).iter().map(ChannelState::gain).collect();
            g.sort_by(f64::total_cmp);
            let n = g.len() as f64;
            let ks = g
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = gain_cdf(x).unwrap();
                    (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "beta={beta}: KS {ks}");
        }
    }

    #[test]
    fn marginal_and_cdf_values() {
        assert_eq!(marginal_gain_pdf(0.0).unwrap(), 1.0);
        assert!((marginal_gain_pdf(1.0).unwrap() - 0.367_879).abs() < 1e-6);
        assert!(marginal_gain_pdf(-1.0).is_err());
        assert_eq!(gain_cdf(0.0).unwrap(), 0.0);
        assert_eq!(gain_cdf(f64::INFINITY).unwrap(), 1.0);
        assert!((gain_cdf(std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-15);
        assert!(gain_cdf(-0.5).is_err());
        let total = quadrature_1d(|x| marginal_gain_pdf(x).unwrap(), 0.0, f64::INFINITY, 1e-10).unwrap();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn joint_pdf_at_zero_beta_factorises() {
        for &x in &[0.0, 0.1, 0.7, 2.0, 9.5] {
            for &y in &[0.0, 0.3, 1.0, 4.4] {
                let joint = joint_gain_pdf(x, y, 0.0).unwrap();
                let prod = marginal_gain_pdf(x).unwrap() * marginal_gain_pdf(y).unwrap();
                assert!((joint - prod).abs() <= 4.0 * f64::EPSILON * prod, "{x},{y}");
            }
        }
    }

    #[test]
    fn joint_pdf_rejects_bad_input() {
        assert!(matches!(
            joint_gain_pdf(1.0, 1.0, 1.0),
            Err(Error::DegenerateDensity { .. })
        ));
        assert!(joint_gain_pdf(-1.0, 1.0, 0.5).is_err());
        assert!(joint_gain_pdf(1.0, -1.0, 0.5).is_err());
        assert!(joint_gain_pdf(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn joint_pdf_survives_large_bessel_arguments() {
        // z = 2β·sqrt(xy)/(1-β²) ≈ 4e4 here
        let v = joint_gain_pdf(20.0, 20.0, 0.999).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn joint_pdf_normalises_and_marginalises() {
        let beta = 0.9;
        let total = quadrature_2d(
            |x, y| joint_gain_pdf(x, y, beta).unwrap(),
            0.0,
            f64::INFINITY,
            |_| 0.0,
            |_| f64::INFINITY,
            1e-9,
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        for &x in &[0.05, 0.5, 1.0, 3.0] {
            let m = quadrature_1d(|y| joint_gain_pdf(x, y, beta).unwrap(), 0.0, f64::INFINITY, 1e-10)
                .unwrap();
            assert!((m - (-x).exp()).abs() < 1e-6, "x={x}: {m}");
        }
    }
}
