//! Special functions needed by the fading densities and throughput closed forms.
//!
//! All routines are real-argument, double precision, and target a relative
//! accuracy of about 1e-12 on their stated domains.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Switch-over point between the power series and the asymptotic expansion of I₀.
const I0_SERIES_LIMIT: f64 = 15.0;

/// Modified Bessel function of the first kind, order zero.
///
/// Overflows to `inf` for `x` beyond roughly 713; use [`bessel_i0_scaled`]
/// when the result feeds into a logarithm.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < I0_SERIES_LIMIT {
        i0_series(x)
    } else {
        bessel_i0_scaled(x) * x.exp()
    }
}

/// Exponentially scaled Bessel function, `e^{-x} I₀(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x < I0_SERIES_LIMIT {
        return i0_series(x) * (-x).exp();
    }
    // e^{-x} I₀(x) ~ 1/sqrt(2πx) · Σ_k [(2k-1)!!]² / (k! (8x)^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd / (8.0 * x * k as f64);
        if next > term {
            // asymptotic series started diverging; the smallest term bounds the error
            break;
        }
        term = next;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Principal branch of the Lambert W function for non-negative arguments.
///
/// Solves `w·e^w = x` by Halley iteration started from `ln(1 + x)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "lambert_w",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = x.ln_1p();
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

/// Exponential integral `E₁(x) = ∫ₓ^∞ e^{-u}/u du` for `x > 0`.
///
/// Equals `-Ei(-x)`. Power series below 1, modified Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if x.is_infinite() && x > 0.0 {
        return Ok(0.0);
    }
    if x > 1.0 {
        return Ok(e1_continued_fraction(x) * (-x).exp());
    }
    e1_small(x)
}

/// `e^x · E₁(x)`, finite for arbitrarily large `x` (tends to `1/x`).
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    if x.is_infinite() && x > 0.0 {
        return Ok(0.0);
    }
    if x > 1.0 {
        return Ok(e1_continued_fraction(x));
    }
    e1_small(x).map(|v| v * x.exp())
}

fn e1_small(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "exp_integral_e1",
            value: x,
        });
    }
    // E₁(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)
    let mut sum = 0.0;
    let mut fact_term = 1.0;
    for k in 1..200 {
        fact_term *= -x / k as f64;
        let term = fact_term / k as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    Ok(-EULER_GAMMA - x.ln() - sum)
}

/// Continued fraction for `e^x E₁(x)`, valid for `x > 1`.
fn e1_continued_fraction(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}
