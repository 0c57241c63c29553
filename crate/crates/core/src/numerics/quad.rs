//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite ranges `[a, ∞)` are mapped onto `[0, 1)` with
//! `x = a + t/(1-t)`. The interval with the largest error estimate is bisected
//! until the summed estimate meets the tolerance or the budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Maximum number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 2000;

/// Estimate `∫_a^b f` to absolute accuracy `tol`. `b` may be `f64::INFINITY`.
pub fn quadrature_1d<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    quadrature_1d_rel(f, a, b, tol, 0.0)
}

/// As [`quadrature_1d`], accepting either `abs_tol` or `rel_tol · |I|`.
pub fn quadrature_1d_rel<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a.is_nan() || b.is_nan() || a.is_infinite() {
        return Err(Error::Domain {
            function: "quadrature_1d",
            value: a,
        });
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return quadrature_1d_rel(f, b, a, abs_tol, rel_tol).map(|v| -v);
    }
    if b.is_infinite() {
        let g = |t: f64| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (one_minus * one_minus)
            }
        };
        adaptive(&g, 0.0, 1.0, abs_tol, rel_tol)
    } else {
        adaptive(&f, a, b, abs_tol, rel_tol)
    }
}

/// Iterated integral `∫_a^b ∫_{lo(x)}^{hi(x)} f(x, y) dy dx`.
///
/// The inner integral is solved to `tol / 10` so its error does not dominate.
pub fn quadrature_2d<F, L, H>(f: F, a: f64, b: f64, lo: L, hi: H, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let inner_failure = std::cell::Cell::new(None);
    let outer = |x: f64| match quadrature_1d(|y| f(x, y), lo(x), hi(x), tol * 0.1) {
        Ok(v) => v,
        Err(e) => {
            if inner_failure.take().is_none() {
                inner_failure.set(Some(e.to_string()));
            }
            f64::NAN
        }
    };
    let value = quadrature_1d(outer, a, b, tol)?;
    match inner_failure.take() {
        None => Ok(value),
        Some(_) => Err(Error::NotConverged {
            estimate: value,
            error_estimate: f64::NAN,
        }),
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

fn adaptive<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    let first = gauss_kronrod(f, a, b);
    let mut total = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    while heap.len() < MAX_INTERVALS {
        if !total.is_finite() || !error.is_finite() {
            break;
        }
        if error <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in double precision
            heap.push(worst);
            break;
        }
        let left = gauss_kronrod(f, worst.a, mid);
        let right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // recompute from scratch to shed accumulated rounding before the final check
    let total: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    if total.is_finite() && error <= abs_tol.max(rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(Error::NotConverged {
            estimate: total,
            error_estimate: error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::exp_integral_e1;

    #[test]
    fn exponential_tail() {
        let v = quadrature_1d(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-10).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn linear_on_unit_interval() {
        let v = quadrature_1d(|x| 2.0 * x, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let r = quadrature_1d(|x| 2.0 * x, 1.0, 0.0, 1e-12).unwrap();
        assert!((r + 1.0).abs() < 1e-10);
    }

    #[test]
    fn perfect_csit_integrand_matches_closed_form() {
        let p = 10.0;
        let v = quadrature_1d(|g| (-g).exp() * (g * p).ln_1p(), 0.0, f64::INFINITY, 1e-10)
            .unwrap();
        let closed = 0.1f64.exp() * exp_integral_e1(0.1).unwrap();
        assert!((v - closed).abs() < 1e-6);
    }

    #[test]
    fn e1_agrees_with_defining_integral() {
        for i in 0..60 {
            let x = 0.01 * (2000f64).powf(i as f64 / 59.0);
            let want = quadrature_1d_rel(|u| (-u).exp() / u, x, f64::INFINITY, 0.0, 1e-11)
                .unwrap();
            let got = exp_integral_e1(x).unwrap();
            assert!(((got - want) / want).abs() < 1e-8, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn reports_non_convergence_with_estimate() {
        // 1/x on (0, 1] diverges
        match quadrature_1d(|x| 1.0 / x, 0.0, 1.0, 1e-12) {
            Err(Error::NotConverged { estimate, .. }) => assert!(estimate > 10.0),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn iterated_triangle_area() {
        // ∫_0^1 ∫_0^{1-x} 1 dy dx = 1/2
        let v = quadrature_2d(|_, _| 1.0, 0.0, 1.0, |_| 0.0, |x| 1.0 - x, 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }
}
