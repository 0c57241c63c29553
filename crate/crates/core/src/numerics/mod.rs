//! Special functions, quadrature, root bracketing and grid search.

pub mod quad;
pub mod roots;
pub mod search;
pub mod special;

pub use quad::{quadrature_1d, quadrature_1d_rel, quadrature_2d};
pub use roots::bisect;
pub use search::{coordinate_search, grid_search, grid_search_with, Goal, SearchGrid, SearchOutcome, Spacing};
pub use special::{bessel_i0, bessel_i0_scaled, exp_integral_e1, exp_integral_e1_scaled, lambert_w};

/// Linear power from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
