//! Exhaustive grid search with coarse-to-fine zoom, and a cyclic
//! coordinate variant for higher-dimensional problems.
//!
//! Grid points are evaluated in parallel but reduced in lexicographic order,
//! so the result never depends on scheduling. Ties go to the
//! lexicographically smallest point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    /// Geometric spacing; both bounds must be positive.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub refinement_rounds: usize,
    pub spacing: Spacing,
}

impl SearchGrid {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        let grid = SearchGrid {
            lower,
            upper,
            points,
            refinement_rounds: 0,
            spacing: Spacing::Linear,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn log(lower: f64, upper: f64, points: usize) -> Result<Self> {
        let grid = SearchGrid {
            spacing: Spacing::Log,
            ..SearchGrid::new(lower, upper, points)?
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_refinement(mut self, rounds: usize) -> Self {
        self.refinement_rounds = rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::invalid("grid.lower", self.lower, "must be finite and below upper"));
        }
        if self.points < 2 {
            return Err(Error::invalid("grid.points", self.points as f64, "need at least 2 points"));
        }
        if self.spacing == Spacing::Log && self.lower <= 0.0 {
            return Err(Error::invalid("grid.lower", self.lower, "log grid needs positive bounds"));
        }
        Ok(())
    }

    fn to_axis(&self, v: f64) -> f64 {
        match self.spacing {
            Spacing::Linear => v,
            Spacing::Log => v.ln(),
        }
    }

    fn from_axis(&self, u: f64) -> f64 {
        match self.spacing {
            Spacing::Linear => u,
            Spacing::Log => u.exp(),
        }
    }

    /// Grid values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        let (a, b) = (self.to_axis(self.lower), self.to_axis(self.upper));
        let n = self.points - 1;
        (0..self.points)
            .map(|i| match i {
                0 => self.lower,
                i if i == n => self.upper,
                i => self.from_axis(a + (b - a) * i as f64 / n as f64),
            })
            .collect()
    }

    /// Spacing between neighbouring points, in axis units.
    fn cell(&self) -> f64 {
        (self.to_axis(self.upper) - self.to_axis(self.lower)) / (self.points - 1) as f64
    }

    /// The same grid shrunk to one cell either side of `center`, clipped to `bounds`.
    fn zoom(&self, center: f64, bounds: &SearchGrid) -> SearchGrid {
        let c = self.to_axis(center);
        let cell = self.cell();
        let lo = (c - cell).max(bounds.to_axis(bounds.lower));
        let hi = (c + cell).min(bounds.to_axis(bounds.upper));
        SearchGrid {
            lower: self.from_axis(lo),
            upper: self.from_axis(hi),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Maximize,
    Minimize,
}

impl Goal {
    fn better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Goal::Maximize => candidate > incumbent,
            Goal::Minimize => candidate < incumbent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    /// Incumbent value after each round (index 0 is the coarse grid).
    pub round_values: Vec<f64>,
    pub evaluations: usize,
}

/// Exhaustive search over the Cartesian product of `grids`.
///
/// `evaluate` returns `None` for infeasible points; non-finite values are also
/// treated as infeasible. The number of zoom rounds is the largest
/// `refinement_rounds` among the grids.
pub fn grid_search<F>(grids: &[SearchGrid], goal: Goal, evaluate: F) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    if grids.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }
    for g in grids {
        g.validate()?;
    }
    let rounds = grids.iter().map(|g| g.refinement_rounds).max().unwrap_or(0);
    let mut current: Vec<SearchGrid> = grids.to_vec();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut round_values = Vec::with_capacity(rounds + 1);
    let mut evaluations = 0;

    for round in 0..=rounds {
        let axes: Vec<Vec<f64>> = current.iter().map(SearchGrid::values).collect();
        let points = cartesian(&axes);
        evaluations += points.len();
        let values: Vec<Option<f64>> = points
            .par_iter()
            .map(|p| evaluate(p).filter(|v| v.is_finite()))
            .collect();
        for (point, value) in points.into_iter().zip(values) {
            let Some(value) = value else { continue };
            let replace = match &best {
                None => true,
                Some((bp, bv)) => {
                    goal.better(value, *bv) || (value == *bv && lexicographic_lt(&point, bp))
                }
            };
            if replace {
                best = Some((point, value));
            }
        }
        let Some((point, value)) = &best else {
            return Err(Error::NoFeasiblePoint);
        };
        round_values.push(*value);
        if round < rounds {
            current = current
                .iter()
                .zip(grids)
                .zip(point)
                .map(|((g, bounds), &c)| g.zoom(c, bounds))
                .collect();
        }
    }
    let (point, value) = best.expect("checked after every round");
    Ok(SearchOutcome {
        point,
        value,
        round_values,
        evaluations,
    })
}

/// Feasibility predicate kept separate from the objective.
pub fn grid_search_with<F, P>(
    grids: &[SearchGrid],
    goal: Goal,
    objective: F,
    feasible: P,
) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
    P: Fn(&[f64]) -> bool + Sync,
{
    grid_search(grids, goal, |x| feasible(x).then(|| objective(x)))
}

/// Cyclic coordinate search: one dimension at a time, each a 1-D
/// [`grid_search`] on that dimension's grid with the others held fixed.
///
/// `start` must be feasible. Stops after `sweeps` passes or when a pass makes
/// no strict improvement.
pub fn coordinate_search<F>(
    start: &[f64],
    grids: &[SearchGrid],
    goal: Goal,
    sweeps: usize,
    evaluate: F,
) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    assert_eq!(start.len(), grids.len(), "one grid per coordinate");
    let mut point = start.to_vec();
    let mut value = evaluate(&point)
        .filter(|v| v.is_finite())
        .ok_or(Error::NoFeasiblePoint)?;
    let mut round_values = vec![value];
    let mut evaluations = 1;
    for _ in 0..sweeps {
        let before = value;
        for dim in 0..point.len() {
            let line = |x: &[f64]| {
                let mut p = point.clone();
                p[dim] = x[0];
                evaluate(&p)
            };
            let Ok(out) = grid_search(&grids[dim..=dim], goal, line) else {
                continue;
            };
            evaluations += out.evaluations;
            if goal.better(out.value, value) {
                point[dim] = out.point[0];
                value = out.value;
            }
        }
        round_values.push(value);
        if !goal.better(value, before) {
            break;
        }
    }
    Ok(SearchOutcome {
        point,
        value,
        round_values,
        evaluations,
    })
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.iter().zip(axes).map(|(&i, a)| a[i]).collect());
        for d in (0..axes.len()).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

fn lexicographic_lt(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::lambert_w;

    #[test]
    fn grid_values_hit_endpoints() {
        let g = SearchGrid::new(0.0, 2.0, 5).unwrap();
        assert_eq!(g.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let l = SearchGrid::log(0.01, 1.0, 3).unwrap();
        let v = l.values();
        assert_eq!(v[0], 0.01);
        assert!((v[1] - 0.1).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(SearchGrid::new(1.0, 1.0, 5).is_err());
        assert!(SearchGrid::new(0.0, 1.0, 1).is_err());
        assert!(SearchGrid::log(0.0, 1.0, 5).is_err());
    }

    #[test]
    fn concave_peak() {
        let g = SearchGrid::new(0.0, 2.0, 201).unwrap();
        let out = grid_search(&[g], Goal::Maximize, |x| Some(-(x[0] - 1.0).powi(2))).unwrap();
        assert!((out.point[0] - 1.0).abs() < 0.01);
    }

    #[test]
    fn constrained_minimum() {
        let g = SearchGrid::new(0.0, 1.0, 101).unwrap();
        let out = grid_search_with(&[g], Goal::Minimize, |x| x[0], |x| x[0] >= 0.37 - 1e-12).unwrap();
        assert!((out.point[0] - 0.37).abs() < 0.01);
    }

    #[test]
    fn no_csit_objective_matches_lambert_closed_form() {
        let p = 10.0;
        let g = SearchGrid::new(0.0, 3.0, 301).unwrap().with_refinement(3);
        let out = grid_search(&[g], Goal::Maximize, |x| {
            Some((-x[0]).exp() * (x[0] * p).ln_1p())
        })
        .unwrap();
        let w = lambert_w(p).unwrap();
        let closed = w * (-(w.exp() - 1.0) / p).exp();
        let argmax = (w.exp() - 1.0) / p;
        assert!((out.value - closed).abs() < 1e-8);
        assert!((out.point[0] - argmax).abs() < 1e-3);
    }

    #[test]
    fn refinement_is_monotone() {
        let g = SearchGrid::new(-3.0, 3.0, 7).unwrap().with_refinement(4);
        let f = |x: &[f64]| Some(-(x[0] - 0.123).powi(2) - (x[1] + 0.77).powi(2));
        let out = grid_search(&[g, g], Goal::Maximize, f).unwrap();
        assert_eq!(out.round_values.len(), 5);
        for w in out.round_values.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn ties_go_to_smallest_point() {
        let g = SearchGrid::new(-1.0, 1.0, 21).unwrap();
        let out = grid_search(&[g], Goal::Maximize, |x| Some(x[0].abs().round())).unwrap();
        assert_eq!(out.point, vec![-1.0]);
        let flat = grid_search(&[g, g], Goal::Minimize, |_| Some(0.0)).unwrap();
        assert_eq!(flat.point, vec![-1.0, -1.0]);
    }

    #[test]
    fn infeasible_everywhere_is_an_error() {
        let g = SearchGrid::new(0.0, 1.0, 11).unwrap();
        assert!(matches!(
            grid_search(&[g], Goal::Minimize, |_| None),
            Err(Error::NoFeasiblePoint)
        ));
        assert!(matches!(
            grid_search(&[g], Goal::Minimize, |_| Some(f64::NAN)),
            Err(Error::NoFeasiblePoint)
        ));
    }

    #[test]
    fn coordinate_search_on_separable_bowl() {
        let g = SearchGrid::new(-2.0, 2.0, 41).unwrap().with_refinement(2);
        let f = |x: &[f64]| Some((x[0] - 0.3).powi(2) + (x[1] - 1.1).powi(2) + 0.5 * (x[2] + 0.4).powi(2));
        let out = coordinate_search(&[0.0, 0.0, 0.0], &[g, g, g], Goal::Minimize, 5, f).unwrap();
        assert!((out.point[0] - 0.3).abs() < 1e-3);
        assert!((out.point[1] - 1.1).abs() < 1e-3);
        assert!((out.point[2] + 0.4).abs() < 1e-3);
        for w in out.round_values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
