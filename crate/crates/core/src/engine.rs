//! Replication and sweep orchestration.
//!
//! Every replication and sweep point owns its seed; work is spread over a
//! bounded rayon pool and merged in index order, so results are identical
//! for any worker count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% standard-normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Batches used for within-trace confidence intervals.
pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub halfwidth_95: f64,
    pub n: usize,
}

impl EstimateWithCI {
    pub fn exact(value: f64) -> Self {
        EstimateWithCI {
            mean: value,
            halfwidth_95: 0.0,
            n: 1,
        }
    }

    /// Normal-approximation interval over independent samples. A single
    /// sample yields a zero halfwidth.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let halfwidth_95 = if n < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        };
        EstimateWithCI {
            mean,
            halfwidth_95,
            n,
        }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.halfwidth_95
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.halfwidth_95
    }
}

/// Ratio estimator `Σ num / Σ den` with a batch-means interval.
///
/// Units are assigned to `batches` contiguous batches of (nearly) equal
/// size, which keeps the interval honest for correlated fading traces.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    per_batch: usize,
    seen: usize,
    num: Vec<f64>,
    den: Vec<f64>,
}

impl BatchMeans {
    pub fn new(total_units: usize, batches: usize) -> Self {
        let batches = batches.clamp(1, total_units.max(1));
        BatchMeans {
            per_batch: total_units.div_ceil(batches).max(1),
            seen: 0,
            num: vec![0.0; batches],
            den: vec![0.0; batches],
        }
    }

    pub fn push(&mut self, num: f64, den: f64) {
        let b = (self.seen / self.per_batch).min(self.num.len() - 1);
        self.num[b] += num;
        self.den[b] += den;
        self.seen += 1;
    }

    pub fn total_num(&self) -> f64 {
        self.num.iter().sum()
    }

    pub fn total_den(&self) -> f64 {
        self.den.iter().sum()
    }

    pub fn estimate(&self) -> EstimateWithCI {
        let mean = self.total_num() / self.total_den();
        let ratios: Vec<f64> = self
            .num
            .iter()
            .zip(&self.den)
            .filter(|(_, &d)| d > 0.0)
            .map(|(n, d)| n / d)
            .collect();
        let halfwidth_95 = EstimateWithCI::from_samples(&ratios).halfwidth_95;
        EstimateWithCI {
            mean,
            halfwidth_95,
            n: self.seen,
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - spread).max(0.0) };
    let hi = if successes >= trials { 1.0 } else { (center + spread).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub base_seed: u64,
    pub replications: usize,
    pub slots_or_packets: usize,
    pub sweep_axes: Vec<(String, Vec<f64>)>,
}

impl ExperimentPlan {
    pub fn new(base_seed: u64, replications: usize, slots_or_packets: usize) -> Self {
        ExperimentPlan {
            base_seed,
            replications,
            slots_or_packets,
            sweep_axes: Vec::new(),
        }
    }

    pub fn with_axis(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.sweep_axes.push((name.into(), values));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", 0.0, "need at least one replication"));
        }
        if let Some((name, _)) = self.sweep_axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::Config(format!("sweep axis `{name}` is empty")));
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes, first axis slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for (_, values) in &self.sweep_axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Seed of sweep point `index`; a splitmix64 mix of both inputs.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(index as u64 ^ 0xA076_1D64_78BD_642F))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One named output value of a sweep point. `halfwidth` is `None` for exact
/// (closed-form) values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub halfwidth: Option<f64>,
}

impl Metric {
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            halfwidth: None,
        }
    }

    pub fn estimate(name: impl Into<String>, value: f64, halfwidth: f64) -> Self {
        Metric {
            name: name.into(),
            value,
            halfwidth: Some(halfwidth),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    pub seed: u64,
    pub outcome: std::result::Result<Vec<Metric>, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn metric(&self, row: usize, name: &str) -> Option<&Metric> {
        self.rows.get(row)?.outcome.as_ref().ok()?.iter().find(|m| m.name == name)
    }

    /// RFC 4180 CSV with LF line endings. Exact metrics get one column,
    /// estimates an additional `<name>_ci` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let template = self.rows.iter().find_map(|r| r.outcome.as_ref().ok());
        let mut header: Vec<String> = self.axes.clone();
        if let Some(metrics) = template {
            for m in metrics {
                header.push(m.name.clone());
                if m.halfwidth.is_some() {
                    header.push(format!("{}_ci", m.name));
                }
            }
        }
        let with_error = self.failures() > 0;
        if with_error {
            header.push("error".into());
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut record: Vec<String> = row.coords.iter().map(|c| format_number(*c)).collect();
            match &row.outcome {
                Ok(metrics) => {
                    for m in metrics {
                        record.push(format_number(m.value));
                        if let Some(h) = m.halfwidth {
                            record.push(format_number(h));
                        }
                    }
                    if with_error {
                        record.push(String::new());
                    }
                }
                Err(msg) => {
                    record.resize(header.len() - 1, String::new());
                    record.push(msg.clone());
                }
            }
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Plain decimal rendering; non-finite values become empty cells.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Bounded worker pool for replications and sweeps.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `workers == 0` uses the machine's available parallelism.
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Engine { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Run inside this pool (nested rayon work stays on it).
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// `plan.replications` independent runs with seeds `base_seed + i`,
    /// combined into a replication-level interval.
    pub fn run_replicated<F>(&self, plan: &ExperimentPlan, simulation: F) -> Result<EstimateWithCI>
    where
        F: Fn(u64, usize) -> Result<f64> + Sync,
    {
        plan.validate()?;
        let results: Vec<(u64, Result<f64>)> = self.pool.install(|| {
            (0..plan.replications)
                .into_par_iter()
                .map(|i| {
                    let seed = plan.base_seed.wrapping_add(i as u64);
                    (seed, simulation(seed, plan.slots_or_packets))
                })
                .collect()
        });
        let mut samples = Vec::with_capacity(results.len());
        for (seed, r) in results {
            match r {
                Ok(v) => samples.push(v),
                Err(e) => {
                    return Err(Error::Replication {
                        seed,
                        source: Box::new(e),
                    })
                }
            }
        }
        Ok(EstimateWithCI::from_samples(&samples))
    }

    /// Evaluates every sweep point; failures are recorded per row and do not
    /// stop the sweep.
    pub fn run_sweep<F>(&self, plan: &ExperimentPlan, evaluator: F) -> Result<SweepTable>
    where
        F: Fn(&[f64], u64) -> Result<Vec<Metric>> + Sync,
    {
        plan.validate()?;
        let points = plan.points();
        let rows = self.pool.install(|| {
            points
                .into_par_iter()
                .enumerate()
                .map(|(index, coords)| {
                    let seed = point_seed(plan.base_seed, index);
                    let outcome = match evaluator(&coords, seed) {
                        Ok(m) if m.is_empty() => Err(Error::EmptyOutput { index }.to_string()),
                        Ok(m) => Ok(m),
                        Err(e) => Err(e.to_string()),
                    };
                    SweepRow {
                        coords,
                        seed,
                        outcome,
                    }
                })
                .collect()
        });
        Ok(SweepTable {
            axes: plan.sweep_axes.iter().map(|(n, _)| n.clone()).collect(),
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingParams, GaussMarkovChannel};

    fn exp_mean(seed: u64, n: usize) -> Result<f64> {
        let mut ch = GaussMarkovChannel::new(FadingParams::new(0.0, seed)?);
        Ok((0..n).map(|_| ch.next_gain()).sum::<f64>() / n as f64)
    }

    #[test]
    fn constant_simulation_has_zero_width() {
        let e = Engine::new(2).unwrap();
        let est = e.run_replicated(&ExperimentPlan::new(1, 10, 1), |_, _| Ok(3.0)).unwrap();
        assert_eq!(est.mean, 3.0);
        assert_eq!(est.halfwidth_95, 0.0);
        assert_eq!(est.n, 10);
    }

    #[test]
    fn exponential_mean_inside_interval() {
        let e = Engine::new(1).unwrap();
        let est = e.run_replicated(&ExperimentPlan::new(77, 20, 100_000), exp_mean).unwrap();
        assert!((est.mean - 1.0).abs() <= est.halfwidth_95, "{est:?}");
    }

    #[test]
    fn halfwidth_scales_with_replications() {
        let e = Engine::new(1).unwrap();
        let small = e.run_replicated(&ExperimentPlan::new(5, 200, 2_000), exp_mean).unwrap();
        let big = e.run_replicated(&ExperimentPlan::new(5, 400, 2_000), exp_mean).unwrap();
        let ratio = big.halfwidth_95 / small.halfwidth_95;
        let want = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ratio / want - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn ci_coverage_sanity() {
        let e = Engine::new(1).unwrap();
        let covered = (0..100)
            .filter(|k| {
                let plan = ExperimentPlan::new(10_000 * k, 20, 2_000);
                let est = e.run_replicated(&plan, exp_mean).unwrap();
                (est.mean - 1.0).abs() <= est.halfwidth_95
            })
            .count();
        assert!((85..=100).contains(&covered), "covered {covered}/100");
    }

    #[test]
    fn failing_replication_reports_seed() {
        let e = Engine::new(1).unwrap();
        let err = e
            .run_replicated(&ExperimentPlan::new(100, 5, 1), |s, _| {
                if s == 103 {
                    Err(Error::Infeasible("boom".into()))
                } else {
                    Ok(1.0)
                }
            })
            .unwrap_err();
        assert!(matches!(err, Error::Replication { seed: 103, .. }));
        assert!(err.is_infeasible());
    }

    #[test]
    fn replications_deterministic_across_workers() {
        let plan = ExperimentPlan::new(9, 16, 10_000);
        let one = Engine::new(1).unwrap().run_replicated(&plan, exp_mean).unwrap();
        let four = Engine::new(4).unwrap().run_replicated(&plan, exp_mean).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let plan = ExperimentPlan::new(3, 1, 1)
            .with_axis("snr_db", vec![0.0, 4.0, 8.0])
            .with_axis("beta", vec![0.2, 0.9]);
        let eval = |p: &[f64], seed: u64| {
            let v = exp_mean(seed, 1000)?;
            Ok(vec![Metric::exact("sum", p[0] + p[1]), Metric::estimate("mc", v, 0.1)])
        };
        let a = Engine::new(1).unwrap().run_sweep(&plan, eval).unwrap();
        let b = Engine::new(3).unwrap().run_sweep(&plan, eval).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a.rows[1].coords, vec![0.0, 0.9]);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("snr_db,beta,sum,mc,mc_ci\n"));
        assert_eq!(text.lines().count(), 7);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn point_seeds_are_isolated() {
        let plan = ExperimentPlan::new(3, 1, 1).with_axis("x", vec![1.0, 2.0, 3.0]);
        let e = Engine::new(1).unwrap();
        let base = e.run_sweep(&plan, |p, s| Ok(vec![Metric::exact("v", exp_mean(s, 100)? + p[0])])).unwrap();
        // perturbing how point 0 is evaluated leaves the others alone
        let tweaked = e
            .run_sweep(&plan, |p, s| {
                let bump = if p[0] == 1.0 { 100.0 } else { 0.0 };
                Ok(vec![Metric::exact("v", exp_mean(s, 100)? + p[0] + bump)])
            })
            .unwrap();
        assert_ne!(base.rows[0], tweaked.rows[0]);
        assert_eq!(base.rows[1..], tweaked.rows[1..]);
    }

    #[test]
    fn sweep_records_failures_and_empty_output() {
        let plan = ExperimentPlan::new(0, 1, 1).with_axis("x", vec![1.0, 2.0, 3.0]);
        let t = Engine::new(1)
            .unwrap()
            .run_sweep(&plan, |p, _| match p[0] as i32 {
                1 => Ok(vec![]),
                2 => Err(Error::Infeasible("nope".into())),
                _ => Ok(vec![Metric::exact("v", 1.0)]),
            })
            .unwrap();
        assert_eq!(t.failures(), 2);
        assert!(t.rows[0].outcome.as_ref().unwrap_err().contains("no metrics"));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,v,error\n"));
    }

    #[test]
    fn empty_axis_rejected() {
        let plan = ExperimentPlan::new(0, 1, 1).with_axis("x", vec![]);
        assert!(plan.validate().is_err());
        assert!(ExperimentPlan::new(0, 0, 1).validate().is_err());
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(10, 1000, Z95);
        assert!(lo < 0.01 && 0.01 < hi);
        assert!(lo > 0.004 && hi < 0.02);
        assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
        let (lo0, _) = wilson_interval(0, 100, Z95);
        assert_eq!(lo0, 0.0);
    }

    #[test]
    fn batch_means_ratio() {
        let mut b = BatchMeans::new(100, 10);
        for i in 0..100 {
            b.push(i as f64, 1.0);
        }
        let e = b.estimate();
        assert!((e.mean - 49.5).abs() < 1e-12);
        assert!(e.halfwidth_95 > 0.0);
        assert_eq!(e.n, 100);
    }
}
