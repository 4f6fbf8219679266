//! Self-contained statistical toolkit: empirical CDFs, Kolmogorov-Smirnov
//! tests, binomial tail checks with explicit margins, a Hoeffding-bound
//! violation counter and log-log slope fits.
//!
//! Everything here is implemented in-repo so the oracles stay auditable.
//! Distributional tests run at significance 0.01 and bound checks carry a
//! three-sigma binomial margin; callers pin seeds so pass/fail is
//! deterministic.

use thiserror::Error;

use crate::process::Trajectory;
use crate::special::chi_square_sf;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("fewer than two usable points for a slope fit")]
    NotEnoughPoints,
    #[error("slope fit needs positive values, got {0}")]
    NonPositiveValue(f64),
}

/// A sorted sample with its empirical CDF.
#[derive(Debug, Clone)]
pub struct EcdfSample {
    values: Vec<f64>,
}

impl EcdfSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptySample);
        }
        values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
        Ok(EcdfSample { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Fraction of the sample at or below `x`.
    pub fn ecdf(&self, x: f64) -> f64 {
        let idx = self.values.partition_point(|&v| v <= x);
        idx as f64 / self.n() as f64
    }
}

/// Sup-norm distance between the empirical CDF and a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &EcdfSample, cdf: F) -> f64 {
    let n = sample.n() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.values().iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail: `p = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 n d^2)`,
/// truncated once terms drop below 1e-12 and clamped to [0, 1].
fn kolmogorov_p(d: f64, n_eff: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let x = n_eff.sqrt() * d;
    if x < 0.2 {
        // the series needs huge k to converge here and the tail mass is ~1
        return 1.0;
    }
    let s = n_eff * d * d;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=1000 {
        let term = (-2.0 * (k * k) as f64 * s).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS p-value for statistic `d` at sample size `n`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    kolmogorov_p(d, n as f64)
}

/// Two-sample KS test: returns the statistic and the asymptotic p-value at
/// effective size `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &EcdfSample, b: &EcdfSample) -> (f64, f64) {
    let mut d: f64 = 0.0;
    let (xs, ys) = (a.values(), b.values());
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        let fa = i as f64 / xs.len() as f64;
        let fb = j as f64 / ys.len() as f64;
        d = d.max((fa - fb).abs());
    }
    let n_eff = (xs.len() * ys.len()) as f64 / (xs.len() + ys.len()) as f64;
    (d, kolmogorov_p(d, n_eff))
}

/// One row of a tail-bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCheckRow {
    pub i: u32,
    pub threshold: f64,
    pub bound: f64,
    pub empirical_fraction: f64,
    pub n: usize,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheckReport {
    pub t0: usize,
    pub rows: Vec<TailCheckRow>,
}

impl TailCheckReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compares the empirical mass of limit estimates below `2^-i * 8 / t0`
/// against the bound `2^-i`, for `i = 1..=i_max`, with a three-sigma
/// binomial margin.
pub fn tail_check(estimates: &[f64], t0: usize, i_max: u32) -> Result<TailCheckReport, StatsError> {
    if estimates.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = estimates.len();
    let rows = (1..=i_max)
        .map(|i| {
            let threshold = 8.0 / t0 as f64 / 2f64.powi(i as i32);
            let bound = 2f64.powi(-(i as i32));
            let below = estimates.iter().filter(|&&x| x < threshold).count();
            let empirical_fraction = below as f64 / n as f64;
            let margin = 3.0 * (bound * (1.0 - bound) / n as f64).sqrt();
            TailCheckRow {
                i,
                threshold,
                bound,
                empirical_fraction,
                n,
                margin,
                pass: empirical_fraction <= bound + margin,
            }
        })
        .collect();
    Ok(TailCheckReport { t0, rows })
}

/// Result of the zero-degree-birth check against the exponential bound.
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingReport {
    /// Zero-degree births among qualifying steps.
    pub violations: u64,
    /// Steps whose pre-step edge count satisfied `E(t) >= xi t^2`.
    pub qualifying_steps: usize,
    /// `sum exp(-xi^2 t)` over qualifying steps.
    pub bound_sum: f64,
    /// Last time a zero-degree birth occurred anywhere in the run.
    pub last_zero_birth: Option<usize>,
}

/// Counts zero-degree births among steps where the edge count was already
/// quadratic (`E(t) >= xi t^2`); each such birth has probability below
/// `exp(-xi^2 t)`.
pub fn hoeffding_check(traj: &Trajectory, xi: f64) -> HoeffdingReport {
    let mut report = HoeffdingReport {
        violations: 0,
        qualifying_steps: 0,
        bound_sum: 0.0,
        last_zero_birth: None,
    };
    for step in &traj.steps {
        let t = step.t_new - 1;
        if step.new_degree == 0 {
            report.last_zero_birth = Some(step.t_new);
        }
        let edges_before = traj.edge_count_at(t).expect("t within trajectory");
        if edges_before as f64 >= xi * (t as f64) * (t as f64) {
            report.qualifying_steps += 1;
            report.bound_sum += (-xi * xi * t as f64).exp();
            if step.new_degree == 0 {
                report.violations += 1;
            }
        }
    }
    report
}

/// Least-squares slope of `log(value)` against `log(t)` over `t >= t_min`.
pub fn loglog_slope(points: &[(f64, f64)], t_min: f64) -> Result<f64, StatsError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in points {
        if t < t_min {
            continue;
        }
        if v <= 0.0 {
            return Err(StatsError::NonPositiveValue(v));
        }
        xs.push(t.ln());
        ys.push(v.ln());
    }
    if xs.len() < 2 {
        return Err(StatsError::NotEnoughPoints);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(StatsError::NotEnoughPoints);
    }
    Ok(sxy / sxx)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Chi-square goodness of fit of observed counts against expected
/// probabilities. Cells with expected count below 5 are pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> Result<GofResult, StatsError> {
    assert_eq!(observed.len(), expected_probs.len());
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * n as f64;
        if e >= 5.0 {
            statistic += (o as f64 - e) * (o as f64 - e) / e;
            cells += 1;
        } else {
            pooled_obs += o as f64;
            pooled_exp += e;
        }
    }
    if pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        cells += 1;
    }
    if cells < 2 {
        return Ok(GofResult {
            statistic,
            df: 0,
            p_value: 1.0,
        });
    }
    let df = cells - 1;
    Ok(GofResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    })
}

/// Pearson chi-square independence test on a 2x2 contingency table.
/// Returns the statistic and its df = 1 p-value.
pub fn chi_square_independence_2x2(table: [[u64; 2]; 2]) -> (f64, f64) {
    let row: [f64; 2] = [
        (table[0][0] + table[0][1]) as f64,
        (table[1][0] + table[1][1]) as f64,
    ];
    let col: [f64; 2] = [
        (table[0][0] + table[1][0]) as f64,
        (table[0][1] + table[1][1]) as f64,
    ];
    let n = row[0] + row[1];
    if n == 0.0 || row.contains(&0.0) || col.contains(&0.0) {
        return (0.0, 1.0);
    }
    let mut statistic = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = row[i] * col[j] / n;
            let o = table[i][j] as f64;
            statistic += (o - e) * (o - e) / e;
        }
    }
    (statistic, chi_square_sf(statistic, 1))
}
