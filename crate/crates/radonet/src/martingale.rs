//! Martingale observables along recorded trajectories.
//!
//! Two families are tracked: the per-vertex degree fraction `X_u(t) = d_u(t)/t`
//! and the edge density `Y(t) = E(t)/(t(t+1))`, each in both colours. Both
//! converge almost surely; limits are estimated by the terminal value with a
//! tail-fluctuation report rather than any extrapolation, so the finite-
//! horizon error stays visible.
//!
//! The halving-time construction marks the successive times a positive
//! series first drops below half its previous mark; the number of halvings
//! obeys a geometric tail bound with ratio `beta = 8A/alpha` whenever the
//! series is a martingale with increments controlled by `A/t^2` and stays
//! above `alpha/t`.

use thiserror::Error;

use crate::process::Trajectory;

#[derive(Debug, Error, PartialEq)]
pub enum MartingaleError {
    #[error("vertex {0} is not tracked in this trajectory")]
    UntrackedVertex(usize),
    #[error("tail window {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("normalizer is undefined for vertex 0")]
    SeedVertexUndefined,
    #[error("bound parameters need beta = 8A/alpha < 1, got {beta}")]
    BetaTooLarge { beta: f64 },
    #[error("bound parameters need alpha > 0, A > 0 and t1 > 3")]
    BadBoundParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colour {
    Black,
    White,
}

/// Degree-fraction series of one vertex in one colour.
#[derive(Debug, Clone, PartialEq)]
pub struct XSeries {
    pub vertex: usize,
    pub colour: Colour,
    pub start_t: usize,
    pub values: Vec<f64>,
}

/// Edge-density series in one colour.
#[derive(Debug, Clone, PartialEq)]
pub struct YSeries {
    pub colour: Colour,
    pub start_t: usize,
    pub values: Vec<f64>,
}

/// Extracts `X_u(t)` from a trajectory that tracked `u`.
pub fn track_x(traj: &Trajectory, u: usize, colour: Colour) -> Result<XSeries, MartingaleError> {
    let (start_t, degrees) = traj
        .tracked_degree_series(u)
        .ok_or(MartingaleError::UntrackedVertex(u))?;
    let values = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let t = (start_t + i) as f64;
            match colour {
                Colour::Black => d as f64 / t,
                Colour::White => (start_t + i - d) as f64 / t,
            }
        })
        .collect();
    Ok(XSeries {
        vertex: u,
        colour,
        start_t,
        values,
    })
}

/// Extracts `Y(t) = E_c(t)/(t(t+1))` from a trajectory. The white edge count
/// is `C(t+1, 2) - E_b(t)`.
pub fn track_y(traj: &Trajectory, colour: Colour) -> YSeries {
    let start_t = traj.seed_t;
    let values = (start_t..=traj.final_t())
        .map(|t| {
            let black = traj.edge_count_at(t).expect("t within trajectory") as f64;
            let edges = match colour {
                Colour::Black => black,
                Colour::White => (t as f64 + 1.0) * t as f64 / 2.0 - black,
            };
            edges / (t as f64 * (t as f64 + 1.0))
        })
        .collect();
    YSeries {
        colour,
        start_t,
        values,
    }
}

/// Indices of the successive halving marks of a positive series.
///
/// `n_0 = start`; each later mark is the first index whose value drops below
/// half the value at the previous mark. Stops when no such index exists.
pub fn halving_times(series: &[f64], start: usize) -> Vec<usize> {
    let mut marks = vec![start];
    let mut level = series[start];
    let mut i = start;
    loop {
        match series[i..].iter().position(|&v| v < 0.5 * level) {
            Some(offset) => {
                i += offset;
                marks.push(i);
                level = series[i];
            }
            None => return marks,
        }
    }
}

/// Terminal-value limit estimate with the max-minus-min fluctuation over the
/// last `tail_window` values.
pub fn estimate_limit(series: &[f64], tail_window: usize) -> Result<(f64, f64), MartingaleError> {
    if series.is_empty() {
        return Err(MartingaleError::EmptySeries);
    }
    if tail_window > series.len() || tail_window == 0 {
        return Err(MartingaleError::WindowTooLong {
            window: tail_window,
            len: series.len(),
        });
    }
    let tail = &series[series.len() - tail_window..];
    let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((*series.last().unwrap(), max - min))
}

/// Normalized degree series for general `lambda`:
/// `d(t) / (u * prod_{j=u}^{t-1} (1 + lambda/j))`.
///
/// `degrees[i]` is the degree at time `t = u + i`. At `lambda = 1` the
/// product telescopes to `t/u` and the series reduces to `d(t)/t`. The
/// normalizer has the vertex's own label as a leading factor, so vertex 0
/// is rejected.
pub fn lambda_normalized_x(
    degrees: &[f64],
    u: usize,
    lambda: f64,
) -> Result<Vec<f64>, MartingaleError> {
    if u == 0 {
        return Err(MartingaleError::SeedVertexUndefined);
    }
    if degrees.is_empty() {
        return Err(MartingaleError::EmptySeries);
    }
    let mut normalizer = u as f64;
    let mut out = Vec::with_capacity(degrees.len());
    for (i, &d) in degrees.iter().enumerate() {
        out.push(d / normalizer);
        let j = (u + i) as f64;
        normalizer *= 1.0 + lambda / j;
    }
    Ok(out)
}

/// Sum of squared one-step increments, the empirical L2 diagnostic.
pub fn squared_increment_sum(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum()
}

/// Parameters of the geometric halving bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleBoundParams {
    pub alpha: f64,
    /// Increment scale: one-step second-moment gaps are below `a/t^2` times
    /// the current value.
    pub a: f64,
    pub t1: usize,
    pub beta: f64,
}

impl MartingaleBoundParams {
    pub fn new(alpha: f64, a: f64, t1: usize) -> Result<Self, MartingaleError> {
        if !(alpha > 0.0) || !(a > 0.0) || t1 <= 3 {
            return Err(MartingaleError::BadBoundParams);
        }
        let beta = 8.0 * a / alpha;
        if beta >= 1.0 {
            return Err(MartingaleError::BetaTooLarge { beta });
        }
        Ok(MartingaleBoundParams { alpha, a, t1, beta })
    }

    /// The instantiation used for degree fractions: alpha = 16, A = 1.
    pub fn degree_fraction(t1: usize) -> Result<Self, MartingaleError> {
        Self::new(16.0, 1.0, t1)
    }

    /// The instantiation used for edge densities: A = alpha / 16.
    pub fn edge_density(alpha: f64, t1: usize) -> Result<Self, MartingaleError> {
        Self::new(alpha, alpha / 16.0, t1)
    }

    /// Bound on the probability of seeing at least `i` halvings.
    pub fn halving_tail_bound(&self, i: u32) -> f64 {
        self.beta.powi(i as i32)
    }

    /// Threshold `(alpha / t1) / 2^i` under which the limit falls with
    /// probability below `beta^i`.
    pub fn limit_tail_threshold(&self, i: u32) -> f64 {
        self.alpha / self.t1 as f64 / 2f64.powi(i as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::seeds;
    use crate::process::run_trajectory;
    use crate::rng::replicate_rng;

    #[test]
    fn x_series_from_p3_trajectory() {
        let mut rng = replicate_rng(17, 0, 0);
        let traj = run_trajectory(&seeds::p3(false), 1.0, 3, &[0], &mut rng).unwrap();
        let x = track_x(&traj, 0, Colour::Black).unwrap();
        assert_eq!(x.start_t, 2);
        assert_eq!(x.values[0], 0.5);
        // after one step the fraction is 2/3 if vertex 0 gained, else 1/3
        assert!(x.values[1] == 2.0 / 3.0 || x.values[1] == 1.0 / 3.0);
        let w = track_x(&traj, 0, Colour::White).unwrap();
        for (b, wv) in x.values.iter().zip(&w.values) {
            assert!((b + wv - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn untracked_vertex_is_an_error() {
        let mut rng = replicate_rng(17, 0, 0);
        let traj = run_trajectory(&seeds::p3(false), 1.0, 3, &[0], &mut rng).unwrap();
        assert_eq!(
            track_x(&traj, 2, Colour::Black).unwrap_err(),
            MartingaleError::UntrackedVertex(2)
        );
    }

    #[test]
    fn y_series_values() {
        let mut rng = replicate_rng(18, 0, 0);
        let traj = run_trajectory(&seeds::p3(false), 1.0, 10, &[], &mut rng).unwrap();
        let y = track_y(&traj, Colour::Black);
        assert_eq!(y.values[0], 2.0 / 6.0);
        let w = track_y(&traj, Colour::White);
        for (b, wv) in y.values.iter().zip(&w.values) {
            assert!((b + wv - 0.5).abs() < 1e-15);
            assert!(*b > 0.0 && *b < 1.0);
        }
    }

    #[test]
    fn complete_seed_keeps_y_at_one_half() {
        let mut rng = replicate_rng(19, 0, 0);
        let traj = run_trajectory(&seeds::k3(false), 1.0, 30, &[], &mut rng).unwrap();
        let y = track_y(&traj, Colour::Black);
        for v in &y.values {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn halving_time_examples() {
        assert_eq!(halving_times(&[0.8, 0.5, 0.39, 0.2], 0), vec![0, 2]);
        assert_eq!(halving_times(&[0.4, 0.4, 0.4, 0.4], 0), vec![0]);
        let geometric: Vec<f64> = (0..6).map(|i| 0.9 * 0.4f64.powi(i)).collect();
        assert_eq!(halving_times(&geometric, 0), vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn estimate_limit_examples() {
        assert_eq!(estimate_limit(&[0.37; 12], 10).unwrap(), (0.37, 0.0));
        let (est, fluct) = estimate_limit(&[0.9, 0.30, 0.31, 0.29], 3).unwrap();
        assert_eq!(est, 0.29);
        assert!((fluct - 0.02).abs() < 1e-15);
        assert!(matches!(
            estimate_limit(&[0.1], 5),
            Err(MartingaleError::WindowTooLong { .. })
        ));
    }

    #[test]
    fn normalizer_telescopes_at_lambda_one() {
        let degrees: Vec<f64> = (2..40).map(|t| t as f64 / 2.0).collect();
        let series = lambda_normalized_x(&degrees, 2, 1.0).unwrap();
        for v in series {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_degree_decays_under_fractional_lambda() {
        let degrees = vec![3.0; 50];
        let series = lambda_normalized_x(&degrees, 4, 0.5).unwrap();
        for w in series.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn vertex_zero_is_rejected() {
        assert_eq!(
            lambda_normalized_x(&[1.0], 0, 0.5).unwrap_err(),
            MartingaleError::SeedVertexUndefined
        );
    }

    #[test]
    fn bound_params() {
        let p = MartingaleBoundParams::degree_fraction(32).unwrap();
        assert_eq!(p.beta, 0.5);
        assert_eq!(p.halving_tail_bound(3), 0.125);
        assert_eq!(p.limit_tail_threshold(1), 16.0 / 32.0 / 2.0);
        let y = MartingaleBoundParams::edge_density(0.08, 100).unwrap();
        assert_eq!(y.beta, 0.5);
        assert!(MartingaleBoundParams::new(1.0, 1.0, 100).is_err());
        assert!(MartingaleBoundParams::new(16.0, 1.0, 3).is_err());
    }

    #[test]
    fn squared_increments() {
        assert_eq!(squared_increment_sum(&[1.0, 1.5, 1.0]), 0.5);
    }
}
