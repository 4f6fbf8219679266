//! The random growth engine.
//!
//! Each step introduces vertex `t + 1` and connects it to every existing
//! vertex `u` independently with probability `lambda * d_u(t) / t`. A step
//! is one Bernoulli draw per existing vertex, so a run to horizon `T` costs
//! `O(T^2)` draws; the urn reduction covers single-vertex questions at
//! horizons where that is too slow.
//!
//! Sampling compares a 64-bit uniform against the attachment probability in
//! fixed point: vertex `u` joins iff `r * t < d_u * round(lambda * 2^64)`.
//! This is exact at both endpoints (an isolated vertex never joins; at
//! `lambda = 1` a universal vertex always joins) and quantizes interior
//! probabilities at most one part in 2^64, finer than the f64 inputs. No
//! clamping branch exists: `d <= t` and `lambda <= 1` keep the rate in
//! `[0, 1]` by construction.

use std::io::{self, Write};

use rand_xoshiro::rand_core::RngCore;
use thiserror::Error;

use crate::graph::{check_lambda, GraphError, GrowingGraph};

#[derive(Debug, Error, PartialEq)]
pub enum ProcessError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("horizon {horizon} must exceed the seed time {seed_t}")]
    HorizonBeforeSeed { horizon: usize, seed_t: usize },
    #[error("tracked vertex {vertex} exceeds horizon {horizon}")]
    TrackedOutOfRange { vertex: usize, horizon: usize },
}

/// Attachment rate in Q0.64 fixed point.
#[derive(Debug, Clone, Copy)]
pub(crate) enum AttachRate {
    /// `lambda = 1`; comparisons reduce to `mulhi(r, t) < d`.
    Unit,
    /// `lambda < 1`, scaled by 2^64.
    Scaled(u64),
}

impl AttachRate {
    pub(crate) fn from_lambda(lambda: f64) -> Result<Self, GraphError> {
        check_lambda(lambda)?;
        if lambda == 1.0 {
            Ok(AttachRate::Unit)
        } else {
            Ok(AttachRate::Scaled((lambda * 2f64.powi(64)).round() as u64))
        }
    }
}

/// One growth step as recorded in a trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// Time of the new vertex (the graph time after the step).
    pub t_new: usize,
    /// Degree the new vertex was born with.
    pub new_degree: usize,
    /// Black edge count after the step.
    pub edge_count_after: u64,
    /// Degrees of watched vertices after the step, ascending by id.
    pub tracked_degrees: Vec<(usize, usize)>,
}

/// A recorded run: seed summary plus one record per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed_desc: String,
    pub lambda: f64,
    pub seed_t: usize,
    pub seed_edge_count: u64,
    pub tracked: Vec<usize>,
    /// Degrees of tracked vertices that already exist in the seed.
    pub initial_tracked: Vec<(usize, usize)>,
    pub steps: Vec<StepRecord>,
    pub final_snapshot: Option<std::path::PathBuf>,
}

impl Trajectory {
    pub fn final_t(&self) -> usize {
        self.seed_t + self.steps.len()
    }

    pub fn final_edge_count(&self) -> u64 {
        self.steps
            .last()
            .map(|s| s.edge_count_after)
            .unwrap_or(self.seed_edge_count)
    }

    /// Edge count at time `t` (seed time or any recorded step).
    pub fn edge_count_at(&self, t: usize) -> Option<u64> {
        if t == self.seed_t {
            Some(self.seed_edge_count)
        } else if t > self.seed_t && t <= self.final_t() {
            Some(self.steps[t - self.seed_t - 1].edge_count_after)
        } else {
            None
        }
    }

    /// Degree series of a tracked vertex, starting at its first recorded
    /// time (the seed time, or its birth for vertices born during the run).
    pub fn tracked_degree_series(&self, u: usize) -> Option<(usize, Vec<usize>)> {
        if !self.tracked.contains(&u) {
            return None;
        }
        let mut start = self.seed_t;
        let mut values = Vec::new();
        if let Some(&(_, d0)) = self.initial_tracked.iter().find(|(v, _)| *v == u) {
            values.push(d0);
        } else {
            start = u;
        }
        for step in &self.steps {
            if let Some(&(_, d)) = step.tracked_degrees.iter().find(|(v, _)| *v == u) {
                values.push(d);
            }
        }
        if values.is_empty() {
            None
        } else {
            Some((start, values))
        }
    }

    /// Writes the trajectory CSV: `t,new_degree,edge_count[,d_<u>...]`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t,new_degree,edge_count");
        for u in &self.tracked {
            header.push_str(&format!(",d_{}", u));
        }
        writeln!(w, "{}", header)?;
        for step in &self.steps {
            let mut row = format!("{},{},{}", step.t_new, step.new_degree, step.edge_count_after);
            for u in &self.tracked {
                match step.tracked_degrees.iter().find(|(v, _)| v == u) {
                    Some((_, d)) => row.push_str(&format!(",{}", d)),
                    None => row.push(','),
                }
            }
            writeln!(w, "{}", row)?;
        }
        Ok(())
    }
}

/// Draws the neighbor set of the incoming vertex into `out` (ascending).
fn sample_neighbors(
    degrees: &[u32],
    t: usize,
    rate: AttachRate,
    rng: &mut impl RngCore,
    out: &mut Vec<u32>,
) {
    out.clear();
    match rate {
        AttachRate::Unit => {
            let t128 = t as u128;
            for (u, &d) in degrees.iter().enumerate() {
                let hi = ((rng.next_u64() as u128 * t128) >> 64) as u64;
                if hi < d as u64 {
                    out.push(u as u32);
                }
            }
        }
        AttachRate::Scaled(lam) => {
            let t128 = t as u128;
            let lam = lam as u128;
            for (u, &d) in degrees.iter().enumerate() {
                if (rng.next_u64() as u128 * t128) < d as u128 * lam {
                    out.push(u as u32);
                }
            }
        }
    }
}

/// Degree-only fast path: applies hits in place, returns the hit count.
fn sample_hits_in_place(degrees: &mut [u32], t: usize, rate: AttachRate, rng: &mut impl RngCore) -> u64 {
    let mut count = 0u64;
    match rate {
        AttachRate::Unit => {
            let t128 = t as u128;
            for d in degrees.iter_mut() {
                let hi = ((rng.next_u64() as u128 * t128) >> 64) as u64;
                let hit = (hi < *d as u64) as u32;
                *d += hit;
                count += hit as u64;
            }
        }
        AttachRate::Scaled(lam) => {
            let t128 = t as u128;
            let lam = lam as u128;
            for d in degrees.iter_mut() {
                let hit = ((rng.next_u64() as u128 * t128) < *d as u128 * lam) as u32;
                *d += hit;
                count += hit as u64;
            }
        }
    }
    count
}

/// Advances `g` by one step; returns the new vertex's degree.
pub(crate) fn advance(
    g: &mut GrowingGraph,
    rate: AttachRate,
    rng: &mut impl RngCore,
    scratch: &mut Vec<u32>,
) -> usize {
    let t = g.t;
    if g.adjacency.is_some() {
        sample_neighbors(&g.degrees, t, rate, rng, scratch);
        g.push_vertex(scratch);
        scratch.len()
    } else {
        let hits = sample_hits_in_place(&mut g.degrees, t, rate, rng) as usize;
        g.push_vertex_degree_only(hits);
        hits
    }
}

/// Performs one growth step and records it.
pub fn step(
    g: &mut GrowingGraph,
    lambda: f64,
    rng: &mut impl RngCore,
    tracked: &[usize],
) -> Result<StepRecord, ProcessError> {
    let rate = AttachRate::from_lambda(lambda)?;
    let mut scratch = Vec::new();
    let new_degree = advance(g, rate, rng, &mut scratch);
    Ok(StepRecord {
        t_new: g.t(),
        new_degree,
        edge_count_after: g.edge_count(),
        tracked_degrees: tracked_snapshot(g, tracked),
    })
}

fn tracked_snapshot(g: &GrowingGraph, tracked: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = tracked
        .iter()
        .filter(|&&u| u <= g.t())
        .map(|&u| (u, g.degree(u)))
        .collect();
    out.sort_unstable();
    out
}

/// Runs the process to `horizon`, invoking `observe(graph, new_degree)`
/// after every step. This is the allocation-free path for long runs.
pub fn run_streaming<F: FnMut(&GrowingGraph, usize)>(
    g: &mut GrowingGraph,
    lambda: f64,
    horizon: usize,
    rng: &mut impl RngCore,
    mut observe: F,
) -> Result<(), ProcessError> {
    let rate = AttachRate::from_lambda(lambda)?;
    if horizon <= g.t() {
        return Err(ProcessError::HorizonBeforeSeed {
            horizon,
            seed_t: g.t(),
        });
    }
    g.reserve(horizon);
    let mut scratch = Vec::new();
    while g.t() < horizon {
        let new_degree = advance(g, rate, rng, &mut scratch);
        observe(g, new_degree);
    }
    Ok(())
}

/// Runs the process from `seed` to `horizon`, recording every step.
pub fn run_trajectory(
    seed: &GrowingGraph,
    lambda: f64,
    horizon: usize,
    tracked: &[usize],
    rng: &mut impl RngCore,
) -> Result<Trajectory, ProcessError> {
    for &u in tracked {
        if u > horizon {
            return Err(ProcessError::TrackedOutOfRange { vertex: u, horizon });
        }
    }
    let mut g = seed.clone();
    let mut steps = Vec::with_capacity(horizon.saturating_sub(seed.t()));
    let tracked_sorted = {
        let mut v = tracked.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let initial_tracked = tracked_snapshot(&g, &tracked_sorted);
    run_streaming(&mut g, lambda, horizon, rng, |g, new_degree| {
        steps.push(StepRecord {
            t_new: g.t(),
            new_degree,
            edge_count_after: g.edge_count(),
            tracked_degrees: tracked_snapshot(g, &tracked_sorted),
        });
    })?;
    Ok(Trajectory {
        seed_desc: format!("t={} edges={}", seed.t(), seed.edge_count()),
        lambda,
        seed_t: seed.t(),
        seed_edge_count: seed.edge_count(),
        tracked: tracked_sorted,
        initial_tracked,
        steps,
        final_snapshot: None,
    })
}

/// `E[d_new | G(t)] = lambda * 2 E(t) / t`.
pub fn expected_new_degree(g: &GrowingGraph, lambda: f64) -> Result<f64, GraphError> {
    check_lambda(lambda)?;
    Ok(lambda * 2.0 * g.edge_count() as f64 / g.t() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::seeds;
    use crate::rng::replicate_rng;

    #[test]
    fn p3_step_respects_forced_and_fair_vertices() {
        let mut joined0 = 0u64;
        let n = 2000;
        for i in 0..n {
            let mut rng = replicate_rng(3, 0, i);
            let mut g = seeds::p3(false);
            let rec = step(&mut g, 1.0, &mut rng, &[0, 1, 2]).unwrap();
            // vertex 1 is universal: always joined
            let d1 = rec.tracked_degrees.iter().find(|(v, _)| *v == 1).unwrap().1;
            assert_eq!(d1, 3);
            assert!(rec.new_degree >= 1);
            assert_eq!(rec.edge_count_after, 2 + rec.new_degree as u64);
            let d0 = rec.tracked_degrees.iter().find(|(v, _)| *v == 0).unwrap().1;
            if d0 == 2 {
                joined0 += 1;
            }
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((joined0 as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn complete_stays_complete_and_edgeless_stays_edgeless() {
        let mut rng = replicate_rng(9, 0, 0);
        let mut k = seeds::k3(false);
        run_streaming(&mut k, 1.0, 40, &mut rng, |g, nd| {
            assert_eq!(nd, g.t());
        })
        .unwrap();
        assert_eq!(k.edge_count(), 40 * 41 / 2);

        let mut e = seeds::edgeless(3, false);
        run_streaming(&mut e, 1.0, 40, &mut rng, |_, nd| assert_eq!(nd, 0)).unwrap();
        assert_eq!(e.edge_count(), 0);
    }

    #[test]
    fn p3_one_step_edge_counts() {
        for i in 0..50 {
            let mut rng = replicate_rng(5, 0, i);
            let traj = run_trajectory(&seeds::p3(false), 1.0, 3, &[], &mut rng).unwrap();
            assert_eq!(traj.steps.len(), 1);
            let e3 = traj.final_edge_count();
            assert!((3..=5).contains(&e3), "E(3) = {}", e3);
        }
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let seed = seeds::p3(false);
        let mut a = replicate_rng(77, 2, 4);
        let mut b = replicate_rng(77, 2, 4);
        let ta = run_trajectory(&seed, 1.0, 200, &[0, 2], &mut a).unwrap();
        let tb = run_trajectory(&seed, 1.0, 200, &[0, 2], &mut b).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn expected_new_degree_examples() {
        assert_eq!(expected_new_degree(&seeds::p3(false), 1.0).unwrap(), 2.0);
        assert_eq!(expected_new_degree(&seeds::k3(false), 1.0).unwrap(), 3.0);
        assert_eq!(expected_new_degree(&seeds::p3(false), 0.5).unwrap(), 1.0);
    }

    #[test]
    fn universal_vertex_keeps_full_degree_along_a_run() {
        let mut rng = replicate_rng(13, 0, 0);
        let mut g = seeds::p3(false);
        run_streaming(&mut g, 1.0, 300, &mut rng, |g, _| {
            assert_eq!(g.degree(1), g.t());
        })
        .unwrap();
    }

    #[test]
    fn adjacency_and_degree_only_runs_agree_on_degrees() {
        let mut a = replicate_rng(21, 0, 0);
        let mut b = replicate_rng(21, 0, 0);
        let mut with_adj = seeds::p3(true);
        let mut without = seeds::p3(false);
        run_streaming(&mut with_adj, 1.0, 60, &mut a, |_, _| {}).unwrap();
        run_streaming(&mut without, 1.0, 60, &mut b, |_, _| {}).unwrap();
        assert_eq!(with_adj.degrees(), without.degrees());
        assert_eq!(with_adj.edge_count(), without.edge_count());
        with_adj.check_invariants().unwrap();
        without.check_invariants().unwrap();
    }

    #[test]
    fn sampler_tracks_oracle_probabilities() {
        use crate::oracle::{exact_step_distribution, lambda_as_rational};
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &lambda_as_rational(1.0).unwrap(), 12).unwrap();
        let n = 100_000u64;
        let mut counts: std::collections::BTreeMap<u32, u64> = Default::default();
        let mut rng = replicate_rng(31, 0, 0);
        let mut scratch = Vec::new();
        for _ in 0..n {
            let mut h = g.clone();
            sample_neighbors(h.degrees(), h.t(), AttachRate::Unit, &mut rng, &mut scratch);
            let mask = scratch.iter().fold(0u32, |m, &u| m | 1 << u);
            *counts.entry(mask).or_default() += 1;
        }
        let counts: Vec<(u32, u64)> = counts.into_iter().collect();
        assert_eq!(counts.len(), 4);
        assert!(dist.max_abs_error(&counts, n) < 0.01);
    }

    #[test]
    fn tracked_series_covers_birth_of_late_vertices() {
        let mut rng = replicate_rng(8, 0, 0);
        let traj = run_trajectory(&seeds::p3(false), 1.0, 20, &[0, 5], &mut rng).unwrap();
        let (start0, series0) = traj.tracked_degree_series(0).unwrap();
        assert_eq!(start0, 2);
        assert_eq!(series0.len(), 19);
        let (start5, series5) = traj.tracked_degree_series(5).unwrap();
        assert_eq!(start5, 5);
        assert_eq!(series5.len(), 16);
        assert!(traj.tracked_degree_series(7).is_none());
    }

    #[test]
    fn horizon_and_tracking_validation() {
        let mut rng = replicate_rng(1, 0, 0);
        assert_eq!(
            run_trajectory(&seeds::p3(false), 1.0, 2, &[], &mut rng).unwrap_err(),
            ProcessError::HorizonBeforeSeed { horizon: 2, seed_t: 2 }
        );
        assert_eq!(
            run_trajectory(&seeds::p3(false), 1.0, 10, &[99], &mut rng).unwrap_err(),
            ProcessError::TrackedOutOfRange { vertex: 99, horizon: 10 }
        );
    }

    #[test]
    fn trajectory_csv_format() {
        let mut rng = replicate_rng(2, 0, 0);
        let traj = run_trajectory(&seeds::p3(false), 1.0, 4, &[1], &mut rng).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,new_degree,edge_count,d_1");
        assert_eq!(lines.count(), 2);
    }
}
