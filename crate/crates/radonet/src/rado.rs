//! Extension-property experiments on finite snapshots.
//!
//! A witness for a request `(U, V)` is a vertex adjacent to every member of
//! `U` and to none of `V`. Witness counting restricts to vertices greater
//! than `max(U on V)`: the adjacency of such a vertex to each member is
//! settled at its own birth, so witness status is permanent and counts are
//! monotone in `t`.
//!
//! Counting uses packed adjacency rows of the request members, so a count
//! over all candidates is a handful of bitwise word operations per request.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{GraphError, GrowingGraph};
use crate::process::{run_streaming, ProcessError};
use crate::rng::replicate_rng;
use crate::stats::wilson_interval;

#[derive(Debug, Error, PartialEq)]
pub enum RadoError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("request sets overlap at vertex {0}")]
    OverlappingSets(usize),
    #[error("request member {0} is not a standard vertex")]
    NonStandardMember(usize),
    #[error("need at least {needed} standard vertices, found {available}")]
    InsufficientStandardVertices { available: usize, needed: usize },
    #[error("checkpoints must be ascending and end at the horizon")]
    BadCheckpoints,
}

/// An extension request: the witness must be adjacent to all of `adjacent`
/// and none of `non_adjacent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessRequest {
    adjacent: Vec<usize>,
    non_adjacent: Vec<usize>,
}

impl WitnessRequest {
    pub fn new(mut adjacent: Vec<usize>, mut non_adjacent: Vec<usize>) -> Result<Self, RadoError> {
        adjacent.sort_unstable();
        adjacent.dedup();
        non_adjacent.sort_unstable();
        non_adjacent.dedup();
        if let Some(&v) = adjacent.iter().find(|v| non_adjacent.binary_search(v).is_ok()) {
            return Err(RadoError::OverlappingSets(v));
        }
        Ok(WitnessRequest {
            adjacent,
            non_adjacent,
        })
    }

    /// Validating constructor for requests built against a live graph: all
    /// members must be standard vertices right now.
    pub fn for_graph(
        g: &GrowingGraph,
        adjacent: Vec<usize>,
        non_adjacent: Vec<usize>,
    ) -> Result<Self, RadoError> {
        let req = Self::new(adjacent, non_adjacent)?;
        for &v in req.members() {
            if v > g.t() {
                return Err(GraphError::VertexOutOfRange {
                    vertex: v,
                    n: g.num_vertices(),
                }
                .into());
            }
            if !g.is_standard(v) {
                return Err(RadoError::NonStandardMember(v));
            }
        }
        Ok(req)
    }

    pub fn adjacent(&self) -> &[usize] {
        &self.adjacent
    }

    pub fn non_adjacent(&self) -> &[usize] {
        &self.non_adjacent
    }

    pub fn members(&self) -> impl Iterator<Item = &usize> {
        self.adjacent.iter().chain(self.non_adjacent.iter())
    }

    pub fn max_member(&self) -> Option<usize> {
        self.members().max().copied()
    }

    pub fn is_member(&self, v: usize) -> bool {
        self.adjacent.binary_search(&v).is_ok() || self.non_adjacent.binary_search(&v).is_ok()
    }

    fn check_in_range(&self, g: &GrowingGraph) -> Result<(), RadoError> {
        if let Some(m) = self.max_member() {
            if m > g.t() {
                return Err(GraphError::VertexOutOfRange {
                    vertex: m,
                    n: g.num_vertices(),
                }
                .into());
            }
        }
        Ok(())
    }
}

/// Smallest vertex outside the request satisfying it, anywhere in the graph.
pub fn find_witness(g: &GrowingGraph, req: &WitnessRequest) -> Result<Option<usize>, RadoError> {
    req.check_in_range(g)?;
    'candidate: for w in 0..=g.t() {
        if req.is_member(w) {
            continue;
        }
        for &u in req.adjacent() {
            if !g.has_edge(w, u)? {
                continue 'candidate;
            }
        }
        for &v in req.non_adjacent() {
            if g.has_edge(w, v)? {
                continue 'candidate;
            }
        }
        return Ok(Some(w));
    }
    Ok(None)
}

/// Adjacency row of `v`: bit `w` is set iff `{v, w}` is an edge.
pub fn adjacency_row(g: &GrowingGraph, v: usize) -> Result<Vec<u64>, GraphError> {
    if !g.has_adjacency() {
        return Err(GraphError::AdjacencyDisabled);
    }
    let n = g.num_vertices();
    let mut row = vec![0u64; n.div_ceil(64)];
    for w in 0..n {
        if w != v && g.has_edge(v, w)? {
            row[w / 64] |= 1 << (w % 64);
        }
    }
    Ok(row)
}

/// Counts bits `w` in `[from, to]` set in every `required` row and in no
/// `excluded` row.
pub fn count_satisfying(required: &[&[u64]], excluded: &[&[u64]], from: usize, to: usize) -> u64 {
    if from > to {
        return 0;
    }
    let first_word = from / 64;
    let last_word = to / 64;
    let mut total = 0u64;
    for w in first_word..=last_word {
        let mut acc = !0u64;
        for r in required {
            acc &= r[w];
        }
        for e in excluded {
            acc &= !e[w];
        }
        if w == first_word {
            acc &= !0u64 << (from % 64);
        }
        if w == last_word {
            let high = to % 64;
            if high < 63 {
                acc &= (1u64 << (high + 1)) - 1;
            }
        }
        total += acc.count_ones() as u64;
    }
    total
}

/// Number of witnesses among vertices greater than `max(U on V)`.
pub fn witness_count(g: &GrowingGraph, req: &WitnessRequest) -> Result<u64, RadoError> {
    req.check_in_range(g)?;
    if !g.has_adjacency() {
        return Err(GraphError::AdjacencyDisabled.into());
    }
    let from = req.max_member().map(|m| m + 1).unwrap_or(0);
    if from > g.t() {
        return Ok(0);
    }
    let required: Vec<Vec<u64>> = req
        .adjacent()
        .iter()
        .map(|&v| adjacency_row(g, v))
        .collect::<Result<_, _>>()?;
    let excluded: Vec<Vec<u64>> = req
        .non_adjacent()
        .iter()
        .map(|&v| adjacency_row(g, v))
        .collect::<Result<_, _>>()?;
    let required: Vec<&[u64]> = required.iter().map(|r| r.as_slice()).collect();
    let excluded: Vec<&[u64]> = excluded.iter().map(|r| r.as_slice()).collect();
    Ok(count_satisfying(&required, &excluded, from, g.t()))
}

/// All `k`-subsets of `items`, in lexicographic index order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k > items.len() {
        return Vec::new();
    }
    if k == 0 {
        return vec![Vec::new()];
    }
    let n = items.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Every disjoint `(U, V)` pair over `pool` with `|U| <= max_u` and
/// `|V| <= max_v`, including the trivially satisfied empty request.
pub fn enumerate_requests(pool: &[usize], max_u: usize, max_v: usize) -> Vec<WitnessRequest> {
    let mut out = Vec::new();
    for a in 0..=max_u {
        for u_set in combinations(pool, a) {
            let rest: Vec<usize> = pool.iter().copied().filter(|v| !u_set.contains(v)).collect();
            for b in 0..=max_v {
                for v_set in combinations(&rest, b) {
                    out.push(WitnessRequest::new(u_set.clone(), v_set).expect("disjoint"));
                }
            }
        }
    }
    out
}

/// Uniformly samples `count` disjoint requests among the earliest
/// `pool_size` standard vertices, with set sizes up to `max_size` and not
/// both empty.
pub fn generate_requests(
    g: &GrowingGraph,
    max_size: usize,
    count: usize,
    pool_size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<WitnessRequest>, RadoError> {
    let pool = g.standard_vertices(pool_size);
    if pool.len() < 2 * max_size {
        return Err(RadoError::InsufficientStandardVertices {
            available: pool.len(),
            needed: 2 * max_size,
        });
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.gen_range(0..=max_size);
        let b = rng.gen_range(0..=max_size);
        if a + b == 0 {
            continue;
        }
        let mut shuffled = pool.clone();
        shuffled.shuffle(rng);
        let u_set = shuffled[..a].to_vec();
        let v_set = shuffled[a..a + b].to_vec();
        out.push(WitnessRequest::new(u_set, v_set).expect("disjoint by construction"));
    }
    Ok(out)
}

/// Witness counts of one request at the checkpoints of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionCurve {
    pub request_index: usize,
    pub samples: Vec<(usize, u64)>,
    /// Earliest checkpoint with a positive count (checkpoint resolution).
    pub first_satisfied_t: Option<usize>,
}

/// Aggregate over replicates for one request at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointStat {
    pub t: usize,
    pub replicates: u64,
    pub satisfied: u64,
    pub satisfied_fraction: f64,
    pub mean_witness_count: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionSummary {
    pub request: WitnessRequest,
    pub per_checkpoint: Vec<CheckpointStat>,
}

#[derive(Debug)]
pub struct SatisfactionOutcome {
    pub summaries: Vec<SatisfactionSummary>,
    /// Per-replicate curves, replicate-major.
    pub curves: Vec<Vec<SatisfactionCurve>>,
}

pub struct SatisfactionSpec<'a> {
    pub seed: &'a GrowingGraph,
    pub lambda: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub stream_purpose: u32,
}

/// Runs `replicates` growth processes and records witness counts for every
/// request at every checkpoint; aggregates satisfied fractions with 95%
/// Wilson intervals.
pub fn satisfaction_experiment(
    spec: &SatisfactionSpec,
    requests: &[WitnessRequest],
    checkpoints: &[usize],
) -> Result<SatisfactionOutcome, RadoError> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RadoError::BadCheckpoints);
    }
    if !spec.seed.has_adjacency() {
        return Err(GraphError::AdjacencyDisabled.into());
    }
    let horizon = *checkpoints.last().unwrap();
    let per_replicate: Vec<Vec<Vec<u64>>> = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(spec.master_seed, spec.stream_purpose, rep as u64);
            let mut g = spec.seed.clone();
            let mut counts: Vec<Vec<u64>> = vec![Vec::new(); requests.len()];
            let mut next_checkpoint = 0usize;
            run_streaming(&mut g, spec.lambda, horizon, &mut rng, |g, _| {
                while next_checkpoint < checkpoints.len() && g.t() == checkpoints[next_checkpoint]
                {
                    for (req, c) in requests.iter().zip(counts.iter_mut()) {
                        c.push(witness_count(g, req).expect("validated request"));
                    }
                    next_checkpoint += 1;
                }
            })
            .expect("validated run spec");
            counts
        })
        .collect();

    let curves: Vec<Vec<SatisfactionCurve>> = per_replicate
        .iter()
        .map(|counts| {
            counts
                .iter()
                .enumerate()
                .map(|(i, c)| SatisfactionCurve {
                    request_index: i,
                    samples: checkpoints.iter().copied().zip(c.iter().copied()).collect(),
                    first_satisfied_t: checkpoints
                        .iter()
                        .zip(c.iter())
                        .find(|(_, &n)| n > 0)
                        .map(|(&t, _)| t),
                })
                .collect()
        })
        .collect();

    let summaries = requests
        .iter()
        .enumerate()
        .map(|(i, req)| {
            let per_checkpoint = checkpoints
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let satisfied = per_replicate.iter().filter(|c| c[i][k] > 0).count() as u64;
                    let total: u64 = per_replicate.iter().map(|c| c[i][k]).sum();
                    let n = spec.replicates as u64;
                    let (ci_low, ci_high) = wilson_interval(satisfied, n, 1.959964);
                    CheckpointStat {
                        t,
                        replicates: n,
                        satisfied,
                        satisfied_fraction: satisfied as f64 / n as f64,
                        mean_witness_count: total as f64 / n as f64,
                        ci_low,
                        ci_high,
                    }
                })
                .collect();
            SatisfactionSummary {
                request: req.clone(),
                per_checkpoint,
            }
        })
        .collect();

    Ok(SatisfactionOutcome { summaries, curves })
}

/// Specification for the per-replicate-pool pattern study: each replicate
/// enumerates all `(|U|, |V|)` requests of the listed size patterns over its
/// own earliest standard vertices.
pub struct PoolStudySpec<'a> {
    pub seed: &'a GrowingGraph,
    pub lambda: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub stream_purpose: u32,
    pub pool_size: usize,
    pub patterns: Vec<(usize, usize)>,
    pub checkpoints: Vec<usize>,
}

/// Satisfaction aggregate for one size pattern at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCheckpointAgg {
    pub u_size: usize,
    pub v_size: usize,
    pub t: usize,
    pub pairs: u64,
    pub satisfied: u64,
    pub mean_witness_count: f64,
}

impl PatternCheckpointAgg {
    pub fn satisfied_fraction(&self) -> f64 {
        self.satisfied as f64 / self.pairs as f64
    }
}

/// Final-horizon agreement row for a singleton request.
#[derive(Debug, Clone, PartialEq)]
pub struct SingletonAgreement {
    pub replicate: usize,
    pub vertex: usize,
    /// true for `U = {vertex}`, false for `V = {vertex}`.
    pub in_adjacent_side: bool,
    /// `witness_count / T`.
    pub witness_share: f64,
    /// `x_hat` for the adjacent side, `1 - x_hat` for the avoided side.
    pub predicted_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolStudy {
    pub aggregates: Vec<PatternCheckpointAgg>,
    pub singletons: Vec<SingletonAgreement>,
    pub short_pool_replicates: u64,
}

/// Runs the pattern study. Requests are enumerated per replicate over that
/// replicate's own first `pool_size` standard vertices (standard judged at
/// the final horizon), so aggregates range over replicate-request pairs.
pub fn pool_pattern_study(spec: &PoolStudySpec) -> Result<PoolStudy, RadoError> {
    if spec.checkpoints.is_empty() || spec.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RadoError::BadCheckpoints);
    }
    if !spec.seed.has_adjacency() {
        return Err(GraphError::AdjacencyDisabled.into());
    }
    let checkpoints = spec.checkpoints.clone();
    let horizon = *checkpoints.last().unwrap();

    struct ReplicateOut {
        // per pattern, per checkpoint: (pairs, satisfied, total count)
        cells: Vec<Vec<(u64, u64, u64)>>,
        singletons: Vec<SingletonAgreement>,
        short_pool: bool,
    }

    let results: Vec<ReplicateOut> = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(spec.master_seed, spec.stream_purpose, rep as u64);
            let mut g = spec.seed.clone();
            run_streaming(&mut g, spec.lambda, horizon, &mut rng, |_, _| {})
                .expect("validated run spec");
            let pool = g.standard_vertices(spec.pool_size);
            let mut out = ReplicateOut {
                cells: vec![vec![(0, 0, 0); checkpoints.len()]; spec.patterns.len()],
                singletons: Vec::new(),
                short_pool: pool.len() < spec.pool_size,
            };
            if out.short_pool {
                return out;
            }
            let rows: Vec<Vec<u64>> = pool
                .iter()
                .map(|&v| adjacency_row(&g, v).expect("adjacency enabled"))
                .collect();
            let row_of = |v: usize| -> &[u64] {
                let idx = pool.iter().position(|&p| p == v).unwrap();
                rows[idx].as_slice()
            };
            for (p_idx, &(a, b)) in spec.patterns.iter().enumerate() {
                for u_set in combinations(&pool, a) {
                    let rest: Vec<usize> =
                        pool.iter().copied().filter(|v| !u_set.contains(v)).collect();
                    for v_set in combinations(&rest, b) {
                        let from = u_set
                            .iter()
                            .chain(v_set.iter())
                            .max()
                            .map(|&m| m + 1)
                            .unwrap_or(0);
                        let required: Vec<&[u64]> = u_set.iter().map(|&v| row_of(v)).collect();
                        let excluded: Vec<&[u64]> = v_set.iter().map(|&v| row_of(v)).collect();
                        for (k, &t) in checkpoints.iter().enumerate() {
                            let count = count_satisfying(&required, &excluded, from, t);
                            let cell = &mut out.cells[p_idx][k];
                            cell.0 += 1;
                            cell.1 += (count > 0) as u64;
                            cell.2 += count;
                        }
                        // singleton agreement at the final horizon
                        if a + b == 1 {
                            let (vertex, in_adjacent_side) = if a == 1 {
                                (u_set[0], true)
                            } else {
                                (v_set[0], false)
                            };
                            let count = count_satisfying(&required, &excluded, from, horizon);
                            let x_hat = g.degree(vertex) as f64 / horizon as f64;
                            out.singletons.push(SingletonAgreement {
                                replicate: rep,
                                vertex,
                                in_adjacent_side,
                                witness_share: count as f64 / horizon as f64,
                                predicted_share: if in_adjacent_side { x_hat } else { 1.0 - x_hat },
                            });
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut aggregates = Vec::new();
    for (p_idx, &(a, b)) in spec.patterns.iter().enumerate() {
        for (k, &t) in checkpoints.iter().enumerate() {
            let mut pairs = 0u64;
            let mut satisfied = 0u64;
            let mut total = 0u64;
            for r in &results {
                let (p, s, c) = r.cells[p_idx][k];
                pairs += p;
                satisfied += s;
                total += c;
            }
            aggregates.push(PatternCheckpointAgg {
                u_size: a,
                v_size: b,
                t,
                pairs,
                satisfied,
                mean_witness_count: if pairs > 0 { total as f64 / pairs as f64 } else { 0.0 },
            });
        }
    }
    let singletons = results
        .iter()
        .flat_map(|r| r.singletons.iter().cloned())
        .collect();
    let short_pool_replicates = results.iter().filter(|r| r.short_pool).count() as u64;
    Ok(PoolStudy {
        aggregates,
        singletons,
        short_pool_replicates,
    })
}
