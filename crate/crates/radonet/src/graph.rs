//! Exact state of the growing graph: degrees in both colours, optional
//! adjacency storage, vertex classification, complements and snapshot I/O.
//!
//! At time `t` the graph has `t + 1` vertices labelled `0..=t`. Vertices are
//! never deleted and edges are never removed, so black degrees and the black
//! edge count only grow. The white graph is always the complement of the
//! black graph, which makes white degrees derivable: `d_w(u) = t - d_b(u)`.
//!
//! Adjacency is stored as a packed lower-triangular bit matrix (one bit per
//! unordered vertex pair). Edge counts grow quadratically in `t`, so full
//! adjacency is config-gated and capped; degree-only mode carries runs to
//! large horizons.

use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("seed graph needs at least two vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("duplicate neighbour {0}")]
    DuplicateNeighbor(usize),
    #[error("adjacency storage is disabled for this graph")]
    AdjacencyDisabled,
    #[error("lambda must lie in (0, 1], got {0}")]
    LambdaOutOfRange(f64),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error reading snapshot: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("snapshot is inconsistent: {0}")]
    Graph(#[from] GraphError),
}

/// Classification of a vertex at the current time.
///
/// `Isolated` means degree 0, `Universal` means degree `t` (connected to
/// every other vertex). Both are absorbing under the growth dynamic when
/// `lambda = 1`; everything else is `Standard`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexClass {
    Standard,
    Isolated,
    Universal,
}

/// Packed lower-triangular bit matrix over unordered vertex pairs.
///
/// The pair `(u, v)` with `u < v` lives at bit `v*(v-1)/2 + u`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TriBits {
    words: Vec<u64>,
}

fn pair_bit(u: usize, v: usize) -> usize {
    debug_assert!(u < v);
    v * (v - 1) / 2 + u
}

impl TriBits {
    fn for_vertices(n: usize) -> Self {
        let bits = n * (n - 1) / 2;
        TriBits {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    fn ensure_vertices(&mut self, n: usize) {
        let bits = n * (n - 1) / 2;
        if self.words.len() * 64 < bits {
            self.words.resize(bits.div_ceil(64), 0);
        }
    }

    pub(crate) fn get(&self, u: usize, v: usize) -> bool {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let bit = pair_bit(a, b);
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    fn set(&mut self, u: usize, v: usize) {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let bit = pair_bit(a, b);
        self.words[bit / 64] |= 1 << (bit % 64);
    }
}

/// The growing graph `G(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowingGraph {
    pub(crate) t: usize,
    pub(crate) degrees: Vec<u32>,
    pub(crate) edge_count: u64,
    pub(crate) adjacency: Option<TriBits>,
}

impl GrowingGraph {
    /// Builds the seed graph from an explicit edge list.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range endpoints and seeds
    /// with fewer than two vertices, each as a distinct error.
    pub fn new_seed(
        edges: &[(usize, usize)],
        n_vertices: usize,
        with_adjacency: bool,
    ) -> Result<Self, GraphError> {
        if n_vertices < 2 {
            return Err(GraphError::TooFewVertices(n_vertices));
        }
        let mut g = GrowingGraph {
            t: n_vertices - 1,
            degrees: vec![0; n_vertices],
            edge_count: 0,
            adjacency: Some(TriBits::for_vertices(n_vertices)),
        };
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            for w in [u, v] {
                if w >= n_vertices {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: w,
                        n: n_vertices,
                    });
                }
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0, key.1));
            }
            g.adjacency.as_mut().unwrap().set(u, v);
            g.degrees[u] += 1;
            g.degrees[v] += 1;
            g.edge_count += 1;
        }
        if !with_adjacency {
            g.adjacency = None;
        }
        Ok(g)
    }

    /// Current time index; the graph has `t + 1` vertices.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn num_vertices(&self) -> usize {
        self.t + 1
    }

    /// Black degree of `u`.
    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u] as usize
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Total black edges `E(t)`.
    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn has_adjacency(&self) -> bool {
        self.adjacency.is_some()
    }

    /// Drops adjacency storage, keeping degrees and counts.
    pub fn without_adjacency(mut self) -> Self {
        self.adjacency = None;
        self
    }

    /// Reserves backing storage for growth up to time `horizon`.
    pub fn reserve(&mut self, horizon: usize) {
        if horizon > self.t {
            self.degrees.reserve(horizon - self.t);
            if let Some(adj) = &mut self.adjacency {
                adj.ensure_vertices(horizon + 1);
            }
        }
    }

    fn check_vertex(&self, u: usize) -> Result<(), GraphError> {
        if u > self.t {
            Err(GraphError::VertexOutOfRange {
                vertex: u,
                n: self.num_vertices(),
            })
        } else {
            Ok(())
        }
    }

    /// White degree `t - d_u(t)`.
    pub fn white_degree(&self, u: usize) -> Result<usize, GraphError> {
        self.check_vertex(u)?;
        Ok(self.t - self.degree(u))
    }

    /// Probability that the next vertex connects to `u`: `lambda * d_u(t) / t`.
    ///
    /// Exactly 0 for an isolated vertex and exactly `lambda` for a universal
    /// one; no clamping is ever needed since `d <= t` and `lambda <= 1`.
    pub fn attach_probability(&self, u: usize, lambda: f64) -> Result<f64, GraphError> {
        check_lambda(lambda)?;
        self.check_vertex(u)?;
        let p = lambda * (self.degree(u) as f64 / self.t as f64);
        debug_assert!((0.0..=lambda).contains(&p));
        Ok(p)
    }

    /// Class of `u`, derived from its degree and the current time.
    ///
    /// Deriving on demand keeps classification consistent by construction;
    /// a stored tag would need repair whenever a universal vertex misses a
    /// step (possible for `lambda < 1`).
    pub fn class_of(&self, u: usize) -> VertexClass {
        let d = self.degree(u);
        if d == 0 {
            VertexClass::Isolated
        } else if d == self.t {
            VertexClass::Universal
        } else {
            VertexClass::Standard
        }
    }

    pub fn classification(&self) -> Vec<VertexClass> {
        (0..=self.t).map(|u| self.class_of(u)).collect()
    }

    pub fn is_standard(&self, u: usize) -> bool {
        self.class_of(u) == VertexClass::Standard
    }

    /// Ascending ids of the first `limit` standard vertices.
    pub fn standard_vertices(&self, limit: usize) -> Vec<usize> {
        (0..=self.t)
            .filter(|&u| self.is_standard(u))
            .take(limit)
            .collect()
    }

    /// Appends vertex `t + 1` attached to `neighbors`.
    ///
    /// Neighbors may come in any order but must be in range and distinct.
    pub fn add_vertex(&mut self, neighbors: &[usize]) -> Result<(), GraphError> {
        let mut sorted: Vec<usize> = neighbors.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(GraphError::DuplicateNeighbor(pair[0]));
            }
        }
        if let Some(&last) = sorted.last() {
            self.check_vertex(last)?;
        }
        let new = self.t + 1;
        if let Some(adj) = &mut self.adjacency {
            adj.ensure_vertices(new + 1);
            for &u in &sorted {
                adj.set(u, new);
            }
        }
        for &u in &sorted {
            self.degrees[u] += 1;
        }
        self.degrees.push(sorted.len() as u32);
        self.edge_count += sorted.len() as u64;
        self.t = new;
        Ok(())
    }

    /// Fast-path append used by the sampler: `neighbors` are strictly
    /// increasing and already validated.
    pub(crate) fn push_vertex(&mut self, neighbors: &[u32]) {
        let new = self.t + 1;
        if let Some(adj) = &mut self.adjacency {
            adj.ensure_vertices(new + 1);
            for &u in neighbors {
                adj.set(u as usize, new);
            }
        }
        for &u in neighbors {
            self.degrees[u as usize] += 1;
        }
        self.degrees.push(neighbors.len() as u32);
        self.edge_count += neighbors.len() as u64;
        self.t = new;
    }

    /// Degree-only fast path: the caller has already incremented existing
    /// degrees in place and reports how many hits it made.
    pub(crate) fn push_vertex_degree_only(&mut self, new_degree: usize) {
        debug_assert!(self.adjacency.is_none());
        self.degrees.push(new_degree as u32);
        self.edge_count += new_degree as u64;
        self.t += 1;
    }

    /// Whether the black edge `{u, v}` is present. Requires adjacency.
    pub fn has_edge(&self, u: usize, v: usize) -> Result<bool, GraphError> {
        let adj = self.adjacency.as_ref().ok_or(GraphError::AdjacencyDisabled)?;
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Ok(false);
        }
        Ok(adj.get(u, v))
    }

    /// Neighbor list of `u` in ascending order. Requires adjacency.
    pub fn neighbors(&self, u: usize) -> Result<Vec<usize>, GraphError> {
        let adj = self.adjacency.as_ref().ok_or(GraphError::AdjacencyDisabled)?;
        self.check_vertex(u)?;
        Ok((0..=self.t)
            .filter(|&v| v != u && adj.get(u, v))
            .collect())
    }

    /// The complement graph: edges are exactly the non-edges. Requires
    /// adjacency.
    pub fn complement(&self) -> Result<GrowingGraph, GraphError> {
        let adj = self.adjacency.as_ref().ok_or(GraphError::AdjacencyDisabled)?;
        let n = self.num_vertices();
        let mut out = TriBits::for_vertices(n);
        for v in 1..n {
            for u in 0..v {
                if !adj.get(u, v) {
                    out.set(u, v);
                }
            }
        }
        let degrees: Vec<u32> = (0..n).map(|u| (self.t - self.degree(u)) as u32).collect();
        let total_pairs = (n as u64) * (n as u64 - 1) / 2;
        Ok(GrowingGraph {
            t: self.t,
            degrees,
            edge_count: total_pairs - self.edge_count,
            adjacency: Some(out),
        })
    }

    /// Edge list with `u < v`, sorted lexicographically. Requires adjacency.
    pub fn edges(&self) -> Result<Vec<(usize, usize)>, GraphError> {
        let adj = self.adjacency.as_ref().ok_or(GraphError::AdjacencyDisabled)?;
        let n = self.num_vertices();
        let mut out = Vec::with_capacity(self.edge_count as usize);
        for u in 0..n {
            for v in (u + 1)..n {
                if adj.get(u, v) {
                    out.push((u, v));
                }
            }
        }
        Ok(out)
    }

    /// Writes the text snapshot format:
    ///
    /// ```text
    /// # radonet-snapshot t=<T> n=<T+1> lambda=<lambda>
    /// u v          (one black edge per line, u < v, sorted)
    /// ```
    pub fn write_snapshot<W: Write>(&self, lambda: f64, mut w: W) -> Result<(), SnapshotError> {
        if self.adjacency.is_none() {
            return Err(GraphError::AdjacencyDisabled.into());
        }
        writeln!(
            w,
            "# radonet-snapshot t={} n={} lambda={}",
            self.t,
            self.num_vertices(),
            lambda
        )?;
        for (u, v) in self.edges()? {
            writeln!(w, "{} {}", u, v)?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`GrowingGraph::write_snapshot`]. The
    /// returned graph has adjacency enabled.
    pub fn read_snapshot<R: BufRead>(r: R) -> Result<(GrowingGraph, f64), SnapshotError> {
        let mut lines = r.lines();
        let header = lines.next().ok_or(SnapshotError::Parse {
            line: 1,
            message: "empty snapshot".into(),
        })??;
        let (t, n, lambda) = parse_snapshot_header(&header)?;
        let mut edges = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<usize, SnapshotError> {
                s.and_then(|x| x.parse().ok()).ok_or(SnapshotError::Parse {
                    line: lineno,
                    message: format!("expected `u v`, got {:?}", line),
                })
            };
            let u = parse(parts.next())?;
            let v = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(SnapshotError::Parse {
                    line: lineno,
                    message: format!("trailing tokens in {:?}", line),
                });
            }
            edges.push((u, v));
        }
        let g = GrowingGraph::new_seed(&edges, n, true)?;
        if g.t != t {
            return Err(SnapshotError::Parse {
                line: 1,
                message: format!("header says t={} but n={} implies t={}", t, n, g.t),
            });
        }
        Ok((g, lambda))
    }

    /// Consistency checks used by tests: degree sum, bounds and the
    /// isolated/universal exclusion.
    pub fn check_invariants(&self) -> Result<(), String> {
        let sum: u64 = self.degrees.iter().map(|&d| d as u64).sum();
        if sum != 2 * self.edge_count {
            return Err(format!("degree sum {} != 2E = {}", sum, 2 * self.edge_count));
        }
        let mut isolated = false;
        let mut universal = false;
        for (u, &d) in self.degrees.iter().enumerate() {
            if d as usize > self.t {
                return Err(format!("degree {} of vertex {} exceeds t={}", d, u, self.t));
            }
            isolated |= d == 0;
            universal |= d as usize == self.t;
        }
        if isolated && universal {
            return Err("graph holds both an isolated and a universal vertex".into());
        }
        if let Some(adj) = &self.adjacency {
            for u in 0..=self.t {
                let listed = (0..=self.t).filter(|&v| v != u && adj.get(u, v)).count();
                if listed != self.degree(u) {
                    return Err(format!(
                        "vertex {}: stored degree {} != adjacency degree {}",
                        u,
                        self.degree(u),
                        listed
                    ));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), GraphError> {
    if lambda.is_finite() && lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(GraphError::LambdaOutOfRange(lambda))
    }
}

fn parse_snapshot_header(header: &str) -> Result<(usize, usize, f64), SnapshotError> {
    let bad = |message: String| SnapshotError::Parse { line: 1, message };
    let rest = header
        .strip_prefix("# radonet-snapshot ")
        .ok_or_else(|| bad(format!("bad header {:?}", header)))?;
    let mut t = None;
    let mut n = None;
    let mut lambda = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("bad header field {:?}", field)))?;
        let invalid = || bad(format!("bad value in {:?}", field));
        match key {
            "t" => t = Some(value.parse::<usize>().map_err(|_| invalid())?),
            "n" => n = Some(value.parse::<usize>().map_err(|_| invalid())?),
            "lambda" => lambda = Some(value.parse::<f64>().map_err(|_| invalid())?),
            _ => return Err(bad(format!("unknown header field {:?}", key))),
        }
    }
    match (t, n, lambda) {
        (Some(t), Some(n), Some(lambda)) => Ok((t, n, lambda)),
        _ => Err(bad(format!("incomplete header {:?}", header))),
    }
}

/// Convenience seeds used across tests and example configs.
pub mod seeds {
    use super::GrowingGraph;

    /// Path on three vertices: edges (0,1), (1,2).
    pub fn p3(with_adjacency: bool) -> GrowingGraph {
        GrowingGraph::new_seed(&[(0, 1), (1, 2)], 3, with_adjacency).unwrap()
    }

    /// Triangle.
    pub fn k3(with_adjacency: bool) -> GrowingGraph {
        GrowingGraph::new_seed(&[(0, 1), (0, 2), (1, 2)], 3, with_adjacency).unwrap()
    }

    /// Edgeless graph on `n` vertices.
    pub fn edgeless(n: usize, with_adjacency: bool) -> GrowingGraph {
        GrowingGraph::new_seed(&[], n, with_adjacency).unwrap()
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize, with_adjacency: bool) -> GrowingGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        GrowingGraph::new_seed(&edges, n, with_adjacency).unwrap()
    }
}
