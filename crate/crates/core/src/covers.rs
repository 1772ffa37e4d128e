//! `Z_p` voltage assignments and the covers they define.
//!
//! A weighting stores one residue per edge instance, oriented from the
//! smaller endpoint to the larger; the reverse orientation carries the
//! negated value. The cover of `g` has vertex `(x, z)` at index `x·p + z`,
//! and each base edge `u → v` of weight `w` lifts to the `p` edges
//! `(u, z) — (v, z − w)`.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{boundary_of_indicator, GraphError, MultiGraph};
use crate::rng::stream_rng;

/// Walks per parallel work unit; each unit draws from its own stream.
pub const SAMPLE_CHUNK: usize = 4096;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("p = {0} is not an odd prime")]
    BadModulus(u64),
    #[error("L must be positive with 2L < p, got L = {l}, p = {p}")]
    BadRange { p: u64, l: u64 },
    #[error("weight {value} on edge {edge} lies outside [-{l}, {l}]")]
    WeightOutOfRange { edge: usize, value: i64, l: u64 },
    #[error("weighting has {got} values for a graph with {expected} edges")]
    MissingWeight { expected: usize, got: usize },
    #[error("weights on edge {edge} are not antisymmetric")]
    Antisymmetry { edge: usize },
    #[error("({u}, {v}) is not an edge")]
    NonEdge { u: usize, v: usize },
    #[error("more weight lines for ({u}, {v}) than parallel edges")]
    TooManyInstances { u: usize, v: usize },
    #[error("cycle must have at least one step and end where it starts")]
    NotClosed,
    #[error("walk length must be at least {min}, got {got}")]
    BadLength { min: usize, got: usize },
    #[error("the graph needs positive degree at every vertex")]
    ZeroDegree,
    #[error("no closed walks accepted in {trials} trials")]
    NoAcceptedSamples { trials: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= p {
        if p % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

fn check_params(p: u64, l: u64) -> Result<(), CoverError> {
    if p == 2 || !is_prime(p) {
        return Err(CoverError::BadModulus(p));
    }
    if l == 0 || 2 * l >= p {
        return Err(CoverError::BadRange { p, l });
    }
    Ok(())
}

/// Symmetric representative of `x mod p` in `(−p/2, p/2)`.
fn centered(x: i64, p: u64) -> i64 {
    let p = p as i64;
    let r = x.rem_euclid(p);
    if r > p / 2 {
        r - p
    } else {
        r
    }
}

fn residue(x: i64, p: u64) -> u64 {
    x.rem_euclid(p as i64) as u64
}

/// Antisymmetric `Z_p` weighting with representatives in `[−L, L]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeWeighting {
    p: u64,
    l: u64,
    values: Vec<i64>,
}

impl EdgeWeighting {
    /// `values[e]` is the weight of edge instance `e` oriented from its smaller endpoint.
    pub fn new(g: &MultiGraph, p: u64, l: u64, values: Vec<i64>) -> Result<Self, CoverError> {
        check_params(p, l)?;
        if values.len() != g.edge_count() {
            return Err(CoverError::MissingWeight {
                expected: g.edge_count(),
                got: values.len(),
            });
        }
        for (edge, &value) in values.iter().enumerate() {
            if value.unsigned_abs() > l {
                return Err(CoverError::WeightOutOfRange { edge, value, l });
            }
        }
        Ok(Self { p, l, values })
    }

    pub fn zero(g: &MultiGraph, p: u64, l: u64) -> Result<Self, CoverError> {
        Self::new(g, p, l, vec![0; g.edge_count()])
    }

    /// Builds a weighting from a function of oriented edges `(from, to, edge id)`,
    /// checking that the two orientations of every edge cancel mod `p`.
    pub fn from_fn<F>(g: &MultiGraph, p: u64, l: u64, f: F) -> Result<Self, CoverError>
    where
        F: Fn(usize, usize, usize) -> i64,
    {
        check_params(p, l)?;
        let mut values = Vec::with_capacity(g.edge_count());
        for (edge, &(u, v)) in g.edges().iter().enumerate() {
            let fwd = f(u, v, edge);
            let back = f(v, u, edge);
            if residue(fwd + back, p) != 0 {
                return Err(CoverError::Antisymmetry { edge });
            }
            values.push(centered(fwd, p));
        }
        Self::new(g, p, l, values)
    }

    /// `φ(x → y) = h(y) − h(x)`, which sums to zero around every cycle.
    pub fn coboundary(g: &MultiGraph, p: u64, l: u64, h: &[i64]) -> Result<Self, CoverError> {
        Self::from_fn(g, p, l, |u, v, _| h[v] - h[u])
    }

    /// Coboundary of a uniformly random `h` with values in `0..=L`.
    pub fn random_coboundary(g: &MultiGraph, p: u64, l: u64, seed: u64) -> Result<Self, CoverError> {
        let mut rng = stream_rng(seed, 0);
        let h: Vec<i64> = (0..g.vertex_count()).map(|_| rng.random_range(0..=l as i64)).collect();
        Self::coboundary(g, p, l, &h)
    }

    /// Independent uniform `±1` on every edge instance.
    pub fn random_signs(g: &MultiGraph, p: u64, seed: u64) -> Result<Self, CoverError> {
        let mut rng = stream_rng(seed, 0);
        let values = (0..g.edge_count())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        Self::new(g, p, 1, values)
    }

    /// Independent uniform values in `[−L, L]`.
    pub fn random_uniform(g: &MultiGraph, p: u64, l: u64, seed: u64) -> Result<Self, CoverError> {
        check_params(p, l)?;
        let mut rng = stream_rng(seed, 0);
        let values = (0..g.edge_count())
            .map(|_| rng.random_range(-(l as i64)..=l as i64))
            .collect();
        Self::new(g, p, l, values)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Weight of edge instance `edge` traversed from `from`.
    pub fn oriented(&self, g: &MultiGraph, edge: usize, from: usize) -> i64 {
        let (u, _) = g.edge(edge);
        if from == u {
            self.values[edge]
        } else {
            -self.values[edge]
        }
    }
}

/// Reads weights in the `u v w` format; see [`format_weights`].
///
/// Repeated lines for the same pair bind successive parallel edge instances
/// in edge-list order, and edges without a line get weight zero.
pub fn parse_weights(g: &MultiGraph, text: &str, p: u64, l: u64) -> Result<EdgeWeighting, CoverError> {
    check_params(p, l)?;
    let mut instances: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
    for (id, &e) in g.edges().iter().enumerate() {
        instances.entry(e).or_default().push(id);
    }
    let mut used: std::collections::HashMap<(usize, usize), usize> = Default::default();
    let mut values = vec![0i64; g.edge_count()];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l_trim = raw.trim();
        if l_trim.is_empty() || l_trim.starts_with('#') {
            continue;
        }
        let t: Vec<&str> = l_trim.split_whitespace().collect();
        let bad = |msg: String| CoverError::Parse { line, msg };
        if t.len() != 3 {
            return Err(bad(format!("expected `u v w`, got {l_trim:?}")));
        }
        let u: usize = t[0].parse().map_err(|_| bad(format!("bad vertex {:?}", t[0])))?;
        let v: usize = t[1].parse().map_err(|_| bad(format!("bad vertex {:?}", t[1])))?;
        let w: i64 = t[2].parse().map_err(|_| bad(format!("bad weight {:?}", t[2])))?;
        let key = (u.min(v), u.max(v));
        let ids = instances.get(&key).ok_or(CoverError::NonEdge { u, v })?;
        let k = used.entry(key).or_insert(0);
        let id = *ids.get(*k).ok_or(CoverError::TooManyInstances { u, v })?;
        *k += 1;
        if w.unsigned_abs() > l {
            return Err(CoverError::WeightOutOfRange { edge: id, value: w, l });
        }
        values[id] = if u < v { w } else { -w };
    }
    EdgeWeighting::new(g, p, l, values)
}

/// One `u v w` line per edge instance with `u < v`, in edge order.
pub fn format_weights(g: &MultiGraph, w: &EdgeWeighting) -> String {
    let mut out = String::new();
    for (&(u, v), &x) in g.edges().iter().zip(w.values()) {
        writeln!(out, "{u} {v} {x}").unwrap();
    }
    out
}

pub fn read_weights(g: &MultiGraph, path: impl AsRef<Path>, p: u64, l: u64) -> Result<EdgeWeighting, CoverError> {
    parse_weights(g, &std::fs::read_to_string(path)?, p, l)
}

/// A `p`-fold cover together with its base graph.
#[derive(Clone, Debug)]
pub struct CoverGraph {
    pub base: MultiGraph,
    pub p: u64,
    pub graph: MultiGraph,
}

impl CoverGraph {
    pub fn vertex(&self, x: usize, z: u64) -> usize {
        x * self.p as usize + z as usize
    }

    /// `(base vertex, fiber coordinate)` of a cover vertex.
    pub fn project(&self, v: usize) -> (usize, u64) {
        (v / self.p as usize, (v % self.p as usize) as u64)
    }
}

pub fn build_cover(g: &MultiGraph, w: &EdgeWeighting) -> Result<CoverGraph, CoverError> {
    if w.values().len() != g.edge_count() {
        return Err(CoverError::MissingWeight {
            expected: g.edge_count(),
            got: w.values().len(),
        });
    }
    let p = w.p();
    let pu = p as usize;
    let mut cover = MultiGraph::new(g.vertex_count() * pu);
    for (&(u, v), &x) in g.edges().iter().zip(w.values()) {
        for z in 0..p {
            let z2 = residue(z as i64 - x, p);
            cover.add_edge(u * pu + z as usize, v * pu + z2 as usize)?;
        }
    }
    Ok(CoverGraph {
        base: g.clone(),
        p,
        graph: cover,
    })
}

/// The deck transformation `(x, z) ↦ (x, z + shift)` as a vertex permutation.
pub fn deck_shift(c: &CoverGraph, shift: u64) -> Vec<usize> {
    (0..c.graph.vertex_count())
        .map(|v| {
            let (x, z) = c.project(v);
            c.vertex(x, (z + shift) % c.p)
        })
        .collect()
}

/// Sum of `φ` along a closed vertex sequence, as a residue in `0..p`.
///
/// Each step uses the lowest-id edge instance between its endpoints.
pub fn cycle_sum(g: &MultiGraph, w: &EdgeWeighting, cycle: &[usize]) -> Result<u64, CoverError> {
    if cycle.len() < 2 || cycle.first() != cycle.last() {
        return Err(CoverError::NotClosed);
    }
    let mut sum = 0i64;
    for pair in cycle.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a >= g.vertex_count() {
            return Err(CoverError::NonEdge { u: a, v: b });
        }
        let edge = g
            .incident(a)
            .iter()
            .filter(|&&(nb, _)| nb == b)
            .map(|&(_, id)| id)
            .min()
            .ok_or(CoverError::NonEdge { u: a, v: b })?;
        sum += w.oriented(g, edge, a);
    }
    Ok(residue(sum, w.p()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleSumSample {
    pub length: usize,
    pub trials: usize,
    pub accepted: usize,
    pub nonzero: usize,
    pub fraction_nonzero: f64,
}

fn check_walkable(g: &MultiGraph) -> Result<(), CoverError> {
    if g.vertex_count() == 0 || (0..g.vertex_count()).any(|v| g.degree(v) == 0) {
        return Err(CoverError::ZeroDegree);
    }
    Ok(())
}

/// Random walk of `len` steps from a uniform start; returns (start, end, sum).
fn walk<R: Rng>(g: &MultiGraph, w: &EdgeWeighting, len: usize, rng: &mut R) -> (usize, usize, i64) {
    let start = rng.random_range(0..g.vertex_count());
    let mut at = start;
    let mut sum = 0i64;
    for _ in 0..len {
        let inc = g.incident(at);
        let (next, edge) = inc[rng.random_range(0..inc.len())];
        sum += w.oriented(g, edge, at);
        at = next;
    }
    (start, at, sum)
}

fn chunked<T, F>(trials: usize, seed: u64, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut rand_chacha::ChaCha8Rng, usize) -> T + Sync,
{
    let chunks = trials.div_ceil(SAMPLE_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = SAMPLE_CHUNK.min(trials - c * SAMPLE_CHUNK);
            let mut rng = stream_rng(seed, c as u64);
            per_chunk(&mut rng, size)
        })
        .collect()
}

/// Fraction of accepted closed walks of length `l` whose weight sum is nonzero.
///
/// Each trial is a uniform random walk from a uniform start, kept only when
/// it returns to its start.
pub fn sample_cycle_sums(
    g: &MultiGraph,
    w: &EdgeWeighting,
    l: usize,
    trials: usize,
    seed: u64,
) -> Result<CycleSumSample, CoverError> {
    if l < 3 {
        return Err(CoverError::BadLength { min: 3, got: l });
    }
    check_walkable(g)?;
    let p = w.p();
    let parts = chunked(trials, seed, |rng, size| {
        let (mut acc, mut nz) = (0usize, 0usize);
        for _ in 0..size {
            let (s, e, sum) = walk(g, w, l, rng);
            if s == e {
                acc += 1;
                if residue(sum, p) != 0 {
                    nz += 1;
                }
            }
        }
        (acc, nz)
    });
    let accepted: usize = parts.iter().map(|x| x.0).sum();
    let nonzero: usize = parts.iter().map(|x| x.1).sum();
    if accepted == 0 {
        return Err(CoverError::NoAcceptedSamples { trials });
    }
    Ok(CycleSumSample {
        length: l,
        trials,
        accepted,
        nonzero,
        fraction_nonzero: nonzero as f64 / accepted as f64,
    })
}

/// Exact counts `(closed walks, closed walks with nonzero sum)` of length `l`,
/// counting each start vertex and each edge instance separately.
pub fn exact_cycle_sums(g: &MultiGraph, w: &EdgeWeighting, l: usize) -> Result<(u128, u128), CoverError> {
    check_walkable(g)?;
    let n = g.vertex_count();
    let p = w.p() as usize;
    let results: Vec<(u128, u128)> = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut cur = vec![0u128; n * p];
            cur[start * p] = 1;
            for _ in 0..l {
                let mut next = vec![0u128; n * p];
                for x in 0..n {
                    for z in 0..p {
                        let c = cur[x * p + z];
                        if c == 0 {
                            continue;
                        }
                        for &(y, e) in g.incident(x) {
                            let z2 = residue(z as i64 + w.oriented(g, e, x), p as u64) as usize;
                            next[y * p + z2] += c;
                        }
                    }
                }
                cur = next;
            }
            let closed: u128 = cur[start * p..(start + 1) * p].iter().sum();
            (closed, closed - cur[start * p])
        })
        .collect();
    Ok(results
        .into_iter()
        .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1)))
}

/// `(1/2) Σ_z |q(z) − 1/p|`.
pub fn tv_to_uniform(dist: &[f64]) -> f64 {
    let u = 1.0 / dist.len() as f64;
    0.5 * dist.iter().map(|q| (q - u).abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkSumDistribution {
    pub p: u64,
    pub steps: usize,
    pub trials: usize,
    pub counts: Vec<u64>,
    pub distribution: Vec<f64>,
    pub tv_to_uniform: f64,
}

/// Empirical law of the weight sum along a `t`-step random walk from a uniform start.
pub fn walk_sum_distribution(
    g: &MultiGraph,
    w: &EdgeWeighting,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<WalkSumDistribution, CoverError> {
    if t == 0 {
        return Err(CoverError::BadLength { min: 1, got: t });
    }
    check_walkable(g)?;
    let p = w.p();
    let parts = chunked(trials, seed, |rng, size| {
        let mut counts = vec![0u64; p as usize];
        for _ in 0..size {
            let (_, _, sum) = walk(g, w, t, rng);
            counts[residue(sum, p) as usize] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; p as usize];
    for part in parts {
        for (a, b) in counts.iter_mut().zip(part) {
            *a += b;
        }
    }
    let distribution: Vec<f64> = counts
        .iter()
        .map(|&c| if trials == 0 { 0.0 } else { c as f64 / trials as f64 })
        .collect();
    Ok(WalkSumDistribution {
        p,
        steps: t,
        trials,
        tv_to_uniform: tv_to_uniform(&distribution),
        counts,
        distribution,
    })
}

/// Exact law of the `t`-step walk sum, by dynamic programming over (vertex, residue).
pub fn exact_walk_sum_distribution(g: &MultiGraph, w: &EdgeWeighting, t: usize) -> Result<Vec<f64>, CoverError> {
    check_walkable(g)?;
    let n = g.vertex_count();
    let p = w.p() as usize;
    let mut cur = vec![0.0f64; n * p];
    for x in 0..n {
        cur[x * p] = 1.0 / n as f64;
    }
    for _ in 0..t {
        let mut next = vec![0.0f64; n * p];
        for x in 0..n {
            let share = 1.0 / g.degree(x) as f64;
            for z in 0..p {
                let c = cur[x * p + z];
                if c == 0.0 {
                    continue;
                }
                for &(y, e) in g.incident(x) {
                    let z2 = residue(z as i64 + w.oriented(g, e, x), p as u64) as usize;
                    next[y * p + z2] += c * share;
                }
            }
        }
        cur = next;
    }
    let mut dist = vec![0.0; p];
    for x in 0..n {
        for z in 0..p {
            dist[z] += cur[x * p + z];
        }
    }
    Ok(dist)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberBalance {
    pub components: usize,
    /// `max |mass − 1/p|` over components and fibers.
    pub max_deviation: f64,
    /// Per component, the fraction of its vertices in each fiber.
    pub fiber_masses: Vec<Vec<f64>>,
}

pub fn fiber_balance(c: &CoverGraph) -> FiberBalance {
    let p = c.p as usize;
    let comps = c.graph.components();
    let uniform = 1.0 / p as f64;
    let mut max_deviation = 0.0f64;
    let mut fiber_masses = Vec::with_capacity(comps.len());
    for comp in &comps {
        let mut counts = vec![0usize; p];
        for &v in comp {
            counts[c.project(v).1 as usize] += 1;
        }
        let masses: Vec<f64> = counts.iter().map(|&k| k as f64 / comp.len() as f64).collect();
        for &m in &masses {
            max_deviation = max_deviation.max((m - uniform).abs());
        }
        fiber_masses.push(masses);
    }
    FiberBalance {
        components: comps.len(),
        max_deviation,
        fiber_masses,
    }
}

/// Fiber-cut measurement against the `p ≤ 1 + 4L/γ` bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PfoldReport {
    pub p: u64,
    pub l: u64,
    pub gamma: f64,
    pub degree: usize,
    pub base_vertices: usize,
    /// `|S|` for the preimage `S` of fibers `1..=(p−1)/2`.
    pub cut_set_size: usize,
    /// Raw edge count across `S`, counted in the cover.
    pub cut_edges: usize,
    /// The same count predicted from the weights alone.
    pub cut_edges_from_weights: usize,
    /// `2 d L n`, the raw-count form of the `2dL/p` bound.
    pub cut_bound_raw: f64,
    /// `cut_edges / (p n)`.
    pub cut_normalized: f64,
    /// `2 d L / p`.
    pub cut_bound_normalized: f64,
    pub cut_within_bound: bool,
    /// `1 + 4L/γ`.
    pub threshold: f64,
    pub connected: bool,
    /// Connected cover with `p` above the threshold.
    pub expander_inconsistent: bool,
    /// Whether the fiber cut has fewer than `γ d |S|` edges.
    pub fiber_cut_violates_gamma: bool,
}

pub fn pfold_bound_check(c: &CoverGraph, w: &EdgeWeighting, gamma: f64) -> Result<PfoldReport, CoverError> {
    let p = c.p;
    let n = c.base.vertex_count();
    let d = c.base.regular_degree().ok_or(GraphError::NotRegular)?;
    let half = (p - 1) / 2;
    let in_range = |z: u64| (1..=half).contains(&z);
    let inside: Vec<bool> = (0..c.graph.vertex_count())
        .map(|v| in_range(c.project(v).1))
        .collect();
    let cut_set_size = inside.iter().filter(|&&b| b).count();
    let cut_edges = boundary_of_indicator(&c.graph, &inside);
    let cut_edges_from_weights = w
        .values()
        .iter()
        .map(|&x| (0..p).filter(|&z| in_range(z) != in_range(residue(z as i64 - x, p))).count())
        .sum();
    let l = w.l();
    let cut_bound_raw = 2.0 * d as f64 * l as f64 * n as f64;
    let total = (p as usize * n) as f64;
    let threshold = 1.0 + 4.0 * l as f64 / gamma;
    let connected = c.graph.is_connected();
    Ok(PfoldReport {
        p,
        l,
        gamma,
        degree: d,
        base_vertices: n,
        cut_set_size,
        cut_edges,
        cut_edges_from_weights,
        cut_bound_raw,
        cut_normalized: if total > 0.0 { cut_edges as f64 / total } else { 0.0 },
        cut_bound_normalized: 2.0 * d as f64 * l as f64 / p as f64,
        cut_within_bound: (cut_edges as f64) <= cut_bound_raw,
        threshold,
        connected,
        expander_inconsistent: connected && (p as f64) > threshold,
        fiber_cut_violates_gamma: (cut_edges as f64) < gamma * d as f64 * cut_set_size as f64,
    })
}
