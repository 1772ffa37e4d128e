//! Finite undirected multigraphs without loops.
//!
//! Edges are stored as edge instances `(u, v)` with `u < v`; parallel edges
//! are separate instances with separate ids. The adjacency list of a vertex
//! repeats a neighbour once per parallel instance, so degrees and the Markov
//! operator count multiplicity.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

/// Largest vertex count accepted by brute-force expansion checks.
pub const DEFAULT_EXACT_LIMIT: usize = 20;

/// Restart cap for the pairing-model sampler.
pub const PAIRING_RETRY_CAP: usize = 1000;

// relative slack for comparing exact integer ratios against a float gamma
const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("loop edge at vertex {0}")]
    Loop(usize),
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("vertex counts differ: {0} vs {1}")]
    VertexCountMismatch(usize, usize),
    #[error("graph is not regular")]
    NotRegular,
    #[error("exact expansion check is limited to {limit} vertices, graph has {n}")]
    TooLargeForExact { n: usize, limit: usize },
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("pairing model found no simple graph within {0} restarts")]
    RetryCapExceeded(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Finite undirected multigraph with no loops.
#[derive(Clone, Debug, Default)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl MultiGraph {
    /// Edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Adds one edge instance and returns its id.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<usize, GraphError> {
        for x in [u, v] {
            if x >= self.n {
                return Err(GraphError::VertexOutOfRange { vertex: x, n: self.n });
            }
        }
        if u == v {
            return Err(GraphError::Loop(u));
        }
        let id = self.edges.len();
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        self.edges.push((a, b));
        self.adj[a].push((b, id));
        self.adj[b].push((a, id));
        Ok(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge instances in insertion order, each normalised to `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    /// `(neighbour, edge id)` pairs incident to `v`, one per edge instance.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().map(|&(w, _)| w)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// The common degree, if every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adj.first().map_or(0, Vec::len);
        self.adj.iter().all(|a| a.len() == d).then_some(d)
    }

    /// Edge instances counted per unordered vertex pair.
    pub fn edge_multiset(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for &e in &self.edges {
            *m.entry(e).or_insert(0) += 1;
        }
        m
    }

    /// Breadth-first distances from `src`; unreachable vertices get `usize::MAX`.
    pub fn bfs_distances(&self, src: usize) -> Vec<usize> {
        self.bfs_limited(src, usize::MAX)
    }

    /// Breadth-first distances from `src`, exploring no further than `limit`.
    pub fn bfs_limited(&self, src: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= limit {
                continue;
            }
            for &(w, _) in &self.adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &(w, _) in &self.adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Largest finite eccentricity, or `None` when the graph is disconnected.
    pub fn diameter(&self) -> Option<usize> {
        let mut best = 0;
        for v in 0..self.n {
            let d = self.bfs_distances(v);
            let far = *d.iter().max().unwrap_or(&0);
            if far == usize::MAX {
                return None;
            }
            best = best.max(far);
        }
        Some(best)
    }

    /// Subgraph induced on `vertices`; local vertex `i` is `vertices[i]`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> MultiGraph {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut h = MultiGraph::new(vertices.len());
        for &(u, v) in &self.edges {
            if local[u] != usize::MAX && local[v] != usize::MAX {
                h.add_edge(local[u], local[v]).expect("induced edge is valid");
            }
        }
        h
    }

    /// Disjoint union; vertices of `other` are shifted by `self.vertex_count()`.
    pub fn disjoint_union(&self, other: &MultiGraph) -> MultiGraph {
        let shift = self.n;
        let mut g = MultiGraph::new(self.n + other.n);
        for &(u, v) in self.edges.iter() {
            g.add_edge(u, v).expect("valid edge");
        }
        for &(u, v) in other.edges.iter() {
            g.add_edge(u + shift, v + shift).expect("valid edge");
        }
        g
    }

    /// Copy with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> MultiGraph {
        let mut g = MultiGraph::new(self.n);
        for &(u, v) in &self.edges {
            g.add_edge(perm[u], perm[v]).expect("permutation keeps edges valid");
        }
        g
    }

    /// Whether `perm` maps the edge multiset onto itself.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        perm.len() == self.n && self.relabel(perm).edge_multiset() == self.edge_multiset()
    }
}

/// Graphs compare equal when their vertex counts and edge multisets agree.
impl PartialEq for MultiGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edge_multiset() == other.edge_multiset()
    }
}

impl Eq for MultiGraph {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityWitness {
    /// Common degree when `valid`, otherwise the maximum degree.
    pub degree: usize,
    pub valid: bool,
}

pub fn degree_check(g: &MultiGraph) -> RegularityWitness {
    match g.regular_degree() {
        Some(d) => RegularityWitness { degree: d, valid: true },
        None => RegularityWitness {
            degree: g.max_degree(),
            valid: false,
        },
    }
}

/// A subset of `{0, .., universe - 1}` kept sorted and deduplicated.
///
/// The derived ordering compares member lists lexicographically, which is
/// the tie-break order used by the exact searches.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexSet {
    members: Vec<usize>,
    universe: usize,
}

impl VertexSet {
    pub fn new<I>(universe: usize, members: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&v) = members.last() {
            if v >= universe {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: universe });
            }
        }
        Ok(Self { members, universe })
    }

    pub(crate) fn from_sorted(universe: usize, members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(members.last().is_none_or(|&v| v < universe));
        Self { members, universe }
    }

    pub fn empty(universe: usize) -> Self {
        Self {
            members: Vec::new(),
            universe,
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            members: (0..universe).collect(),
            universe,
        }
    }

    pub fn from_indicator(indicator: &[bool]) -> Self {
        let members = (0..indicator.len()).filter(|&v| indicator[v]).collect();
        Self {
            members,
            universe: indicator.len(),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// Normalised measure `|S| / n`.
    pub fn mass(&self) -> f64 {
        if self.universe == 0 {
            0.0
        } else {
            self.members.len() as f64 / self.universe as f64
        }
    }

    /// Exact normalised measure.
    pub fn mass_ratio(&self) -> Ratio<u64> {
        if self.universe == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(self.members.len() as u64, self.universe as u64)
        }
    }

    pub fn indicator(&self) -> Vec<bool> {
        let mut ind = vec![false; self.universe];
        for &v in &self.members {
            ind[v] = true;
        }
        ind
    }

    pub fn complement(&self) -> VertexSet {
        let ind = self.indicator();
        Self::from_sorted(self.universe, (0..self.universe).filter(|&v| !ind[v]).collect())
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut m: Vec<usize> = self.members.iter().chain(&other.members).copied().collect();
        m.sort_unstable();
        m.dedup();
        Self::from_sorted(self.universe.max(other.universe), m)
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        let m = self
            .members
            .iter()
            .copied()
            .filter(|&v| other.contains(v))
            .collect();
        Self::from_sorted(self.universe, m)
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        let m = self
            .members
            .iter()
            .copied()
            .filter(|&v| !other.contains(v))
            .collect();
        Self::from_sorted(self.universe, m)
    }
}

fn check_members(g: &MultiGraph, s: &VertexSet) -> Result<(), GraphError> {
    match s.members().last() {
        Some(&v) if v >= g.vertex_count() => Err(GraphError::VertexOutOfRange {
            vertex: v,
            n: g.vertex_count(),
        }),
        _ => Ok(()),
    }
}

/// Raw number of edge instances with exactly one endpoint in `s`.
pub fn edge_boundary(g: &MultiGraph, s: &VertexSet) -> Result<usize, GraphError> {
    check_members(g, s)?;
    let mut inside = vec![false; g.vertex_count()];
    for &v in s.members() {
        inside[v] = true;
    }
    Ok(boundary_of_indicator(g, &inside))
}

pub(crate) fn boundary_of_indicator(g: &MultiGraph, inside: &[bool]) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| inside[u] != inside[v])
        .count()
}

/// Outcome of the brute-force expansion check.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionCheck {
    pub holds: bool,
    /// `min boundary(S) / (d |S|)` over nonempty `S` with `2|S| <= n`.
    pub constant: f64,
    /// A minimising set (lexicographically smallest among ties).
    pub witness: VertexSet,
    pub witness_boundary: usize,
}

/// Exact edge-expansion constant by enumerating every vertex subset.
pub fn expansion_constant(g: &MultiGraph, limit: usize) -> Result<ExpansionCheck, GraphError> {
    let n = g.vertex_count();
    if n > limit || n >= 63 {
        return Err(GraphError::TooLargeForExact { n, limit });
    }
    let d = g.regular_degree().ok_or(GraphError::NotRegular)?;

    let mut nbr_in = vec![0usize; n];
    let mut mask: u64 = 0;
    let mut size = 0usize;
    let mut boundary = 0usize;
    // best (boundary, size, mask)
    let mut best: Option<(usize, usize, u64)> = None;

    for i in 1u64..(1u64 << n) {
        let v = i.trailing_zeros() as usize;
        let bit = 1u64 << v;
        if mask & bit == 0 {
            boundary = boundary + g.degree(v) - 2 * nbr_in[v];
            mask |= bit;
            size += 1;
            for w in g.neighbors(v) {
                nbr_in[w] += 1;
            }
        } else {
            boundary = boundary + 2 * nbr_in[v] - g.degree(v);
            mask &= !bit;
            size -= 1;
            for w in g.neighbors(v) {
                nbr_in[w] -= 1;
            }
        }
        if size == 0 || 2 * size > n {
            continue;
        }
        let better = match best {
            None => true,
            Some((bb, bs, bm)) => {
                let lhs = boundary * bs;
                let rhs = bb * size;
                lhs < rhs || (lhs == rhs && mask_members(mask) < mask_members(bm))
            }
        };
        if better {
            best = Some((boundary, size, mask));
        }
    }

    Ok(match best {
        None => ExpansionCheck {
            holds: true,
            constant: f64::INFINITY,
            witness: VertexSet::empty(n),
            witness_boundary: 0,
        },
        Some((b, s, m)) => {
            let constant = if d == 0 { 0.0 } else { b as f64 / (d * s) as f64 };
            ExpansionCheck {
                holds: true,
                constant,
                witness: VertexSet::from_sorted(n, mask_members(m)),
                witness_boundary: b,
            }
        }
    })
}

fn mask_members(mask: u64) -> Vec<usize> {
    (0..64).filter(|&v| mask >> v & 1 == 1).collect()
}

/// Whether `boundary >= gamma * d * size`, allowing float round-off on exact ratios.
pub fn meets_expansion(boundary: usize, size: usize, d: usize, gamma: f64) -> bool {
    let rhs = gamma * (d * size) as f64;
    boundary as f64 >= rhs - RATIO_SLACK * rhs.abs()
}

/// Brute-force test of the `gamma`-expander property with the default size limit.
pub fn is_gamma_expander(g: &MultiGraph, gamma: f64) -> Result<ExpansionCheck, GraphError> {
    is_gamma_expander_with_limit(g, gamma, DEFAULT_EXACT_LIMIT)
}

pub fn is_gamma_expander_with_limit(
    g: &MultiGraph,
    gamma: f64,
    limit: usize,
) -> Result<ExpansionCheck, GraphError> {
    let mut check = expansion_constant(g, limit)?;
    let d = g.regular_degree().unwrap_or(0);
    check.holds = check.witness.is_empty()
        || meets_expansion(check.witness_boundary, check.witness.len(), d, gamma);
    Ok(check)
}

/// Size of the multiset symmetric difference of the two edge multisets.
pub fn edit_count(g: &MultiGraph, h: &MultiGraph) -> Result<usize, GraphError> {
    if g.vertex_count() != h.vertex_count() {
        return Err(GraphError::VertexCountMismatch(g.vertex_count(), h.vertex_count()));
    }
    let a = g.edge_multiset();
    let b = h.edge_multiset();
    let mut count = 0;
    for (e, &ca) in &a {
        count += ca.abs_diff(b.get(e).copied().unwrap_or(0));
    }
    for (e, &cb) in &b {
        if !a.contains_key(e) {
            count += cb;
        }
    }
    Ok(count)
}

/// `|E(g) Δ E(h)| / n` with multiset symmetric difference.
pub fn edit_distance(g: &MultiGraph, h: &MultiGraph) -> Result<f64, GraphError> {
    let c = edit_count(g, h)?;
    let n = g.vertex_count();
    Ok(if n == 0 { 0.0 } else { c as f64 / n as f64 })
}

/// Graph families produced by [`generate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Cycle,
    Complete,
    Circulant { offsets: Vec<usize> },
    RandomRegular,
    Petersen,
}

/// Builds a graph of the requested family. `degree` is required for
/// `RandomRegular` and, when given for other families, must match the output.
pub fn generate(
    kind: &GraphKind,
    n: usize,
    degree: Option<usize>,
    seed: u64,
) -> Result<MultiGraph, GraphError> {
    let g = match kind {
        GraphKind::Cycle => cycle(n)?,
        GraphKind::Complete => complete(n)?,
        GraphKind::Circulant { offsets } => circulant(n, offsets)?,
        GraphKind::Petersen => {
            if n != 10 {
                return Err(GraphError::Infeasible("the Petersen graph has 10 vertices".into()));
            }
            petersen()
        }
        GraphKind::RandomRegular => {
            let d = degree.ok_or_else(|| {
                GraphError::Infeasible("random regular graphs need a degree".into())
            })?;
            random_regular(n, d, seed)?
        }
    };
    if let Some(d) = degree {
        if g.regular_degree() != Some(d) {
            return Err(GraphError::Infeasible(format!(
                "requested degree {d} but the construction has degree {}",
                degree_check(&g).degree
            )));
        }
    }
    Ok(g)
}

pub fn cycle(n: usize) -> Result<MultiGraph, GraphError> {
    if n < 3 {
        return Err(GraphError::Infeasible(format!("a simple cycle needs n >= 3, got {n}")));
    }
    circulant(n, &[1])
}

pub fn complete(n: usize) -> Result<MultiGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::Infeasible(format!("complete graph needs n >= 2, got {n}")));
    }
    let mut g = MultiGraph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

/// Circulant graph joining `i` and `i + o (mod n)` for each offset `o`.
///
/// Offsets are taken mod `n`; `o` and `n - o` name the same connection and
/// may not both appear. An offset of `n / 2` contributes degree one.
pub fn circulant(n: usize, offsets: &[usize]) -> Result<MultiGraph, GraphError> {
    if n < 2 {
        return Err(GraphError::Infeasible(format!("circulant needs n >= 2, got {n}")));
    }
    let mut seen = HashSet::new();
    for &o in offsets {
        let r = o % n;
        if r == 0 {
            return Err(GraphError::Infeasible(format!("offset {o} is zero mod {n}")));
        }
        if !seen.insert(r.min(n - r)) {
            return Err(GraphError::Infeasible(format!("offset {o} repeats another offset mod {n}")));
        }
    }
    let mut g = MultiGraph::new(n);
    for &o in offsets {
        let r = o % n;
        let r = r.min(n - r);
        let count = if 2 * r == n { n / 2 } else { n };
        for i in 0..count {
            g.add_edge(i, (i + r) % n)?;
        }
    }
    Ok(g)
}

pub fn petersen() -> MultiGraph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    MultiGraph::from_edges(10, edges).expect("Petersen edges are valid")
}

/// Uniform-ish simple `d`-regular graph from the pairing model.
///
/// Points are paired one random pair at a time; a pair that would create a
/// loop or a parallel edge is redrawn, and the whole pairing restarts when
/// no admissible pair turns up.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<MultiGraph, GraphError> {
    if (n * d) % 2 == 1 {
        return Err(GraphError::Infeasible(format!("n*d must be even, got n={n}, d={d}")));
    }
    if d >= n && d > 0 {
        return Err(GraphError::Infeasible(format!(
            "a simple {d}-regular graph needs more than {d} vertices, got {n}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    'attempt: for _ in 0..PAIRING_RETRY_CAP {
        let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        let mut used: HashSet<(usize, usize)> = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        while !points.is_empty() {
            let len = points.len();
            let budget = 64 * len + 64;
            let mut placed = false;
            for _ in 0..budget {
                let i = rng.random_range(0..len);
                let j = rng.random_range(0..len);
                if i == j {
                    continue;
                }
                let (a, b) = (points[i], points[j]);
                let e = if a < b { (a, b) } else { (b, a) };
                if a == b || used.contains(&e) {
                    continue;
                }
                used.insert(e);
                edges.push(e);
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                points.swap_remove(hi);
                points.swap_remove(lo);
                placed = true;
                break;
            }
            if !placed {
                continue 'attempt;
            }
        }
        return MultiGraph::from_edges(n, edges);
    }
    Err(GraphError::RetryCapExceeded(PAIRING_RETRY_CAP))
}

/// Renders the edge-list format: header `n m d` (`d = -1` when irregular),
/// then one `u v` line per edge instance.
pub fn format_edge_list(g: &MultiGraph) -> String {
    let mut out = String::new();
    let d = g
        .regular_degree()
        .map_or_else(|| "-1".to_string(), |d| d.to_string());
    writeln!(out, "{} {} {}", g.vertex_count(), g.edge_count(), d).unwrap();
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

pub fn parse_edge_list(text: &str) -> Result<MultiGraph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(GraphError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(GraphError::Parse {
            line: hline,
            msg: format!("header must be `n m d`, got {header:?}"),
        });
    }
    let parse_usize = |s: &str, line: usize| {
        s.parse::<usize>().map_err(|_| GraphError::Parse {
            line,
            msg: format!("expected a nonnegative integer, got {s:?}"),
        })
    };
    let n = parse_usize(fields[0], hline)?;
    let m = parse_usize(fields[1], hline)?;
    let declared: i64 = fields[2].parse().map_err(|_| GraphError::Parse {
        line: hline,
        msg: format!("expected a degree or -1, got {:?}", fields[2]),
    })?;
    if declared < -1 {
        return Err(GraphError::Parse {
            line: hline,
            msg: format!("degree must be nonnegative or -1, got {declared}"),
        });
    }

    let mut g = MultiGraph::new(n);
    for (line, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 2 {
            return Err(GraphError::Parse {
                line,
                msg: format!("edge line must be `u v`, got {l:?}"),
            });
        }
        let u = parse_usize(t[0], line)?;
        let v = parse_usize(t[1], line)?;
        g.add_edge(u, v).map_err(|e| GraphError::Parse {
            line,
            msg: e.to_string(),
        })?;
    }
    if g.edge_count() != m {
        return Err(GraphError::Parse {
            line: hline,
            msg: format!("header declares {m} edges, found {}", g.edge_count()),
        });
    }
    if declared >= 0 && g.regular_degree() != Some(declared as usize) {
        return Err(GraphError::Parse {
            line: hline,
            msg: format!("header declares degree {declared} but the graph is not {declared}-regular"),
        });
    }
    Ok(g)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<MultiGraph, GraphError> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}

pub fn write_edge_list(g: &MultiGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    std::fs::write(path, format_edge_list(g))?;
    Ok(())
}
