//! Exact distributions of rooted ball isomorphism classes.
//!
//! A ball is the subgraph induced on every vertex within distance `r` of the
//! root, so edges between two vertices at distance exactly `r` are kept.
//! Balls are keyed by a canonical byte string: rooted trees use a nested
//! bracket encoding, everything else goes through colour refinement and an
//! individualisation search that returns the lexicographically smallest
//! relabelled edge list.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::Hash;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, MultiGraph};

/// Largest ball accepted by [`canonical_form`].
pub const DEFAULT_BALL_CAP: usize = 10_000;

/// Largest radius accepted by [`sl3z_ball`].
pub const SL3Z_MAX_RADIUS: usize = 4;

const TREE_TAG: u8 = b'T';
const GRAPH_TAG: u8 = b'G';

#[derive(Debug, Error)]
pub enum LocalStatsError {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("ball has {size} vertices, above the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("radius {radius} mismatches radius {other}")]
    RadiusMismatch { radius: usize, other: usize },
    #[error("radius {radius} exceeds the supported maximum {max}")]
    RadiusTooLarge { radius: usize, max: usize },
    #[error("matrix entry overflowed 64-bit arithmetic")]
    Overflow,
    #[error("rooted graph is not connected")]
    Disconnected,
    #[error("invalid canonical key: {0}")]
    BadKey(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A connected multigraph with a distinguished root at vertex 0.
///
/// Vertices are numbered in breadth-first order from the root, and `depth[v]`
/// is the distance from the root.
#[derive(Clone, Debug)]
pub struct RootedBall {
    pub radius: usize,
    pub graph: MultiGraph,
    pub depth: Vec<usize>,
}

impl RootedBall {
    pub fn root(&self) -> usize {
        0
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Roots a connected graph at `root`; the radius is the root's eccentricity.
    pub fn from_graph(g: &MultiGraph, root: usize) -> Result<Self, LocalStatsError> {
        if root >= g.vertex_count() {
            return Err(LocalStatsError::VertexOutOfRange {
                vertex: root,
                n: g.vertex_count(),
            });
        }
        let ball = extract_ball(g, root, usize::MAX)?;
        if ball.vertex_count() != g.vertex_count() {
            return Err(LocalStatsError::Disconnected);
        }
        Ok(ball)
    }

    pub fn canonical_key(&self) -> Result<Vec<u8>, LocalStatsError> {
        canonical_form(self)
    }
}

/// The ball of radius `r` around `v`, induced in `g`.
pub fn extract_ball(g: &MultiGraph, v: usize, r: usize) -> Result<RootedBall, LocalStatsError> {
    let n = g.vertex_count();
    if v >= n {
        return Err(LocalStatsError::VertexOutOfRange { vertex: v, n });
    }
    let mut local: HashMap<usize, usize> = HashMap::new();
    let mut order = vec![v];
    let mut depth = vec![0usize];
    local.insert(v, 0);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        let du = depth[head];
        head += 1;
        if du >= r {
            continue;
        }
        for w in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = local.entry(w) {
                e.insert(order.len());
                order.push(w);
                depth.push(du + 1);
            }
        }
    }
    let mut ball = MultiGraph::new(order.len());
    for (i, &u) in order.iter().enumerate() {
        for &(w, _) in g.incident(u) {
            if let Some(&j) = local.get(&w) {
                if i < j {
                    ball.add_edge(i, j)?;
                }
            }
        }
    }
    let radius = if r == usize::MAX {
        depth.iter().copied().max().unwrap_or(0)
    } else {
        r
    };
    Ok(RootedBall {
        radius,
        graph: ball,
        depth,
    })
}

/// Canonical key of a rooted ball with the default size cap.
pub fn canonical_form(ball: &RootedBall) -> Result<Vec<u8>, LocalStatsError> {
    canonical_form_with_cap(ball, DEFAULT_BALL_CAP)
}

pub fn canonical_form_with_cap(ball: &RootedBall, cap: usize) -> Result<Vec<u8>, LocalStatsError> {
    let n = ball.vertex_count();
    if n > cap {
        return Err(LocalStatsError::CapExceeded { size: n, cap });
    }
    let g = &ball.graph;
    let simple_tree = g.edge_count() + 1 == n && g.edge_multiset().values().all(|&c| c == 1);
    if simple_tree {
        Ok(tree_key(ball))
    } else {
        Ok(graph_key(ball))
    }
}

fn tree_key(ball: &RootedBall) -> Vec<u8> {
    let g = &ball.graph;
    let n = g.vertex_count();
    // BFS numbering means every child has a larger index than its parent.
    let mut codes: Vec<Vec<u8>> = vec![Vec::new(); n];
    for v in (0..n).rev() {
        let mut children: Vec<Vec<u8>> = g
            .neighbors(v)
            .filter(|&w| ball.depth[w] == ball.depth[v] + 1)
            .map(|w| std::mem::take(&mut codes[w]))
            .collect();
        children.sort();
        let mut code = Vec::with_capacity(2 + children.iter().map(Vec::len).sum::<usize>());
        code.push(b'(');
        for c in children {
            code.extend(c);
        }
        code.push(b')');
        codes[v] = code;
    }
    let mut key = vec![TREE_TAG];
    key.extend(std::mem::take(&mut codes[0]));
    key
}

/// Compact adjacency used by the labelling search.
struct Adjacency {
    n: usize,
    nbrs: Vec<Vec<u32>>,
}

impl Adjacency {
    fn new(g: &MultiGraph) -> Self {
        let n = g.vertex_count();
        let nbrs = (0..n)
            .map(|v| g.neighbors(v).map(|w| w as u32).collect())
            .collect();
        Self { n, nbrs }
    }
}

/// Iterated colour refinement. Colours are ranks `0..k`, and the new colour
/// of a vertex is the rank of (old colour, sorted neighbour colours), so the
/// result depends only on the isomorphism class of the coloured graph.
fn refine(adj: &Adjacency, colors: &mut [u32]) {
    let n = adj.n;
    let mut classes = count_classes(colors);
    let mut sig_buf: Vec<(u32, Vec<u32>, u32)> = Vec::with_capacity(n);
    loop {
        sig_buf.clear();
        for v in 0..n {
            let mut s: Vec<u32> = adj.nbrs[v].iter().map(|&w| colors[w as usize]).collect();
            s.sort_unstable();
            sig_buf.push((colors[v], s, v as u32));
        }
        sig_buf.sort_unstable();
        let mut rank = 0u32;
        for i in 0..n {
            if i > 0 && (sig_buf[i].0 != sig_buf[i - 1].0 || sig_buf[i].1 != sig_buf[i - 1].1) {
                rank += 1;
            }
            colors[sig_buf[i].2 as usize] = rank;
        }
        let now = rank as usize + 1;
        if now == classes {
            return;
        }
        classes = now;
    }
}

fn count_classes(colors: &[u32]) -> usize {
    let mut c: Vec<u32> = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn certificate(adj: &Adjacency, colors: &[u32]) -> Vec<(u32, u32)> {
    let mut cert = Vec::new();
    for v in 0..adj.n {
        for &w in &adj.nbrs[v] {
            let (a, b) = (colors[v], colors[w as usize]);
            if a < b {
                cert.push((a, b));
            }
        }
    }
    cert.sort_unstable();
    cert
}

struct Search<'a> {
    adj: &'a Adjacency,
    best: Option<(Vec<(u32, u32)>, Vec<u32>)>,
    automorphisms: Vec<Vec<u32>>,
}

impl Search<'_> {
    fn run(&mut self, mut colors: Vec<u32>, prefix: &mut Vec<u32>) {
        refine(self.adj, &mut colors);
        let n = self.adj.n;
        let mut sizes = vec![0u32; n];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = (0..n).find(|&c| sizes[c] > 1);
        let Some(target) = target else {
            self.leaf(colors);
            return;
        };
        let target = target as u32;
        let cell: Vec<u32> = (0..n as u32).filter(|&v| colors[v as usize] == target).collect();

        let mut explored: Vec<u32> = Vec::new();
        for &v in &cell {
            if self.equivalent_to_explored(v, &explored, prefix) {
                continue;
            }
            let mut child = colors.clone();
            for c in child.iter_mut() {
                if *c > target {
                    *c += 1;
                }
            }
            for &w in &cell {
                if w != v {
                    child[w as usize] = target + 1;
                }
            }
            prefix.push(v);
            self.run(child, prefix);
            prefix.pop();
            explored.push(v);
        }
    }

    fn leaf(&mut self, colors: Vec<u32>) {
        let cert = certificate(self.adj, &colors);
        match &self.best {
            None => self.best = Some((cert, colors)),
            Some((best_cert, best_colors)) => {
                if cert == *best_cert {
                    // both labelings give the same relabelled graph, so mapping
                    // one to the other through positions is an automorphism
                    let n = self.adj.n;
                    let mut at_position = vec![0u32; n];
                    for (v, &c) in best_colors.iter().enumerate() {
                        at_position[c as usize] = v as u32;
                    }
                    let perm: Vec<u32> = colors.iter().map(|&c| at_position[c as usize]).collect();
                    if perm.iter().enumerate().any(|(i, &p)| i as u32 != p) {
                        self.automorphisms.push(perm);
                    }
                } else if cert < *best_cert {
                    self.best = Some((cert, colors));
                }
            }
        }
    }

    /// Whether `v` shares an orbit with an explored sibling under the known
    /// automorphisms that fix every individualised vertex.
    fn equivalent_to_explored(&self, v: u32, explored: &[u32], prefix: &[u32]) -> bool {
        if explored.is_empty() || self.automorphisms.is_empty() {
            return false;
        }
        let n = self.adj.n;
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(p: &mut [u32], mut x: u32) -> u32 {
            while p[x as usize] != x {
                p[x as usize] = p[p[x as usize] as usize];
                x = p[x as usize];
            }
            x
        }
        let mut any = false;
        for perm in &self.automorphisms {
            if prefix.iter().any(|&u| perm[u as usize] != u) {
                continue;
            }
            any = true;
            for (x, &y) in perm.iter().enumerate() {
                let a = find(&mut parent, x as u32);
                let b = find(&mut parent, y);
                if a != b {
                    parent[a as usize] = b;
                }
            }
        }
        if !any {
            return false;
        }
        let rv = find(&mut parent, v);
        explored.iter().any(|&u| find(&mut parent, u) == rv)
    }
}

fn graph_key(ball: &RootedBall) -> Vec<u8> {
    let adj = Adjacency::new(&ball.graph);
    let n = adj.n;
    let colors: Vec<u32> = ball.depth.iter().map(|&d| d as u32).collect();
    let mut search = Search {
        adj: &adj,
        best: None,
        automorphisms: Vec::new(),
    };
    search.run(colors, &mut Vec::new());
    let (cert, _) = search.best.expect("search visits at least one leaf");
    let mut key = Vec::with_capacity(9 + 8 * cert.len());
    key.push(GRAPH_TAG);
    key.extend((n as u32).to_le_bytes());
    key.extend((cert.len() as u32).to_le_bytes());
    for (a, b) in cert {
        key.extend(a.to_le_bytes());
        key.extend(b.to_le_bytes());
    }
    key
}

/// Counts of canonical ball classes over every vertex of a graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "DistributionRecord", try_from = "DistributionRecord")]
pub struct LocalDistribution {
    pub radius: usize,
    pub total: u64,
    pub counts: BTreeMap<Vec<u8>, u64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionRecord {
    radius: usize,
    classes: Vec<ClassRecord>,
}

#[derive(Serialize, Deserialize)]
struct ClassRecord {
    key: String,
    count: u64,
    total: u64,
}

impl From<LocalDistribution> for DistributionRecord {
    fn from(d: LocalDistribution) -> Self {
        DistributionRecord {
            radius: d.radius,
            classes: d
                .counts
                .iter()
                .map(|(k, &count)| ClassRecord {
                    key: hex::encode(k),
                    count,
                    total: d.total,
                })
                .collect(),
        }
    }
}

impl TryFrom<DistributionRecord> for LocalDistribution {
    type Error = LocalStatsError;

    fn try_from(r: DistributionRecord) -> Result<Self, Self::Error> {
        let mut counts = BTreeMap::new();
        let mut total = None;
        for c in r.classes {
            let key = hex::decode(&c.key).map_err(|e| LocalStatsError::BadKey(e.to_string()))?;
            if *total.get_or_insert(c.total) != c.total {
                return Err(LocalStatsError::BadKey("classes disagree on the total".into()));
            }
            *counts.entry(key).or_insert(0) += c.count;
        }
        let total = total.unwrap_or(0);
        if counts.values().sum::<u64>() != total {
            return Err(LocalStatsError::BadKey("class counts do not sum to the total".into()));
        }
        Ok(LocalDistribution {
            radius: r.radius,
            total,
            counts,
        })
    }
}

impl LocalDistribution {
    pub fn probability(&self, key: &[u8]) -> Ratio<u64> {
        let c = self.counts.get(key).copied().unwrap_or(0);
        if self.total == 0 {
            Ratio::from_integer(0)
        } else {
            Ratio::new(c, self.total)
        }
    }

    pub fn weights(&self) -> BTreeMap<Vec<u8>, Ratio<u64>> {
        self.counts
            .keys()
            .map(|k| (k.clone(), self.probability(k)))
            .collect()
    }

    pub fn class_count(&self) -> usize {
        self.counts.len()
    }
}

/// Exact distribution of radius-`r` ball classes over all vertices of `g`.
pub fn local_statistics(g: &MultiGraph, r: usize) -> Result<LocalDistribution, LocalStatsError> {
    let keys: Vec<Vec<u8>> = (0..g.vertex_count())
        .into_par_iter()
        .map(|v| canonical_form(&extract_ball(g, v, r)?))
        .collect::<Result<_, _>>()?;
    let mut counts = BTreeMap::new();
    for k in keys {
        *counts.entry(k).or_insert(0u64) += 1;
    }
    Ok(LocalDistribution {
        radius: r,
        total: g.vertex_count() as u64,
        counts,
    })
}

/// `(1/2) Σ |p(k) − q(k)|` over the union of supports, as an exact fraction.
pub fn tv_distance(p: &LocalDistribution, q: &LocalDistribution) -> Result<Ratio<u64>, LocalStatsError> {
    if p.radius != q.radius {
        return Err(LocalStatsError::RadiusMismatch {
            radius: p.radius,
            other: q.radius,
        });
    }
    let (tp, tq) = (p.total as u128, q.total as u128);
    if tp == 0 || tq == 0 {
        return Ok(Ratio::from_integer(if tp == tq { 0 } else { 1 }));
    }
    let mut num: u128 = 0;
    for (k, &cp) in &p.counts {
        let cq = q.counts.get(k).copied().unwrap_or(0) as u128;
        num += (cp as u128 * tq).abs_diff(cq * tp);
    }
    for (k, &cq) in &q.counts {
        if !p.counts.contains_key(k) {
            num += cq as u128 * tp;
        }
    }
    let r = Ratio::<u128>::new(num, 2 * tp * tq);
    Ok(Ratio::new_raw(
        u64::try_from(*r.numer()).expect("reduced numerator fits"),
        u64::try_from(*r.denom()).expect("reduced denominator fits"),
    ))
}

/// Cayley graphs with a computable ball at every radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "snake_case")]
pub enum CayleyGroup {
    /// `Z^dim` with the standard generators.
    Grid { dim: usize },
    /// Free group of the given rank; its Cayley graph is the `2·rank`-regular tree.
    Free { rank: usize },
    /// `SL_3(Z)` with the twelve elementary transvections.
    Sl3zElementary,
}

impl CayleyGroup {
    pub fn generator_count(&self) -> usize {
        match *self {
            CayleyGroup::Grid { dim } => 2 * dim,
            CayleyGroup::Free { rank } => 2 * rank,
            CayleyGroup::Sl3zElementary => 12,
        }
    }

    pub fn ball(&self, r: usize) -> Result<RootedBall, LocalStatsError> {
        match *self {
            CayleyGroup::Grid { dim } => grid_ball(dim, r),
            CayleyGroup::Free { rank } => free_ball(rank, r),
            CayleyGroup::Sl3zElementary => sl3z_ball(r),
        }
    }
}

/// Breadth-first ball in a Cayley graph given by a neighbour map.
///
/// The neighbour map must list one neighbour per generator and be closed
/// under inverses; an edge is recorded from the endpoint found first.
fn cayley_ball<S, F>(start: S, r: usize, mut step: F) -> Result<RootedBall, LocalStatsError>
where
    S: Hash + Eq + Clone,
    F: FnMut(&S) -> Result<Vec<S>, LocalStatsError>,
{
    let mut index: HashMap<S, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    let mut depth = vec![0usize];
    index.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut out_nbrs: Vec<Vec<S>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let nbrs = step(&states[i])?;
        if depth[i] < r {
            for s in &nbrs {
                if !index.contains_key(s) {
                    index.insert(s.clone(), states.len());
                    states.push(s.clone());
                    depth.push(depth[i] + 1);
                    queue.push_back(states.len() - 1);
                }
            }
        }
        if out_nbrs.len() <= i {
            out_nbrs.resize_with(i + 1, Vec::new);
        }
        out_nbrs[i] = nbrs;
    }
    let mut g = MultiGraph::new(states.len());
    for (i, nbrs) in out_nbrs.iter().enumerate() {
        for s in nbrs {
            if let Some(&j) = index.get(s) {
                if i < j {
                    g.add_edge(i, j)?;
                }
            }
        }
    }
    Ok(RootedBall {
        radius: r,
        graph: g,
        depth,
    })
}

fn grid_ball(dim: usize, r: usize) -> Result<RootedBall, LocalStatsError> {
    cayley_ball(vec![0i64; dim], r, |x| {
        let mut out = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for delta in [1, -1] {
                let mut y = x.clone();
                y[i] += delta;
                out.push(y);
            }
        }
        Ok(out)
    })
}

fn free_ball(rank: usize, r: usize) -> Result<RootedBall, LocalStatsError> {
    // reduced words over letters 0..2*rank, where letter 2i+1 inverts 2i
    cayley_ball(Vec::<u8>::new(), r, |w| {
        let mut out = Vec::with_capacity(2 * rank);
        for a in 0..(2 * rank) as u8 {
            let mut y = w.clone();
            if y.last() == Some(&(a ^ 1)) {
                y.pop();
            } else {
                y.push(a);
            }
            out.push(y);
        }
        Ok(out)
    })
}

type Matrix3 = [[i64; 3]; 3];

/// Right multiplication by `I + sign·E_ij` adds `sign` times column `i` to column `j`.
fn transvect(a: &Matrix3, i: usize, j: usize, sign: i64) -> Result<Matrix3, LocalStatsError> {
    let mut b = *a;
    for row in b.iter_mut() {
        let add = row[i].checked_mul(sign).ok_or(LocalStatsError::Overflow)?;
        row[j] = row[j].checked_add(add).ok_or(LocalStatsError::Overflow)?;
    }
    Ok(b)
}

/// The twelve elementary transvections `I ± E_ij`, `i ≠ j`, in a fixed order.
pub fn sl3z_generators() -> Vec<(usize, usize, i64)> {
    let mut out = Vec::with_capacity(12);
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                out.push((i, j, 1));
                out.push((i, j, -1));
            }
        }
    }
    out
}

/// Ball of radius `r <= 4` around the identity in the Cayley graph of
/// `SL_3(Z)` with respect to the elementary transvections.
pub fn sl3z_ball(r: usize) -> Result<RootedBall, LocalStatsError> {
    if r > SL3Z_MAX_RADIUS {
        return Err(LocalStatsError::RadiusTooLarge {
            radius: r,
            max: SL3Z_MAX_RADIUS,
        });
    }
    let identity: Matrix3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let gens = sl3z_generators();
    cayley_ball(identity, r, |a| {
        gens.iter().map(|&(i, j, s)| transvect(a, i, j, s)).collect()
    })
}

/// Fraction of vertices of `g` whose radius-`r` ball differs from the
/// Cayley ball of `group`.
pub fn cayley_defect(g: &MultiGraph, group: &CayleyGroup, r: usize) -> Result<Ratio<u64>, LocalStatsError> {
    let reference = group.ball(r)?;
    cayley_defect_against(g, &reference, r)
}

/// Like [`cayley_defect`] with a precomputed reference ball.
pub fn cayley_defect_against(g: &MultiGraph, reference: &RootedBall, r: usize) -> Result<Ratio<u64>, LocalStatsError> {
    let n = g.vertex_count();
    if n == 0 {
        return Ok(Ratio::from_integer(0));
    }
    let ref_key = canonical_form(reference)?;
    let (rn, rm) = (reference.vertex_count(), reference.graph.edge_count());
    let bad = (0..n)
        .into_par_iter()
        .map(|v| -> Result<bool, LocalStatsError> {
            let ball = extract_ball(g, v, r)?;
            if ball.vertex_count() != rn || ball.graph.edge_count() != rm {
                return Ok(true);
            }
            Ok(canonical_form(&ball)? != ref_key)
        })
        .collect::<Result<Vec<bool>, _>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(Ratio::new(bad as u64, n as u64))
}
