//! Cutting classes apart and restoring regularity inside each class.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use serde::Serialize;

use super::{DecomposeError, Partition};
use crate::graph::{circulant, expansion_constant, random_regular, MultiGraph, VertexSet, DEFAULT_EXACT_LIMIT};
use crate::markov::cheeger_certificate;
use crate::rng::{derive_seed, stream_rng};

/// Greedy attempts for the matching `𝓜`: edge order first, then shuffles.
pub const MATCHING_ATTEMPTS: usize = 50;
/// Random regular graphs tried when a replacement expander is needed.
pub const REPLACEMENT_ATTEMPTS: usize = 100;

/// What happened to one class.
#[derive(Clone, Debug, Serialize)]
pub struct SurgeryPlan {
    pub class_id: usize,
    pub class_size: usize,
    /// Class vertices that lost edges to other classes.
    pub boundary_b: VertexSet,
    /// `⌈6/γ₀⌉`.
    pub r: usize,
    /// Distance that the edges of `𝓜` exceed pairwise; `None` when no matching was needed or found.
    pub spacing: Option<usize>,
    /// Set when the class diameter is at most `2r`, so the spacing was relaxed below `2r`.
    pub diameter_shortcut: bool,
    pub matching_m: Vec<(usize, usize)>,
    pub matching_n: Vec<(usize, usize)>,
    pub cross_edges: usize,
    pub replaced_by_expander: bool,
    /// The class has fewer than `d + 1` vertices and got a multigraph fill.
    pub degenerate: bool,
}

/// Moves every singleton class into the neighbouring class it has the most
/// edges to (smallest index among ties). Empty non-exceptional classes are dropped.
pub fn merge_singletons(g: &MultiGraph, partition: &Partition) -> Partition {
    let mut labels = partition.labels();
    let mut sizes: Vec<usize> = partition.classes.iter().map(VertexSet::len).collect();
    for (id, class) in partition.classes.iter().enumerate() {
        if class.len() != 1 {
            continue;
        }
        let v = class.members()[0];
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for w in g.neighbors(v) {
            if labels[w] != id {
                *counts.entry(labels[w]).or_insert(0) += 1;
            }
        }
        if let Some((&target, _)) = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) {
            labels[v] = target;
            sizes[id] -= 1;
            sizes[target] += 1;
        }
    }
    rebuild(g.vertex_count(), &labels, partition.classes.len())
}

fn rebuild(n: usize, labels: &[usize], count: usize) -> Partition {
    let mut members = vec![Vec::new(); count];
    for v in 0..n {
        members[labels[v]].push(v);
    }
    let classes = members
        .into_iter()
        .enumerate()
        .filter(|(i, m)| *i == Partition::EXCEPTIONAL || !m.is_empty())
        .map(|(_, m)| VertexSet::from_sorted(n, m))
        .collect();
    Partition { classes }
}

/// Makes every class even by shifting one vertex along a shortest path of
/// adjacent classes between two odd classes. Returns the new partition and
/// the moves as `(vertex, from, to)` in terms of the input class indices.
pub fn fix_parity(
    g: &MultiGraph,
    partition: &Partition,
) -> Result<(Partition, Vec<(usize, usize, usize)>), DecomposeError> {
    let n = g.vertex_count();
    let count = partition.classes.len();
    let mut labels = partition.labels();
    let mut sizes: Vec<usize> = partition.classes.iter().map(VertexSet::len).collect();
    let mut moves = Vec::new();

    while let Some(start) = (0..count).find(|&i| sizes[i] % 2 == 1) {
        // edge counts between classes under the current labels
        let mut between = vec![BTreeMap::<usize, usize>::new(); count];
        for &(u, v) in g.edges() {
            let (a, b) = (labels[u], labels[v]);
            if a != b {
                *between[a].entry(b).or_insert(0) += 1;
                *between[b].entry(a).or_insert(0) += 1;
            }
        }
        let mut prev = vec![usize::MAX; count];
        prev[start] = start;
        let mut queue = VecDeque::from([start]);
        let mut end = None;
        while let Some(x) = queue.pop_front() {
            if x != start && sizes[x] % 2 == 1 {
                end = Some(x);
                break;
            }
            let mut next: Vec<(usize, usize)> = between[x].iter().map(|(&y, &c)| (y, c)).collect();
            next.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            for (y, _) in next {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        let end = end.ok_or_else(|| {
            DecomposeError::Surgery(start, "no odd class is reachable for the parity fix".into())
        })?;
        let mut path = vec![end];
        while *path.last().unwrap() != start {
            path.push(prev[*path.last().unwrap()]);
        }
        path.reverse();
        for hop in path.windows(2) {
            let (from, to) = (hop[0], hop[1]);
            let v = (0..n)
                .find(|&v| labels[v] == from && g.neighbors(v).any(|w| labels[w] == to))
                .expect("adjacent classes share an edge");
            labels[v] = to;
            sizes[from] -= 1;
            sizes[to] += 1;
            moves.push((v, from, to));
        }
    }
    Ok((rebuild(n, &labels, count), moves))
}

/// A `d`-regular loop-free multigraph on `m` vertices together with its
/// certificate and whether it is a small multigraph fill.
///
/// Even `d` tries the circulant with offsets `1..=d/2` first; when that is
/// certified below `gamma_req`, and for odd `d`, random regular graphs are
/// drawn until one is certified at `gamma_req` and the best is kept. Classes
/// with fewer than `d + 1` vertices get a layered multigraph.
pub fn regular_fill(m: usize, d: usize, gamma_req: f64, seed: u64) -> Result<(MultiGraph, bool), DecomposeError> {
    if m * d % 2 == 1 {
        return Err(DecomposeError::Surgery(0, format!("{m} vertices cannot carry degree {d}")));
    }
    if d == 0 {
        return Ok((MultiGraph::new(m), false));
    }
    if m < 2 {
        return Err(DecomposeError::Surgery(0, format!("a single vertex cannot carry degree {d}")));
    }
    if m < d + 1 {
        return Ok((layered(m, d), true));
    }
    let mut best: Option<(f64, MultiGraph)> = None;
    if d % 2 == 0 {
        let offsets: Vec<usize> = (1..=d / 2).collect();
        let g = circulant(m, &offsets)?;
        let cert = certificate(&g);
        if cert >= gamma_req {
            return Ok((g, false));
        }
        best = Some((cert, g));
    }
    for attempt in 0..REPLACEMENT_ATTEMPTS {
        let Ok(g) = random_regular(m, d, derive_seed(seed, attempt as u64)) else {
            continue;
        };
        let cert = certificate(&g);
        if best.as_ref().is_none_or(|(b, _)| cert > *b) {
            best = Some((cert, g));
        }
        if cert >= gamma_req {
            break;
        }
    }
    match best {
        Some((_, g)) => Ok((g, false)),
        None => Ok((layered(m, d), true)),
    }
}

fn certificate(g: &MultiGraph) -> f64 {
    if g.vertex_count() <= DEFAULT_EXACT_LIMIT {
        expansion_constant(g, DEFAULT_EXACT_LIMIT).map_or(0.0, |c| c.constant.min(1.0))
    } else {
        cheeger_certificate(g).unwrap_or(0.0)
    }
}

/// Degree `d` on `m >= 2` vertices from stacked cyclic layers: offset `m/2`
/// contributes degree one, every smaller offset degree two.
fn layered(m: usize, d: usize) -> MultiGraph {
    let mut g = MultiGraph::new(m);
    let mut remaining = d;
    let half = |g: &mut MultiGraph| {
        for i in 0..m / 2 {
            g.add_edge(i, i + m / 2).expect("distinct endpoints");
        }
    };
    let max_offset = (m - 1) / 2;
    if remaining % 2 == 1 {
        half(&mut g);
        remaining -= 1;
    }
    let mut offset = 1;
    while remaining > 0 {
        if max_offset == 0 {
            half(&mut g);
            remaining -= 1;
            continue;
        }
        for i in 0..m {
            g.add_edge(i, (i + offset) % m).expect("distinct endpoints");
        }
        remaining -= 2;
        offset = offset % max_offset + 1;
    }
    g
}

/// Replaces the class's external edges by edges inside the class.
///
/// Returns the class graph on local indices (local `i` is the `i`-th
/// smallest member) and the plan. The exceptional class is always replaced
/// by an expander, as is any class where no admissible matching exists.
pub fn regularize_class(
    g: &MultiGraph,
    partition: &Partition,
    class_id: usize,
    gamma0: f64,
    seed: u64,
) -> Result<(MultiGraph, SurgeryPlan), DecomposeError> {
    let d = g.regular_degree().ok_or(DecomposeError::NotRegular)?;
    let n = g.vertex_count();
    let class = &partition.classes[class_id];
    let members = class.members();
    let m = members.len();
    if m == 0 {
        return Err(DecomposeError::Surgery(class_id, "empty class".into()));
    }
    let induced = g.induced_subgraph(members);
    let deficiency: Vec<usize> = (0..m).map(|i| d - induced.degree(i)).collect();
    let cross: usize = deficiency.iter().sum();
    let b_local: Vec<usize> = (0..m).filter(|&i| deficiency[i] > 0).collect();
    let r = (6.0 / gamma0).ceil() as usize;
    let mut plan = SurgeryPlan {
        class_id,
        class_size: m,
        boundary_b: VertexSet::from_sorted(n, b_local.iter().map(|&i| members[i]).collect()),
        r,
        spacing: None,
        diameter_shortcut: false,
        matching_m: Vec::new(),
        matching_n: Vec::new(),
        cross_edges: cross,
        replaced_by_expander: false,
        degenerate: false,
    };
    if cross % 2 == 1 {
        return Err(DecomposeError::Surgery(class_id, format!("odd number {cross} of cut edge ends")));
    }

    let replace = |plan: &mut SurgeryPlan| -> Result<MultiGraph, DecomposeError> {
        let (q, degenerate) =
            regular_fill(m, d, gamma0 / (6.0 * d as f64), seed).map_err(|e| match e {
                DecomposeError::Surgery(_, msg) => DecomposeError::Surgery(class_id, msg),
                other => other,
            })?;
        plan.replaced_by_expander = true;
        plan.degenerate = degenerate;
        Ok(q)
    };

    if class_id == Partition::EXCEPTIONAL {
        let q = replace(&mut plan)?;
        return Ok((q, plan));
    }
    if cross == 0 {
        return Ok((induced, plan));
    }

    let need = cross / 2;
    let mut near_b = vec![false; m];
    for &i in &b_local {
        near_b[i] = true;
        for w in induced.neighbors(i) {
            near_b[w] = true;
        }
    }
    let admissible: Vec<usize> = (0..induced.edge_count())
        .filter(|&e| {
            let (u, v) = induced.edge(e);
            !near_b[u] && !near_b[v]
        })
        .collect();

    let mut found = find_matching(&induced, &admissible, need, 2 * r, seed).map(|mm| (mm, 2 * r));
    if found.is_none() {
        if let Some(diam) = induced.diameter() {
            if diam <= 2 * r {
                plan.diameter_shortcut = true;
                found = (0..=diam.min(2 * r))
                    .rev()
                    .find_map(|s| find_matching(&induced, &admissible, need, s, seed).map(|mm| (mm, s)));
            }
        }
    }
    let Some((matching, spacing)) = found else {
        let q = replace(&mut plan)?;
        return Ok((q, plan));
    };
    plan.spacing = Some(spacing);

    let mut removed = vec![false; induced.edge_count()];
    let mut ends = Vec::with_capacity(2 * need);
    for &e in &matching {
        removed[e] = true;
        let (u, v) = induced.edge(e);
        ends.push(u);
        ends.push(v);
        plan.matching_m.push((members[u].min(members[v]), members[u].max(members[v])));
    }
    ends.sort_unstable();
    let slots: Vec<usize> = b_local
        .iter()
        .flat_map(|&i| std::iter::repeat_n(i, deficiency[i]))
        .collect();
    let mut q = MultiGraph::new(m);
    for e in 0..induced.edge_count() {
        if !removed[e] {
            let (u, v) = induced.edge(e);
            q.add_edge(u, v)?;
        }
    }
    for (&a, &b) in slots.iter().zip(&ends) {
        q.add_edge(a, b)?;
        plan.matching_n.push((members[a].min(members[b]), members[a].max(members[b])));
    }
    if q.regular_degree() != Some(d) {
        return Err(DecomposeError::Surgery(class_id, "repaired class is not regular".into()));
    }
    Ok((q, plan))
}

/// Greedy choice of `need` admissible edges pairwise more than `spacing`
/// apart, trying the given order and then seeded shuffles.
fn find_matching(g: &MultiGraph, admissible: &[usize], need: usize, spacing: usize, seed: u64) -> Option<Vec<usize>> {
    if admissible.len() < need {
        return None;
    }
    let mut order = admissible.to_vec();
    let mut rng = stream_rng(seed, spacing as u64);
    for attempt in 0..MATCHING_ATTEMPTS {
        if attempt > 0 {
            order.shuffle(&mut rng);
        }
        if let Some(mm) = greedy_matching(g, &order, need, spacing) {
            return Some(mm);
        }
    }
    None
}

fn greedy_matching(g: &MultiGraph, order: &[usize], need: usize, spacing: usize) -> Option<Vec<usize>> {
    let n = g.vertex_count();
    // dist[v] <= spacing means v is too close to an edge already chosen
    let mut dist = vec![usize::MAX; n];
    let mut chosen = Vec::with_capacity(need);
    for &e in order {
        if chosen.len() == need {
            break;
        }
        let (u, v) = g.edge(e);
        if dist[u] <= spacing || dist[v] <= spacing {
            continue;
        }
        chosen.push(e);
        let mut queue = VecDeque::new();
        for x in [u, v] {
            dist[x] = 0;
            queue.push_back(x);
        }
        while let Some(x) = queue.pop_front() {
            if dist[x] >= spacing {
                continue;
            }
            for w in g.neighbors(x) {
                if dist[w] > dist[x] + 1 {
                    dist[w] = dist[x] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    (chosen.len() == need).then_some(chosen)
}
