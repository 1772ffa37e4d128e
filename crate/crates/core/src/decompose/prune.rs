//! The exceptional class: vertices near sets whose indicator keeps a large
//! share of its defect after `k` steps of the walk.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use super::{DecomposeError, DecomposeParams};
use crate::graph::{MultiGraph, VertexSet};
use crate::markov::{l2_norm, spectral_pairs, MarkovOperator, SpectralOptions};
use crate::rng::stream_rng;

/// Largest graph on which the removal hypothesis is checked over all subsets.
pub const HYPOTHESIS_LIMIT: usize = 16;
const BALL_CENTERS: usize = 64;
const BALL_RADII: [usize; 3] = [0, 1, 2];
const SWEEP_QUANTILES: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    /// Largest exceptional set over all subsets.
    Exact,
    /// Greedy union over a seeded candidate family.
    Heuristic,
}

#[derive(Clone, Debug, Serialize)]
pub struct PruneOutcome {
    /// The exceptional set `B′` itself.
    pub core: VertexSet,
    /// `B = N_{2k+2}(B′)`.
    pub set: VertexSet,
    pub mode: PruneMode,
    /// `|B| / n`.
    pub mass: f64,
    /// `δ² / (α² (c′ − c)²) · (d^{2k+2} + 1)`, a bound on `|B| / n`.
    pub bound: f64,
    pub within_bound: bool,
    /// Whether the removal hypothesis holds for every subset; `None` above
    /// [`HYPOTHESIS_LIMIT`] vertices.
    pub hypothesis_verified: Option<bool>,
}

/// `(‖Mχ − χ‖, ‖M^{k+1}χ − M^kχ‖)` for the indicator `chi`.
fn defects(op: &MarkovOperator, chi: &[f64], k: usize) -> (f64, f64) {
    let n = chi.len();
    let mut cur = chi.to_vec();
    let mut next = vec![0.0; n];
    op.apply_slice(&cur, &mut next);
    let step = l2_norm(&diff(&next, &cur));
    for _ in 1..=k {
        std::mem::swap(&mut cur, &mut next);
        op.apply_slice(&cur, &mut next);
    }
    (step, l2_norm(&diff(&next, &cur)))
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn indicator_values(s: &VertexSet) -> Vec<f64> {
    let mut chi = vec![0.0; s.universe()];
    for &v in s.members() {
        chi[v] = 1.0;
    }
    chi
}

/// Nonempty, `‖M^{k+1}χ_S − M^kχ_S‖ >= c′ ‖Mχ_S − χ_S‖` and
/// `‖Mχ_S − χ_S‖ >= α ‖χ_S‖`.
pub fn is_exceptional(op: &MarkovOperator, s: &VertexSet, k: usize, c_prime: f64, alpha: f64) -> bool {
    if s.is_empty() {
        return false;
    }
    let (step, tail) = defects(op, &indicator_values(s), k);
    tail >= c_prime * step && step >= alpha * s.mass().sqrt()
}

/// Whether `‖M^{k+1}χ_S − M^kχ_S‖ < c ‖Mχ_S − χ_S‖ + δ` for every subset `S`.
pub fn removal_hypothesis_holds(g: &MultiGraph, k: usize, c: f64, delta: f64) -> Result<bool, DecomposeError> {
    let n = g.vertex_count();
    if n > HYPOTHESIS_LIMIT {
        return Err(DecomposeError::ExactLimit {
            size: n,
            limit: HYPOTHESIS_LIMIT,
        });
    }
    let op = MarkovOperator::new(g)?;
    Ok((0u64..1 << n).into_par_iter().all(|mask| {
        let chi: Vec<f64> = (0..n).map(|v| (mask >> v & 1) as f64).collect();
        let (step, tail) = defects(&op, &chi, k);
        tail < c * step + delta
    }))
}

/// Seeds the exceptional class.
///
/// Up to `params.exact_cut_limit` vertices, `B′` is a largest exceptional set
/// (lexicographically smallest among those); above that it is grown greedily
/// from connected components, bipartition sides, small balls around seeded
/// centres and level sets of the extreme eigenvectors, keeping a candidate
/// only when the union stays exceptional.
pub fn prune_exceptional_set(g: &MultiGraph, params: &DecomposeParams) -> Result<PruneOutcome, DecomposeError> {
    let op = MarkovOperator::new(g)?;
    let n = g.vertex_count();
    let d = op.degree();
    let k = params.k;
    let (core, mode) = if n <= params.exact_cut_limit && n < 64 {
        (exact_core(&op, n, params), PruneMode::Exact)
    } else {
        (greedy_core(g, &op, params)?, PruneMode::Heuristic)
    };
    let set = neighbourhood(g, &core, 2 * k + 2);
    let c = params.base_ratio();
    let bound = params.delta.powi(2) / (params.alpha.powi(2) * (params.c_prime - c).powi(2))
        * ((d as f64).powi(2 * k as i32 + 2) + 1.0);
    let mass = set.mass();
    let hypothesis_verified = if n <= HYPOTHESIS_LIMIT {
        Some(removal_hypothesis_holds(g, k, c, params.delta)?)
    } else {
        None
    };
    Ok(PruneOutcome {
        core,
        within_bound: mass <= bound,
        set,
        mode,
        mass,
        bound,
        hypothesis_verified,
    })
}

fn exact_core(op: &MarkovOperator, n: usize, params: &DecomposeParams) -> VertexSet {
    let best = (1u64..1 << n)
        .into_par_iter()
        .filter(|&mask| {
            let members: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let s = VertexSet::from_sorted(n, members);
            is_exceptional(op, &s, params.k, params.c_prime, params.alpha)
        })
        .map(|mask| (mask.count_ones(), std::cmp::Reverse(lex_key(mask))))
        .max();
    match best {
        None => VertexSet::empty(n),
        Some((_, std::cmp::Reverse(key))) => VertexSet::from_sorted(n, key),
    }
}

fn lex_key(mask: u64) -> Vec<usize> {
    (0..64).filter(|&v| mask >> v & 1 == 1).collect()
}

fn greedy_core(g: &MultiGraph, op: &MarkovOperator, params: &DecomposeParams) -> Result<VertexSet, DecomposeError> {
    let n = g.vertex_count();
    let mut core = VertexSet::empty(n);
    for cand in candidates(g, params)? {
        if cand.is_empty() || cand.difference(&core).is_empty() {
            continue;
        }
        let merged = core.union(&cand);
        if is_exceptional(op, &merged, params.k, params.c_prime, params.alpha) {
            core = merged;
        }
    }
    Ok(core)
}

fn candidates(g: &MultiGraph, params: &DecomposeParams) -> Result<Vec<VertexSet>, DecomposeError> {
    let n = g.vertex_count();
    let mut out = Vec::new();
    for comp in g.components() {
        if let Some((a, b)) = bipartition(g, &comp) {
            out.push(VertexSet::from_sorted(n, a));
            out.push(VertexSet::from_sorted(n, b));
        }
        out.push(VertexSet::from_sorted(n, comp));
    }

    let centers: Vec<usize> = if n <= BALL_CENTERS {
        (0..n).collect()
    } else {
        let mut rng = stream_rng(params.seed, 0);
        let mut c = sample(&mut rng, n, BALL_CENTERS).into_vec();
        c.sort_unstable();
        c
    };
    for &v in &centers {
        for &r in &BALL_RADII {
            let dist = g.bfs_limited(v, r);
            out.push(VertexSet::from_sorted(n, (0..n).filter(|&w| dist[w] <= r).collect()));
        }
    }

    if n >= 2 {
        let opts = SpectralOptions {
            tolerance: 1e-6,
            max_iter: 5_000,
            seed: params.seed,
        };
        let pairs = spectral_pairs(g, &opts)?;
        for vec in [&pairs.second, &pairs.smallest] {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| vec[a].total_cmp(&vec[b]).then(a.cmp(&b)));
            for q in 1..=SWEEP_QUANTILES {
                let cut = n * q / (SWEEP_QUANTILES + 1);
                if cut == 0 || cut == n {
                    continue;
                }
                let mut low = order[..cut].to_vec();
                let mut high = order[cut..].to_vec();
                low.sort_unstable();
                high.sort_unstable();
                out.push(VertexSet::from_sorted(n, low));
                out.push(VertexSet::from_sorted(n, high));
            }
        }
    }
    Ok(out)
}

/// The two colour classes of a bipartite component, or `None`.
fn bipartition(g: &MultiGraph, comp: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    if comp.len() < 2 {
        return None;
    }
    let mut colour = vec![u8::MAX; g.vertex_count()];
    let mut queue = VecDeque::from([comp[0]]);
    colour[comp[0]] = 0;
    while let Some(u) = queue.pop_front() {
        for w in g.neighbors(u) {
            if colour[w] == u8::MAX {
                colour[w] = 1 - colour[u];
                queue.push_back(w);
            } else if colour[w] == colour[u] {
                return None;
            }
        }
    }
    let (a, b): (Vec<usize>, Vec<usize>) = comp.iter().partition(|&&v| colour[v] == 0);
    Some((a, b))
}

/// Vertices within distance `radius` of `core`.
fn neighbourhood(g: &MultiGraph, core: &VertexSet, radius: usize) -> VertexSet {
    let n = g.vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &v in core.members() {
        dist[v] = 0;
        queue.push_back(v);
    }
    while let Some(u) = queue.pop_front() {
        if dist[u] >= radius {
            continue;
        }
        for w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    VertexSet::from_sorted(n, (0..n).filter(|&v| dist[v] != usize::MAX).collect())
}
