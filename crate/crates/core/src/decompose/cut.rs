//! Search for sets with small boundary inside the active vertex set.
//!
//! A set `S` is sparse at level `γ` when `‖Mχ_S − χ_S‖₁ < γ|S|`, which for a
//! `d`-regular graph reads `2|E(S, S^c)| < γ d |S|` in raw counts. The
//! boundary is always taken in the whole graph.

use serde::{Deserialize, Serialize};

use super::DecomposeError;
use crate::graph::{MultiGraph, VertexSet};
use crate::markov::{power_iterate, SpectralOptions, SpectrumEnd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutMode {
    /// Exact when the active set fits the exact limit, spectral otherwise.
    #[default]
    Auto,
    Exact,
    Spectral,
}

/// `2|E(S, S^c)| < γ d |S|`.
pub fn is_sparse(boundary: usize, size: usize, d: usize, gamma: f64) -> bool {
    size > 0 && ((2 * boundary) as f64) < gamma * (d * size) as f64
}

/// `‖Mχ_S − χ_S‖₁ / |S| = 2|E(S, S^c)| / (d |S|)`.
pub fn sparsity(boundary: usize, size: usize, d: usize) -> f64 {
    2.0 * boundary as f64 / (d * size) as f64
}

/// A sparse subset of `active`, or `None` when the search finds none.
///
/// Exact mode returns a minimum-size sparse set, lexicographically smallest
/// among those. Spectral mode evaluates every connected piece of the active
/// set and every prefix and suffix of its Fiedler ordering, and returns the
/// smallest passing candidate, the sparser one among equal sizes.
pub fn find_sparse_cut(
    g: &MultiGraph,
    active: &VertexSet,
    gamma: f64,
    mode: CutMode,
    exact_limit: usize,
    seed: u64,
) -> Result<Option<VertexSet>, DecomposeError> {
    let d = g.regular_degree().ok_or(DecomposeError::NotRegular)?;
    match mode {
        CutMode::Exact => exact_cut(g, active, gamma, d, exact_limit),
        CutMode::Spectral => Ok(spectral_cut(g, active, gamma, d, seed)),
        CutMode::Auto if active.len() <= exact_limit => exact_cut(g, active, gamma, d, exact_limit),
        CutMode::Auto => Ok(spectral_cut(g, active, gamma, d, seed)),
    }
}

fn exact_cut(
    g: &MultiGraph,
    active: &VertexSet,
    gamma: f64,
    d: usize,
    limit: usize,
) -> Result<Option<VertexSet>, DecomposeError> {
    let a = active.members();
    let m = a.len();
    if m > limit || m >= 64 {
        return Err(DecomposeError::ExactLimit { size: m, limit });
    }
    if m == 0 {
        return Ok(None);
    }
    let mut local = vec![usize::MAX; g.vertex_count()];
    for (i, &v) in a.iter().enumerate() {
        local[v] = i;
    }
    // neighbours inside the active set as (local index) with multiplicity
    let inner: Vec<Vec<usize>> = a
        .iter()
        .map(|&v| g.neighbors(v).filter(|&w| local[w] != usize::MAX).map(|w| local[w]).collect())
        .collect();
    let boundary_of = |mask: u64| -> usize {
        let mut b = 0usize;
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let internal = inner[i].iter().filter(|&&j| mask >> j & 1 == 1).count();
            b += d - internal;
        }
        b
    };
    for size in 1..=m {
        let mut best: Option<u64> = None;
        let mut mask: u64 = (1u64 << size) - 1;
        let end = 1u64 << m;
        while mask < end {
            if is_sparse(boundary_of(mask), size, d, gamma) {
                best = Some(match best {
                    None => mask,
                    Some(b) => lex_min(b, mask),
                });
            }
            // next mask with the same popcount
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            mask = (((r ^ mask) >> 2) / c) | r;
        }
        if let Some(mask) = best {
            let members = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| a[i]).collect();
            return Ok(Some(VertexSet::from_sorted(g.vertex_count(), members)));
        }
    }
    Ok(None)
}

/// Of two equal-size masks, the one whose sorted member list is lexicographically smaller.
fn lex_min(a: u64, b: u64) -> u64 {
    let low = (a ^ b) & (a ^ b).wrapping_neg();
    if a & low != 0 {
        a
    } else {
        b
    }
}

struct Candidate {
    boundary: usize,
    members: Vec<usize>,
}

fn spectral_cut(g: &MultiGraph, active: &VertexSet, gamma: f64, d: usize, seed: u64) -> Option<VertexSet> {
    let n = g.vertex_count();
    let sub = g.induced_subgraph(active.members());
    let mut best: Option<(f64, Candidate)> = None;
    let mut consider = |c: Candidate| {
        let size = c.members.len();
        if !is_sparse(c.boundary, size, d, gamma) {
            return;
        }
        let s = sparsity(c.boundary, size, d);
        let better = match &best {
            None => true,
            Some((bs, bc)) => {
                let bsize = bc.members.len();
                size < bsize
                    || (size == bsize && s < *bs)
                    || (size == bsize && s == *bs && {
                        let mut x = c.members.clone();
                        let mut y = bc.members.clone();
                        x.sort_unstable();
                        y.sort_unstable();
                        x < y
                    })
            }
        };
        if better {
            best = Some((s, c));
        }
    };

    for (ci, comp) in sub.components().into_iter().enumerate() {
        let global: Vec<usize> = comp.iter().map(|&i| active.members()[i]).collect();
        let b = boundary_in(g, &global);
        consider(Candidate {
            boundary: b,
            members: global.clone(),
        });
        if comp.len() < 2 {
            continue;
        }
        let order = fiedler_order(g, &global, d, seed, ci as u64);
        for ord in [order.clone(), order.into_iter().rev().collect::<Vec<_>>()] {
            let mut inside = vec![false; n];
            let mut boundary: i64 = 0;
            for (j, &v) in ord.iter().enumerate().take(ord.len() - 1) {
                let internal = g.neighbors(v).filter(|&w| inside[w]).count() as i64;
                boundary += d as i64 - 2 * internal;
                inside[v] = true;
                consider(Candidate {
                    boundary: boundary as usize,
                    members: ord[..=j].to_vec(),
                });
            }
        }
    }
    best.map(|(_, c)| {
        let mut m = c.members;
        m.sort_unstable();
        VertexSet::from_sorted(n, m)
    })
}

fn boundary_in(g: &MultiGraph, members: &[usize]) -> usize {
    let mut inside = vec![false; g.vertex_count()];
    for &v in members {
        inside[v] = true;
    }
    members
        .iter()
        .map(|&v| g.neighbors(v).filter(|&w| !inside[w]).count())
        .sum()
}

/// Vertices of a connected piece ordered by the second eigenvector of the
/// padded operator `(A_C + diag(d − deg_C)) / d`, which is symmetric and
/// stochastic on the piece.
fn fiedler_order(g: &MultiGraph, piece: &[usize], d: usize, seed: u64, stream: u64) -> Vec<usize> {
    let m = piece.len();
    let mut local = std::collections::HashMap::with_capacity(m);
    for (i, &v) in piece.iter().enumerate() {
        local.insert(v, i);
    }
    let nbrs: Vec<Vec<usize>> = piece
        .iter()
        .map(|&v| g.neighbors(v).filter_map(|w| local.get(&w).copied()).collect())
        .collect();
    let inv = 1.0 / d as f64;
    let op = |x: &[f64], out: &mut [f64]| {
        for i in 0..m {
            let s: f64 = nbrs[i].iter().map(|&j| x[j]).sum();
            let pad = (d - nbrs[i].len()) as f64 * x[i];
            out[i] = (s + pad) * inv;
        }
    };
    let constant = vec![1.0 / (m as f64).sqrt(); m];
    let opts = SpectralOptions {
        tolerance: 1e-6,
        max_iter: 20_000,
        seed,
    };
    let pair = power_iterate(m, op, SpectrumEnd::Top, &[constant], &opts, stream);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| pair.vector[a].total_cmp(&pair.vector[b]).then(a.cmp(&b)));
    idx.into_iter().map(|i| piece[i]).collect()
}
