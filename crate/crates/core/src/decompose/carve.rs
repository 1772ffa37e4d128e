//! Carving the vertex set into classes with small total boundary.

use serde::Serialize;

use super::cut::{find_sparse_cut, CutMode};
use super::prune::{prune_exceptional_set, PruneOutcome};
use super::sweep::sweep_round;
use super::{DecomposeError, DecomposeParams, Partition};
use crate::graph::{edge_boundary, MultiGraph};
use crate::markov::{MarkovOperator, RealVertexFunction};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// The sparse set had boundary below `α` and became a class as is.
    Direct,
    /// The class is the sweep-rounded set minus earlier classes.
    Sweep,
    /// The rounding preconditions failed; the sparse set was used instead.
    SweepPreconditionMiss,
    /// Rounding returned only already-assigned vertices; the sparse set was used instead.
    SweepEmpty,
}

#[derive(Clone, Debug, Serialize)]
pub struct CarveStep {
    pub sparse_size: usize,
    pub sparse_boundary: usize,
    pub kind: StepKind,
    pub class_size: usize,
    /// `Exact` or `Spectral`, after resolving `Auto`.
    pub mode: CutMode,
}

#[derive(Clone, Debug, Serialize)]
pub struct CarveOutcome {
    pub partition: Partition,
    /// `Σᵢ ‖Mχ_{Pᵢ} − χ_{Pᵢ}‖₁` over all classes, the exceptional one included.
    pub boundary_mass: f64,
    pub steps: Vec<CarveStep>,
    pub prune: PruneOutcome,
}

/// Builds the partition: the exceptional class first, then repeatedly a
/// minimum-size sparse set of what is left, and finally the remainder.
pub fn carve_partition(g: &MultiGraph, params: &DecomposeParams) -> Result<CarveOutcome, DecomposeError> {
    params.validate()?;
    let d = g.regular_degree().ok_or(DecomposeError::NotRegular)?;
    let n = g.vertex_count();
    let op = MarkovOperator::new(g)?;
    let prune = prune_exceptional_set(g, params)?;

    let mut assigned = prune.set.clone();
    let mut classes = vec![prune.set.clone()];
    let mut steps = Vec::new();

    for iter in 0..=n {
        let active = assigned.complement();
        if active.is_empty() {
            break;
        }
        if iter == n {
            return Err(DecomposeError::InvalidParams(format!(
                "carving did not finish within {n} iterations"
            )));
        }
        let mode = match params.cut_mode {
            CutMode::Auto if active.len() <= params.exact_cut_limit => CutMode::Exact,
            CutMode::Auto => CutMode::Spectral,
            m => m,
        };
        let seed = derive_seed(params.seed, iter as u64 + 1);
        let Some(s) = find_sparse_cut(g, &active, params.gamma, mode, params.exact_cut_limit, seed)? else {
            classes.push(active);
            break;
        };
        let b = edge_boundary(g, &s)?;
        let (class, kind) = if ((2 * b) as f64) < params.alpha * (d * s.len()) as f64 {
            (s.clone(), StepKind::Direct)
        } else {
            let f = op.power(RealVertexFunction::indicator(&s).values(), params.k)?;
            match sweep_round(g, &s, &RealVertexFunction::new(f)) {
                Ok(out) => {
                    let p = out.set.difference(&assigned);
                    if p.is_empty() {
                        (s.clone(), StepKind::SweepEmpty)
                    } else {
                        (p, StepKind::Sweep)
                    }
                }
                Err(DecomposeError::Precondition { .. }) => (s.clone(), StepKind::SweepPreconditionMiss),
                Err(e) => return Err(e),
            }
        };
        steps.push(CarveStep {
            sparse_size: s.len(),
            sparse_boundary: b,
            kind,
            class_size: class.len(),
            mode,
        });
        assigned = assigned.union(&class);
        classes.push(class);
    }

    let mut boundary_mass = 0.0;
    for c in &classes {
        boundary_mass += 2.0 * edge_boundary(g, c)? as f64 / (d * n) as f64;
    }
    let partition = Partition { classes };
    debug_assert!(partition.is_valid(n));
    Ok(CarveOutcome {
        partition,
        boundary_mass,
        steps,
        prune,
    })
}
