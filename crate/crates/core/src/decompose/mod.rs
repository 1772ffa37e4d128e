//! Splitting a regular graph into classes that are expanders after a small
//! number of edge edits.
//!
//! The pipeline is
//!
//! 1. [`prune_exceptional_set`] finds vertices near sets whose indicator
//!    contracts badly under powers of the averaging operator; they seed the
//!    exceptional class `P₀`.
//! 2. [`carve_partition`] repeatedly removes a sparse set from what is left,
//!    rounding it with [`sweep_round`] when its boundary is not tiny.
//! 3. [`regularize_class`] cuts the edges between classes and restores the
//!    degree inside each class, or replaces the class by an expander.
//! 4. [`decompose`] runs all of the above and certifies every class;
//!    [`verify_decomposition`] checks a result independently.

mod carve;
mod cut;
mod pipeline;
mod prune;
mod surgery;
mod sweep;

pub use carve::{carve_partition, CarveOutcome, CarveStep, StepKind};
pub use cut::{find_sparse_cut, is_sparse, sparsity, CutMode};
pub use pipeline::{
    certify_component, decompose, verify_decomposition, CertificateKind, ClassCertificate, ComponentCheck,
    Decomposition, DecompositionReport, VerifyReport,
};
pub use prune::{is_exceptional, prune_exceptional_set, removal_hypothesis_holds, PruneMode, PruneOutcome};
pub use surgery::{fix_parity, merge_singletons, regular_fill, regularize_class, SurgeryPlan};
pub use sweep::{sweep_round, SweepOutcome};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphError, VertexSet};
use crate::markov::MarkovError;

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("precondition `{what}` fails: measured {measured}, limit {limit}")]
    Precondition { what: &'static str, measured: f64, limit: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("the graph is not regular")]
    NotRegular,
    #[error("exact search is limited to {limit} vertices, got {size}")]
    ExactLimit { size: usize, limit: usize },
    #[error("class {0} cannot be made regular: {1}")]
    Surgery(usize, String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

/// Parameters of the decomposition.
///
/// `gamma` is the sparsity threshold of the carving step, `alpha` the
/// boundary below which a sparse set is taken as is, `k` and `c_prime` the
/// power and ratio of the exceptional-set test, and `delta`/`beta` the slack
/// and exceptional-mass budget used in the reported bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecomposeParams {
    pub epsilon: f64,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub c_prime: f64,
    pub gamma: f64,
    pub delta: f64,
    pub exact_cut_limit: usize,
    pub cut_mode: CutMode,
    pub seed: u64,
}

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_EXACT_CUT_LIMIT: usize = 20;

/// Smallest `k >= 1` with `(1 − ε)^k < 1/2`.
pub fn default_k(epsilon: f64) -> usize {
    let mut k = 1;
    while (1.0 - epsilon).powi(k as i32) >= 0.5 {
        k += 1;
    }
    k
}

impl DecomposeParams {
    /// Defaults derived from `ε` for a graph of degree `d`.
    pub fn from_epsilon(epsilon: f64, d: usize) -> Self {
        let k = default_k(epsilon);
        let gamma = epsilon * epsilon / (36.0 * d.max(1) as f64);
        let delta = DEFAULT_DELTA;
        Self {
            epsilon,
            k,
            alpha: gamma / 4.0,
            beta: delta / 4.0,
            c_prime: Self::default_c_prime(epsilon, k),
            gamma,
            delta,
            exact_cut_limit: DEFAULT_EXACT_CUT_LIMIT,
            cut_mode: CutMode::Auto,
            seed: 0,
        }
    }

    /// `2(1−ε)^k`, or the midpoint of `((1−ε)^k, 1)` when that is not below 1.
    pub fn default_c_prime(epsilon: f64, k: usize) -> f64 {
        let c = (1.0 - epsilon).powi(k as i32);
        if 2.0 * c < 1.0 {
            2.0 * c
        } else {
            (1.0 + c) / 2.0
        }
    }

    /// `(1 − ε)^k`, the contraction ratio the exceptional test compares against.
    pub fn base_ratio(&self) -> f64 {
        (1.0 - self.epsilon).powi(self.k as i32)
    }

    /// Overrides `gamma` and rebinds `alpha = gamma / 4`.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self.alpha = gamma / 4.0;
        self
    }

    /// Overrides `k` and rebinds `c_prime`.
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self.c_prime = Self::default_c_prime(self.epsilon, k);
        self
    }

    /// Overrides `delta` and rebinds `beta = delta / 4`.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self.beta = delta / 4.0;
        self
    }

    pub fn validate(&self) -> Result<(), DecomposeError> {
        let bad = |m: String| Err(DecomposeError::InvalidParams(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        let c = self.base_ratio();
        if !(self.c_prime > c && self.c_prime < 1.0) {
            return bad(format!("c_prime must lie in ({c}, 1), got {}", self.c_prime));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Disjoint classes covering every vertex; `classes[0]` is the exceptional
/// class and may be empty, all other classes are nonempty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partition {
    pub classes: Vec<VertexSet>,
}

impl Partition {
    pub const EXCEPTIONAL: usize = 0;

    pub fn universe(&self) -> usize {
        self.classes.first().map_or(0, VertexSet::universe)
    }

    /// Class index of every vertex.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![usize::MAX; self.universe()];
        for (i, c) in self.classes.iter().enumerate() {
            for &v in c.members() {
                labels[v] = i;
            }
        }
        labels
    }

    /// Whether the classes are pairwise disjoint and cover `0..n`.
    pub fn is_valid(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for c in &self.classes {
            if c.universe() != n {
                return false;
            }
            for &v in c.members() {
                if seen[v] {
                    return false;
                }
                seen[v] = true;
            }
        }
        seen.into_iter().all(|b| b)
            && self.classes.iter().skip(1).all(|c| !c.is_empty())
    }
}
