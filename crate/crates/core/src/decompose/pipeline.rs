//! End-to-end decomposition and its independent verifier.

use rayon::prelude::*;
use serde::Serialize;

use super::carve::{carve_partition, CarveOutcome};
use super::surgery::{fix_parity, merge_singletons, regularize_class, SurgeryPlan};
use super::{DecomposeError, DecomposeParams, Partition};
use crate::graph::{edit_count, expansion_constant, MultiGraph, DEFAULT_EXACT_LIMIT};
use crate::markov::cheeger_certificate;
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    BruteForce,
    Cheeger,
}

/// Lower bound on the edge expansion `min |∂S| / (d|S|)` of one class.
#[derive(Clone, Debug, Serialize)]
pub struct ClassCertificate {
    pub size: usize,
    pub kind: CertificateKind,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    /// `γ / (6d)`.
    pub gamma_required: f64,
    /// Smallest class certificate.
    pub gamma_prime_achieved: f64,
    pub edit_distance: f64,
    pub boundary_mass: f64,
    pub per_class: Vec<ClassCertificate>,
    /// Indices of classes whose edges were replaced by an expander.
    pub replaced_classes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    #[serde(skip)]
    pub graph: MultiGraph,
    pub report: DecompositionReport,
    pub partition: Partition,
    pub surgeries: Vec<SurgeryPlan>,
    pub carve: CarveOutcome,
    /// Vertices moved by the parity fix as `(vertex, from, to)`.
    pub parity_moves: Vec<(usize, usize, usize)>,
    /// `|E(g) Δ E(g′)|` recomputed from the two edge multisets.
    pub edit_count: usize,
    /// The same count assembled from the per-class surgeries.
    pub edits_accounted: usize,
}

/// Exact expansion constant up to [`DEFAULT_EXACT_LIMIT`] vertices, the
/// Cheeger bound above. A single vertex, having no proper subsets to test,
/// gets the value `1`; a spectral estimate that does not converge gets `0`.
pub fn certify_component(g: &MultiGraph) -> Result<ClassCertificate, DecomposeError> {
    let size = g.vertex_count();
    if size <= DEFAULT_EXACT_LIMIT {
        let check = expansion_constant(g, DEFAULT_EXACT_LIMIT)?;
        return Ok(ClassCertificate {
            size,
            kind: CertificateKind::BruteForce,
            value: check.constant.min(1.0),
        });
    }
    let value = match cheeger_certificate(g) {
        Ok(v) => v,
        Err(crate::markov::MarkovError::NotConverged { .. }) => 0.0,
        Err(e) => return Err(e.into()),
    };
    Ok(ClassCertificate {
        size,
        kind: CertificateKind::Cheeger,
        value,
    })
}

/// Carves `g`, repairs every class and certifies the result.
pub fn decompose(g: &MultiGraph, params: &DecomposeParams) -> Result<Decomposition, DecomposeError> {
    params.validate()?;
    let d = g.regular_degree().ok_or(DecomposeError::NotRegular)?;
    let n = g.vertex_count();
    let carve = carve_partition(g, params)?;
    let mut partition = merge_singletons(g, &carve.partition);
    let mut parity_moves = Vec::new();
    if d % 2 == 1 {
        let (p, moves) = fix_parity(g, &partition)?;
        partition = p;
        parity_moves = moves;
    }

    let ids: Vec<usize> = (0..partition.classes.len())
        .filter(|&i| !partition.classes[i].is_empty())
        .collect();
    let repaired: Vec<(MultiGraph, SurgeryPlan)> = ids
        .par_iter()
        .map(|&id| regularize_class(g, &partition, id, params.gamma, derive_seed(params.seed, 1 << 32 | id as u64)))
        .collect::<Result<_, _>>()?;

    let mut g_prime = MultiGraph::new(n);
    let mut edits_accounted = 0;
    let mut cut_ends = 0;
    for (&id, (q, plan)) in ids.iter().zip(&repaired) {
        let members = partition.classes[id].members();
        for &(u, v) in q.edges() {
            g_prime.add_edge(members[u], members[v])?;
        }
        edits_accounted += edit_count(&g.induced_subgraph(members), q)?;
        cut_ends += plan.cross_edges;
    }
    edits_accounted += cut_ends / 2;
    let edits = edit_count(g, &g_prime)?;

    let per_class: Vec<ClassCertificate> = repaired
        .par_iter()
        .map(|(q, _)| certify_component(q))
        .collect::<Result<_, _>>()?;
    let gamma_prime_achieved = per_class.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let surgeries: Vec<SurgeryPlan> = repaired.into_iter().map(|(_, p)| p).collect();
    let report = DecompositionReport {
        gamma_required: params.gamma / (6.0 * d as f64),
        gamma_prime_achieved: if per_class.is_empty() { 1.0 } else { gamma_prime_achieved },
        edit_distance: if n == 0 { 0.0 } else { edits as f64 / n as f64 },
        boundary_mass: carve.boundary_mass,
        per_class,
        replaced_classes: surgeries.iter().filter(|p| p.replaced_by_expander).map(|p| p.class_id).collect(),
    };
    Ok(Decomposition {
        graph: g_prime,
        report,
        partition,
        surgeries,
        carve,
        parity_moves,
        edit_count: edits,
        edits_accounted,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentCheck {
    pub size: usize,
    pub kind: CertificateKind,
    pub value: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub same_vertex_set: bool,
    /// `None` when the vertex sets differ.
    pub edit_distance: Option<f64>,
    pub regular: bool,
    pub gamma: f64,
    pub components: Vec<ComponentCheck>,
    pub passes: bool,
}

/// Checks that `g_prime` lives on the vertex set of `g`, is regular and is a
/// disjoint union of `gamma`-expanders.
pub fn verify_decomposition(g: &MultiGraph, g_prime: &MultiGraph, gamma: f64) -> VerifyReport {
    let same_vertex_set = g.vertex_count() == g_prime.vertex_count();
    let edit_distance = edit_count(g, g_prime)
        .ok()
        .map(|c| if g.vertex_count() == 0 { 0.0 } else { c as f64 / g.vertex_count() as f64 });
    let regular = g_prime.regular_degree().is_some();
    let components: Vec<ComponentCheck> = g_prime
        .components()
        .par_iter()
        .map(|comp| {
            let sub = g_prime.induced_subgraph(comp);
            match certify_component(&sub) {
                Ok(c) => ComponentCheck {
                    size: c.size,
                    kind: c.kind,
                    passes: c.value >= gamma * (1.0 - 1e-12),
                    value: c.value,
                },
                Err(_) => ComponentCheck {
                    size: comp.len(),
                    kind: if comp.len() <= DEFAULT_EXACT_LIMIT {
                        CertificateKind::BruteForce
                    } else {
                        CertificateKind::Cheeger
                    },
                    value: 0.0,
                    passes: false,
                },
            }
        })
        .collect();
    let passes = same_vertex_set && regular && components.iter().all(|c| c.passes);
    VerifyReport {
        same_vertex_set,
        edit_distance,
        regular,
        gamma,
        components,
        passes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, cycle, petersen};

    #[test]
    fn fixed_point_has_no_edits() {
        let g = complete(4).unwrap().disjoint_union(&complete(4).unwrap());
        let p = DecomposeParams::from_epsilon(0.1, 3);
        let out = decompose(&g, &p).unwrap();
        assert_eq!(out.graph, g);
        assert_eq!(out.edit_count, 0);
        assert_eq!(out.report.edit_distance, 0.0);
        assert_eq!(out.report.per_class.len(), 2);
        assert!(out.report.replaced_classes.is_empty());
        assert!((out.report.gamma_prime_achieved - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn verify_k4_pair_and_c8() {
        let g = complete(4).unwrap().disjoint_union(&complete(4).unwrap());
        let rep = verify_decomposition(&g, &g, 2.0 / 3.0);
        assert!(rep.passes);
        let c8 = cycle(8).unwrap();
        let rep = verify_decomposition(&c8, &c8, 0.3);
        assert!(!rep.passes);
        assert!((rep.components[0].value - 0.25).abs() < 1e-12);
        let rep = verify_decomposition(&c8, &petersen(), 0.1);
        assert!(!rep.same_vertex_set);
        assert_eq!(rep.edit_distance, None);
        assert!(!rep.passes);
    }

    #[test]
    fn petersen_is_left_alone() {
        let g = petersen();
        let out = decompose(&g, &DecomposeParams::from_epsilon(0.1, 3)).unwrap();
        assert_eq!(out.edit_count, 0);
        assert_eq!(out.edits_accounted, 0);
    }
}
