//! Threshold rounding of a near-indicator function.

use serde::Serialize;

use super::DecomposeError;
use crate::graph::{MultiGraph, VertexSet};
use crate::markov::{l1_norm, l2_norm, MarkovOperator, RealVertexFunction};

const MASS_TOLERANCE: f64 = 1e-12;

/// Result of [`sweep_round`] with the three guarantees evaluated exactly.
#[derive(Clone, Debug, Serialize)]
pub struct SweepOutcome {
    pub set: VertexSet,
    /// Smallest value of `f` inside the chosen set is above this level.
    pub threshold: f64,
    pub boundary: usize,
    /// `‖χ_U − Mχ_U‖₁`.
    pub l1_defect: f64,
    /// `4 d^{1/2} 72^{1/4} |S|^{3/4} ‖f − Mf‖^{1/2}`.
    pub bound: f64,
    pub thresholds_scanned: usize,
    /// `|U| < 2|S|`.
    pub size_ok: bool,
    /// `|U ∩ S| > 3|S|/4`.
    pub overlap_ok: bool,
    /// `‖χ_U − Mχ_U‖₁ <= bound`.
    pub bound_ok: bool,
}

impl SweepOutcome {
    pub fn guarantees_hold(&self) -> bool {
        self.size_ok && self.overlap_ok && self.bound_ok
    }
}

/// Rounds `f` to a level set `{f > t}` with `t` in `(1/2, 2/3)`, choosing the
/// level set of smallest boundary; ties go to the lowest threshold.
///
/// Requires `f` boxed, `‖f‖₁ = |S|` and `‖f − χ_S‖ < |S|^{1/2}/6`, all in the
/// normalised measure; a violated requirement is returned as
/// [`DecomposeError::Precondition`] with the measured value and the limit.
pub fn sweep_round(g: &MultiGraph, s: &VertexSet, f: &RealVertexFunction) -> Result<SweepOutcome, DecomposeError> {
    let op = MarkovOperator::new(g)?;
    let n = g.vertex_count();
    let d = op.degree();
    if f.len() != n || s.universe() != n {
        return Err(DecomposeError::Precondition {
            what: "length",
            measured: f.len() as f64,
            limit: n as f64,
        });
    }
    if !f.is_boxed() {
        return Err(DecomposeError::Precondition {
            what: "f takes values in [0, 1]",
            measured: f.values().iter().fold(f64::NAN, |m, &x| if x < 0.0 || x > 1.0 { x } else { m }),
            limit: 1.0,
        });
    }
    let mass = s.mass();
    let l1 = l1_norm(f.values());
    if (l1 - mass).abs() > MASS_TOLERANCE {
        return Err(DecomposeError::Precondition {
            what: "‖f‖₁ = |S|",
            measured: l1,
            limit: mass,
        });
    }
    let chi = RealVertexFunction::indicator(s);
    let diff: Vec<f64> = f.values().iter().zip(chi.values()).map(|(a, b)| a - b).collect();
    let dist = l2_norm(&diff);
    let limit = mass.sqrt() / 6.0;
    if dist >= limit {
        return Err(DecomposeError::Precondition {
            what: "‖f − χ_S‖ < |S|^{1/2}/6",
            measured: dist,
            limit,
        });
    }

    // vertices with f > 1/2 in decreasing order of f; every candidate level
    // set is a prefix of this order
    let mut order: Vec<usize> = (0..n).filter(|&v| f.values()[v] > 0.5).collect();
    order.sort_by(|&a, &b| f.values()[b].total_cmp(&f.values()[a]).then(a.cmp(&b)));

    let mut inside = vec![false; n];
    let mut boundary: i64 = 0;
    let mut prefix_boundary = Vec::with_capacity(order.len());
    for &v in &order {
        let internal = g.neighbors(v).filter(|&w| inside[w]).count() as i64;
        boundary += g.degree(v) as i64 - 2 * internal;
        inside[v] = true;
        prefix_boundary.push(boundary as usize);
    }

    // prefix of length j is {f > t} for t in [value at j, value at j-1);
    // valid when that range meets (1/2, 2/3)
    let two_thirds = 2.0 / 3.0;
    let mut best: Option<(usize, usize, f64)> = None; // (boundary, prefix len, threshold)
    let mut scanned = 0;
    for j in 1..=order.len() {
        let lowest_in = f.values()[order[j - 1]];
        let next_out = if j < order.len() { f.values()[order[j]] } else { 0.5 };
        // consecutive equal values do not end a level set
        if j < order.len() && next_out == lowest_in {
            continue;
        }
        let threshold = next_out.max(0.5);
        if threshold >= two_thirds {
            continue;
        }
        scanned += 1;
        let b = prefix_boundary[j - 1];
        let better = match best {
            None => true,
            Some((bb, _, bt)) => b < bb || (b == bb && threshold < bt),
        };
        if better {
            best = Some((b, j, threshold));
        }
    }
    let (boundary, len, threshold) = best.ok_or(DecomposeError::Precondition {
        what: "some vertex has f > 1/2",
        measured: 0.0,
        limit: 1.0,
    })?;
    let mut members = order[..len].to_vec();
    members.sort_unstable();
    let set = VertexSet::new(n, members)?;

    let l1_defect = 2.0 * boundary as f64 / (d * n) as f64;
    let mf = op.apply_values(f.values())?;
    let f_mf: Vec<f64> = f.values().iter().zip(&mf).map(|(a, b)| a - b).collect();
    let bound = 4.0 * (d as f64).sqrt() * 72f64.powf(0.25) * mass.powf(0.75) * l2_norm(&f_mf).sqrt();
    let overlap = set.intersection(s).len();
    Ok(SweepOutcome {
        size_ok: set.len() < 2 * s.len(),
        overlap_ok: 4 * overlap > 3 * s.len(),
        bound_ok: l1_defect <= bound,
        set,
        threshold,
        boundary,
        l1_defect,
        bound,
        thresholds_scanned: scanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{circulant, edge_boundary, petersen};

    #[test]
    fn indicator_rounds_to_itself() {
        let g = circulant(30, &[1, 2]).unwrap();
        let s = VertexSet::new(30, 3..12).unwrap();
        let out = sweep_round(&g, &s, &RealVertexFunction::indicator(&s)).unwrap();
        assert_eq!(out.set, s);
        assert!(out.guarantees_hold());
        assert_eq!(out.boundary, edge_boundary(&g, &s).unwrap());
    }

    #[test]
    fn preconditions_report_measured_slack() {
        let g = petersen();
        let s = VertexSet::new(10, 0..5).unwrap();
        let half = RealVertexFunction::constant(10, 0.5);
        match sweep_round(&g, &s, &half) {
            Err(DecomposeError::Precondition { measured, limit, .. }) => {
                assert!((measured - 0.5).abs() < 1e-15);
                assert!((limit - 0.5f64.sqrt() / 6.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let wrong_mass = RealVertexFunction::indicator(&VertexSet::new(10, 0..4).unwrap());
        assert!(matches!(
            sweep_round(&g, &s, &wrong_mass),
            Err(DecomposeError::Precondition { what: "‖f‖₁ = |S|", .. })
        ));
    }

    #[test]
    fn exhaustive_threshold_scan_agrees() {
        // several values inside (1/2, 2/3), total mass exactly |S|
        let g = circulant(30, &[1, 2]).unwrap();
        let s = VertexSet::new(30, 0..24).unwrap();
        let mut vals = vec![0.0; 30];
        for v in 0..22 {
            vals[v] = 1.0;
        }
        vals[22] = 0.64;
        vals[23] = 0.6;
        vals[24] = 0.56;
        vals[25] = 0.2;
        let f = RealVertexFunction::new(vals.clone());
        let out = sweep_round(&g, &s, &f).unwrap();
        // oracle: evaluate every t on a fine grid of (1/2, 2/3)
        let mut best = usize::MAX;
        for i in 1..1000 {
            let t = 0.5 + (2.0 / 3.0 - 0.5) * i as f64 / 1000.0;
            let u = VertexSet::new(30, (0..30).filter(|&v| vals[v] > t)).unwrap();
            best = best.min(edge_boundary(&g, &u).unwrap());
        }
        assert_eq!(out.boundary, best);
        assert!(out.guarantees_hold());
    }
}
