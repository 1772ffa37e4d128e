//! The averaging operator of a regular multigraph and the quantities built
//! from it: normalised norms, contraction defects, and spectral estimates.
//!
//! Norms use the uniform probability measure on vertices, so
//! `‖f‖ = sqrt(mean(f²))` and `‖f‖₁ = mean(|f|)`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphError, MultiGraph, VertexSet};
use crate::rng::stream_rng;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Extra margin subtracted from spectral certificates on top of the residual.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("function has {got} values but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("the averaging operator needs a regular graph")]
    NotRegular,
    #[error("the averaging operator needs degree at least 1")]
    ZeroDegree,
    #[error("function value {value} at vertex {vertex} lies outside [0, 1]")]
    Unboxed { vertex: usize, value: f64 },
    #[error("power must be at least 1, got {0}")]
    InvalidPower(usize),
    #[error("graph has no nontrivial spectrum ({0} vertices)")]
    TrivialSpectrum(usize),
    #[error("power iteration stopped after {iterations} steps with residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Real values on the vertices of a graph.
///
/// `boxed` records whether every value lies in `[0, 1]`; it is computed on
/// construction and kept in sync by every operation in this module.
#[derive(Clone, Debug, PartialEq)]
pub struct RealVertexFunction {
    values: Vec<f64>,
    boxed: bool,
}

fn all_boxed(values: &[f64]) -> bool {
    values.iter().all(|v| (0.0..=1.0).contains(v))
}

impl RealVertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        let boxed = all_boxed(&values);
        Self { values, boxed }
    }

    /// Like [`RealVertexFunction::new`] but rejects values outside `[0, 1]`.
    pub fn boxed(values: Vec<f64>) -> Result<Self, MarkovError> {
        if let Some((vertex, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(MarkovError::Unboxed { vertex, value });
        }
        Ok(Self { values, boxed: true })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(vec![c; n])
    }

    pub fn indicator(s: &VertexSet) -> Self {
        let values = s
            .indicator()
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect();
        Self { values, boxed: true }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_boxed(&self) -> bool {
        self.boxed
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// `sqrt((1/n) Σ f(v)²)`.
pub fn l2_norm(f: &[f64]) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt()
}

/// `(1/n) Σ |f(v)|`.
pub fn l1_norm(f: &[f64]) -> f64 {
    if f.is_empty() {
        return 0.0;
    }
    f.iter().map(|x| x.abs()).sum::<f64>() / f.len() as f64
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Averaging operator `(Mf)(x) = (1/d) Σ_{y ~ x} f(y)` of a regular multigraph,
/// stored in compressed adjacency form.
#[derive(Clone, Debug)]
pub struct MarkovOperator {
    n: usize,
    degree: usize,
    targets: Vec<usize>,
}

impl MarkovOperator {
    pub fn new(g: &MultiGraph) -> Result<Self, MarkovError> {
        let degree = g.regular_degree().ok_or(MarkovError::NotRegular)?;
        if degree == 0 && g.vertex_count() > 0 {
            return Err(MarkovError::ZeroDegree);
        }
        let n = g.vertex_count();
        let mut targets = Vec::with_capacity(n * degree);
        for v in 0..n {
            targets.extend(g.neighbors(v));
        }
        Ok(Self { n, degree, targets })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Writes `M f` into `out`. Both slices must have length `n`.
    pub fn apply_slice(&self, f: &[f64], out: &mut [f64]) {
        let d = self.degree;
        let inv = 1.0 / d as f64;
        for (v, o) in out.iter_mut().enumerate() {
            let s: f64 = self.targets[v * d..(v + 1) * d].iter().map(|&w| f[w]).sum();
            *o = s * inv;
        }
    }

    fn check_len(&self, len: usize) -> Result<(), MarkovError> {
        if len != self.n {
            return Err(MarkovError::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    pub fn apply_values(&self, f: &[f64]) -> Result<Vec<f64>, MarkovError> {
        self.check_len(f.len())?;
        let mut out = vec![0.0; self.n];
        self.apply_slice(f, &mut out);
        Ok(out)
    }

    pub fn apply(&self, f: &RealVertexFunction) -> Result<RealVertexFunction, MarkovError> {
        let values = self.apply_values(f.values())?;
        // averages of values in [0,1] stay there up to rounding, which clamping removes
        let values = if f.boxed {
            values.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()
        } else {
            values
        };
        Ok(RealVertexFunction::new(values))
    }

    /// `M^k f`.
    pub fn power(&self, f: &[f64], k: usize) -> Result<Vec<f64>, MarkovError> {
        self.check_len(f.len())?;
        let mut cur = f.to_vec();
        let mut next = vec![0.0; self.n];
        for _ in 0..k {
            self.apply_slice(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// `‖M²f − Mf‖ − (1−ε)‖Mf − f‖` for a boxed `f`.
    pub fn contraction_defect(&self, f: &RealVertexFunction, epsilon: f64) -> Result<f64, MarkovError> {
        if !f.is_boxed() {
            let (vertex, &value) = f
                .values()
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
                .expect("an unboxed function has a value outside [0, 1]");
            return Err(MarkovError::Unboxed { vertex, value });
        }
        let mf = self.apply_values(f.values())?;
        let mmf = self.apply_values(&mf)?;
        Ok(l2_diff(&mmf, &mf) - (1.0 - epsilon) * l2_diff(&mf, f.values()))
    }

    /// `‖M^{k+1}χ_S − M^kχ_S‖ − (1−ε)^k ‖Mχ_S − χ_S‖`.
    pub fn power_defect(&self, s: &VertexSet, k: usize, epsilon: f64) -> Result<f64, MarkovError> {
        if k == 0 {
            return Err(MarkovError::InvalidPower(k));
        }
        let chi = RealVertexFunction::indicator(s).into_values();
        self.check_len(chi.len())?;
        let m1 = self.apply_values(&chi)?;
        let mk = self.power(&chi, k)?;
        let mk1 = self.apply_values(&mk)?;
        Ok(l2_diff(&mk1, &mk) - (1.0 - epsilon).powi(k as i32) * l2_diff(&m1, &chi))
    }

    /// `‖Mχ_S − χ_S‖₁`, which equals `2 |E(S, S^c)| / (d n)`.
    pub fn indicator_l1_defect(&self, s: &VertexSet) -> Result<f64, MarkovError> {
        let chi = RealVertexFunction::indicator(s).into_values();
        let m = self.apply_values(&chi)?;
        Ok(l1_diff(&m, &chi))
    }
}

/// `M f` on a regular graph.
pub fn apply_markov(g: &MultiGraph, f: &RealVertexFunction) -> Result<RealVertexFunction, MarkovError> {
    MarkovOperator::new(g)?.apply(f)
}

/// `‖M²f − Mf‖ − (1−ε)‖Mf − f‖`; `f` must take values in `[0, 1]`.
pub fn contraction_defect(g: &MultiGraph, f: &RealVertexFunction, epsilon: f64) -> Result<f64, MarkovError> {
    MarkovOperator::new(g)?.contraction_defect(f, epsilon)
}

/// `‖M^{k+1}χ_S − M^kχ_S‖ − (1−ε)^k ‖Mχ_S − χ_S‖` for `k >= 1`.
pub fn markov_power_defect(g: &MultiGraph, s: &VertexSet, k: usize, epsilon: f64) -> Result<f64, MarkovError> {
    MarkovOperator::new(g)?.power_defect(s, k, epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralOptions {
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

/// Which end of the spectrum a power iteration targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumEnd {
    /// Largest eigenvalue, via `(I + M)/2`.
    Top,
    /// Smallest eigenvalue, via `(I − M)/2`.
    Bottom,
}

/// Result of one power iteration; `value` and `residual` refer to `M`, not the shift.
#[derive(Clone, Debug)]
pub struct SpectralPair {
    pub value: f64,
    /// Unit vector in the Euclidean norm.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `|M x − value · x|` for the returned unit vector `x`.
    pub residual: f64,
    pub converged: bool,
}

fn project_out(x: &mut [f64], deflate: &[Vec<f64>]) {
    for q in deflate {
        let c: f64 = x.iter().zip(q).map(|(a, b)| a * b).sum();
        for (a, b) in x.iter_mut().zip(q) {
            *a -= c * b;
        }
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in x.iter_mut() {
            *a /= norm;
        }
    }
    norm
}

/// Power iteration for a symmetric operator with spectrum in `[−1, 1]`,
/// restricted to the orthogonal complement of the orthonormal `deflate` vectors.
///
/// The residual is checked before every update, so the returned vector is
/// always the one whose residual is reported.
pub fn power_iterate<F>(
    n: usize,
    op: F,
    end: SpectrumEnd,
    deflate: &[Vec<f64>],
    opts: &SpectralOptions,
    stream: u64,
) -> SpectralPair
where
    F: Fn(&[f64], &mut [f64]),
{
    let sign = match end {
        SpectrumEnd::Top => 1.0,
        SpectrumEnd::Bottom => -1.0,
    };
    let mut rng = stream_rng(opts.seed, stream);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    project_out(&mut x, deflate);
    if normalize(&mut x) == 0.0 {
        return SpectralPair {
            value: 0.0,
            vector: x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut mx = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut iterations = 0;
    loop {
        op(&x, &mut mx);
        let lambda: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&mx)
            .map(|(a, b)| (b - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual < opts.tolerance || iterations >= opts.max_iter {
            return SpectralPair {
                value: lambda,
                vector: x,
                iterations,
                residual,
                converged: residual < opts.tolerance,
            };
        }
        for i in 0..n {
            y[i] = 0.5 * (x[i] + sign * mx[i]);
        }
        project_out(&mut y, deflate);
        if normalize(&mut y) == 0.0 {
            // x lies in the kernel of the shift, so it is an exact eigenvector of M
            return SpectralPair {
                value: -sign,
                vector: x,
                iterations,
                residual,
                converged: residual < opts.tolerance,
            };
        }
        std::mem::swap(&mut x, &mut y);
        iterations += 1;
    }
}

/// Signed extreme nontrivial eigenvalues of `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub lambda2: f64,
    pub lambda_min: f64,
    pub iterations: usize,
    /// Larger of the two residuals.
    pub residual: f64,
    pub converged: bool,
}

impl SpectralEstimate {
    /// `max(|λ₂|, |λ_min|)`.
    pub fn spectral_radius(&self) -> f64 {
        self.lambda2.abs().max(self.lambda_min.abs())
    }
}

/// Estimate plus the two eigenvectors it came from.
#[derive(Clone, Debug)]
pub struct SpectralPairs {
    pub estimate: SpectralEstimate,
    pub second: Vec<f64>,
    pub smallest: Vec<f64>,
}

pub fn spectral_pairs(g: &MultiGraph, opts: &SpectralOptions) -> Result<SpectralPairs, MarkovError> {
    let op = MarkovOperator::new(g)?;
    let n = g.vertex_count();
    if n < 2 {
        return Err(MarkovError::TrivialSpectrum(n));
    }
    let constant = vec![1.0 / (n as f64).sqrt(); n];
    let deflate = [constant];
    let apply = |x: &[f64], out: &mut [f64]| op.apply_slice(x, out);
    let top = power_iterate(n, apply, SpectrumEnd::Top, &deflate, opts, 0);
    let bottom = power_iterate(n, apply, SpectrumEnd::Bottom, &deflate, opts, 1);
    let lambda_min = bottom.value.min(top.value);
    Ok(SpectralPairs {
        estimate: SpectralEstimate {
            lambda2: top.value,
            lambda_min,
            iterations: top.iterations.max(bottom.iterations),
            residual: top.residual.max(bottom.residual),
            converged: top.converged && bottom.converged,
        },
        second: top.vector,
        smallest: bottom.vector,
    })
}

/// Deflated power iteration for `λ₂` and `λ_min`. Non-convergence is
/// reported through [`SpectralEstimate::converged`], not as an error.
pub fn second_eigenvalue(g: &MultiGraph, tolerance: f64, max_iter: usize) -> Result<SpectralEstimate, MarkovError> {
    let opts = SpectralOptions {
        tolerance,
        max_iter,
        seed: 0,
    };
    Ok(spectral_pairs(g, &opts)?.estimate)
}

/// Lower bound on the edge expansion from `λ₂`: `(1 − λ₂)/2`, reduced by
/// the residual and clamped at zero.
pub fn cheeger_from_estimate(est: &SpectralEstimate) -> Result<f64, MarkovError> {
    if !est.converged {
        return Err(MarkovError::NotConverged {
            iterations: est.iterations,
            residual: est.residual,
        });
    }
    Ok(((1.0 - est.lambda2 - (est.residual + CERTIFICATE_SLACK)) / 2.0).max(0.0))
}

pub fn cheeger_certificate(g: &MultiGraph) -> Result<f64, MarkovError> {
    cheeger_certificate_with(g, &SpectralOptions::default())
}

/// Runs only the top-end iteration, so a slowly converging bottom end does
/// not block the certificate.
pub fn cheeger_certificate_with(g: &MultiGraph, opts: &SpectralOptions) -> Result<f64, MarkovError> {
    let top = second_pair(g, opts)?;
    if !top.converged {
        return Err(MarkovError::NotConverged {
            iterations: top.iterations,
            residual: top.residual,
        });
    }
    Ok(((1.0 - top.value - (top.residual + CERTIFICATE_SLACK)) / 2.0).max(0.0))
}

/// The second eigenpair of `M`, by power iteration orthogonal to constants.
pub fn second_pair(g: &MultiGraph, opts: &SpectralOptions) -> Result<SpectralPair, MarkovError> {
    let op = MarkovOperator::new(g)?;
    let n = g.vertex_count();
    if n < 2 {
        return Err(MarkovError::TrivialSpectrum(n));
    }
    let constant = vec![1.0 / (n as f64).sqrt(); n];
    let apply = |x: &[f64], out: &mut [f64]| op.apply_slice(x, out);
    Ok(power_iterate(n, apply, SpectrumEnd::Top, &[constant], opts, 0))
}

/// Sizes of the seeded test-function family used to probe the contraction condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySpec {
    pub random_functions: usize,
    pub random_indicators: usize,
    pub ball_roots: usize,
    pub quantiles: usize,
    pub seed: u64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            random_functions: 64,
            random_indicators: 64,
            ball_roots: 8,
            quantiles: 9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    /// Kind of member, e.g. `random` or `ball`.
    pub kind: &'static str,
    pub label: String,
    pub f: RealVertexFunction,
}

fn member(kind: &'static str, label: String, values: Vec<f64>) -> FamilyMember {
    FamilyMember {
        kind,
        label,
        f: RealVertexFunction::new(values),
    }
}

fn threshold_indicator(v: &[f64], t: f64) -> Vec<f64> {
    v.iter().map(|&x| if x > t { 1.0 } else { 0.0 }).collect()
}

/// Constants, random boxed functions, random indicators, BFS balls, and
/// profiles, signs and quantile sweeps of the two extreme eigenvectors.
pub fn standard_family(g: &MultiGraph, spec: &FamilySpec) -> Result<Vec<FamilyMember>, MarkovError> {
    MarkovOperator::new(g)?;
    let n = g.vertex_count();
    let mut out = Vec::new();
    for c in [0.0, 0.5, 1.0] {
        out.push(member("constant", format!("constant:{c}"), vec![c; n]));
    }
    if n == 0 {
        return Ok(out);
    }

    let mut rng = stream_rng(spec.seed, 0);
    for i in 0..spec.random_functions {
        let v = (0..n).map(|_| rng.random::<f64>()).collect();
        out.push(member("random", format!("random:{i}"), v));
    }
    for i in 0..spec.random_indicators {
        let density: f64 = rng.random_range(0.05..0.95);
        let v = (0..n)
            .map(|_| if rng.random::<f64>() < density { 1.0 } else { 0.0 })
            .collect();
        out.push(member("indicator", format!("indicator:{i}"), v));
    }
    for i in 0..spec.ball_roots.min(n) {
        let root = rng.random_range(0..n);
        let dist = g.bfs_distances(root);
        let far = dist.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
        for r in 0..far.min(6) {
            let v = dist.iter().map(|&d| if d <= r { 1.0 } else { 0.0 }).collect();
            out.push(member("ball", format!("ball:{i}:root={root}:r={r}"), v));
        }
    }

    if n >= 2 {
        let opts = SpectralOptions {
            seed: spec.seed,
            ..SpectralOptions::default()
        };
        let pairs = spectral_pairs(g, &opts)?;
        for (name, vec) in [("v2", &pairs.second), ("vmin", &pairs.smallest)] {
            let peak = vec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if peak == 0.0 {
                continue;
            }
            let profile: Vec<f64> = vec.iter().map(|x| (0.5 + 0.5 * x / peak).clamp(0.0, 1.0)).collect();
            out.push(member("eigen", format!("{name}:profile"), profile));
            out.push(member("eigen", format!("{name}:positive"), threshold_indicator(vec, 0.0)));
            let mut sorted = vec.clone();
            sorted.sort_by(f64::total_cmp);
            for q in 1..=spec.quantiles {
                let idx = q * n / (spec.quantiles + 1);
                let t = sorted[idx.min(n - 1)];
                out.push(member(
                    "sweep",
                    format!("{name}:quantile:{q}/{}", spec.quantiles + 1),
                    threshold_indicator(vec, t),
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub epsilon: f64,
    pub members: usize,
    pub max_defect: f64,
    pub worst: String,
    /// Largest defect per member kind.
    pub max_by_kind: BTreeMap<String, f64>,
}

/// Contraction defect of every member; the maximum is what condition checks compare.
pub fn evaluate_family(g: &MultiGraph, family: &[FamilyMember], epsilon: f64) -> Result<FamilyReport, MarkovError> {
    let op = MarkovOperator::new(g)?;
    let defects: Vec<f64> = family
        .par_iter()
        .map(|m| op.contraction_defect(&m.f, epsilon))
        .collect::<Result<_, _>>()?;
    let mut report = FamilyReport {
        epsilon,
        members: family.len(),
        max_defect: f64::NEG_INFINITY,
        worst: String::new(),
        max_by_kind: BTreeMap::new(),
    };
    for (m, &d) in family.iter().zip(&defects) {
        if d > report.max_defect {
            report.max_defect = d;
            report.worst = m.label.clone();
        }
        let e = report.max_by_kind.entry(m.kind.to_string()).or_insert(f64::NEG_INFINITY);
        *e = e.max(d);
    }
    Ok(report)
}
