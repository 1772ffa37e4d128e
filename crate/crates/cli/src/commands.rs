use serde::Serialize;
use serde_json::{json, Value};

use expdec::covers::{
    build_cover, fiber_balance, pfold_bound_check, read_weights, sample_cycle_sums, walk_sum_distribution,
    EdgeWeighting,
};
use expdec::decompose::{self as dec, CutMode, DecomposeParams};
use expdec::graph::{degree_check, generate, read_edge_list, write_edge_list, GraphKind, MultiGraph};
use expdec::localstats::{cayley_defect, local_statistics, CayleyGroup};
use expdec::markov::{cheeger_certificate, evaluate_family, second_eigenvalue, standard_family, FamilySpec};

use crate::report::{emit, Exact, Timer};
use crate::{
    CliError, CoverArgs, CoverStatsArgs, CutModeArg, DecomposeArgs, GenArgs, KindArg, MarkovArgs, RandomWeights,
    StatsArgs, VerifyArgs, WeightSource,
};

#[derive(Serialize)]
struct Config<'a, A: Serialize, E: Serialize> {
    subcommand: &'a str,
    args: &'a A,
    effective: E,
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    let kind = match a.kind {
        KindArg::Cycle => GraphKind::Cycle,
        KindArg::Complete => GraphKind::Complete,
        KindArg::Circulant => GraphKind::Circulant {
            offsets: a.offsets.clone(),
        },
        KindArg::RandomRegular => GraphKind::RandomRegular,
        KindArg::Petersen => GraphKind::Petersen,
    };
    let g = generate(&kind, a.n, a.d, a.common.seed)?;
    write_edge_list(&g, &a.out)?;
    timer.lap("generate");
    let check = degree_check(&g);
    let result = json!({
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "degree": check.degree,
        "regular": check.valid,
    });
    let config = Config {
        subcommand: "gen",
        args: &a,
        effective: &kind,
    };
    emit(&a.common, &config, &result, &timer)
}

fn parse_cayley(spec: &str) -> Result<CayleyGroup, CliError> {
    let bad = || CliError::Input(format!("unknown Cayley graph `{spec}`; use grid:<dim>, free:<rank> or sl3z"));
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = || arg.parse::<usize>().map_err(|_| bad());
    match name {
        "grid" => Ok(CayleyGroup::Grid { dim: num()? }),
        "free" => Ok(CayleyGroup::Free { rank: num()? }),
        "sl3z" if arg.is_empty() => Ok(CayleyGroup::Sl3zElementary),
        _ => Err(bad()),
    }
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    let group = a.cayley.as_deref().map(parse_cayley).transpose()?;
    let g = read_edge_list(&a.graph)?;
    timer.lap("read");
    let dist = local_statistics(&g, a.radius)?;
    timer.lap("statistics");
    let defect = match &group {
        Some(gr) => Some(Exact::from(cayley_defect(&g, gr, a.radius)?)),
        None => None,
    };
    timer.lap("defect");
    let result = json!({
        "vertices": g.vertex_count(),
        "class_count": dist.class_count(),
        "distribution": dist,
        "cayley_defect": defect,
    });
    let config = Config {
        subcommand: "stats",
        args: &a,
        effective: json!({ "cayley": group }),
    };
    emit(&a.common, &config, &result, &timer)
}

pub fn markov_test(a: MarkovArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        return Err(CliError::Input(format!("epsilon must lie in (0, 1), got {}", a.epsilon)));
    }
    let g = read_edge_list(&a.graph)?;
    let spec = FamilySpec {
        random_functions: a.random_functions,
        random_indicators: a.random_indicators,
        ball_roots: a.ball_roots,
        quantiles: a.quantiles,
        seed: a.common.seed,
    };
    let family = standard_family(&g, &spec)?;
    timer.lap("family");
    let report = evaluate_family(&g, &family, a.epsilon)?;
    let spectrum = second_eigenvalue(&g, 1e-9, 100_000)?;
    timer.lap("evaluate");
    let result = json!({ "family": report, "spectrum": spectrum, "spectral_radius": spectrum.spectral_radius() });
    let config = Config {
        subcommand: "markov-test",
        args: &a,
        effective: &spec,
    };
    emit(&a.common, &config, &result, &timer)
}

pub fn decompose(a: DecomposeArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    let g = read_edge_list(&a.graph)?;
    let d = g
        .regular_degree()
        .ok_or_else(|| CliError::Input("the input graph is not regular".into()))?;
    let mut params = DecomposeParams::from_epsilon(a.epsilon, d);
    params.seed = a.common.seed;
    if let Some(gamma) = a.gamma {
        params = params.with_gamma(gamma);
    }
    if let Some(k) = a.k {
        params = params.with_k(k);
    }
    if let Some(delta) = a.delta {
        params = params.with_delta(delta);
    }
    if let Some(alpha) = a.alpha {
        params.alpha = alpha;
    }
    if let Some(c) = a.c_prime {
        params.c_prime = c;
    }
    if let Some(limit) = a.exact_cut_limit {
        params.exact_cut_limit = limit;
    }
    params.cut_mode = match a.cut_mode {
        CutModeArg::Auto => CutMode::Auto,
        CutModeArg::Exact => CutMode::Exact,
        CutModeArg::Spectral => CutMode::Spectral,
    };
    params
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    timer.lap("read");
    let out = dec::decompose(&g, &params)?;
    timer.lap("decompose");
    write_edge_list(&out.graph, &a.out)?;
    let config = Config {
        subcommand: "decompose",
        args: &a,
        effective: &params,
    };
    emit(&a.common, &config, &out, &timer)
}

fn gamma_from_report(path: &std::path::Path) -> Result<f64, CliError> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    v.pointer("/result/report/gamma_required")
        .and_then(Value::as_f64)
        .ok_or_else(|| CliError::Input(format!("{} has no result.report.gamma_required", path.display())))
}

pub fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    let gamma = match (&a.gamma, &a.gamma_from_report) {
        (Some(g), _) => *g,
        (None, Some(p)) => gamma_from_report(p)?,
        (None, None) => return Err(CliError::Input("give --gamma or --gamma-from-report".into())),
    };
    let before = read_edge_list(&a.before)?;
    let after = read_edge_list(&a.after)?;
    timer.lap("read");
    let rep = dec::verify_decomposition(&before, &after, gamma);
    timer.lap("verify");
    let config = Config {
        subcommand: "verify",
        args: &a,
        effective: json!({ "gamma": gamma }),
    };
    emit(&a.common, &config, &rep, &timer)?;
    if rep.passes {
        Ok(())
    } else {
        let failing = rep.components.iter().filter(|c| !c.passes).count();
        Err(CliError::Failed(format!(
            "same vertex set: {}, regular: {}, failing components: {failing}",
            rep.same_vertex_set, rep.regular
        )))
    }
}

fn load_weights(s: &WeightSource, seed: u64) -> Result<(MultiGraph, EdgeWeighting, u64), CliError> {
    let g = read_edge_list(&s.graph)?;
    let l = s.l.unwrap_or(s.p.saturating_sub(1) / 2);
    let w = match (&s.weights, s.random_weights) {
        (Some(path), _) => read_weights(&g, path, s.p, l)?,
        (None, Some(RandomWeights::Uniform)) => EdgeWeighting::random_uniform(&g, s.p, l, seed)?,
        (None, Some(RandomWeights::Signs)) => EdgeWeighting::random_signs(&g, s.p, seed)?,
        (None, Some(RandomWeights::Coboundary)) => EdgeWeighting::random_coboundary(&g, s.p, l, seed)?,
        (None, None) => return Err(CliError::Input("give --weights or --random-weights".into())),
    };
    let l = w.l();
    Ok((g, w, l))
}

pub fn cover(a: CoverArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    let (g, w, l) = load_weights(&a.source, a.common.seed)?;
    let c = build_cover(&g, &w)?;
    write_edge_list(&c.graph, &a.out)?;
    timer.lap("cover");
    let check = degree_check(&c.graph);
    let result = json!({
        "base_vertices": g.vertex_count(),
        "vertices": c.graph.vertex_count(),
        "edges": c.graph.edge_count(),
        "degree": check.degree,
        "regular": check.valid,
        "components": c.graph.components().len(),
    });
    let config = Config {
        subcommand: "cover",
        args: &a,
        effective: json!({ "p": w.p(), "L": l }),
    };
    emit(&a.common, &config, &result, &timer)
}

pub fn cover_stats(a: CoverStatsArgs) -> Result<(), CliError> {
    let mut timer = Timer::new(&a.common);
    let seed = a.common.seed;
    let (g, w, l) = load_weights(&a.source, seed)?;
    let gamma = match a.gamma {
        Some(g) => g,
        None => cheeger_certificate(&g)?,
    };
    let c = build_cover(&g, &w)?;
    timer.lap("cover");
    let cycles = sample_cycle_sums(&g, &w, a.cycle_length, a.trials, seed)?;
    timer.lap("cycle_sums");
    let walks = walk_sum_distribution(&g, &w, a.t, a.trials, seed)?;
    timer.lap("walk_sums");
    let fibers = fiber_balance(&c);
    let pfold = pfold_bound_check(&c, &w, gamma)?;
    timer.lap("pfold");
    let result = json!({
        "cycle_sums": cycles,
        "walk_sums": walks,
        "fibers": fibers,
        "pfold": pfold,
    });
    let config = Config {
        subcommand: "cover-stats",
        args: &a,
        effective: json!({ "p": w.p(), "L": l, "gamma": gamma }),
    };
    emit(&a.common, &config, &result, &timer)
}
