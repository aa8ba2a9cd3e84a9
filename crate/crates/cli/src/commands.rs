//! graph, oracle, expand, certify and scan.

use rcm_core::expansion::{Certificate, ExpansionResult};
use rcm_core::graphcore::{cut_set_function, saw_counts, tree_distance};
use rcm_core::oracle::{self, Event, ModelParams};
use rcm_core::scalar::fmt_f64;
use rcm_core::supexp::{self, SupContext};
use rcm_core::{subexp, HostGraph, Result};

use crate::report::Report;
use crate::run::Run;
use crate::Regime;

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt_f64)
}

fn or_na<T>(r: Result<T>, f: impl FnOnce(T) -> String) -> String {
    r.map_or_else(|_| "NA".to_string(), f)
}

fn names(g: &HostGraph, xs: &[usize]) -> String {
    xs.iter().map(|&v| g.name(v)).collect::<Vec<_>>().join(" ")
}

fn sup_context(run: &Run, g: &HostGraph, params: ModelParams) -> Result<SupContext> {
    let (r, c) = match (run.args.cutset_r, run.args.cutset_c) {
        (Some(r), Some(c)) => (r, c),
        (r, c) => {
            let (dr, dc) = supexp::declared_constants(g)?;
            (r.unwrap_or(dr), c.unwrap_or(dc))
        }
    };
    SupContext::new(params, r, c)
}

/// Certificate status of both expansions at the run's parameters.
fn threshold_status(run: &Run, g: &HostGraph, params: &ModelParams) -> String {
    let d = g.template_degree();
    let sub = or_na(subexp::certificate(params.p.to_f64(), params.q.to_f64(), d), |c| {
        format!("sub:connectivity_ok={},pressure_ok={}", c.connectivity_ok, c.pressure_ok)
    });
    let sup = or_na(sup_context(run, g, params.clone()), |ctx| {
        format!("sup:threshold_ok={}", supexp::kp_certificate(&ctx, d).threshold_ok)
    });
    format!("{sub};{sup}")
}

fn note_margin(run: &Run, g: &HostGraph, xs: &[usize]) {
    let host = xs.iter().filter_map(|&x| g.distance_to_host_boundary(x)).min();
    let window = xs
        .iter()
        .flat_map(|&x| g.int_boundary().ones().map(move |b| g.dist(x, b)))
        .min();
    run.check(format!(
        "dist(X,host boundary)={};dist(X,window boundary)={}",
        host.map_or("none".into(), |d| d.to_string()),
        window.map_or("none".into(), |d| d.to_string())
    ));
}

fn push_result(rep: &mut Report, prefix: &str, r: &ExpansionResult) {
    rep.kv(prefix, &r.value);
    rep.kv(&format!("{prefix}.K"), r.k);
    rep.kv(&format!("{prefix}.tail_bound"), opt(r.tail_bound));
    rep.kv(&format!("{prefix}.closed_bound"), opt(r.closed_bound));
    let mut acc = r.value.like(0);
    for (n, s) in r.by_size.iter().enumerate() {
        rep.kv(&format!("{prefix}.size[{n}]"), s);
        acc = acc.try_add(s).expect("one scalar mode");
        rep.kv(&format!("{prefix}.partial[{n}]"), &acc);
    }
}

fn push_certificate(rep: &mut Report, c: &Certificate) {
    match c {
        Certificate::Sub(c) => {
            rep.kv("epsilon_p", fmt_f64(c.epsilon_p));
            rep.kv("epsilon_star_p", fmt_f64(c.epsilon_star_p));
            rep.kv("a", fmt_f64(c.a_value));
            rep.kv("connectivity_ok", c.connectivity_ok);
            rep.kv("pressure_ok", c.pressure_ok);
        }
        Certificate::Sup(c) => {
            rep.kv("delta_p", fmt_f64(c.delta_p));
            rep.kv("big_A", fmt_f64(c.big_a));
            rep.kv("cutset_R", c.cutset_r);
            rep.kv("cutset_C", fmt_f64(c.cutset_c));
            rep.kv("degree", c.degree);
            rep.kv("kp_product", fmt_f64(c.product));
            rep.kv("threshold_ok", c.threshold_ok);
        }
    }
}

pub fn graph(run: &Run) -> Result<Report> {
    let g = run.g()?;
    let mut rep = run.report("graph", &["quantity", "value"]);
    let nv = g.window_vertices().len();
    let ne = g.window_edges().len();
    rep.kv("host_vertices", g.n_vertices());
    rep.kv("host_edges", g.n_edges());
    rep.kv("window_vertices", nv);
    rep.kv("window_edges", ne);
    rep.kv("internal_boundary", g.int_boundary().count_ones(..));
    rep.kv("window_edge_boundary", g.window_edge_boundary_size());
    rep.kv("max_degree", g.max_degree());
    rep.kv("template_degree", g.template_degree());
    let center = g.window_center();
    rep.kv("center", g.name(center));
    rep.kv("edge_density", fmt_f64(ne as f64 / nv as f64));
    rep.kv("edge_density_limit", opt(g.edge_density_limit()));
    match supexp::window_cutset_constant(g) {
        Ok(c) => {
            rep.kv("window_cutset_R_wired", c.wired);
            rep.kv("window_cutset_R_free", c.free);
        }
        Err(e) => rep.kv("window_cutset_R", format!("NA ({e})")),
    }
    match supexp::declared_constants(g) {
        Ok((r, c)) => {
            rep.kv("declared_R", r);
            rep.kv("declared_C", fmt_f64(c));
        }
        Err(e) => rep.kv("declared_R", format!("NA ({e})")),
    }
    for n in 1..=run.args.k.min(run.caps.polymer.saturating_sub(1)) {
        match cut_set_function(g, n, &run.caps) {
            Ok(f) => rep.kv(&format!("f_G({n})"), f),
            Err(e) => {
                rep.kv(&format!("f_G({n})"), format!("NA ({e})"));
                break;
            }
        }
    }
    if run.args.saw > 0 {
        let s = saw_counts(g, center, run.args.saw)?;
        run.check(format!("saw length {} inside host", run.args.saw));
        for (i, (c, r)) in s.counts.iter().zip(&s.roots).enumerate() {
            rep.kv(&format!("saw_c({})", i + 1), c);
            rep.kv(&format!("saw_root({})", i + 1), fmt_f64(*r));
        }
        rep.kv("saw_sup_root", fmt_f64(s.sup_root()));
    }
    Ok(run.finish(rep, None))
}

pub fn oracle(run: &Run) -> Result<Report> {
    let g = run.g()?;
    let params = run.params()?;
    let xs = run.xs()?;
    let mut rep = run.report("oracle", &["quantity", "value"]);
    rep.meta("X", names(g, &xs));
    let interior = |v: &usize| !g.int_boundary().contains(*v);
    let mut events = vec![Event::All, Event::Connected(xs.clone())];
    let finite_x = xs.iter().all(interior);
    if finite_x {
        events.push(Event::FiniteConnected(xs.clone()));
    }
    let finite_x0 = interior(&xs[0]);
    if finite_x0 {
        events.push(Event::FiniteConnected(vec![xs[0]]));
    }
    let t = oracle::tally(g, params.bc, &events, &run.caps)?;
    let vals = t.iter().map(|t| t.eval_scalar(&params.p, &params.q)).collect::<Result<Vec<_>>>()?;
    let z = &vals[0];
    let ratio = |i: usize| vals[i].try_div(z);
    let pr = oracle::pressure_finite(g, &params, &run.caps)?;
    rep.kv("Z", z);
    rep.kv("Z_free", &pr.z_free);
    rep.kv("Z_wired", &pr.z_wired);
    rep.kv("phi", ratio(1)?);
    let mut i = 2;
    if finite_x {
        rep.kv("phi_f", ratio(i)?);
        i += 1;
    } else {
        rep.kv("phi_f", "NA (X touches the window boundary)");
    }
    if finite_x0 {
        let f = ratio(i)?;
        rep.kv("theta", f.like(1).try_sub(&f)?);
    } else {
        rep.kv("theta", "NA (x0 on the window boundary)");
    }
    rep.kv("pressure", fmt_f64(pr.value));
    rep.kv("sandwich_ok", pr.sandwich_ok);
    let status = threshold_status(run, g, &params);
    Ok(run.finish(rep, Some(status)))
}

pub fn expand(run: &Run) -> Result<Report> {
    let g = run.g()?;
    let params = run.params()?;
    let xs = run.xs()?;
    let k = run.args.k;
    let mut rep = run.report("expand", &["quantity", "value"]);
    rep.meta("X", names(g, &xs));
    rep.meta("regime", format!("{:?}", run.args.regime).to_lowercase());
    note_margin(run, g, &xs);
    let (q, d) = (params.q.to_f64(), g.template_degree());
    let status = match run.args.regime {
        Regime::Sub => {
            let phi = subexp::truncated_phi(g, &params, &xs, k, &run.caps)?;
            push_result(&mut rep, "phi", &phi);
            push_certificate(&mut rep, &phi.certificate);
            rep.kv("p_star_connectivity", fmt_f64(subexp::connectivity_threshold(q, d)));
            rep.kv("p_star_pressure", fmt_f64(subexp::pressure_threshold(q, d)));
            let ps = subexp::pressure_series(g, &params, k, &run.caps)?;
            rep.kv("pressure", &ps.result.value);
            rep.kv("pressure.tail_bound", opt(ps.result.tail_bound));
            rep.kv("edge_density", fmt_f64(ps.edge_density));
            rep.kv("edge_density_limit", opt(ps.edge_density_limit));
            match phi.certificate {
                Certificate::Sub(c) => format!("sub:connectivity_ok={},pressure_ok={}", c.connectivity_ok, c.pressure_ok),
                _ => unreachable!(),
            }
        }
        Regime::Sup => {
            let ctx = sup_context(run, g, params)?;
            let phi = supexp::truncated_phi_f(g, &ctx, &xs, k, &run.caps)?;
            push_result(&mut rep, "phi_f", &phi);
            let theta = supexp::theta_series(g, &ctx, xs[0], k, &run.caps)?;
            rep.kv("theta", &theta.result.value);
            rep.kv("theta.tail_bound", opt(theta.result.tail_bound));
            rep.kv("theta.leading_scale", fmt_f64(theta.leading_scale));
            push_certificate(&mut rep, &phi.certificate);
            rep.kv("delta_star", fmt_f64(supexp::kp_delta_star(ctx.r, ctx.c, d)));
            rep.kv("p_star", fmt_f64(supexp::kp_threshold(q, ctx.r, ctx.c, d)));
            format!("sup:threshold_ok={}", phi.certificate.valid())
        }
    };
    Ok(run.finish(rep, Some(status)))
}

pub fn certify(run: &Run) -> Result<Report> {
    let g = run.g()?;
    let params = run.params()?;
    let (p, q, d) = (params.p.to_f64(), params.q.to_f64(), g.template_degree());
    let mut rep = run.report("certify", &["quantity", "value"]);
    rep.kv("template_degree", d);
    match subexp::certificate(p, q, d) {
        Ok(c) => push_certificate(&mut rep, &Certificate::Sub(c)),
        Err(e) => rep.kv("epsilon_p", format!("NA ({e})")),
    }
    rep.kv("p_star_connectivity", fmt_f64(subexp::connectivity_threshold(q, d)));
    rep.kv("p_star_pressure", fmt_f64(subexp::pressure_threshold(q, d)));
    match sup_context(run, g, params.clone()) {
        Ok(ctx) => {
            push_certificate(&mut rep, &Certificate::Sup(supexp::kp_certificate(&ctx, d)));
            rep.kv("delta_star", fmt_f64(supexp::kp_delta_star(ctx.r, ctx.c, d)));
            rep.kv("p_star_sup", fmt_f64(supexp::kp_threshold(q, ctx.r, ctx.c, d)));
        }
        Err(e) => rep.kv("delta_p", format!("NA ({e})")),
    }
    let status = threshold_status(run, g, &params);
    Ok(run.finish(rep, Some(status)))
}

/// First window vertex (by index) at distance `d` from `x0`.
fn at_distance(g: &HostGraph, x0: usize, d: usize, interior_only: bool) -> Option<usize> {
    g.window_vertices()
        .iter()
        .copied()
        .find(|&v| g.dist(x0, v) == d && !(interior_only && g.int_boundary().contains(v)))
}

pub fn scan(run: &Run) -> Result<Report> {
    let g = run.g()?;
    let params = run.params()?;
    let x0 = run.xs()?[0];
    let k = run.args.k;
    let oracle_ok = g.window_edges().len() <= run.caps.oracle_edges;
    let sup = run.args.regime == Regime::Sup;
    let cols = if sup {
        ["diam", "X", "tree_distance", "exact", "truncated", "tail_bound", "paper_bound"]
    } else {
        ["distance", "X", "tree_distance", "exact", "truncated", "tail_bound", "paper_bound"]
    };
    let mut rep = run.report("scan", &cols);
    rep.meta("regime", if sup { "sup" } else { "sub" });
    rep.meta("x0", g.name(x0));
    rep.meta("oracle", oracle_ok);
    let ctx = if sup { Some(sup_context(run, g, params.clone())?) } else { None };
    let first = if sup { 0 } else { 1 };
    for d in first..=run.args.max_dist {
        let Some(y) = at_distance(g, x0, d, sup) else { break };
        let mut xs = vec![x0, y];
        xs.sort_unstable();
        xs.dedup();
        note_margin(run, g, &xs);
        let (exact, res) = match &ctx {
            None => {
                let e = if oracle_ok { oracle::connectivity_exact(g, &params, &xs, &run.caps)?.to_string() } else { "NA".into() };
                (e, subexp::truncated_phi(g, &params, &xs, k, &run.caps)?)
            }
            Some(ctx) => {
                let e = if oracle_ok {
                    oracle::finite_connectivity_exact(g, &params, &xs, &run.caps)?.to_string()
                } else {
                    "NA".into()
                };
                (e, supexp::truncated_phi_f(g, ctx, &xs, k, &run.caps)?)
            }
        };
        rep.row(&[
            d.to_string(),
            names(g, &xs),
            tree_distance(g, &xs).to_string(),
            exact,
            res.value.to_string(),
            opt(res.tail_bound),
            opt(res.closed_bound),
        ]);
    }
    let status = threshold_status(run, g, &params);
    Ok(run.finish(rep, Some(status)))
}

