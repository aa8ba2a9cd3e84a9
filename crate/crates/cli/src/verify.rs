//! Identity and bound suites over the bundled corpus.

use rcm_core::corpus::{rational_pairs, small_graphs};
use rcm_core::gas::ursell_graph;
use rcm_core::graphcore::{connected_sets_in, edge_boundary, enumerate_r_connected_edge_sets, Caps};
use rcm_core::oracle::{self, ModelParams};
use rcm_core::scalar::fmt_f64;
use rcm_core::subexp;
use rcm_core::supexp::{self, Anchor, SupContext};
use rcm_core::{BoundaryCondition, HostGraph, Result, Scalar, TemplateSpec};

use crate::report::Report;
use crate::run::Run;

const BCS: [BoundaryCondition; 2] = [BoundaryCondition::Free, BoundaryCondition::Wired];

struct Suite {
    rep: Report,
    failed: usize,
}

impl Suite {
    fn record(&mut self, suite: &str, case: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        self.rep.row(&[suite, case, if ok { "pass" } else { "fail" }, detail.as_str()]);
    }
}

fn bc_name(bc: BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::Free => "free",
        BoundaryCondition::Wired => "wired",
    }
}

fn pair_name(p: (i64, i64), q: (i64, i64)) -> String {
    format!("p={}/{},q={}/{}", p.0, p.1, q.0, q.1)
}

fn exact_z(g: &HostGraph, p: (i64, i64), q: (i64, i64), bc: BoundaryCondition, caps: &Caps) -> Result<Scalar> {
    oracle::partition_function(g, &ModelParams::exact(p, q, bc), caps)
}

fn z_bar(g: &HostGraph, p: (i64, i64), z: &Scalar) -> Scalar {
    let pr = Scalar::exact(p.0, p.1);
    Scalar::Exact(oracle::z_bar(g, pr.as_exact().unwrap(), z.as_exact().unwrap()))
}

fn repartition(s: &mut Suite, caps: &Caps) -> Result<()> {
    for (name, spec) in small_graphs() {
        let g = HostGraph::build(&spec)?;
        for (p, q) in rational_pairs() {
            let (pr, qr) = (Scalar::exact(p.0, p.1), Scalar::exact(q.0, q.1));
            for bc in BCS {
                let (lhs, rhs) = subexp::repartition_sides(&g, pr.as_exact().unwrap(), qr.as_exact().unwrap(), bc, caps)?;
                let ok = lhs == rhs;
                let (l, r) = (Scalar::Exact(lhs), Scalar::Exact(rhs));
                let detail = if ok { l.to_string() } else { format!("lhs={l} rhs={r}") };
                s.record("sub-repartition", &format!("{name}:{}:{}", pair_name(p, q), bc_name(bc)), ok, detail);
            }
        }
    }
    Ok(())
}

fn psi_identities(s: &mut Suite, caps: &Caps) -> Result<()> {
    for (name, spec) in small_graphs() {
        let g = HostGraph::build(&spec)?;
        let rc = supexp::window_cutset_constant(&g)?;
        for (p, q) in rational_pairs() {
            let case = format!("{name}:{}", pair_name(p, q));
            let wired = SupContext::new(ModelParams::exact(p, q, BoundaryCondition::Wired), rc.wired, 1.0)?;
            let psi1 = Scalar::Exact(supexp::psi_exact(&g, &wired, caps)?);
            let zb1 = z_bar(&g, p, &exact_z(&g, p, q, BoundaryCondition::Wired, caps)?);
            let ok = psi1 == zb1;
            s.record("sup-psi-wired", &case, ok, if ok { psi1.to_string() } else { format!("psi={psi1} zbar={zb1}") });
            let free = SupContext::new(ModelParams::exact(p, q, BoundaryCondition::Free), rc.free, 1.0)?;
            let qpsi0 = Scalar::Exact(supexp::psi_exact(&g, &free, caps)?).try_mul(&Scalar::exact(q.0, q.1))?;
            let zb0 = z_bar(&g, p, &exact_z(&g, p, q, BoundaryCondition::Free, caps)?);
            let ok = qpsi0 == zb0;
            s.record("sup-psi-free", &case, ok, if ok { qpsi0.to_string() } else { format!("q*psi={qpsi0} zbar={zb0}") });
        }
    }
    let g = HostGraph::build(&TemplateSpec::zd(&[2, 3], 0))?;
    let (p, q) = ((9, 10), (1, 3));
    let ctx = SupContext::new(ModelParams::exact(p, q, BoundaryCondition::Wired), 1, 1.0)?;
    let psi1 = Scalar::Exact(supexp::psi_exact(&g, &ctx, caps)?);
    let zb1 = z_bar(&g, p, &exact_z(&g, p, q, BoundaryCondition::Wired, caps)?);
    let ok = psi1 == zb1;
    s.record("sup-psi-example", "grid-2x3:p=9/10,q=1/3", ok, format!("psi={psi1} zbar={zb1}"));
    Ok(())
}

fn ursell(s: &mut Suite) {
    let mut fact = 1i64;
    for n in 1..=6usize {
        if n > 1 {
            fact *= n as i64 - 1;
        }
        let full = (1u32 << n) - 1;
        let adj: Vec<u32> = (0..n).map(|i| full & !(1 << i)).collect();
        let want = if n % 2 == 1 { fact } else { -fact };
        let got = ursell_graph(&adj);
        s.record("ursell-complete", &format!("n={n}"), got == want, format!("got={got} want={want}"));
    }
    for n in 2..=6usize {
        // two cliques {0} and {1..n}
        let rest = ((1u32 << n) - 1) & !1;
        let adj: Vec<u32> = (0..n).map(|i| if i == 0 { 0 } else { rest & !(1 << i) }).collect();
        let got = ursell_graph(&adj);
        s.record("ursell-disconnected", &format!("n={n}"), got == 0, format!("got={got}"));
    }
}

/// p*(q)/2 rounded down to a multiple of 1e-6.
fn half_threshold(q: f64, degree: usize) -> (i64, i64) {
    let p = subexp::connectivity_threshold(q, degree) / 2.0;
    ((p * 1e6).floor() as i64, 1_000_000)
}

fn activity_sums(s: &mut Suite, caps: &Caps) -> Result<()> {
    let g = HostGraph::build(&TemplateSpec::zd(&[15, 15], 6))?;
    let x = g.window_center();
    for q in [(1, 2), (1, 1), (2, 1)] {
        let p = half_threshold(q.0 as f64 / q.1 as f64, g.template_degree());
        for n in 2..=6 {
            let params = ModelParams::exact(p, q, BoundaryCondition::Free);
            let a = subexp::activity_sum_check(&g, &params, x, n, caps)?;
            s.record(
                "sub-activity-sum",
                &format!("{}:n={n}", pair_name(p, q)),
                a.ok,
                format!("sum={} bound={}", fmt_f64(a.sum), fmt_f64(a.bound)),
            );
        }
    }
    Ok(())
}

fn sup_activity_bound(s: &mut Suite, caps: &Caps) -> Result<()> {
    let g = HostGraph::build(&TemplateSpec::zd(&[5, 5], 1))?;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for &e in g.window_edges() {
        for t in enumerate_r_connected_edge_sets(&g, e, 1, 1, 4, caps)? {
            if t.iter().all(|f| g.window_edge_mask().contains(*f)) {
                sets.push(t);
            }
        }
    }
    sets.sort();
    sets.dedup();
    for (p, q) in [((9, 10), (1, 3)), ((2, 3), (5, 2))] {
        for bc in BCS {
            let ctx = SupContext::new(ModelParams::exact(p, q, bc), 1, 1.0)?;
            let delta = ctx.delta_p();
            let mut worst: Option<(f64, &Vec<usize>)> = None;
            for t in &sets {
                let r = supexp::activity_sup(&g, &ctx, t)?.to_f64().abs() / delta.powi(t.len() as i32);
                if worst.map_or(true, |(w, _)| r > w) {
                    worst = Some((r, t));
                }
            }
            let (w, t) = worst.expect("window has edges");
            let ok = w <= 1.0 + 1e-12;
            let detail = if ok { format!("sets={} max_ratio={}", sets.len(), fmt_f64(w)) } else { format!("ratio={} S={t:?}", fmt_f64(w)) };
            s.record("sup-activity-bound", &format!("{}:{}", pair_name(p, q), bc_name(bc)), ok, detail);
        }
    }
    Ok(())
}

fn fences(s: &mut Suite, caps: &Caps) -> Result<()> {
    let g = HostGraph::build(&TemplateSpec::zd(&[15, 15], 5))?;
    let x = g.window_center();
    let all = supexp::enumerate_fences(&g, Anchor::Vertex(x), 8, caps)?;
    let mut bad = Vec::new();
    for f in &all {
        let def = supexp::is_fence(&g, &f.gamma)?;
        let interior_ok = def.as_ref().is_some_and(|d| d.interior == f.interior);
        let bd: Vec<usize> = edge_boundary(&g, &g.vertex_set(&f.interior)).ones().collect();
        let rays = f.interior.iter().map(|&v| supexp::fence_crosses_rays(&g, f, v)).collect::<Result<Vec<_>>>()?;
        if !interior_ok || bd != f.gamma || !rays.iter().all(|&r| r) {
            bad.push(format!("{:?}", f.gamma));
        }
    }
    s.record("fence-invariants", "zd-15x15:size<=8", bad.is_empty(), format!("fences={} bad={}", all.len(), bad.join(" ")));
    let count = |k: usize| all.iter().filter(|f| f.gamma.len() == k).count();
    s.record("fence-count", "size=4", count(4) == 1, format!("count={}", count(4)));
    // independent count: connected interiors of at most 3 vertices with 6 boundary edges
    let mut within = g.window().clone();
    within.clear();
    for v in g.window_vertices() {
        if g.dist(x, *v) <= 2 {
            within.insert(*v);
        }
    }
    let brute = connected_sets_in(&g, &within, 1, 3)
        .into_iter()
        .filter(|w| w.contains(&x) && edge_boundary(&g, &g.vertex_set(w)).count_ones(..) == 6)
        .count();
    s.record("fence-count", "size=6", count(6) == brute, format!("count={} brute={brute}", count(6)));
    let check = supexp::verify_constants(&g, 1, 1.0, 8, caps)?;
    let c_ok = check.cut_set_values.iter().all(|&(_, f, b)| f as f64 >= b);
    s.record(
        "cutset-constants",
        "zd-15x15:R=1,C=1",
        check.worst_r <= 1 && c_ok,
        format!("fences={} worst_R={}", check.fences_checked, check.worst_r),
    );
    Ok(())
}

pub fn verify(run: &Run) -> Result<Report> {
    let caps = run.caps;
    let rep = run.report("verify", &["suite", "case", "status", "detail"]);
    let mut s = Suite { rep, failed: 0 };
    repartition(&mut s, &caps)?;
    psi_identities(&mut s, &caps)?;
    ursell(&mut s);
    activity_sums(&mut s, &caps)?;
    sup_activity_bound(&mut s, &caps)?;
    fences(&mut s, &caps)?;
    run.check("activity sums on zd 15x15 margin 6; fences on zd 15x15 margin 5");
    let total = s.rep.rows.len();
    let mut rep = run.finish(s.rep, None);
    rep.meta("checks", total);
    rep.meta("failed", s.failed);
    if s.failed > 0 {
        rep.failure = Some(format!("{} of {total} checks failed", s.failed));
    }
    Ok(rep)
}
