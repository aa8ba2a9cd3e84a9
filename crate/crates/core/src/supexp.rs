//! High-density (p near 1) expansion over closed-edge contours.
//!
//! Closed window edges are grouped into dual animals (R-connected edge
//! sets). A component of the window minus some edges counts as finite when
//! it avoids the internal window boundary; every other component reaches
//! the host boundary through the outside of the window.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;
use num::rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{cap_check, RcmError, Result};
use crate::expansion::{Certificate, ExpansionResult, KpCertificate};
use crate::gas::{self, Polymers, SizeSeries};
use crate::graphcore::{
    connected_sets_in, cut_set_function, edge_adjacency, grow_rooted, r_connected_edge_sets_in, r_threshold,
    BoundaryCondition, Caps, EdgeSet, HostGraph, TemplateSpec,
};
use crate::oracle::ModelParams;
use crate::scalar::{Field, Repr, Scalar};

/// Largest window accepted by the cut-set constant search.
pub const CUTSET_MAX_VERTICES: usize = 20;

/// Model parameters plus the contour constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SupContext {
    pub params: ModelParams,
    /// Cut-set constant R.
    pub r: usize,
    /// Constant C in f_G(n) ≥ C ln n.
    pub c: f64,
}

impl SupContext {
    pub fn new(params: ModelParams, r: usize, c: f64) -> Result<Self> {
        if r == 0 {
            return Err(RcmError::Precondition("R must be at least 1".into()));
        }
        if !(c > 0.0) {
            return Err(RcmError::Precondition(format!("C must be positive, got {c}")));
        }
        if params.p.to_f64() <= 0.0 {
            return Err(RcmError::Precondition("p = 0 has no high-density expansion".into()));
        }
        Ok(SupContext { params, r, c })
    }

    pub fn lambda(&self) -> f64 {
        let p = self.params.p.to_f64();
        (1.0 - p) / p
    }

    /// δ_p = max(|λ| q, |λ|)
    pub fn delta_p(&self) -> f64 {
        let l = self.lambda().abs();
        l * self.params.q.to_f64().max(1.0)
    }

    /// A = max(2C, 1) Δ^{2R}
    pub fn big_a(&self, degree: usize) -> f64 {
        (2.0 * self.c).max(1.0) * (degree as f64).powi(2 * self.r as i32)
    }
}

/// Declared contour constants (R, C) for a template.
pub fn declared_constants(g: &HostGraph) -> Result<(usize, f64)> {
    match g.template() {
        TemplateSpec::Zd { .. } => Ok((1, 1.0)),
        TemplateSpec::Tree { .. } => Err(RcmError::Precondition(
            "tree templates have no bounded cut-set constant".into(),
        )),
        TemplateSpec::Edges { .. } => {
            let c = window_cutset_constant(g)?;
            Ok((c.free.max(1), 1.0))
        }
    }
}

pub fn kp_certificate(ctx: &SupContext, degree: usize) -> KpCertificate {
    let big_a = ctx.big_a(degree);
    let delta_p = ctx.delta_p();
    let product = std::f64::consts::E * big_a * (1.0 + (degree as f64).powi(ctx.r as i32 + 1)) * delta_p;
    KpCertificate {
        a_value: 1.0,
        big_a,
        delta_p,
        cutset_r: ctx.r,
        cutset_c: ctx.c,
        degree,
        product,
        threshold_ok: product <= 1.0,
    }
}

/// δ* with e A (1 + Δ^{R+1}) δ* = 1.
pub fn kp_delta_star(r: usize, c: f64, degree: usize) -> f64 {
    let a = (2.0 * c).max(1.0) * (degree as f64).powi(2 * r as i32);
    1.0 / (std::f64::consts::E * a * (1.0 + (degree as f64).powi(r as i32 + 1)))
}

/// Smallest p at which the certificate holds.
pub fn kp_threshold(q: f64, r: usize, c: f64, degree: usize) -> f64 {
    let lambda = kp_delta_star(r, c, degree) / q.max(1.0);
    1.0 / (1.0 + lambda)
}

// ---------------------------------------------------------------------------
// window graph

struct Win {
    ends: Vec<(usize, usize)>,
    inc: Vec<Vec<(usize, usize)>>,
    bd: Vec<bool>,
    host_e: Vec<usize>,
    v_local: Vec<usize>,
    e_local: Vec<usize>,
}

struct Comps {
    label: Vec<usize>,
    touches: Vec<bool>,
}

impl Comps {
    fn count(&self) -> usize {
        self.touches.len()
    }
    fn enclosed(&self) -> usize {
        self.touches.iter().filter(|t| !**t).count()
    }
}

impl Win {
    fn new(g: &HostGraph) -> Win {
        let wv = g.window_vertices();
        let mut v_local = vec![usize::MAX; g.n_vertices()];
        for (i, &v) in wv.iter().enumerate() {
            v_local[v] = i;
        }
        let host_e = g.window_edges().to_vec();
        let mut e_local = vec![usize::MAX; g.n_edges()];
        let mut ends = Vec::with_capacity(host_e.len());
        let mut inc = vec![Vec::new(); wv.len()];
        for (k, &e) in host_e.iter().enumerate() {
            e_local[e] = k;
            let (a, b) = g.edge(e);
            let (a, b) = (v_local[a], v_local[b]);
            ends.push((a, b));
            inc[a].push((b, k));
            inc[b].push((a, k));
        }
        let bd = wv.iter().map(|&v| g.int_boundary().contains(v)).collect();
        Win { ends, inc, bd, host_e, v_local, e_local }
    }

    fn nv(&self) -> usize {
        self.inc.len()
    }

    fn comps(&self, removed: impl Fn(usize) -> bool) -> Comps {
        let n = self.nv();
        let mut label = vec![usize::MAX; n];
        let mut touches = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            let c = touches.len();
            let mut t = false;
            label[s] = c;
            stack.push(s);
            while let Some(u) = stack.pop() {
                t |= self.bd[u];
                for &(w, k) in &self.inc[u] {
                    if label[w] == usize::MAX && !removed(k) {
                        label[w] = c;
                        stack.push(w);
                    }
                }
            }
            touches.push(t);
        }
        Comps { label, touches }
    }

    fn local_set(&self, host_edges: &[usize]) -> Result<FixedBitSet> {
        let mut s = FixedBitSet::with_capacity(self.ends.len());
        for &e in host_edges {
            let k = self.e_local.get(e).copied().unwrap_or(usize::MAX);
            if k == usize::MAX {
                return Err(RcmError::Precondition("edge set must lie in the window".into()));
            }
            s.insert(k);
        }
        Ok(s)
    }
}

/// Whether the component of X[0] in (V_N, E_N ∖ removed) holds X and
/// avoids the internal boundary.
fn odot(win: &Win, removed: &FixedBitSet, xs: &[usize]) -> bool {
    let c = win.comps(|k| removed.contains(k));
    let l = c.label[xs[0]];
    !c.touches[l] && xs.iter().all(|&x| c.label[x] == l)
}

/// Some x ∈ X whose component avoids the internal boundary.
fn enclosed_member(win: &Win, removed: &FixedBitSet, xs: &[usize]) -> Option<usize> {
    let c = win.comps(|k| removed.contains(k));
    xs.iter().copied().find(|&x| !c.touches[c.label[x]])
}

struct BoundaryData {
    supp: Vec<usize>,
    r_connected: bool,
    dist_local: Vec<usize>,
}

fn boundary_data(g: &HostGraph, r: usize) -> Result<BoundaryData> {
    let mut supp: Vec<usize> = g.int_boundary().ones().collect();
    if supp.is_empty() {
        return Err(RcmError::Precondition(
            "the window has no internal boundary (declare boundary vertices for explicit graphs)".into(),
        ));
    }
    for &e in g.crossing_edges() {
        let (a, b) = g.edge(e);
        supp.push(if g.in_window(a) { b } else { a });
    }
    supp.sort_unstable();
    supp.dedup();
    let dist_local = g
        .window_vertices()
        .iter()
        .map(|&v| supp.iter().map(|&s| g.dist(v, s)).min().unwrap())
        .collect();
    Ok(BoundaryData { r_connected: r_threshold(g, &supp) <= r, supp, dist_local })
}

/// Exponent of q in ρ^ξ(S): n_S (wired) or ñ_S (free).
fn q_exponent(g: &HostGraph, win: &Win, bd: &BoundaryData, s: &FixedBitSet, r: usize, bc: BoundaryCondition) -> usize {
    let c = win.comps(|k| s.contains(k));
    match bc {
        BoundaryCondition::Wired => c.enclosed(),
        BoundaryCondition::Free => {
            let joined = if bd.r_connected {
                s.ones().any(|k| {
                    let (a, b) = win.ends[k];
                    bd.dist_local[a].min(bd.dist_local[b]) <= r
                })
            } else {
                let mut vs = bd.supp.clone();
                for k in s.ones() {
                    let (a, b) = g.edge(win.host_e[k]);
                    vs.push(a);
                    vs.push(b);
                }
                vs.sort_unstable();
                vs.dedup();
                r_threshold(g, &vs) <= r
            };
            if joined {
                c.count() - 1
            } else {
                c.enclosed()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// fences

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fence {
    pub gamma: Vec<usize>,
    pub interior: Vec<usize>,
    pub interior_edges: Vec<usize>,
}

fn host_components(g: &HostGraph, removed: &EdgeSet) -> (Vec<usize>, Vec<bool>) {
    let n = g.n_vertices();
    let mut label = vec![usize::MAX; n];
    let mut finite = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let c = finite.len();
        let mut f = true;
        label[s] = c;
        stack.push(s);
        while let Some(u) = stack.pop() {
            if g.is_host_boundary(u) {
                f = false;
            }
            for &(w, e) in g.incident(u) {
                if label[w] == usize::MAX && !removed.contains(e) {
                    label[w] = c;
                    stack.push(w);
                }
            }
        }
        finite.push(f);
    }
    (label, finite)
}

fn require_host_boundary(g: &HostGraph) -> Result<()> {
    if g.has_host_boundary() {
        Ok(())
    } else {
        Err(RcmError::Precondition("the host graph has no boundary vertices".into()))
    }
}

/// Fence test straight from the definition.
pub fn is_fence(g: &HostGraph, gamma: &[usize]) -> Result<Option<Fence>> {
    require_host_boundary(g)?;
    if gamma.is_empty() || gamma.iter().any(|&e| e >= g.n_edges()) {
        return Ok(None);
    }
    let set = g.edge_set(gamma);
    let (label, finite) = host_components(g, &set);
    let fin: Vec<usize> = (0..finite.len()).filter(|&c| finite[c]).collect();
    if fin.len() != 1 {
        return Ok(None);
    }
    for &e in gamma {
        let mut smaller = set.clone();
        smaller.set(e, false);
        if host_components(g, &smaller).1.iter().any(|&f| f) {
            return Ok(None);
        }
    }
    let interior: Vec<usize> = (0..g.n_vertices()).filter(|&v| label[v] == fin[0]).collect();
    let inside = g.vertex_set(&interior);
    let interior_edges =
        (0..g.n_edges()).filter(|&e| inside.contains(g.edge(e).0) && inside.contains(g.edge(e).1)).collect();
    let mut gamma = gamma.to_vec();
    gamma.sort_unstable();
    gamma.dedup();
    Ok(Some(Fence { gamma, interior, interior_edges }))
}

fn interior_size_limit(g: &HostGraph, max_size: usize, caps: &Caps) -> Result<usize> {
    let s = match g.template() {
        TemplateSpec::Zd { dims, .. } if dims.len() >= 2 => {
            let d = dims.len() as f64;
            ((max_size as f64 / (2.0 * d)).powf(d / (d - 1.0)) + 1e-9).floor() as usize
        }
        TemplateSpec::Tree { degree, .. } if *degree >= 3 => max_size.saturating_sub(2) / (degree - 2),
        TemplateSpec::Edges { .. } => g.n_vertices(),
        _ => max_size,
    };
    let s = s.max(1);
    cap_check("fence interior size", s, caps.polymer)?;
    Ok(s)
}

fn fences_around(g: &HostGraph, anchor: usize, max_size: usize, caps: &Caps) -> Result<Vec<Fence>> {
    let s_max = interior_size_limit(g, max_size, caps)?;
    if !matches!(g.template(), TemplateSpec::Edges { .. }) {
        let d = g.distance_to_host_boundary(anchor).unwrap_or(usize::MAX);
        if d < s_max {
            return Err(RcmError::Margin(format!(
                "fences up to size {max_size} around {} need {s_max} steps to the host boundary, found {d}",
                g.name(anchor)
            )));
        }
    }
    if g.is_host_boundary(anchor) {
        return Ok(Vec::new());
    }
    let mut allowed = FixedBitSet::with_capacity(g.n_vertices());
    for v in 0..g.n_vertices() {
        if !g.is_host_boundary(v) {
            allowed.insert(v);
        }
    }
    let sets = grow_rooted(g.vadj(), &allowed, anchor, 1, s_max, &|_: &[usize]| true);
    let mut out = Vec::new();
    for w in sets {
        let inside = g.vertex_set(&w);
        let mut gamma = Vec::new();
        for &v in &w {
            for &(u, e) in g.incident(v) {
                if !inside.contains(u) {
                    gamma.push(e);
                }
            }
        }
        if gamma.len() > max_size {
            continue;
        }
        // every outside component must reach the host boundary
        let (label, finite) = host_components(g, &g.edge_set(&gamma));
        let ok = (0..g.n_vertices()).filter(|v| !inside.contains(*v)).all(|v| !finite[label[v]]);
        if !ok {
            continue;
        }
        gamma.sort_unstable();
        let interior_edges = (0..g.n_edges())
            .filter(|&e| inside.contains(g.edge(e).0) && inside.contains(g.edge(e).1))
            .collect();
        out.push(Fence { gamma, interior: w, interior_edges });
    }
    Ok(out)
}

/// Fence anchor: a vertex of the interior or an edge of the fence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Vertex(usize),
    Edge(usize),
}

/// All fences with the anchor inside (vertex) or on them (edge), up to
/// `max_size` edges, sorted by size then edges.
pub fn enumerate_fences(g: &HostGraph, anchor: Anchor, max_size: usize, caps: &Caps) -> Result<Vec<Fence>> {
    require_host_boundary(g)?;
    cap_check("fence size", max_size, caps.edge_set)?;
    let mut out = match anchor {
        Anchor::Vertex(v) => fences_around(g, v, max_size, caps)?,
        Anchor::Edge(e) => {
            let (a, b) = g.edge(e);
            let mut all = fences_around(g, a, max_size, caps)?;
            all.extend(fences_around(g, b, max_size, caps)?);
            all.retain(|f| f.gamma.binary_search(&e).is_ok());
            all
        }
    };
    out.sort_by(|x, y| (x.gamma.len(), &x.gamma).cmp(&(y.gamma.len(), &y.gamma)));
    out.dedup();
    Ok(out)
}

/// Every path from x to the host boundary meets the fence.
pub fn fence_crosses_rays(g: &HostGraph, f: &Fence, x: usize) -> Result<bool> {
    if f.interior.binary_search(&x).is_err() {
        return Err(RcmError::Precondition(format!("{} is not inside the fence", g.name(x))));
    }
    let (label, finite) = host_components(g, &g.edge_set(&f.gamma));
    Ok(finite[label[x]])
}

pub fn surrounds(f: &Fence, xs: &[usize]) -> bool {
    xs.iter().all(|x| f.interior.binary_search(x).is_ok())
}

/// Every finite connected subgraph holding X meets the fence.
pub fn separates(g: &HostGraph, f: &Fence, xs: &[usize]) -> bool {
    let (label, _) = host_components(g, &g.edge_set(&f.gamma));
    xs.iter().any(|&x| label[x] != label[xs[0]])
}

/// n_S (wired) or ñ_S (free) for a window edge set.
pub fn minimal_fence_count(g: &HostGraph, s: &[usize], bc: BoundaryCondition, r: usize) -> Result<usize> {
    let win = Win::new(g);
    let set = win.local_set(s)?;
    let bd = boundary_data(g, r)?;
    Ok(q_exponent(g, &win, &bd, &set, r, bc))
}

/// ρ^ξ(S) = λ^|S| q^{n_S or ñ_S}.
pub fn activity_sup(g: &HostGraph, ctx: &SupContext, s: &[usize]) -> Result<Scalar> {
    let n = minimal_fence_count(g, s, ctx.params.bc, ctx.r)? as i64;
    let size = s.len() as i64;
    match &ctx.params.p {
        Scalar::Exact(_) => {
            let l = lambda_in::<BigRational>(ctx)?;
            let q = BigRational::from_scalar(&ctx.params.q)?;
            Ok(Scalar::Exact(l.powi(size) * q.powi(n)))
        }
        Scalar::Approx(_) => {
            let l = lambda_in::<f64>(ctx)?;
            Ok(Scalar::Approx(l.powi(size as i32) * ctx.params.q.to_f64().powi(n as i32)))
        }
    }
}

fn lambda_in<F: Repr>(ctx: &SupContext) -> Result<F> {
    let p = F::from_scalar(&ctx.params.p)?;
    Ok((F::one() - p.clone()) / p)
}

// ---------------------------------------------------------------------------
// cut-set constants of a window

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CutsetConstants {
    /// Smallest R making the wired polymer sum exact.
    pub wired: usize,
    /// Smallest R making the free polymer sum exact.
    pub free: usize,
}

/// R needed for the polymer representations on this window: finite
/// regions' boundaries (wired), plus walls joined to the window boundary
/// (free).
pub fn window_cutset_constant(g: &HostGraph) -> Result<CutsetConstants> {
    let win = Win::new(g);
    let nv = win.nv();
    cap_check("cut-set window vertices", nv, CUTSET_MAX_VERTICES)?;
    let bd = boundary_data(g, 1)?;
    let wv = g.window_vertices();
    let all = connected_sets_in(g, g.window(), 1, nv);
    let mut wired = 1;
    let mut free = r_threshold(g, &bd.supp).max(1);
    for w in &all {
        let inside = g.vertex_set(w);
        let local_in: Vec<bool> = wv.iter().map(|&v| inside.contains(v)).collect();
        let cut: Vec<usize> = (0..win.ends.len())
            .filter(|&k| local_in[win.ends[k].0] != local_in[win.ends[k].1])
            .collect();
        if cut.is_empty() {
            continue;
        }
        let mut supp: Vec<usize> = cut.iter().flat_map(|&k| {
            let (a, b) = g.edge(win.host_e[k]);
            [a, b]
        }).collect();
        supp.sort_unstable();
        supp.dedup();
        let touches = w.iter().any(|&v| g.int_boundary().contains(v));
        // components of V_N ∖ W
        let c = win.comps(|k| {
            let (a, b) = win.ends[k];
            local_in[a] || local_in[b]
        });
        let outside: Vec<usize> = (0..nv).filter(|&i| !local_in[i]).collect();
        if !touches {
            if outside.iter().all(|&i| c.touches[c.label[i]]) {
                wired = wired.max(r_threshold(g, &supp));
            }
        } else {
            let labels: HashSet<usize> = outside.iter().map(|&i| c.label[i]).collect();
            if labels.len() == 1 {
                let mut vs = supp.clone();
                vs.extend(bd.supp.iter().copied());
                vs.sort_unstable();
                vs.dedup();
                free = free.max(r_threshold(g, &vs));
            }
        }
    }
    Ok(CutsetConstants { wired, free: free.max(wired) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutsetCheck {
    pub r: usize,
    pub c: f64,
    pub fences_checked: usize,
    pub worst_r: usize,
    /// (n, f_G(n), C ln n)
    pub cut_set_values: Vec<(usize, usize, f64)>,
}

/// Check declared (R, C): every fence up to `max_size` around the window
/// center is R-connected, and f_G(n) ≥ C ln n wherever f_G is computable.
pub fn verify_constants(g: &HostGraph, r: usize, c: f64, max_size: usize, caps: &Caps) -> Result<CutsetCheck> {
    let center = g.window_center();
    let fences = enumerate_fences(g, Anchor::Vertex(center), max_size, caps)?;
    let mut worst = 0;
    for f in &fences {
        let supp: Vec<usize> = g.support(&g.edge_set(&f.gamma)).ones().collect();
        let t = r_threshold(g, &supp);
        worst = worst.max(t);
        if t > r {
            return Err(RcmError::Invariant(format!(
                "fence {:?} needs R = {t}, declared {r}",
                f.gamma.iter().map(|&e| g.edge(e)).collect::<Vec<_>>()
            )));
        }
    }
    let mut vals = Vec::new();
    for n in 1..caps.polymer {
        match cut_set_function(g, n, caps) {
            Ok(f) => {
                let need = c * (n as f64).ln();
                if (f as f64) < need {
                    return Err(RcmError::Invariant(format!("f_G({n}) = {f} is below C ln n = {need}")));
                }
                vals.push((n, f, need));
            }
            Err(_) => break,
        }
    }
    Ok(CutsetCheck { r, c, fences_checked: fences.len(), worst_r: worst, cut_set_values: vals })
}

// ---------------------------------------------------------------------------
// exact sums over closed-edge sets

struct ExactTally {
    kmax: usize,
    total: Vec<u64>,
    event: Vec<u64>,
}

fn r_masks(g: &HostGraph, win: &Win, r: usize) -> Vec<u64> {
    let adj = edge_adjacency(g, r);
    (0..win.ends.len())
        .map(|k| {
            let mut m = 1u64 << k;
            for &f in &adj[win.host_e[k]] {
                let j = win.e_local[f];
                if j != usize::MAX {
                    m |= 1 << j;
                }
            }
            m
        })
        .collect()
}

fn r_components(radj: &[u64], t: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut rest = t;
    while rest != 0 {
        let mut comp = rest & rest.wrapping_neg();
        let mut frontier = comp;
        while frontier != 0 {
            let k = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = radj[k] & t & !comp;
            comp |= new;
            frontier |= new;
        }
        out.push(comp);
        rest &= !comp;
    }
    out
}

fn bits(m: u64, n: usize) -> FixedBitSet {
    let mut s = FixedBitSet::with_capacity(n);
    for k in 0..n {
        if m >> k & 1 == 1 {
            s.insert(k);
        }
    }
    s
}

fn exact_tally(g: &HostGraph, ctx: &SupContext, xs: Option<&[usize]>, caps: &Caps) -> Result<ExactTally> {
    let win = Win::new(g);
    let m = win.ends.len();
    cap_check("window edges", m, caps.oracle_edges.min(40))?;
    let bd = boundary_data(g, ctx.r)?;
    let radj = r_masks(g, &win, ctx.r);
    let kmax = win.nv();
    let xl: Option<Vec<usize>> = xs.map(|x| x.iter().map(|&v| win.v_local[v]).collect());
    let chunk = 1u64 << m.min(10);
    let n_chunks = (1u64 << m) / chunk;
    let parts: Vec<(Vec<u64>, Vec<u64>)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut total = vec![0u64; (m + 1) * (kmax + 1)];
            let mut event = vec![0u64; (m + 1) * (kmax + 1)];
            let mut memo: HashMap<u64, (usize, bool)> = HashMap::new();
            for t in c * chunk..(c + 1) * chunk {
                let mut expo = 0;
                let mut fenced = 0u64;
                for s in r_components(&radj, t) {
                    let (e, f) = *memo.entry(s).or_insert_with(|| {
                        let set = bits(s, m);
                        let e = q_exponent(g, &win, &bd, &set, ctx.r, ctx.params.bc);
                        let f = xl.as_ref().is_some_and(|x| enclosed_member(&win, &set, x).is_some());
                        (e, f)
                    });
                    expo += e;
                    if f {
                        fenced |= s;
                    }
                }
                let idx = t.count_ones() as usize * (kmax + 1) + expo;
                total[idx] += 1;
                if let Some(x) = &xl {
                    if fenced != 0 && odot(&win, &bits(fenced, m), x) {
                        event[idx] += 1;
                    }
                }
            }
            (total, event)
        })
        .collect();
    let mut total = vec![0u64; (m + 1) * (kmax + 1)];
    let mut event = vec![0u64; (m + 1) * (kmax + 1)];
    for (a, b) in parts {
        for i in 0..total.len() {
            total[i] += a[i];
            event[i] += b[i];
        }
    }
    Ok(ExactTally { kmax, total, event })
}

fn eval_tally(counts: &[u64], kmax: usize, lambda: &BigRational, q: &BigRational) -> BigRational {
    let mut acc = <BigRational as Field>::zero();
    for (i, &c) in counts.iter().enumerate() {
        if c != 0 {
            let (t, k) = (i / (kmax + 1), i % (kmax + 1));
            acc = acc + BigRational::from_int(c as i64) * lambda.powi(t as i64) * q.powi(k as i64);
        }
    }
    acc
}

fn exact_inputs(ctx: &SupContext) -> Result<(BigRational, BigRational)> {
    match (&ctx.params.p, &ctx.params.q) {
        (Scalar::Exact(_), Scalar::Exact(q)) => Ok((lambda_in::<BigRational>(ctx)?, q.clone())),
        _ => Err(RcmError::Precondition("exact polymer sums need exact p and q".into())),
    }
}

/// Ψ^ξ summed over every family of compatible dual animals in the window.
pub fn psi_exact(g: &HostGraph, ctx: &SupContext, caps: &Caps) -> Result<BigRational> {
    let (lambda, q) = exact_inputs(ctx)?;
    let t = exact_tally(g, ctx, None, caps)?;
    Ok(eval_tally(&t.total, t.kmax, &lambda, &q))
}

/// φ^f(X) from the X-polymer regrouping of the closed-edge sum.
pub fn phi_f_exact(g: &HostGraph, ctx: &SupContext, xs: &[usize], caps: &Caps) -> Result<BigRational> {
    let xs = check_x(g, xs)?;
    let (lambda, q) = exact_inputs(ctx)?;
    let t = exact_tally(g, ctx, Some(&xs), caps)?;
    Ok(eval_tally(&t.event, t.kmax, &lambda, &q) / eval_tally(&t.total, t.kmax, &lambda, &q))
}

// ---------------------------------------------------------------------------
// the X-polymer gas

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XPolymer {
    /// Host edge ids of each dual animal.
    pub parts: Vec<Vec<usize>>,
    /// A vertex of X enclosed by each part (None for a plain animal).
    pub witnesses: Vec<Option<usize>>,
    /// Fence inside each fenced part.
    pub fences: Vec<Option<Fence>>,
}

impl XPolymer {
    pub fn size(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }
    pub fn edges(&self) -> Vec<usize> {
        let mut e: Vec<usize> = self.parts.concat();
        e.sort_unstable();
        e
    }
}

struct Poly {
    edges: Vec<usize>,
    parts: Vec<Vec<usize>>,
    fenced: bool,
}

/// Polymers of ℰ^X built on the window: dual animals, and unions of
/// mutually distant animals that each enclose part of X.
pub struct SupGas<F> {
    polys: Vec<Poly>,
    masks: Vec<FixedBitSet>,
    near: Vec<FixedBitSet>,
    acts: Vec<F>,
    by_edge: Vec<Vec<usize>>,
    fenced: Vec<usize>,
    index: HashMap<Vec<usize>, usize>,
}

struct Builder<'a> {
    g: &'a HostGraph,
    win: Win,
    bd: BoundaryData,
    adj: Vec<Vec<usize>>,
    r: usize,
    bc: BoundaryCondition,
    xs_local: Vec<usize>,
}

impl Builder<'_> {
    fn local(&self, edges: &[usize]) -> FixedBitSet {
        self.win.local_set(edges).expect("window edges")
    }

    fn near(&self, edges: &[usize]) -> FixedBitSet {
        let mut s = self.g.edge_set(edges);
        for &e in edges {
            for &f in &self.adj[e] {
                s.insert(f);
            }
        }
        s
    }

    fn enclosed(&self, edges: &[usize]) -> Option<usize> {
        if self.xs_local.is_empty() {
            return None;
        }
        enclosed_member(&self.win, &self.local(edges), &self.xs_local)
    }

    fn exponent(&self, edges: &[usize]) -> usize {
        q_exponent(self.g, &self.win, &self.bd, &self.local(edges), self.r, self.bc)
    }

    /// R-components of an edge set.
    fn components(&self, edges: &[usize]) -> Vec<Vec<usize>> {
        let set = self.g.edge_set(edges);
        let mut seen = FixedBitSet::with_capacity(self.g.n_edges());
        let mut out = Vec::new();
        for &e in edges {
            if seen.contains(e) {
                continue;
            }
            let mut comp = vec![e];
            seen.insert(e);
            let mut i = 0;
            while i < comp.len() {
                for &f in &self.adj[comp[i]] {
                    if set.contains(f) && !seen.contains(f) {
                        seen.insert(f);
                        comp.push(f);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort();
        out
    }

    /// Fence inside the region a part encloses around x.
    fn fence_for(&self, edges: &[usize], x_local: usize) -> Fence {
        let win = &self.win;
        let removed = self.local(edges);
        let c = win.comps(|k| removed.contains(k));
        let l = c.label[x_local];
        // fill: region around x plus enclosed holes
        let region: Vec<bool> = (0..win.nv()).map(|i| c.label[i] == l).collect();
        let c2 = win.comps(|k| {
            let (a, b) = win.ends[k];
            region[a] || region[b]
        });
        let inside: Vec<bool> = (0..win.nv()).map(|i| region[i] || !c2.touches[c2.label[i]]).collect();
        let wv = self.g.window_vertices();
        let interior: Vec<usize> = (0..win.nv()).filter(|&i| inside[i]).map(|i| wv[i]).collect();
        let mut gamma = Vec::new();
        let mut interior_edges = Vec::new();
        for (k, &(a, b)) in win.ends.iter().enumerate() {
            match (inside[a], inside[b]) {
                (true, true) => interior_edges.push(win.host_e[k]),
                (true, false) | (false, true) => gamma.push(win.host_e[k]),
                _ => {}
            }
        }
        let mut interior = interior;
        interior.sort_unstable();
        Fence { gamma, interior, interior_edges }
    }
}

fn check_x(g: &HostGraph, xs: &[usize]) -> Result<Vec<usize>> {
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    xs.dedup();
    if xs.is_empty() {
        return Err(RcmError::Precondition("X must be nonempty".into()));
    }
    if xs.iter().any(|&x| !g.in_window(x) || g.int_boundary().contains(x)) {
        return Err(RcmError::Precondition("X must lie in the window interior".into()));
    }
    Ok(xs)
}

type Region = (Vec<usize>, Vec<usize>);

/// Connected interior regions holding X, with their edge boundaries.
fn regions(b: &Builder, xs: &[usize], k: usize, caps: &Caps) -> Result<Vec<Region>> {
    let g = b.g;
    let mut allowed = FixedBitSet::with_capacity(g.n_vertices());
    for &v in g.window_vertices() {
        if !g.int_boundary().contains(v) {
            allowed.insert(v);
        }
    }
    let limit = allowed.count_ones(..).min(caps.polymer);
    let out: Vec<Region> = grow_rooted(g.vadj(), &allowed, xs[0], 1, limit, &|_: &[usize]| true)
        .into_iter()
        .filter(|w| xs.iter().all(|x| w.binary_search(x).is_ok()))
        .map(|w| {
            let inside = g.vertex_set(&w);
            let mut gamma: Vec<usize> = w
                .iter()
                .flat_map(|&v| g.incident(v).iter().filter(|&&(u, _)| !inside.contains(u)).map(|&(_, e)| e))
                .collect();
            gamma.sort_unstable();
            (w, gamma)
        })
        .collect();
    if limit < allowed.count_ones(..) && out.iter().any(|(w, gm)| w.len() == limit && gm.len() <= k) {
        return Err(RcmError::Cap { what: "root region size", needed: limit + 1, cap: caps.polymer });
    }
    Ok(out)
}

/// Roots P ⊙ X of total size ≤ k.
fn roots(b: &Builder, k: usize, regions: &[Region], fenced: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let g = b.g;
    let win = &b.win;
    let mut found: HashSet<Vec<usize>> = HashSet::new();
    let n = g.n_edges();
    for (w, gamma) in regions.iter().filter(|(_, gm)| gm.len() <= k) {
        let gset = g.edge_set(gamma);
        let mut aug: Vec<Vec<usize>> = b.adj.clone();
        let mut vadj: Vec<usize> = gamma.iter().flat_map(|&e| b.adj[e].iter().copied()).filter(|&f| !gset.contains(f)).collect();
        vadj.sort_unstable();
        vadj.dedup();
        aug.push(vadj);
        let mut allow = g.window_edge_mask().clone();
        allow.grow(n + 1);
        for &e in gamma {
            allow.set(e, false);
        }
        allow.insert(n);
        let extra = k - gamma.len();
        let grown = grow_rooted(&aug, &allow, n, 1, extra + 1, &|_: &[usize]| true);
        let wl: Vec<usize> = w.iter().map(|&v| win.v_local[v]).collect();
        for s in grown {
            let mut p: Vec<usize> = gamma.clone();
            p.extend(s.into_iter().filter(|&e| e != n));
            p.sort_unstable();
            // the region around X[0] must be exactly W
            let removed = b.local(&p);
            let c = win.comps(|kk| removed.contains(kk));
            let l = c.label[wl[0]];
            if c.touches[l] || (0..win.nv()).filter(|&i| c.label[i] == l).count() != wl.len() {
                continue;
            }
            if !odot(win, &removed, &b.xs_local) {
                continue;
            }
            let parts = b.components(&p);
            if parts.len() > 1 && parts.iter().any(|q| b.enclosed(q).is_none()) {
                continue;
            }
            found.insert(p);
        }
    }
    // attach distant fenced animals
    let mut frontier: Vec<Vec<usize>> = found.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for p in &frontier {
            let near = b.near(p);
            for f in fenced {
                if p.len() + f.len() > k || f.iter().any(|&e| near.contains(e)) {
                    continue;
                }
                let mut u = p.clone();
                u.extend(f.iter().copied());
                u.sort_unstable();
                if found.contains(&u) || !odot(win, &b.local(&u), &b.xs_local) {
                    continue;
                }
                let parts = b.components(&u);
                if parts.iter().any(|q| b.enclosed(q).is_none()) {
                    continue;
                }
                found.insert(u.clone());
                next.push(u);
            }
        }
        frontier = next;
    }
    let mut out: Vec<Vec<usize>> = found.into_iter().collect();
    out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    out
}

/// Unions of ≥ 2 pairwise distant fenced animals, total size ≤ budget.
fn multi_part(b: &Builder, fenced: &[Vec<usize>], budget: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let nears: Vec<FixedBitSet> = fenced.iter().map(|f| b.near(f)).collect();
    fn rec(
        i0: usize,
        cur: &mut Vec<usize>,
        size: usize,
        budget: usize,
        fenced: &[Vec<usize>],
        nears: &[FixedBitSet],
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if cur.len() >= 2 {
            out.push(cur.iter().map(|&i| fenced[i].clone()).collect());
        }
        for j in i0..fenced.len() {
            if size + fenced[j].len() > budget {
                continue;
            }
            if cur.iter().any(|&i| fenced[j].iter().any(|&e| nears[i].contains(e))) {
                continue;
            }
            cur.push(j);
            rec(j + 1, cur, size + fenced[j].len(), budget, fenced, nears, out);
            cur.pop();
        }
    }
    rec(0, &mut Vec::new(), 0, budget, fenced, &nears, &mut out);
    out
}

impl<F: Repr> SupGas<F> {
    fn from_polys(b: &Builder, polys: Vec<Poly>, lambda: &F, q: &F) -> Self {
        let exps: Vec<Vec<usize>> = polys
            .par_iter()
            .map(|p| p.parts.iter().map(|s| b.exponent(s)).collect())
            .collect();
        let acts = polys
            .iter()
            .zip(&exps)
            .map(|(p, ex)| {
                p.parts
                    .iter()
                    .zip(ex)
                    .fold(F::one(), |acc, (s, &e)| acc * lambda.powi(s.len() as i64) * q.powi(e as i64))
            })
            .collect();
        let masks: Vec<FixedBitSet> = polys.iter().map(|p| b.g.edge_set(&p.edges)).collect();
        let near = polys.iter().map(|p| b.near(&p.edges)).collect();
        let mut by_edge = vec![Vec::new(); b.g.n_edges()];
        for (i, p) in polys.iter().enumerate() {
            for &e in &p.edges {
                by_edge[e].push(i);
            }
        }
        for l in &mut by_edge {
            l.sort_by_key(|&i| (polys[i].edges.len(), i));
        }
        let mut fenced: Vec<usize> = (0..polys.len()).filter(|&i| polys[i].fenced).collect();
        fenced.sort_by_key(|&i| (polys[i].edges.len(), i));
        let index = polys.iter().enumerate().map(|(i, p)| (p.edges.clone(), i)).collect();
        SupGas { polys, masks, near, acts, by_edge, fenced, index }
    }

    pub fn polymer(&self, i: usize) -> &[usize] {
        &self.polys[i].edges
    }
}

impl<F: Repr> Polymers for SupGas<F> {
    type F = F;
    fn len(&self) -> usize {
        self.polys.len()
    }
    fn size(&self, i: usize) -> usize {
        self.polys[i].edges.len()
    }
    fn activity(&self, i: usize) -> F {
        self.acts[i].clone()
    }
    fn incompatible(&self, i: usize, max_size: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for e in self.near[i].ones() {
            for &j in &self.by_edge[e] {
                if self.polys[j].edges.len() > max_size {
                    break;
                }
                out.push(j);
            }
        }
        if self.polys[i].fenced {
            for &j in &self.fenced {
                if self.polys[j].edges.len() > max_size {
                    break;
                }
                out.push(j);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
    fn are_incompatible(&self, i: usize, j: usize) -> bool {
        !self.near[i].is_disjoint(&self.masks[j]) || (self.polys[i].fenced && self.polys[j].fenced)
    }
}

fn builder<'a>(g: &'a HostGraph, ctx: &SupContext, xs: &[usize]) -> Result<Builder<'a>> {
    let win = Win::new(g);
    let bd = boundary_data(g, ctx.r)?;
    let xs_local = xs.iter().map(|&v| win.v_local[v]).collect();
    Ok(Builder { g, win, bd, adj: edge_adjacency(g, ctx.r), r: ctx.r, bc: ctx.params.bc, xs_local })
}

fn animals(b: &Builder, max: usize) -> Vec<Vec<usize>> {
    if max == 0 {
        return Vec::new();
    }
    r_connected_edge_sets_in(&b.adj, b.g.window_edge_mask(), 1, max)
}

/// All X-polymers with total size ≤ `max_total_size`, canonical order.
pub fn enumerate_x_polymers(
    g: &HostGraph,
    ctx: &SupContext,
    xs: &[usize],
    max_total_size: usize,
    caps: &Caps,
) -> Result<Vec<XPolymer>> {
    cap_check("edge set size", max_total_size, caps.edge_set)?;
    let xs = check_x(g, xs)?;
    let b = builder(g, ctx, &xs)?;
    let all = animals(&b, max_total_size);
    let mut out = Vec::new();
    let mut fenced = Vec::new();
    for s in all {
        let w = b.enclosed(&s);
        if w.is_some() {
            fenced.push(s.clone());
        }
        out.push(vec![s]);
    }
    out.extend(multi_part(&b, &fenced, max_total_size));
    let wv = g.window_vertices();
    let mut polys: Vec<XPolymer> = out
        .into_iter()
        .map(|parts| {
            let witnesses: Vec<Option<usize>> = parts.iter().map(|s| b.enclosed(s).map(|x| wv[x])).collect();
            let fences = parts
                .iter()
                .zip(&witnesses)
                .map(|(s, w)| w.map(|x| b.fence_for(s, b.win.v_local[x])))
                .collect();
            XPolymer { parts, witnesses, fences }
        })
        .collect();
    polys.sort_by(|a, b| (a.size(), a.edges()).cmp(&(b.size(), b.edges())));
    Ok(polys)
}

struct PhiParts<F> {
    series: SizeSeries<F>,
    root_terms: Vec<(f64, usize)>,
}

fn phi_f_in<F: Repr>(g: &HostGraph, ctx: &SupContext, xs: &[usize], k: usize, caps: &Caps) -> Result<PhiParts<F>> {
    let b = builder(g, ctx, xs)?;
    // the smallest region boundary bounds the other polymers' sizes
    let regs = regions(&b, xs, k, caps)?;
    let f_min = regs.iter().map(|(_, gm)| gm.len()).min().unwrap_or(usize::MAX);
    if f_min > k {
        return Ok(PhiParts { series: SizeSeries::zeros(k), root_terms: Vec::new() });
    }
    let m = k - f_min;
    let general = animals(&b, m);
    let fenced: Vec<Vec<usize>> = general.iter().filter(|s| b.enclosed(s).is_some()).cloned().collect();
    let root_list = roots(&b, k, &regs, &fenced);
    if root_list.is_empty() {
        return Ok(PhiParts { series: SizeSeries::zeros(k), root_terms: Vec::new() });
    }
    let mut polys: Vec<Poly> = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for s in general {
        seen.insert(s.clone());
        let f = b.enclosed(&s).is_some();
        polys.push(Poly { edges: s.clone(), parts: vec![s], fenced: f });
    }
    for parts in multi_part(&b, &fenced, m) {
        let mut e = parts.concat();
        e.sort_unstable();
        if seen.insert(e.clone()) {
            polys.push(Poly { edges: e, parts, fenced: true });
        }
    }
    for r in &root_list {
        if seen.insert(r.clone()) {
            let parts = b.components(r);
            polys.push(Poly { edges: r.clone(), parts, fenced: true });
        }
    }
    let lambda = lambda_in::<F>(ctx)?;
    let q = F::from_scalar(&ctx.params.q)?;
    let gas = SupGas::<F>::from_polys(&b, polys, &lambda, &q);
    let idx: Vec<usize> = root_list.iter().map(|r| gas.index[r]).collect();
    let parts: Vec<SizeSeries<F>> = idx
        .par_iter()
        .map(|&i| Ok(gas::rooted_series(&gas, i, k, caps.ursell)?.scale(&gas.acts[i])))
        .collect::<Result<Vec<_>>>()?;
    let mut series = SizeSeries::<F>::zeros(k);
    for s in &parts {
        series.add(s);
    }
    let root_terms = idx.iter().map(|&i| (gas.acts[i].to_f64().abs(), gas.size(i))).collect();
    Ok(PhiParts { series, root_terms })
}

fn diam(g: &HostGraph, xs: &[usize]) -> usize {
    xs.iter().flat_map(|&a| xs.iter().map(move |&b| (a, b))).map(|(a, b)| g.dist(a, b)).max().unwrap_or(0)
}

/// (1 + Δ^{-R-1}) (A e δ_p)^{f_G(diam X)}, when f_G is computable.
pub fn decay_bound(g: &HostGraph, ctx: &SupContext, xs: &[usize], caps: &Caps) -> Option<f64> {
    let d = g.template_degree() as f64;
    let f = cut_set_function(g, diam(g, xs), caps).ok()?;
    let a = ctx.big_a(g.template_degree());
    Some((1.0 + d.powi(-(ctx.r as i32) - 1)) * (a * std::f64::consts::E * ctx.delta_p()).powi(f as i32))
}

/// Truncated finite connectivity φ^f(X) over clusters of total size ≤ K.
pub fn truncated_phi_f(g: &HostGraph, ctx: &SupContext, xs: &[usize], k: usize, caps: &Caps) -> Result<ExpansionResult> {
    cap_check("edge set size", k, caps.edge_set)?;
    let xs = check_x(g, xs)?;
    let cert = kp_certificate(ctx, g.template_degree());
    let (by_size, value, roots): (Vec<Scalar>, Scalar, Vec<(f64, usize)>) = match ctx.params.p {
        Scalar::Exact(_) => {
            let r = phi_f_in::<BigRational>(g, ctx, &xs, k, caps)?;
            (r.series.by_size.iter().cloned().map(Repr::into_scalar).collect(), r.series.total().into_scalar(), r.root_terms)
        }
        Scalar::Approx(_) => {
            let r = phi_f_in::<f64>(g, ctx, &xs, k, caps)?;
            (r.series.by_size.iter().cloned().map(Repr::into_scalar).collect(), r.series.total().into_scalar(), r.root_terms)
        }
    };
    let tail = if cert.threshold_ok { Some(phi_tail(ctx, &cert, &roots, k)) } else { None };
    Ok(ExpansionResult {
        value,
        k,
        tail_bound: tail,
        closed_bound: decay_bound(g, ctx, &xs, caps),
        certificate: Certificate::Sup(cert),
        by_size,
    })
}

fn phi_tail(ctx: &SupContext, cert: &KpCertificate, roots: &[(f64, usize)], k: usize) -> f64 {
    let delta = cert.delta_p;
    if delta == 0.0 {
        return 0.0;
    }
    let star = kp_delta_star(ctx.r, ctx.c, cert.degree);
    let t = (star / delta).ln();
    let inside: f64 = roots
        .iter()
        .map(|&(a, n)| a * (n as f64).exp() * (-t * (k as f64 - n as f64 + 1.0)).exp())
        .sum();
    let x = cert.big_a * std::f64::consts::E * delta;
    inside + x.powi(k as i32 + 1) / (1.0 - x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaSeries {
    pub result: ExpansionResult,
    /// (1-p)^{deg x0}
    pub leading_scale: f64,
}

/// 1 − truncated φ^f({x0}).
pub fn theta_series(g: &HostGraph, ctx: &SupContext, x0: usize, k: usize, caps: &Caps) -> Result<ThetaSeries> {
    let phi = truncated_phi_f(g, ctx, &[x0], k, caps)?;
    let one = ctx.params.p.like(1);
    let value = one.try_sub(&phi.value)?;
    let by_size = phi.by_size.iter().map(|s| s.like(0).try_sub(s)).collect::<Result<Vec<_>>>()?;
    let leading_scale = (1.0 - ctx.params.p.to_f64()).powi(g.degree(x0) as i32);
    Ok(ThetaSeries { result: ExpansionResult { value, by_size, closed_bound: None, ..phi }, leading_scale })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingCheck {
    pub n: usize,
    pub animals: u64,
    pub x_polymers: u64,
    pub bound: f64,
    pub animals_ok: bool,
    pub x_polymers_ok: bool,
    pub joint_ok: bool,
}

/// Dual animals through an edge and X-polymers of size n against A^n.
pub fn counting_bound_check(g: &HostGraph, ctx: &SupContext, xs: &[usize], n: usize, caps: &Caps) -> Result<CountingCheck> {
    if g.is_tree_template() {
        return Err(RcmError::Precondition("tree templates are not eligible: fences are not R-connected".into()));
    }
    cap_check("edge set size", n, caps.edge_set)?;
    let edges: Vec<usize> = match g.template() {
        TemplateSpec::Edges { .. } => g.window_edges().to_vec(),
        _ => g.incident(g.window_center()).iter().map(|&(_, e)| e).collect(),
    };
    let adj = edge_adjacency(g, ctx.r);
    let mut all = FixedBitSet::with_capacity(g.n_edges());
    all.insert_range(..);
    let mut animals_max = 0u64;
    for e in edges {
        let sets = grow_rooted(&adj, &all, e, n, n, &|_: &[usize]| true);
        animals_max = animals_max.max(sets.len() as u64);
    }
    let xp = enumerate_x_polymers(g, ctx, xs, n, caps)?;
    let x_count = xp.iter().filter(|p| p.size() == n && p.witnesses.iter().all(Option::is_some)).count() as u64;
    let bound = ctx.big_a(g.template_degree()).powi(n as i32);
    Ok(CountingCheck {
        n,
        animals: animals_max,
        x_polymers: x_count,
        bound,
        animals_ok: animals_max as f64 <= bound,
        x_polymers_ok: x_count as f64 <= bound,
        joint_ok: (animals_max + x_count) as f64 <= bound,
    })
}

// ---------------------------------------------------------------------------
// pressure

fn plain_gas<F: Repr>(g: &HostGraph, ctx: &SupContext, k: usize) -> Result<SupGas<F>> {
    let b = builder(g, ctx, &[])?;
    let polys = animals(&b, k)
        .into_iter()
        .map(|s| Poly { edges: s.clone(), parts: vec![s], fenced: false })
        .collect();
    let lambda = lambda_in::<F>(ctx)?;
    let q = F::from_scalar(&ctx.params.q)?;
    Ok(SupGas::from_polys(&b, polys, &lambda, &q))
}

fn edge_shares<F: Repr>(gas: &SupGas<F>, e: usize, k: usize, caps: &Caps) -> Result<SizeSeries<F>> {
    let roots: Vec<usize> = gas.by_edge[e].clone();
    let clusters = gas::weighted_clusters_from(gas, &roots, k, caps.ursell)?;
    let mut s = SizeSeries::<F>::zeros(k);
    for (m, w) in clusters {
        let n = m.len() as i64;
        let mut share = F::zero();
        for &i in &m {
            if gas.masks[i].contains(e) {
                share = share + F::one() / F::from_int(gas.size(i) as i64);
            }
        }
        let size: usize = m.iter().map(|&i| gas.size(i)).sum();
        s.by_size[size] = s.by_size[size].clone() + w * share / F::from_int(n);
    }
    Ok(s)
}

fn to_result<F: Repr>(s: SizeSeries<F>, k: usize, cert: KpCertificate) -> ExpansionResult {
    ExpansionResult {
        value: s.total().into_scalar(),
        k,
        tail_bound: None,
        certificate: Certificate::Sup(cert),
        by_size: s.by_size.into_iter().map(Repr::into_scalar).collect(),
        closed_bound: None,
    }
}

/// Truncated per-edge share φ_G(e) of ln Ψ; `e` must be at least K·R
/// away from the internal boundary.
pub fn pressure_density(g: &HostGraph, ctx: &SupContext, e: usize, k: usize, caps: &Caps) -> Result<ExpansionResult> {
    cap_check("edge set size", k, caps.edge_set)?;
    if !g.window_edge_mask().contains(e) {
        return Err(RcmError::Precondition("edge must lie in the window".into()));
    }
    let (a, b) = g.edge(e);
    let depth = g.int_boundary().ones().map(|v| g.dist(a, v).min(g.dist(b, v))).min().unwrap_or(usize::MAX);
    if depth < k * ctx.r {
        return Err(RcmError::Margin(format!("edge is {depth} from the window boundary, need {}", k * ctx.r)));
    }
    edge_share(g, ctx, e, k, caps)
}

/// φ_G(e) without the depth requirement.
pub fn edge_share(g: &HostGraph, ctx: &SupContext, e: usize, k: usize, caps: &Caps) -> Result<ExpansionResult> {
    let cert = kp_certificate(ctx, g.template_degree());
    match ctx.params.p {
        Scalar::Exact(_) => {
            let gas = plain_gas::<BigRational>(g, ctx, k)?;
            Ok(to_result(edge_shares(&gas, e, k, caps)?, k, cert))
        }
        Scalar::Approx(_) => {
            let gas = plain_gas::<f64>(g, ctx, k)?;
            Ok(to_result(edge_shares(&gas, e, k, caps)?, k, cert))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupPressure {
    /// Truncated ln Ψ^ξ.
    pub log_psi: ExpansionResult,
    /// Σ_e φ_G(e) over window edges.
    pub edge_sum: Scalar,
    /// (|E_N| ln p + ln Ψ) / |V_N|
    pub pressure: f64,
}

/// Window pressure from the truncated dual-animal series, with the
/// per-edge decomposition summed alongside.
pub fn sup_pressure(g: &HostGraph, ctx: &SupContext, k: usize, caps: &Caps) -> Result<SupPressure> {
    cap_check("edge set size", k, caps.edge_set)?;
    let cert = kp_certificate(ctx, g.template_degree());
    let (log_psi, edge_sum) = match ctx.params.p {
        Scalar::Exact(_) => sup_pressure_in::<BigRational>(g, ctx, k, caps, cert)?,
        Scalar::Approx(_) => sup_pressure_in::<f64>(g, ctx, k, caps, cert)?,
    };
    let nv = g.window_vertices().len() as f64;
    let ne = g.window_edges().len() as f64;
    let pressure = (ne * ctx.params.p.to_f64().ln() + log_psi.value.to_f64()) / nv;
    Ok(SupPressure { log_psi, edge_sum, pressure })
}

fn sup_pressure_in<F: Repr>(
    g: &HostGraph,
    ctx: &SupContext,
    k: usize,
    caps: &Caps,
    cert: KpCertificate,
) -> Result<(ExpansionResult, Scalar)> {
    let gas = plain_gas::<F>(g, ctx, k)?;
    let series = gas::log_series(&gas, k, caps.ursell)?;
    let shares: Vec<F> = g
        .window_edges()
        .par_iter()
        .map(|&e| Ok(edge_shares(&gas, e, k, caps)?.total()))
        .collect::<Result<Vec<_>>>()?;
    let sum = shares.into_iter().fold(F::zero(), |a, b| a + b);
    Ok((to_result(series, k, cert), sum.into_scalar()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{finite_connectivity_exact, partition_function, z_bar};
    use BoundaryCondition::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn exact_z(g: &HostGraph, p: (i64, i64), q: (i64, i64), bc: BoundaryCondition) -> BigRational {
        let pm = ModelParams::exact(p, q, bc);
        partition_function(g, &pm, &Caps::default()).unwrap().as_exact().unwrap().clone()
    }

    fn check_identities(g: &HostGraph, p: (i64, i64), q: (i64, i64)) {
        let caps = Caps::default();
        let rc = window_cutset_constant(g).unwrap();
        let pr = rat(p.0, p.1);
        let qr = rat(q.0, q.1);
        let wired = SupContext::new(ModelParams::exact(p, q, Wired), rc.wired, 1.0).unwrap();
        let psi1 = psi_exact(g, &wired, &caps).unwrap();
        assert_eq!(psi1, z_bar(g, &pr, &exact_z(g, p, q, Wired)), "wired");
        let free = SupContext::new(ModelParams::exact(p, q, Free), rc.free, 1.0).unwrap();
        let psi0 = psi_exact(g, &free, &caps).unwrap();
        assert_eq!(psi0 * qr, z_bar(g, &pr, &exact_z(g, p, q, Free)), "free");
    }

    #[test]
    fn psi_identities_on_grids_and_graphs() {
        for spec in [
            TemplateSpec::zd(&[3, 3], 0),
            TemplateSpec::zd(&[2, 3], 0),
            TemplateSpec::zd(&[5, 5], 1),
            TemplateSpec::edges(&["a", "b", "c", "d", "e"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "a"), ("a", "c")], &["a"]),
            TemplateSpec::edges(&["a", "b", "c", "d", "e", "f"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f")], &["a", "f"]),
        ] {
            let g = HostGraph::build(&spec).unwrap();
            check_identities(&g, (9, 10), (1, 3));
            check_identities(&g, (2, 3), (5, 2));
        }
    }

    #[test]
    fn small_r_breaks_the_wired_identity() {
        // path a..f with both ends on the boundary: closing ab and ef
        // encloses b..e only jointly
        let g = HostGraph::build(&TemplateSpec::edges(
            &["a", "b", "c", "d", "e", "f"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f")],
            &["a", "f"],
        ))
        .unwrap();
        let rc = window_cutset_constant(&g).unwrap();
        assert!(rc.wired > 1, "{rc:?}");
        let ab = g.edge_between(0, 1).unwrap();
        let ef = g.edge_between(4, 5).unwrap();
        assert_eq!(minimal_fence_count(&g, &[ab, ef], Wired, 1).unwrap(), 1);
        assert_eq!(minimal_fence_count(&g, &[ab], Wired, 1).unwrap(), 0);
        let ctx = SupContext::new(ModelParams::exact((9, 10), (2, 1), Wired), 1, 1.0).unwrap();
        let psi = psi_exact(&g, &ctx, &Caps::default()).unwrap();
        assert_ne!(psi, z_bar(&g, &rat(9, 10), &exact_z(&g, (9, 10), (2, 1), Wired)));
    }

    #[test]
    fn x_polymer_regrouping_matches_oracle() {
        let caps = Caps::default();
        let g = HostGraph::build(&TemplateSpec::zd(&[4, 3], 0)).unwrap();
        let x = g.vertex("(1,1)").unwrap();
        let y = g.vertex("(2,1)").unwrap();
        for bc in [Wired, Free] {
            let rc = window_cutset_constant(&g).unwrap();
            let r = if bc == Wired { rc.wired } else { rc.free };
            for xs in [vec![x], vec![x, y]] {
                let pm = ModelParams::exact((4, 5), (3, 1), bc);
                let ctx = SupContext::new(pm.clone(), r, 1.0).unwrap();
                let a = phi_f_exact(&g, &ctx, &xs, &caps).unwrap();
                let b = finite_connectivity_exact(&g, &pm, &xs, &caps).unwrap();
                assert_eq!(Scalar::Exact(a), b, "{bc:?} {xs:?}");
            }
        }
    }

    #[test]
    fn smallest_fences() {
        let caps = Caps::default();
        let g = HostGraph::build(&TemplateSpec::zd(&[15, 15], 5)).unwrap();
        let c = g.window_center();
        let f4 = enumerate_fences(&g, Anchor::Vertex(c), 4, &caps).unwrap();
        assert_eq!(f4.len(), 1);
        assert_eq!(f4[0].interior, vec![c]);
        assert!(is_fence(&g, &f4[0].gamma).unwrap().is_some());
        assert!(fence_crosses_rays(&g, &f4[0], c).unwrap());
        assert!(surrounds(&f4[0], &[c]));
        // plus a distant edge: no longer minimal
        let far = g.edge_between(g.vertex("(5,5)").unwrap(), g.vertex("(5,6)").unwrap()).unwrap();
        let mut bigger = f4[0].gamma.clone();
        bigger.push(far);
        assert!(is_fence(&g, &bigger).unwrap().is_none());
        // dominoes give the size-6 fences
        let f6: Vec<_> = enumerate_fences(&g, Anchor::Vertex(c), 6, &caps).unwrap().into_iter().filter(|f| f.gamma.len() == 6).collect();
        assert_eq!(f6.len(), 4);
        let t = HostGraph::build(&TemplateSpec::tree(3, 3, 1)).unwrap();
        let ft = enumerate_fences(&t, Anchor::Vertex(t.window_center()), 3, &caps).unwrap();
        assert_eq!(ft.len(), 1);
        assert_eq!(ft[0].gamma.len(), 3);
    }

    #[test]
    fn sup_activity_values() {
        let g = HostGraph::build(&TemplateSpec::zd(&[5, 5], 0)).unwrap();
        let c = g.window_center();
        let fence: Vec<usize> = g.incident(c).iter().map(|&(_, e)| e).collect();
        let ctx = SupContext::new(ModelParams::exact((9, 10), (2, 1), Wired), 1, 1.0).unwrap();
        // λ = 1/9
        assert_eq!(activity_sup(&g, &ctx, &fence).unwrap(), Scalar::exact(2, 6561));
        assert_eq!(activity_sup(&g, &ctx, &fence[..1]).unwrap(), Scalar::exact(1, 9));
        assert_eq!(minimal_fence_count(&g, &[], Wired, 1).unwrap(), 0);
    }

    #[test]
    fn kp_constants_for_the_square_lattice() {
        let d = kp_delta_star(1, 1.0, 4);
        assert!((d - 6.76e-4).abs() < 1e-6, "{d}");
        let ctx = SupContext::new(ModelParams::exact((1, 1), (2, 1), Wired), 1, 1.0).unwrap();
        assert!(kp_certificate(&ctx, 4).threshold_ok);
        assert_eq!(kp_certificate(&ctx, 4).big_a, 32.0);
    }

    #[test]
    fn edge_shares_sum_to_log_psi() {
        let caps = Caps::default();
        let g = HostGraph::build(&TemplateSpec::zd(&[4, 4], 0)).unwrap();
        let ctx = SupContext::new(ModelParams::exact((19, 20), (2, 1), Wired), 1, 1.0).unwrap();
        let sp = sup_pressure(&g, &ctx, 3, &caps).unwrap();
        assert_eq!(sp.log_psi.value, sp.edge_sum);
        let one = SupContext::new(ModelParams::exact((1, 1), (2, 1), Wired), 1, 1.0).unwrap();
        let e = g.window_edges()[0];
        assert_eq!(edge_share(&g, &one, e, 3, &caps).unwrap().value, Scalar::exact(0, 1));
    }

    #[test]
    fn x_polymers_and_counting() {
        let caps = Caps::default();
        let g = HostGraph::build(&TemplateSpec::zd(&[11, 11], 3)).unwrap();
        let c = g.window_center();
        let ctx = SupContext::new(ModelParams::exact((19, 20), (2, 1), Wired), 1, 1.0).unwrap();
        let xp = enumerate_x_polymers(&g, &ctx, &[c], 4, &caps).unwrap();
        let fenced: Vec<_> = xp.iter().filter(|p| p.witnesses.iter().all(Option::is_some)).collect();
        assert_eq!(fenced.len(), 1);
        assert_eq!(fenced[0].fences[0].as_ref().unwrap().interior, vec![c]);
        assert!(enumerate_x_polymers(&g, &ctx, &[c], 3, &caps).unwrap().iter().all(|p| p.witnesses[0].is_none()));
        let chk = counting_bound_check(&g, &ctx, &[c], 3, &caps).unwrap();
        assert!(chk.joint_ok, "{chk:?}");
        let t = HostGraph::build(&TemplateSpec::tree(3, 3, 1)).unwrap();
        assert!(counting_bound_check(&t, &ctx, &[0], 1, &caps).is_err());
    }

    #[test]
    fn p_one_has_no_finite_clusters() {
        let caps = Caps::default();
        let g = HostGraph::build(&TemplateSpec::zd(&[4, 4], 0)).unwrap();
        let ctx = SupContext::new(ModelParams::exact((1, 1), (1, 2), Wired), 1, 1.0).unwrap();
        let c = g.window_center();
        let r = truncated_phi_f(&g, &ctx, &[c], 6, &caps).unwrap();
        assert_eq!(r.value, Scalar::exact(0, 1));
        assert_eq!(r.tail_bound, Some(0.0));
        assert_eq!(theta_series(&g, &ctx, c, 6, &caps).unwrap().result.value, Scalar::exact(1, 1));
    }
}
