//! Low-density (small p) expansion over connected vertex sets.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use num::rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{cap_check, RcmError, Result};
use crate::expansion::{Certificate, ExpansionResult, SubCertificate};
use crate::gas::{self, Polymers, SizeSeries};
use crate::graphcore::{
    connected_sets_in, enumerate_connected_vertex_sets, tree_distance, BoundaryCondition, Caps, HostGraph,
};
use crate::oracle::ModelParams;
use crate::scalar::{Field, Repr, Scalar};

/// 1 + 1/√2, the optimal `e^a` for the overlap gas.
pub const U_STAR: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;
/// 3 + 2√2
pub const SUB_THRESHOLD: f64 = 3.0 + 2.0 * std::f64::consts::SQRT_2;

/// Largest window accepted by the exact polymer sum.
pub const EXACT_XI_MAX_VERTICES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Epsilons {
    pub epsilon_p: f64,
    pub epsilon_star_p: f64,
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(RcmError::Precondition(format!("need 0 <= p < 1, got {p}")));
    }
    if q <= 0.0 {
        return Err(RcmError::Precondition(format!("need q > 0, got {q}")));
    }
    Ok(())
}

/// ε_p and ε*_p for maximum degree `delta`.
pub fn epsilon_p(p: f64, q: f64, delta: usize) -> Result<Epsilons> {
    check_pq(p, q)?;
    if delta == 0 {
        return Err(RcmError::Precondition("degree must be positive".into()));
    }
    let d = delta as f64;
    let core = std::f64::consts::E * d * ((-p).ln_1p() / (1.0 - p).powf(d)).abs();
    let star = core / q;
    Ok(Epsilons { epsilon_p: star.max(core), epsilon_star_p: star })
}

pub fn certificate(p: f64, q: f64, delta: usize) -> Result<SubCertificate> {
    let e = epsilon_p(p, q, delta)?;
    Ok(SubCertificate {
        epsilon_p: e.epsilon_p,
        epsilon_star_p: e.epsilon_star_p,
        a_value: U_STAR.ln(),
        connectivity_ok: SUB_THRESHOLD * e.epsilon_p <= 1.0,
        pressure_ok: 2.0 * std::f64::consts::E.powi(2) * e.epsilon_star_p < 1.0,
    })
}

fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest p with (3+2√2) ε_p ≤ 1.
pub fn connectivity_threshold(q: f64, delta: usize) -> f64 {
    bisect_increasing(|p| epsilon_p(p, q, delta).map(|e| e.epsilon_p).unwrap_or(f64::INFINITY), 1.0 / SUB_THRESHOLD)
}

/// Largest p with 2e² ε*_p ≤ 1.
pub fn pressure_threshold(q: f64, delta: usize) -> f64 {
    let t = 1.0 / (2.0 * std::f64::consts::E.powi(2));
    bisect_increasing(|p| epsilon_p(p, q, delta).map(|e| e.epsilon_star_p).unwrap_or(f64::INFINITY), t)
}

/// Coefficients in λ of Σ over connected spanning subgraphs of λ^|E'|, for
/// a graph on `n` vertices, via the subset recursion on the component of
/// vertex 0.
pub fn connected_spanning_poly(n: usize, edges: &[(usize, usize)]) -> Vec<i128> {
    assert!((1..=24).contains(&n));
    if n == 1 {
        return vec![1];
    }
    let mut adj = vec![0u32; n];
    for &(a, b) in edges {
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    let full = (1usize << n) - 1;
    let ecount: Vec<usize> = (0..=full)
        .map(|m| {
            let mut c = 0;
            let mut r = m;
            while r != 0 {
                let i = r.trailing_zeros() as usize;
                c += (adj[i] as usize & m).count_ones() as usize;
                r &= r - 1;
            }
            c / 2
        })
        .collect();
    let emax = ecount[full];
    let mut binom: Vec<Vec<i128>> = vec![vec![1]];
    for k in 1..=emax {
        let prev = &binom[k - 1];
        let mut row = vec![1i128; k + 1];
        for j in 1..k {
            row[j] = prev[j - 1] + prev[j];
        }
        binom.push(row);
    }
    // connected masks containing vertex 0, in increasing order
    let mut conn_masks: Vec<usize> = Vec::new();
    let mut conn: HashMap<usize, Vec<i128>> = HashMap::new();
    for mask in (1..=full).step_by(2) {
        if !is_connected_mask(&adj, mask) {
            continue;
        }
        let mut c = binom[ecount[mask]].clone();
        for &t in &conn_masks {
            if t & mask == t && t != mask {
                let ct = &conn[&t];
                let w = &binom[ecount[mask ^ t]];
                for (i, a) in ct.iter().enumerate() {
                    if *a == 0 {
                        continue;
                    }
                    for (j, b) in w.iter().enumerate() {
                        c[i + j] -= a * b;
                    }
                }
            }
        }
        while c.len() > 1 && *c.last().unwrap() == 0 {
            c.pop();
        }
        conn_masks.push(mask);
        conn.insert(mask, c);
    }
    conn.remove(&full).unwrap_or_else(|| vec![0])
}

fn is_connected_mask(adj: &[u32], mask: usize) -> bool {
    let start = mask & mask.wrapping_neg();
    let mut seen = start;
    let mut frontier = start;
    while frontier != 0 {
        let i = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[i] as usize & mask & !seen;
        seen |= new;
        frontier |= new;
    }
    seen == mask
}

/// Same polynomial by direct enumeration of all edge subsets.
pub fn connected_spanning_poly_bruteforce(n: usize, edges: &[(usize, usize)]) -> Vec<i128> {
    assert!(edges.len() <= 24);
    let mut out = vec![0i128; edges.len() + 1];
    for mask in 0u32..(1 << edges.len()) {
        let mut d = crate::graphcore::Dsu::new(n);
        let mut comps = n;
        for (k, &(a, b)) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 && d.union(a, b) {
                comps -= 1;
            }
        }
        if comps == 1 {
            out[mask.count_ones() as usize] += 1;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    out
}

type ShapeKey = (usize, Vec<(u8, u8)>);

fn shape_of(g: &HostGraph, r: &[usize]) -> ShapeKey {
    let mut edges = Vec::new();
    for (i, &a) in r.iter().enumerate() {
        for &b in g.neighbors(a) {
            if let Ok(j) = r.binary_search(&b) {
                if i < j {
                    edges.push((i as u8, j as u8));
                }
            }
        }
    }
    edges.sort_unstable();
    (r.len(), edges)
}

fn eval_poly<F: Field>(c: &[i128], x: &F) -> F {
    let mut acc = F::zero();
    for a in c.iter().rev() {
        acc = acc * x.clone() + F::from_int(*a as i64);
    }
    acc
}

/// Exponent `e` in the prefactor q^{-e} of ρ^ξ(R).
fn q_exponent(g: &HostGraph, r: &[usize], bc: BoundaryCondition) -> usize {
    let touching = r.iter().filter(|&&v| g.int_boundary().contains(v)).count();
    match bc {
        BoundaryCondition::Wired if touching > 0 => r.len() - touching,
        _ => r.len() - 1,
    }
}

struct Lam<F> {
    lambda: F,
    q_inv_pows: Vec<F>,
}

fn lam<F: Repr>(params: &ModelParams, max_pow: usize) -> Result<Lam<F>> {
    let p = F::from_scalar(&params.p)?;
    let q = F::from_scalar(&params.q)?;
    if params.p.to_f64() >= 1.0 {
        return Err(RcmError::Precondition("p = 1 has no low-density expansion".into()));
    }
    let lambda = p.clone() / (F::one() - p);
    let qi = F::one() / q;
    let q_inv_pows = (0..=max_pow as i64).map(|k| qi.powi(k)).collect();
    Ok(Lam { lambda, q_inv_pows })
}

/// ρ^ξ(R); zero when R is not connected.
pub fn activity(g: &HostGraph, params: &ModelParams, r: &[usize]) -> Result<Scalar> {
    let mut r = r.to_vec();
    r.sort_unstable();
    r.dedup();
    if r.len() < 2 {
        return Err(RcmError::Precondition("a polymer has at least two vertices".into()));
    }
    if r.iter().any(|&v| !g.in_window(v)) {
        return Err(RcmError::Precondition("polymer must lie in the window".into()));
    }
    let (n, edges) = shape_of(g, &r);
    let e: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
    let poly = connected_spanning_poly(n, &e);
    let k = q_exponent(g, &r, params.bc);
    match params.p {
        Scalar::Exact(_) => {
            let l = lam::<BigRational>(params, k)?;
            Ok(Scalar::Exact(eval_poly(&poly, &l.lambda) * l.q_inv_pows[k].clone()))
        }
        Scalar::Approx(_) => {
            let l = lam::<f64>(params, k)?;
            Ok(Scalar::Approx(eval_poly(&poly, &l.lambda) * l.q_inv_pows[k]))
        }
    }
}

/// Ursell coefficient of a cluster of vertex sets (incompatible when they
/// overlap).
pub fn ursell(parts: &[Vec<usize>], caps: &Caps) -> Result<i64> {
    cap_check("Ursell cluster size", parts.len(), caps.ursell)?;
    if parts.is_empty() {
        return Err(RcmError::Precondition("empty cluster".into()));
    }
    Ok(gas::ursell_with(parts.len(), |i, j| parts[i].iter().any(|v| parts[j].contains(v))))
}

/// The window polymers up to a size, with activities.
pub struct SubGas<F> {
    pub polymers: Vec<Vec<usize>>,
    masks: Vec<FixedBitSet>,
    acts: Vec<F>,
    by_vertex: Vec<Vec<usize>>,
}

impl<F: Repr> SubGas<F> {
    pub fn build(g: &HostGraph, params: &ModelParams, max_size: usize) -> Result<Self> {
        let l = lam::<F>(params, max_size)?;
        let polymers = connected_sets_in(g, g.window(), 2, max_size);
        let keys: Vec<ShapeKey> = polymers.par_iter().map(|r| shape_of(g, r)).collect();
        let mut index: HashMap<&ShapeKey, usize> = HashMap::new();
        let mut uniq: Vec<&ShapeKey> = Vec::new();
        for k in &keys {
            if !index.contains_key(k) {
                index.insert(k, uniq.len());
                uniq.push(k);
            }
        }
        let values: Vec<F> = uniq
            .par_iter()
            .map(|(n, edges)| {
                let e: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
                eval_poly(&connected_spanning_poly(*n, &e), &l.lambda)
            })
            .collect();
        let acts: Vec<F> = polymers
            .iter()
            .zip(&keys)
            .map(|(r, k)| values[index[k]].clone() * l.q_inv_pows[q_exponent(g, r, params.bc)].clone())
            .collect();
        let masks = polymers.iter().map(|r| g.vertex_set(r)).collect();
        let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); g.n_vertices()];
        for (i, r) in polymers.iter().enumerate() {
            for &v in r {
                by_vertex[v].push(i);
            }
        }
        for list in &mut by_vertex {
            list.sort_by_key(|&i| (polymers[i].len(), i));
        }
        Ok(SubGas { polymers, masks, acts, by_vertex })
    }

    pub fn index_of(&self, r: &[usize]) -> Option<usize> {
        self.polymers.binary_search_by(|p| p.as_slice().cmp(r)).ok()
    }

    /// Polymers containing every vertex of `xs`.
    pub fn containing(&self, xs: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = self.by_vertex[xs[0]]
            .iter()
            .copied()
            .filter(|&i| xs.iter().all(|&x| self.masks[i].contains(x)))
            .collect();
        out.sort_unstable();
        out
    }
}

impl<F: Repr> Polymers for SubGas<F> {
    type F = F;
    fn len(&self) -> usize {
        self.polymers.len()
    }
    fn size(&self, i: usize) -> usize {
        self.polymers[i].len()
    }
    fn activity(&self, i: usize) -> F {
        self.acts[i].clone()
    }
    fn incompatible(&self, i: usize, max_size: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &v in &self.polymers[i] {
            for &j in &self.by_vertex[v] {
                if self.polymers[j].len() > max_size {
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
        !self.masks[i].is_disjoint(&self.masks[j])
    }
}

/// Pairs (s, u) for which activities |ρ| s^|R| satisfy the overlap-gas
/// convergence condition with e^a = u, given per-size sums ≤ ε^{n-1}.
pub fn fp_points(eps: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(eps.is_finite()) || eps < 0.0 {
        return out;
    }
    for i in 0..=400 {
        let s = (i as f64 * 0.02).exp();
        for j in 1..=300 {
            let u = 1.0 + j as f64 * 0.01;
            let su = s * u;
            if eps * su < 1.0 && eps * su * su <= (u - 1.0) * (1.0 - eps * su) {
                out.push((s, u));
            }
        }
    }
    out
}

fn tail_eps(e: &Epsilons, bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Free => e.epsilon_star_p,
        BoundaryCondition::Wired => e.epsilon_p,
    }
}

/// ((7+5√2)/(2√2+3)) [(1+1/√2) ε]^{d-1}
pub fn exp1_bound(eps: f64, d_tree: usize) -> f64 {
    let c = (7.0 + 5.0 * std::f64::consts::SQRT_2) / (2.0 * std::f64::consts::SQRT_2 + 3.0);
    c * (U_STAR * eps).powi(d_tree as i32 - 1)
}

fn to_scalars<F: Repr>(s: &SizeSeries<F>) -> Vec<Scalar> {
    s.by_size.iter().cloned().map(Repr::into_scalar).collect()
}

fn delta_of(g: &HostGraph) -> usize {
    g.template_degree().max(1)
}

fn check_k(k: usize, caps: &Caps) -> Result<()> {
    cap_check("truncation K", k, caps.polymer)
}

/// Truncated ln Ξ^ξ over clusters of total size ≤ K.
pub fn truncated_log_xi(g: &HostGraph, params: &ModelParams, k: usize, caps: &Caps) -> Result<ExpansionResult> {
    check_k(k, caps)?;
    match params.p {
        Scalar::Exact(_) => log_xi_in::<BigRational>(g, params, k, caps),
        Scalar::Approx(_) => log_xi_in::<f64>(g, params, k, caps),
    }
}

fn log_xi_in<F: Repr>(g: &HostGraph, params: &ModelParams, k: usize, caps: &Caps) -> Result<ExpansionResult> {
    let gas = SubGas::<F>::build(g, params, k)?;
    let series = gas::log_series(&gas, k, caps.ursell)?;
    let cert = certificate(params.p.to_f64(), params.q.to_f64(), delta_of(g))?;
    let eps = tail_eps(&epsilon_p(params.p.to_f64(), params.q.to_f64(), delta_of(g))?, params.bc);
    let nv = g.window_vertices().len() as f64;
    let tail = if cert.connectivity_ok {
        fp_points(eps)
            .iter()
            .map(|&(s, u)| nv * (u - 1.0) * s.powi(-(k as i32 + 1)))
            .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))))
    } else {
        None
    };
    Ok(ExpansionResult {
        value: series.total().into_scalar(),
        k,
        tail_bound: tail,
        certificate: Certificate::Sub(cert),
        by_size: to_scalars(&series),
        closed_bound: None,
    })
}

/// Truncated Π^ξ(R) over clusters of total size ≤ K (root included).
pub fn pi_coefficient(
    g: &HostGraph,
    params: &ModelParams,
    r: &[usize],
    k: usize,
    caps: &Caps,
) -> Result<ExpansionResult> {
    check_k(k, caps)?;
    let mut r = r.to_vec();
    r.sort_unstable();
    if k < r.len() {
        return Err(RcmError::Precondition(format!("K = {k} is below |R| = {}", r.len())));
    }
    match params.p {
        Scalar::Exact(_) => pi_in::<BigRational>(g, params, &r, k, caps),
        Scalar::Approx(_) => pi_in::<f64>(g, params, &r, k, caps),
    }
}

fn pi_in<F: Repr>(g: &HostGraph, params: &ModelParams, r: &[usize], k: usize, caps: &Caps) -> Result<ExpansionResult> {
    let gas = SubGas::<F>::build(g, params, k)?;
    let idx = gas
        .index_of(r)
        .ok_or_else(|| RcmError::Precondition("R is not a connected window set of size >= 2".into()))?;
    let series = gas::rooted_series(&gas, idx, k, caps.ursell)?;
    let cert = certificate(params.p.to_f64(), params.q.to_f64(), delta_of(g))?;
    let eps = tail_eps(&epsilon_p(params.p.to_f64(), params.q.to_f64(), delta_of(g))?, params.bc);
    let n = r.len() as i32;
    let tail = if cert.connectivity_ok {
        fp_points(eps)
            .iter()
            .map(|&(s, u)| u.powi(n) * s.powi(-(k as i32 - n + 1)))
            .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))))
    } else {
        None
    };
    Ok(ExpansionResult {
        value: series.total().into_scalar(),
        k,
        tail_bound: tail,
        certificate: Certificate::Sub(cert),
        by_size: to_scalars(&series),
        closed_bound: Some(U_STAR.powi(n)),
    })
}

fn check_x(g: &HostGraph, xs: &[usize]) -> Result<Vec<usize>> {
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    xs.dedup();
    if xs.is_empty() {
        return Err(RcmError::Precondition("X must be nonempty".into()));
    }
    if xs.iter().any(|&x| !g.in_window(x)) {
        return Err(RcmError::Precondition("X must lie in the window".into()));
    }
    Ok(xs)
}

/// Truncated connectivity φ^ξ(X) = Σ_{R ⊇ X} ρ(R) Π(R).
pub fn truncated_phi(
    g: &HostGraph,
    params: &ModelParams,
    xs: &[usize],
    k: usize,
    caps: &Caps,
) -> Result<ExpansionResult> {
    check_k(k, caps)?;
    let xs = check_x(g, xs)?;
    let dt = tree_distance(g, &xs);
    if k < dt {
        return Err(RcmError::Precondition(format!("K = {k} is below the tree distance {dt}")));
    }
    match params.p {
        Scalar::Exact(_) => phi_in::<BigRational>(g, params, &xs, k, caps),
        Scalar::Approx(_) => phi_in::<f64>(g, params, &xs, k, caps),
    }
}

fn phi_in<F: Repr>(g: &HostGraph, params: &ModelParams, xs: &[usize], k: usize, caps: &Caps) -> Result<ExpansionResult> {
    let gas = SubGas::<F>::build(g, params, k)?;
    phi_with_gas(g, &gas, params, xs, k, caps)
}

fn phi_with_gas<F: Repr>(
    g: &HostGraph,
    gas: &SubGas<F>,
    params: &ModelParams,
    xs: &[usize],
    k: usize,
    caps: &Caps,
) -> Result<ExpansionResult> {
    let roots = gas.containing(xs);
    let parts: Vec<SizeSeries<F>> = roots
        .par_iter()
        .map(|&r| Ok(gas::rooted_series(gas, r, k, caps.ursell)?.scale(&gas.acts[r])))
        .collect::<Result<Vec<_>>>()?;
    let mut series = SizeSeries::<F>::zeros(k);
    for s in &parts {
        series.add(s);
    }
    let (p, q) = (params.p.to_f64(), params.q.to_f64());
    let cert = certificate(p, q, delta_of(g))?;
    let eps_all = epsilon_p(p, q, delta_of(g))?;
    let eps = tail_eps(&eps_all, params.bc);
    let tail = if cert.connectivity_ok {
        let sizes: Vec<(f64, i32)> =
            roots.iter().map(|&r| (gas.acts[r].to_f64().abs(), gas.polymers[r].len() as i32)).collect();
        let k = k as i32;
        fp_points(eps)
            .iter()
            .map(|&(s, u)| {
                let inside: f64 = sizes.iter().map(|&(a, n)| a * u.powi(n) * s.powi(-(k - n + 1))).sum();
                let outside = u.powi(k + 1) * eps.powi(k) / (1.0 - eps * u);
                inside + outside
            })
            .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))))
    } else {
        None
    };
    Ok(ExpansionResult {
        value: series.total().into_scalar(),
        k,
        tail_bound: tail,
        certificate: Certificate::Sub(cert),
        by_size: to_scalars(&series),
        closed_bound: Some(exp1_bound(eps_all.epsilon_p, tree_distance(g, xs))),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivitySum {
    pub n: usize,
    pub sum: f64,
    pub exact_sum: Option<String>,
    pub bound: f64,
    pub ok: bool,
}

/// Σ_{R ∋ x, |R| = n} |ρ^ξ(R)| against ε_p^{n-1}. Sets leaving the window
/// use the infinite-volume activity.
pub fn activity_sum_check(
    g: &HostGraph,
    params: &ModelParams,
    x: usize,
    n: usize,
    caps: &Caps,
) -> Result<ActivitySum> {
    let sets = enumerate_connected_vertex_sets(g, x, n, n, caps)?;
    let eps = epsilon_p(params.p.to_f64(), params.q.to_f64(), delta_of(g))?.epsilon_p;
    let bound = eps.powi(n as i32 - 1);
    let free = params.with_bc(BoundaryCondition::Free);
    let act = |r: &Vec<usize>| -> Result<Scalar> {
        if r.iter().all(|&v| g.in_window(v)) {
            activity(g, params, r)
        } else {
            activity_unchecked(g, &free, r)
        }
    };
    match params.p {
        Scalar::Exact(_) => {
            let mut total = <BigRational as Field>::zero();
            for r in &sets {
                if let Scalar::Exact(a) = act(r)? {
                    total = total + Field::abs(&a);
                }
            }
            let sum = Field::to_f64(&total);
            Ok(ActivitySum { n, sum, exact_sum: Some(Scalar::Exact(total).to_string()), bound, ok: sum <= bound })
        }
        Scalar::Approx(_) => {
            let mut sum = 0.0;
            for r in &sets {
                sum += act(r)?.to_f64().abs();
            }
            Ok(ActivitySum { n, sum, exact_sum: None, bound, ok: sum <= bound })
        }
    }
}

fn activity_unchecked(g: &HostGraph, params: &ModelParams, r: &[usize]) -> Result<Scalar> {
    let (n, edges) = shape_of(g, r);
    let e: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
    let poly = connected_spanning_poly(n, &e);
    let k = r.len() - 1;
    Ok(match params.p {
        Scalar::Exact(_) => {
            let l = lam::<BigRational>(params, k)?;
            Scalar::Exact(eval_poly(&poly, &l.lambda) * l.q_inv_pows[k].clone())
        }
        Scalar::Approx(_) => {
            let l = lam::<f64>(params, k)?;
            Scalar::Approx(eval_poly(&poly, &l.lambda) * l.q_inv_pows[k])
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcGap {
    pub free: ExpansionResult,
    pub wired: ExpansionResult,
    pub gap: Scalar,
    /// Graph distance from X to the internal window boundary.
    pub distance: usize,
    /// ((1+1/√2) ε_p)^distance
    pub scale: f64,
}

/// Difference between the free and wired truncated connectivities.
pub fn bc_gap(g: &HostGraph, params: &ModelParams, xs: &[usize], k: usize, caps: &Caps) -> Result<BcGap> {
    let free = truncated_phi(g, &params.with_bc(BoundaryCondition::Free), xs, k, caps)?;
    let wired = truncated_phi(g, &params.with_bc(BoundaryCondition::Wired), xs, k, caps)?;
    let d = free.value.try_sub(&wired.value)?;
    let gap = match d {
        Scalar::Exact(r) => Scalar::Exact(Field::abs(&r)),
        Scalar::Approx(x) => Scalar::Approx(x.abs()),
    };
    let distance = xs
        .iter()
        .flat_map(|&x| g.int_boundary().ones().map(move |b| (x, b)))
        .map(|(x, b)| g.dist(x, b))
        .min()
        .unwrap_or(usize::MAX);
    let eps = epsilon_p(params.p.to_f64(), params.q.to_f64(), delta_of(g))?.epsilon_p;
    let scale = if distance == usize::MAX { 0.0 } else { (U_STAR * eps).powi(distance as i32) };
    Ok(BcGap { free, wired, gap, distance, scale })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureSeries {
    /// (1/|V_N|) ln Z^ξ estimated from the truncated ln Ξ^ξ.
    pub result: ExpansionResult,
    pub edge_density: f64,
    /// ½ Σ α_i Δ_i when orbit data is known.
    pub edge_density_limit: Option<f64>,
}

/// Finite-window pressure from the truncated polymer series.
pub fn pressure_series(g: &HostGraph, params: &ModelParams, k: usize, caps: &Caps) -> Result<PressureSeries> {
    let lx = truncated_log_xi(g, params, k, caps)?;
    let (p, q) = (params.p.to_f64(), params.q.to_f64());
    let nv = g.window_vertices().len() as f64;
    let ne = g.window_edges().len() as f64;
    let nq = match params.bc {
        BoundaryCondition::Free => nv,
        BoundaryCondition::Wired => (g.window_vertices().len() - g.int_boundary().count_ones(..)) as f64,
    };
    let value = (lx.value.to_f64() + ne * (-p).ln_1p() + nq * q.ln()) / nv;
    let cert = certificate(p, q, delta_of(g))?;
    let eps = tail_eps(&epsilon_p(p, q, delta_of(g))?, params.bc);
    let tail = if cert.pressure_ok {
        fp_points(eps)
            .iter()
            .map(|&(s, u)| (u - 1.0) * s.powi(-(k as i32 + 1)))
            .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.min(b))))
    } else {
        None
    };
    let by_size = lx.by_size.iter().map(|s| Scalar::Approx(s.to_f64() / nv)).collect();
    let edge_density_limit = g.edge_density_limit();
    Ok(PressureSeries {
        result: ExpansionResult {
            value: Scalar::Approx(value),
            k,
            tail_bound: tail,
            certificate: Certificate::Sub(cert),
            by_size,
            closed_bound: None,
        },
        edge_density: ne / nv,
        edge_density_limit,
    })
}

/// Ξ^ξ summed over every family of disjoint window polymers.
pub fn xi_exact(g: &HostGraph, params: &ModelParams) -> Result<Scalar> {
    let n = g.window_vertices().len();
    cap_check("exact polymer sum window vertices", n, EXACT_XI_MAX_VERTICES)?;
    match params.p {
        Scalar::Exact(_) => Ok(Scalar::Exact(xi_in::<BigRational>(g, params)?)),
        Scalar::Approx(_) => Ok(Scalar::Approx(xi_in::<f64>(g, params)?)),
    }
}

fn xi_in<F: Repr>(g: &HostGraph, params: &ModelParams) -> Result<F> {
    let wv = g.window_vertices();
    let n = wv.len();
    let gas = SubGas::<F>::build(g, params, n)?;
    let local: HashMap<usize, usize> = wv.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, r) in gas.polymers.iter().enumerate() {
        let mask = r.iter().fold(0usize, |m, v| m | 1 << local[v]);
        groups[mask.trailing_zeros() as usize].push((mask, i));
    }
    let mut xi: Vec<F> = Vec::with_capacity(1 << n);
    xi.push(F::one());
    for u in 1usize..(1 << n) {
        let v = u.trailing_zeros() as usize;
        let mut acc = xi[u & (u - 1)].clone();
        for &(mask, i) in &groups[v] {
            if mask & u == mask {
                acc = acc + gas.acts[i].clone() * xi[u ^ mask].clone();
            }
        }
        xi.push(acc);
    }
    Ok(xi.pop().unwrap())
}

/// Both sides of q^{n_q} Ξ^ξ = Σ_ω λ^|O| q^{k^ξ} (= Z^ξ / (1-p)^|E_N|),
/// exact rationals.
pub fn repartition_sides(
    g: &HostGraph,
    p: &BigRational,
    q: &BigRational,
    bc: BoundaryCondition,
    caps: &Caps,
) -> Result<(BigRational, BigRational)> {
    let params = ModelParams::new(Scalar::Exact(p.clone()), Scalar::Exact(q.clone()), bc)?;
    let xi = xi_in::<BigRational>(g, &params)?;
    let nq = match bc {
        BoundaryCondition::Free => g.window_vertices().len(),
        BoundaryCondition::Wired => g.window_vertices().len() - g.int_boundary().count_ones(..),
    };
    let lhs = Field::powi(q, nq as i64) * xi;
    let z = crate::oracle::partition_function(g, &params, caps)?;
    let z = z.as_exact().cloned().expect("exact mode");
    Ok((lhs, crate::oracle::z_tilde(g, p, &z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::TemplateSpec;
    use BoundaryCondition::*;

    #[test]
    fn spanning_poly_small_cases() {
        assert_eq!(connected_spanning_poly(2, &[(0, 1)]), vec![0, 1]);
        // triangle: 3λ² + λ³
        assert_eq!(connected_spanning_poly(3, &[(0, 1), (1, 2), (0, 2)]), vec![0, 0, 3, 1]);
        assert_eq!(connected_spanning_poly(3, &[(0, 1)]), vec![0]);
        let sq = [(0, 1), (1, 3), (3, 2), (2, 0)];
        assert_eq!(connected_spanning_poly(4, &sq), connected_spanning_poly_bruteforce(4, &sq));
    }

    #[test]
    fn epsilon_examples() {
        let e = epsilon_p(0.01, 1.0, 4).unwrap();
        assert_eq!(e.epsilon_p, e.epsilon_star_p);
        assert!((e.epsilon_p - 0.1138).abs() < 5e-4);
        assert!((SUB_THRESHOLD * e.epsilon_p - 0.663).abs() < 2e-3);
        assert_eq!(epsilon_p(0.0, 2.0, 4).unwrap().epsilon_p, 0.0);
        assert!(epsilon_p(1.0, 2.0, 4).is_err());
    }

    #[test]
    fn domino_and_triangle_activity() {
        let g = HostGraph::build(&TemplateSpec::zd(&[4, 4], 0)).unwrap();
        let pm = ModelParams::exact((1, 3), (2, 1), Free);
        let a = g.vertex("(1,1)").unwrap();
        let b = g.vertex("(1,2)").unwrap();
        // λ = 1/2, ρ = λ/q
        assert_eq!(activity(&g, &pm, &[a, b]).unwrap(), Scalar::exact(1, 4));
        let t = HostGraph::build(&TemplateSpec::edges(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")], &[]))
            .unwrap();
        // (3λ² + λ³)/q² = (3/4 + 1/8)/4
        assert_eq!(activity(&t, &pm, &[0, 1, 2]).unwrap(), Scalar::exact(7, 32));
    }

    #[test]
    fn ursell_of_overlapping_sets() {
        let caps = Caps::default();
        assert_eq!(ursell(&[vec![1, 2]], &caps).unwrap(), 1);
        assert_eq!(ursell(&[vec![1, 2], vec![2, 3]], &caps).unwrap(), -1);
        assert_eq!(ursell(&[vec![1, 2], vec![3, 4]], &caps).unwrap(), 0);
        assert_eq!(ursell(&[vec![1, 2], vec![2, 3], vec![1, 3]], &caps).unwrap(), 2);
        assert!(ursell(&vec![vec![1, 2]; 8], &caps).is_err());
    }

    #[test]
    fn p_zero_gives_zero() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 3], 0)).unwrap();
        let pm = ModelParams::exact((0, 1), (2, 1), Free);
        let r = truncated_phi(&g, &pm, &[0, 1], 6, &Caps::default()).unwrap();
        assert_eq!(r.value, Scalar::exact(0, 1));
        let l = truncated_log_xi(&g, &pm, 6, &Caps::default()).unwrap();
        assert_eq!(l.value, Scalar::exact(0, 1));
        assert!(l.tail_bound.unwrap() >= 0.0);
    }

    #[test]
    fn spanning_poly_matches_bruteforce_on_lattice_sets() {
        let g = HostGraph::build(&TemplateSpec::zd(&[4, 4], 0)).unwrap();
        let sets = connected_sets_in(&g, g.window(), 2, 6);
        for r in sets.iter().step_by(7) {
            let (n, e) = shape_of(&g, r);
            let e: Vec<(usize, usize)> = e.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
            assert_eq!(connected_spanning_poly(n, &e), connected_spanning_poly_bruteforce(n, &e), "{r:?}");
        }
    }

    #[test]
    fn exact_repartition_small_graphs() {
        let caps = Caps::default();
        let p = BigRational::new(1.into(), 5.into());
        for q in [BigRational::new(1.into(), 2.into()), BigRational::new(3.into(), 1.into())] {
            for spec in [
                TemplateSpec::zd(&[3, 3], 0),
                TemplateSpec::edges(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")], &["a"]),
            ] {
                let g = HostGraph::build(&spec).unwrap();
                for bc in [Free, Wired] {
                    let (l, r) = repartition_sides(&g, &p, &q, bc, &caps).unwrap();
                    assert_eq!(l, r, "{bc:?}");
                }
            }
        }
    }

    #[test]
    fn single_edge_connectivity_at_q_one() {
        let g = HostGraph::build(&TemplateSpec::edges(&["a", "b"], &[("a", "b")], &[])).unwrap();
        let pm = ModelParams::exact((1, 7), (1, 1), Free);
        let r = truncated_phi(&g, &pm, &[0, 1], 10, &Caps::default()).unwrap();
        // ρ = λ = 1/6, φ = ρ/(1+ρ) = 1/7; five copies fit in size 10
        assert_eq!(r.value, Scalar::exact(1111, 7776));
        assert!((r.value.to_f64() - 1.0 / 7.0).abs() < (1.0f64 / 6.0).powi(6));
    }
}
