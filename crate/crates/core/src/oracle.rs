//! Brute-force evaluation of finite-volume quantities by summing over every
//! configuration of the window edges.

use num::rational::BigRational;
use rayon::prelude::*;

use crate::error::{cap_check, RcmError, Result};
use crate::graphcore::{BoundaryCondition, Caps, Dsu, HostGraph};
use crate::scalar::{ln_rational, Field, Scalar};

/// Model parameters; `p` and `q` share one scalar mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub p: Scalar,
    pub q: Scalar,
    pub bc: BoundaryCondition,
}

impl ModelParams {
    pub fn new(p: Scalar, q: Scalar, bc: BoundaryCondition) -> Result<Self> {
        if p.is_exact() != q.is_exact() {
            return Err(RcmError::MixedMode);
        }
        let pf = p.to_f64();
        if !(0.0..=1.0).contains(&pf) {
            return Err(RcmError::Precondition(format!("p = {p} is outside [0, 1]")));
        }
        if q.to_f64() <= 0.0 {
            return Err(RcmError::Precondition(format!("q = {q} must be positive")));
        }
        Ok(ModelParams { p, q, bc })
    }

    pub fn exact(p: (i64, i64), q: (i64, i64), bc: BoundaryCondition) -> Self {
        ModelParams::new(Scalar::exact(p.0, p.1), Scalar::exact(q.0, q.1), bc).expect("valid parameters")
    }

    pub fn with_bc(&self, bc: BoundaryCondition) -> Self {
        ModelParams { bc, ..self.clone() }
    }
}

/// Open/closed state of each window edge, bit `i` for `g.window_edges()[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub open: u64,
}

struct Labeler {
    local: Vec<usize>,
    ends: Vec<(usize, usize)>,
    boundary: Vec<bool>,
    nv: usize,
}

impl Labeler {
    fn new(g: &HostGraph) -> Self {
        let mut local = vec![usize::MAX; g.n_vertices()];
        for (i, &v) in g.window_vertices().iter().enumerate() {
            local[v] = i;
        }
        let ends = g
            .window_edges()
            .iter()
            .map(|&e| {
                let (a, b) = g.edge(e);
                (local[a], local[b])
            })
            .collect();
        let boundary = g.window_vertices().iter().map(|&v| g.int_boundary().contains(v)).collect();
        Labeler { local, ends, boundary, nv: g.window_vertices().len() }
    }

    fn components(&self, open: u64) -> Dsu {
        let mut d = Dsu::new(self.nv);
        for (i, &(a, b)) in self.ends.iter().enumerate() {
            if open >> i & 1 == 1 {
                d.union(a, b);
            }
        }
        d
    }
}

struct Summary {
    k_free: usize,
    k_wired: usize,
    root: Vec<usize>,
    size: Vec<usize>,
    touches: Vec<bool>,
}

fn summarize(lab: &Labeler, open: u64) -> Summary {
    let mut d = lab.components(open);
    let nv = lab.nv;
    let root: Vec<usize> = (0..nv).map(|v| d.find(v)).collect();
    let mut size = vec![0usize; nv];
    let mut touches = vec![false; nv];
    for v in 0..nv {
        size[root[v]] += 1;
        if lab.boundary[v] {
            touches[root[v]] = true;
        }
    }
    let mut k_free = 0;
    let mut k_wired = 0;
    for v in 0..nv {
        if root[v] == v {
            k_free += 1;
            if !touches[v] {
                k_wired += 1;
            }
        }
    }
    Summary { k_free, k_wired, root, size, touches }
}

/// Number of clusters `k^ξ(ω)` on the window.
pub fn cluster_count(g: &HostGraph, w: &Configuration, bc: BoundaryCondition) -> usize {
    let lab = Labeler::new(g);
    let s = summarize(&lab, w.open);
    match bc {
        BoundaryCondition::Free => s.k_free,
        BoundaryCondition::Wired => s.k_wired,
    }
}

/// Events whose weight the oracle can tally.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    /// Every configuration.
    All,
    /// All of X lies in one open animal (a component with at least one edge).
    Connected(Vec<usize>),
    /// All of X lies in one open component avoiding the internal boundary;
    /// for a single vertex the isolated case counts.
    FiniteConnected(Vec<usize>),
}

/// Configuration counts by (number of open edges, number of clusters).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tally {
    pub edges: usize,
    pub kmax: usize,
    pub counts: Vec<u64>,
}

impl Tally {
    fn new(edges: usize, kmax: usize) -> Self {
        Tally { edges, kmax, counts: vec![0; (edges + 1) * (kmax + 1)] }
    }

    fn add(&mut self, other: &Tally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Σ count · p^open (1-p)^closed q^k.
    pub fn eval<F: Field>(&self, p: &F, q: &F) -> F {
        let one = F::one();
        let pp: Vec<F> = (0..=self.edges as i64).map(|i| p.powi(i)).collect();
        let qp: Vec<F> = (0..=self.kmax as i64).map(|i| q.powi(i)).collect();
        let mp: Vec<F> = (0..=self.edges as i64).map(|i| (one.clone() - p.clone()).powi(i)).collect();
        let mut total = F::zero();
        for o in 0..=self.edges {
            let mut inner = F::zero();
            for k in 0..=self.kmax {
                let c = self.counts[o * (self.kmax + 1) + k];
                if c != 0 {
                    inner = inner + F::from_int(c as i64) * qp[k].clone();
                }
            }
            if !inner.is_zero() {
                total = total + inner * pp[o].clone() * mp[self.edges - o].clone();
            }
        }
        total
    }

    pub fn eval_scalar(&self, p: &Scalar, q: &Scalar) -> Result<Scalar> {
        match (p, q) {
            (Scalar::Exact(p), Scalar::Exact(q)) => Ok(Scalar::Exact(self.eval(p, q))),
            (Scalar::Approx(p), Scalar::Approx(q)) => Ok(Scalar::Approx(self.eval(p, q))),
            _ => Err(RcmError::MixedMode),
        }
    }
}

fn check_subset(g: &HostGraph, xs: &[usize], interior: bool) -> Result<()> {
    if xs.is_empty() {
        return Err(RcmError::Precondition("X must be nonempty".into()));
    }
    for &x in xs {
        if x >= g.n_vertices() || !g.in_window(x) {
            return Err(RcmError::Precondition("X must lie in the window".into()));
        }
        if interior && g.int_boundary().contains(x) {
            return Err(RcmError::Precondition(format!(
                "X touches the window boundary at {}",
                g.name(x)
            )));
        }
    }
    Ok(())
}

/// Tally every configuration of the window edges for each event.
pub fn tally(g: &HostGraph, bc: BoundaryCondition, events: &[Event], caps: &Caps) -> Result<Vec<Tally>> {
    let m = g.window_edges().len();
    cap_check("oracle window edges", m, caps.oracle_edges.min(40))?;
    for ev in events {
        match ev {
            Event::All => {}
            Event::Connected(xs) => check_subset(g, xs, false)?,
            Event::FiniteConnected(xs) => check_subset(g, xs, true)?,
        }
    }
    let lab = Labeler::new(g);
    let kmax = lab.nv;
    let local_events: Vec<(u8, Vec<usize>)> = events
        .iter()
        .map(|ev| match ev {
            Event::All => (0, vec![]),
            Event::Connected(xs) => (1, xs.iter().map(|&x| lab.local[x]).collect()),
            Event::FiniteConnected(xs) => (2, xs.iter().map(|&x| lab.local[x]).collect()),
        })
        .collect();
    let total: u64 = 1u64 << m;
    let chunk_bits = m.min(10);
    let chunks = 1u64 << chunk_bits;
    let per = total / chunks;
    let parts: Vec<Vec<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut ts: Vec<Tally> = events.iter().map(|_| Tally::new(m, kmax)).collect();
            for open in c * per..(c + 1) * per {
                let s = summarize(&lab, open);
                let k = match bc {
                    BoundaryCondition::Free => s.k_free,
                    BoundaryCondition::Wired => s.k_wired,
                };
                let o = open.count_ones() as usize;
                for (t, (kind, xs)) in ts.iter_mut().zip(&local_events) {
                    let hit = match kind {
                        0 => true,
                        _ => {
                            let r = s.root[xs[0]];
                            let together = xs.iter().all(|&x| s.root[x] == r);
                            together
                                && if *kind == 1 {
                                    s.size[r] >= 2
                                } else {
                                    !s.touches[r]
                                }
                        }
                    };
                    if hit {
                        t.counts[o * (kmax + 1) + k] += 1;
                    }
                }
            }
            ts
        })
        .collect();
    let mut out: Vec<Tally> = events.iter().map(|_| Tally::new(m, kmax)).collect();
    for part in &parts {
        for (a, b) in out.iter_mut().zip(part) {
            a.add(b);
        }
    }
    Ok(out)
}

/// Z^ξ summed over all window configurations.
pub fn partition_function(g: &HostGraph, params: &ModelParams, caps: &Caps) -> Result<Scalar> {
    let t = tally(g, params.bc, &[Event::All], caps)?;
    t[0].eval_scalar(&params.p, &params.q)
}

fn ratio(g: &HostGraph, params: &ModelParams, ev: Event, caps: &Caps) -> Result<Scalar> {
    let t = tally(g, params.bc, &[Event::All, ev], caps)?;
    let z = t[0].eval_scalar(&params.p, &params.q)?;
    let num = t[1].eval_scalar(&params.p, &params.q)?;
    num.try_div(&z)
}

/// Probability that X lies in one open animal. X may touch the window
/// boundary.
pub fn connectivity_exact(g: &HostGraph, params: &ModelParams, xs: &[usize], caps: &Caps) -> Result<Scalar> {
    ratio(g, params, Event::Connected(xs.to_vec()), caps)
}

/// Probability that X lies in one open cluster avoiding the internal
/// boundary (isolated vertex included when |X| = 1).
pub fn finite_connectivity_exact(
    g: &HostGraph,
    params: &ModelParams,
    xs: &[usize],
    caps: &Caps,
) -> Result<Scalar> {
    ratio(g, params, Event::FiniteConnected(xs.to_vec()), caps)
}

/// Finite-volume proxy for the percolation probability at `x0`.
pub fn theta_exact(g: &HostGraph, params: &ModelParams, x0: usize, caps: &Caps) -> Result<Scalar> {
    let f = finite_connectivity_exact(g, params, &[x0], caps)?;
    f.like(1).try_sub(&f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PressureReport {
    /// (1/|V_N|) ln Z^ξ for the requested boundary condition.
    pub value: f64,
    pub z: Scalar,
    pub z_free: Scalar,
    pub z_wired: Scalar,
    /// Whether Z^1 <= Z^0 <= Z^1 q^|∂| holds (reversed for q < 1).
    pub sandwich_ok: bool,
}

fn ln_scalar(s: &Scalar) -> f64 {
    match s {
        Scalar::Exact(r) => ln_rational(r),
        Scalar::Approx(x) => x.ln(),
    }
}

/// Finite-volume pressure with the free/wired sandwich check.
pub fn pressure_finite(g: &HostGraph, params: &ModelParams, caps: &Caps) -> Result<PressureReport> {
    let z_free = partition_function(g, &params.with_bc(BoundaryCondition::Free), caps)?;
    let z_wired = partition_function(g, &params.with_bc(BoundaryCondition::Wired), caps)?;
    let nb = g.int_boundary().count_ones(..) as i64;
    let sandwich_ok = sandwich(&z_free, &z_wired, &params.q, nb)?;
    let z = match params.bc {
        BoundaryCondition::Free => z_free.clone(),
        BoundaryCondition::Wired => z_wired.clone(),
    };
    let value = ln_scalar(&z) / g.window_vertices().len() as f64;
    Ok(PressureReport { value, z, z_free, z_wired, sandwich_ok })
}

fn sandwich(z0: &Scalar, z1: &Scalar, q: &Scalar, nb: i64) -> Result<bool> {
    let top = z1.try_mul(&q.powi(nb))?;
    let le = |a: &Scalar, b: &Scalar| -> bool {
        match (a, b) {
            (Scalar::Exact(x), Scalar::Exact(y)) => x <= y,
            _ => a.to_f64() <= b.to_f64() * (1.0 + 1e-12),
        }
    };
    Ok(if q.to_f64() >= 1.0 {
        le(z1, z0) && le(z0, &top)
    } else {
        le(z0, z1) && le(&top, z0)
    })
}

/// Σ_ω λ^|O| q^k with λ = p/(1-p), which equals Z / (1-p)^|E_N|.
pub fn z_tilde(g: &HostGraph, p: &BigRational, z: &BigRational) -> BigRational {
    let one = <BigRational as Field>::one();
    z.clone() / (one - p.clone()).powi(g.window_edges().len() as i64)
}

/// Σ_ω λ^|C| q^k with λ = (1-p)/p, which equals Z / p^|E_N|.
pub fn z_bar(g: &HostGraph, p: &BigRational, z: &BigRational) -> BigRational {
    z.clone() / Field::powi(p, g.window_edges().len() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::TemplateSpec;
    use BoundaryCondition::*;

    fn single_edge() -> HostGraph {
        HostGraph::build(&TemplateSpec::edges(&["x", "y"], &[("x", "y")], &[])).unwrap()
    }

    #[test]
    fn single_edge_partition_function() {
        let g = single_edge();
        let z = partition_function(&g, &ModelParams::exact((1, 2), (2, 1), Free), &Caps::default()).unwrap();
        assert_eq!(z, Scalar::exact(3, 1));
        let c = connectivity_exact(&g, &ModelParams::exact((2, 7), (1, 1), Free), &[0, 1], &Caps::default())
            .unwrap();
        assert_eq!(c, Scalar::exact(2, 7));
        let pr = pressure_finite(&g, &ModelParams::exact((1, 2), (2, 1), Free), &Caps::default()).unwrap();
        assert!((pr.value - 3f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cluster_counts() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 3], 0)).unwrap();
        let none = Configuration { open: 0 };
        assert_eq!(cluster_count(&g, &none, Free), 9);
        assert_eq!(cluster_count(&g, &none, Wired), 1);
        let e = g.edge_between(g.vertex("(1,1)").unwrap(), g.vertex("(1,2)").unwrap()).unwrap();
        let i = g.window_edges().iter().position(|&x| x == e).unwrap();
        let one = Configuration { open: 1 << i };
        assert_eq!(cluster_count(&g, &one, Free), 8);
        assert_eq!(cluster_count(&g, &one, Wired), 0);
    }

    #[test]
    fn boundary_errors() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 3], 0)).unwrap();
        let xs = [g.vertex("(1,1)").unwrap(), g.vertex("(1,2)").unwrap()];
        let pm = ModelParams::exact((9, 10), (1, 1), Free);
        assert!(matches!(
            finite_connectivity_exact(&g, &pm, &xs, &Caps::default()),
            Err(RcmError::Precondition(_))
        ));
        assert!(connectivity_exact(&g, &pm, &xs, &Caps::default()).is_ok());
    }

    #[test]
    fn cap_and_mixed_mode() {
        let g = HostGraph::build(&TemplateSpec::zd(&[4, 5], 0)).unwrap();
        let pm = ModelParams::exact((1, 2), (1, 1), Free);
        assert!(matches!(partition_function(&g, &pm, &Caps::default()), Err(RcmError::Cap { .. })));
        assert!(ModelParams::new(Scalar::exact(1, 2), Scalar::Approx(1.0), Free).is_err());
    }
}
