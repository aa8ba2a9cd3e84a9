use fixedbitset::FixedBitSet;

use super::enumerate::{grow_rooted, Caps};
use super::{EdgeSet, HostGraph, TemplateSpec, VertexSet};
use crate::error::{cap_check, RcmError, Result};

pub fn distance(g: &HostGraph, x: usize, y: usize) -> usize {
    g.dist(x, y)
}

/// Minimum over distinct pairs `a ∈ A`, `b ∈ B` of the graph distance.
pub fn set_distance(g: &HostGraph, a: &FixedBitSet, b: &FixedBitSet) -> usize {
    let mut best = usize::MAX;
    for u in a.ones() {
        for v in b.ones() {
            best = best.min(g.dist(u, v));
        }
    }
    best
}

/// Weight of a minimum spanning tree of the complete graph on `xs`
/// weighted by graph distance.
pub fn tree_distance(g: &HostGraph, xs: &[usize]) -> usize {
    if xs.len() <= 1 {
        return 0;
    }
    let n = xs.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![usize::MAX; n];
    best[0] = 0;
    let mut total = 0;
    for _ in 0..n {
        let i = (0..n).filter(|&i| !in_tree[i]).min_by_key(|&i| best[i]).unwrap();
        in_tree[i] = true;
        total += best[i];
        for j in 0..n {
            if !in_tree[j] {
                best[j] = best[j].min(g.dist(xs[i], xs[j]));
            }
        }
    }
    total
}

/// Edges with exactly one endpoint in `r`.
pub fn edge_boundary(g: &HostGraph, r: &VertexSet) -> EdgeSet {
    let mut out = FixedBitSet::with_capacity(g.n_edges());
    for v in r.ones() {
        for &(w, e) in g.incident(v) {
            if !r.contains(w) {
                out.insert(e);
            }
        }
    }
    out
}

/// (external, internal) vertex boundaries of `r`.
pub fn vertex_boundaries(g: &HostGraph, r: &VertexSet) -> (VertexSet, VertexSet) {
    let mut ext = FixedBitSet::with_capacity(g.n_vertices());
    let mut int = FixedBitSet::with_capacity(g.n_vertices());
    for v in r.ones() {
        for &w in g.neighbors(v) {
            if !r.contains(w) {
                ext.insert(w);
                int.insert(v);
            }
        }
    }
    (ext, int)
}

pub fn diameter(g: &HostGraph, r: &VertexSet) -> usize {
    let vs: Vec<usize> = r.ones().collect();
    let mut d = 0;
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            d = d.max(g.dist(a, b));
        }
    }
    d
}

/// Smallest R for which `vs` is R-connected (0 for fewer than two points).
pub fn r_threshold(g: &HostGraph, vs: &[usize]) -> usize {
    // bottleneck of a minimum spanning tree
    let n = vs.len();
    if n <= 1 {
        return 0;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![usize::MAX; n];
    best[0] = 0;
    let mut worst = 0;
    for _ in 0..n {
        let i = (0..n).filter(|&i| !in_tree[i]).min_by_key(|&i| best[i]).unwrap();
        in_tree[i] = true;
        worst = worst.max(best[i]);
        for j in 0..n {
            if !in_tree[j] {
                best[j] = best[j].min(g.dist(vs[i], vs[j]));
            }
        }
    }
    worst
}

pub fn is_r_connected(g: &HostGraph, vs: &[usize], r: usize) -> bool {
    r_threshold(g, vs) <= r
}

fn anchors(g: &HostGraph) -> Vec<usize> {
    match g.template() {
        TemplateSpec::Zd { .. } | TemplateSpec::Tree { .. } => vec![g.window_center()],
        TemplateSpec::Edges { .. } => g.window_vertices().to_vec(),
    }
}

/// Minimum edge boundary over connected sets of diameter exactly `n`
/// containing an anchor (the window center for transitive templates, every
/// window vertex for explicit graphs). Sets up to `caps.polymer` vertices
/// are searched.
pub fn cut_set_function(g: &HostGraph, n: usize, caps: &Caps) -> Result<usize> {
    cap_check("cut-set function set size", n + 1, caps.polymer)?;
    let mut all = FixedBitSet::with_capacity(g.n_vertices());
    all.insert_range(..);
    let keep = |s: &[usize]| {
        let last = *s.last().unwrap();
        s.iter().all(|&u| g.dist(u, last) <= n)
    };
    let mut best: Option<usize> = None;
    for a in anchors(g) {
        for w in grow_rooted(g.vadj(), &all, a, 1, caps.polymer, &keep) {
            let set = g.vertex_set(&w);
            if diameter(g, &set) != n {
                continue;
            }
            if w.iter().any(|&v| g.is_host_boundary(v)) && matches!(g.template(), TemplateSpec::Zd { .. } | TemplateSpec::Tree { .. }) {
                return Err(RcmError::Margin(format!(
                    "a diameter-{n} set around {} reaches the host boundary",
                    g.name(a)
                )));
            }
            let b = edge_boundary(g, &set).count_ones(..)
                + w.iter().map(|&v| g.missing(v)).sum::<usize>();
            best = Some(best.map_or(b, |x: usize| x.min(b)));
        }
    }
    best.ok_or_else(|| RcmError::Precondition(format!("no connected set of diameter {n} fits")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SawCounts {
    /// `counts[n-1]` is the number of self-avoiding walks of length `n`.
    pub counts: Vec<u64>,
    /// `c(n)^(1/n)` per length.
    pub roots: Vec<f64>,
}

impl SawCounts {
    /// Largest `c(n)^(1/n)` over the computed range.
    pub fn sup_root(&self) -> f64 {
        self.roots.iter().cloned().fold(0.0, f64::max)
    }
}

/// Self-avoiding walk counts from `x` up to length `n_max`.
pub fn saw_counts(g: &HostGraph, x: usize, n_max: usize) -> Result<SawCounts> {
    if let Some(d) = g.distance_to_host_boundary(x) {
        if d < n_max {
            return Err(RcmError::Margin(format!(
                "walks of length {n_max} from {} can reach the host boundary at distance {d}",
                g.name(x)
            )));
        }
    }
    let mut counts = vec![0u64; n_max];
    let mut on_path = vec![false; g.n_vertices()];
    fn walk(g: &HostGraph, v: usize, len: usize, n_max: usize, on: &mut [bool], counts: &mut [u64]) {
        if len == n_max {
            return;
        }
        for &w in g.neighbors(v) {
            if !on[w] {
                counts[len] += 1;
                on[w] = true;
                walk(g, w, len + 1, n_max, on, counts);
                on[w] = false;
            }
        }
    }
    on_path[x] = true;
    walk(g, x, 0, n_max, &mut on_path, &mut counts);
    let roots = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (c as f64).powf(1.0 / (i + 1) as f64))
        .collect();
    Ok(SawCounts { counts, roots })
}
