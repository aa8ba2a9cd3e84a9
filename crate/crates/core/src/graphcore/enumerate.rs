use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use super::HostGraph;
use crate::error::{cap_check, RcmError, Result};

/// Enumeration and oracle size limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Largest vertex set (subcritical polymer) enumerated.
    pub polymer: usize,
    /// Largest edge set (dual animal, fence) enumerated.
    pub edge_set: usize,
    /// Largest window edge count the brute-force oracle accepts.
    pub oracle_edges: usize,
    /// Largest cluster (number of parts) passed to the Ursell function.
    pub ursell: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { polymer: 10, edge_set: 8, oracle_edges: 22, ursell: 7 }
    }
}

type Keep<'a> = &'a (dyn Fn(&[usize]) -> bool + Sync);

struct Grower<'a> {
    adj: &'a [Vec<usize>],
    allowed: &'a FixedBitSet,
    max: usize,
    min: usize,
    keep: Keep<'a>,
    out: Vec<Vec<usize>>,
    in_cur: FixedBitSet,
    banned: FixedBitSet,
    cur: Vec<usize>,
}

impl Grower<'_> {
    fn emit(&mut self) {
        if self.cur.len() >= self.min {
            let mut s = self.cur.clone();
            s.sort_unstable();
            self.out.push(s);
        }
    }

    // Each connected superset of `cur` avoiding `banned` is reached along a
    // unique include/exclude path over the candidate list.
    fn rec(&mut self, cand: &[usize]) {
        if self.cur.len() == self.max {
            return;
        }
        for i in 0..cand.len() {
            let v = cand[i];
            let mut next: Vec<usize> = cand[i + 1..].to_vec();
            for &w in &self.adj[v] {
                if self.allowed.contains(w)
                    && !self.in_cur.contains(w)
                    && !self.banned.contains(w)
                    && w != v
                    && !next.contains(&w)
                {
                    next.push(w);
                }
            }
            self.cur.push(v);
            self.in_cur.insert(v);
            if (self.keep)(&self.cur) {
                self.emit();
                self.rec(&next);
            }
            self.cur.pop();
            self.in_cur.set(v, false);
            self.banned.insert(v);
        }
        for &v in cand {
            self.banned.set(v, false);
        }
    }
}

/// All connected node sets containing `root` within `allowed`, sizes
/// `min..=max`, sorted lexicographically. `keep` must be monotone: once it
/// rejects a set it must reject every superset.
pub(crate) fn grow_rooted(
    adj: &[Vec<usize>],
    allowed: &FixedBitSet,
    root: usize,
    min: usize,
    max: usize,
    keep: Keep<'_>,
) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut gr = Grower {
        adj,
        allowed,
        max,
        min,
        keep,
        out: Vec::new(),
        in_cur: FixedBitSet::with_capacity(n),
        banned: FixedBitSet::with_capacity(n),
        cur: vec![root],
    };
    if max == 0 || !allowed.contains(root) {
        return Vec::new();
    }
    gr.in_cur.insert(root);
    if !(gr.keep)(&gr.cur) {
        return Vec::new();
    }
    gr.emit();
    let cand: Vec<usize> = adj[root]
        .iter()
        .copied()
        .filter(|&w| allowed.contains(w) && w != root)
        .collect();
    gr.rec(&cand);
    gr.out.sort_unstable();
    gr.out
}

/// Every connected set inside `allowed` once, keyed by its smallest member.
pub(crate) fn grow_all(
    adj: &[Vec<usize>],
    allowed: &FixedBitSet,
    min: usize,
    max: usize,
    keep: Keep<'_>,
) -> Vec<Vec<usize>> {
    let roots: Vec<usize> = allowed.ones().collect();
    let mut all: Vec<Vec<usize>> = roots
        .par_iter()
        .flat_map_iter(|&r| {
            let mut sub = allowed.clone();
            sub.set_range(..r, false);
            grow_rooted(adj, &sub, r, min, max, keep)
        })
        .collect();
    all.sort_unstable();
    all
}

fn accept_all(_: &[usize]) -> bool {
    true
}

/// Connected vertex sets of the host containing `root`, canonical order.
pub fn enumerate_connected_vertex_sets(
    g: &HostGraph,
    root: usize,
    min_size: usize,
    max_size: usize,
    caps: &Caps,
) -> Result<Vec<Vec<usize>>> {
    cap_check("connected vertex set size", max_size, caps.polymer)?;
    if min_size < 2 || min_size > max_size {
        return Err(RcmError::Precondition(format!(
            "need 2 <= min_size <= max_size, got {min_size}..{max_size}"
        )));
    }
    if !g.in_window(root) {
        return Err(RcmError::Precondition("root must lie in the window".into()));
    }
    let mut all = FixedBitSet::with_capacity(g.n_vertices());
    all.insert_range(..);
    Ok(grow_rooted(g.vadj(), &all, root, min_size, max_size, &accept_all))
}

/// Every connected vertex set inside `allowed` (each once), canonical order.
pub fn connected_sets_in(
    g: &HostGraph,
    allowed: &FixedBitSet,
    min_size: usize,
    max_size: usize,
) -> Vec<Vec<usize>> {
    grow_all(g.vadj(), allowed, min_size, max_size, &accept_all)
}

/// Edge adjacency for R-connectivity: `f` is listed for `e` when some
/// endpoint of `f` lies within graph distance `r` of an endpoint of `e`.
pub fn edge_adjacency(g: &HostGraph, r: usize) -> Vec<Vec<usize>> {
    (0..g.n_edges())
        .into_par_iter()
        .map(|e| {
            let (a, b) = g.edge(e);
            let mut out = Vec::new();
            for u in 0..g.n_vertices() {
                if g.dist(a, u).min(g.dist(b, u)) <= r {
                    for &(_, f) in g.incident(u) {
                        if f != e {
                            out.push(f);
                        }
                    }
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect()
}

/// Edge sets containing `seed` whose support is R-connected, canonical order.
pub fn enumerate_r_connected_edge_sets(
    g: &HostGraph,
    seed: usize,
    r: usize,
    min_size: usize,
    max_size: usize,
    caps: &Caps,
) -> Result<Vec<Vec<usize>>> {
    cap_check("edge set size", max_size, caps.edge_set)?;
    if r == 0 {
        return Err(RcmError::Precondition("R must be at least 1".into()));
    }
    if min_size == 0 || min_size > max_size || seed >= g.n_edges() {
        return Err(RcmError::Precondition(format!(
            "bad edge-set request: seed {seed}, sizes {min_size}..{max_size}"
        )));
    }
    let adj = edge_adjacency(g, r);
    let mut all = FixedBitSet::with_capacity(g.n_edges());
    all.insert_range(..);
    Ok(grow_rooted(&adj, &all, seed, min_size, max_size, &accept_all))
}

/// Every R-connected edge set inside `allowed` (each once), given the
/// adjacency from [`edge_adjacency`].
pub fn r_connected_edge_sets_in(
    adj: &[Vec<usize>],
    allowed: &FixedBitSet,
    min_size: usize,
    max_size: usize,
) -> Vec<Vec<usize>> {
    grow_all(adj, allowed, min_size, max_size, &accept_all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::TemplateSpec;

    fn brute_connected(g: &HostGraph, root: usize, max: usize) -> usize {
        let n = g.n_vertices();
        let mut count = 0;
        for mask in 1u32..(1 << n) {
            if mask & (1 << root) == 0 || (mask.count_ones() as usize) < 2 || mask.count_ones() as usize > max {
                continue;
            }
            let vs: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            let mut seen = vec![vs[0]];
            let mut i = 0;
            while i < seen.len() {
                let u = seen[i];
                for &w in g.neighbors(u) {
                    if mask & (1 << w) != 0 && !seen.contains(&w) {
                        seen.push(w);
                    }
                }
                i += 1;
            }
            if seen.len() == vs.len() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn path_sets() {
        let g = HostGraph::build(&TemplateSpec::edges(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &[]))
            .unwrap();
        let b = g.vertex("b").unwrap();
        let sets = enumerate_connected_vertex_sets(&g, b, 2, 3, &Caps::default()).unwrap();
        assert_eq!(sets, vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]);
    }

    #[test]
    fn matches_brute_force_on_small_grid() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 4], 0)).unwrap();
        for root in 0..g.n_vertices() {
            let sets = enumerate_connected_vertex_sets(&g, root, 2, 10, &Caps::default()).unwrap();
            assert_eq!(sets.len(), brute_connected(&g, root, 10));
        }
    }

    #[test]
    fn unrooted_counts_each_once() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 3], 0)).unwrap();
        let all = connected_sets_in(&g, g.window(), 1, 9);
        let mut d = all.clone();
        d.dedup();
        assert_eq!(d.len(), all.len());
        let by_root: usize = (0..9).map(|r| brute_connected(&g, r, 9)).sum::<usize>();
        // sets of size >= 2 counted once per member in by_root
        let weighted: usize = all.iter().filter(|s| s.len() >= 2).map(|s| s.len()).sum();
        assert_eq!(weighted, by_root);
    }

    #[test]
    fn cap_enforced() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 3], 0)).unwrap();
        assert!(matches!(
            enumerate_connected_vertex_sets(&g, 4, 2, 11, &Caps::default()),
            Err(RcmError::Cap { .. })
        ));
        assert!(enumerate_r_connected_edge_sets(&g, 0, 1, 1, 9, &Caps::default()).is_err());
    }
}
