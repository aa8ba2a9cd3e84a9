//! Abstract hard-core polymer gas: Ursell coefficients and truncated
//! cluster sums, shared by both expansions.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::error::{RcmError, Result};
use crate::scalar::Field;

/// A finite family of polymers with a symmetric incompatibility relation.
/// Every polymer must be incompatible with itself.
pub trait Polymers: Sync {
    type F: Field;
    fn len(&self) -> usize;
    fn size(&self, i: usize) -> usize;
    fn activity(&self, i: usize) -> Self::F;
    /// Indices incompatible with `i` (including `i`) of size at most
    /// `max_size`, any order.
    fn incompatible(&self, i: usize, max_size: usize) -> Vec<usize>;
    fn are_incompatible(&self, i: usize, j: usize) -> bool;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sorted polymer indices with repetition.
pub type Multiset = Vec<usize>;

/// Largest graph accepted by [`ursell_graph`].
pub const URSELL_HARD_LIMIT: usize = 16;

/// Ursell coefficient of a graph given as adjacency bitmasks: the sum over
/// connected spanning subgraphs of (-1)^edges.
pub fn ursell_graph(adj: &[u32]) -> i64 {
    let n = adj.len();
    assert!(n <= URSELL_HARD_LIMIT, "graph too large for the Ursell recursion");
    if n == 0 {
        return 0;
    }
    let full = (1u32 << n) - 1;
    // indep[U] = 1 when U spans no edge
    let mut indep = vec![false; 1 << n];
    indep[0] = true;
    for u in 1..=full as usize {
        let low = u.trailing_zeros() as usize;
        let rest = u & (u - 1);
        indep[u] = indep[rest] && adj[low] & rest as u32 == 0;
    }
    let mut conn = vec![0i64; 1 << n];
    for s in 1..=full as usize {
        let low = s & s.wrapping_neg();
        let mut c = if indep[s] { 1 } else { 0 };
        // proper subsets t of s containing the lowest vertex
        let rest = s ^ low;
        let mut sub = rest;
        while sub != 0 {
            sub = (sub - 1) & rest;
            let t = sub | low;
            if t != s && indep[s ^ t] {
                c -= conn[t];
            }
        }
        conn[s] = c;
    }
    conn[full as usize]
}

/// Ursell coefficient of `n` pairwise incompatible polymers given by an
/// incompatibility predicate.
pub fn ursell_with(n: usize, incompatible: impl Fn(usize, usize) -> bool) -> i64 {
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in i + 1..n {
            if incompatible(i, j) {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    ursell_graph(&adj)
}

struct UrsellMemo {
    map: HashMap<Vec<u32>, i64>,
}

impl UrsellMemo {
    fn new() -> Self {
        UrsellMemo { map: HashMap::new() }
    }

    fn get<P: Polymers + ?Sized>(&mut self, gas: &P, m: &[usize]) -> i64 {
        let n = m.len();
        if n == 1 {
            return 1;
        }
        let mut adj = vec![0u32; n];
        for i in 0..n {
            for j in i + 1..n {
                if m[i] == m[j] || gas.are_incompatible(m[i], m[j]) {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
        }
        if n == 2 {
            return if adj[0] != 0 { -1 } else { 0 };
        }
        *self.map.entry(adj).or_insert_with_key(|a| ursell_graph(a))
    }
}

fn total_size<P: Polymers + ?Sized>(gas: &P, m: &[usize]) -> usize {
    m.iter().map(|&i| gas.size(i)).sum()
}

/// All multisets whose incompatibility graph is connected, that contain the
/// multiset `seed`, whose added members are `>= floor`, and whose total size
/// is at most `budget`. Sorted canonically.
pub fn connected_clusters<P: Polymers + ?Sized>(
    gas: &P,
    seed: &[usize],
    floor: usize,
    budget: usize,
    max_parts: usize,
) -> Result<Vec<Multiset>> {
    let mut start = seed.to_vec();
    start.sort_unstable();
    let s0 = total_size(gas, &start);
    if s0 > budget {
        return Ok(Vec::new());
    }
    let mut out = vec![start.clone()];
    let mut level = vec![start];
    let mut seen: HashSet<Multiset> = HashSet::new();
    while !level.is_empty() {
        let mut next: Vec<Multiset> = Vec::new();
        seen.clear();
        for m in &level {
            let room = budget - total_size(gas, m);
            if room == 0 {
                continue;
            }
            let mut cand: Vec<usize> = Vec::new();
            let mut last = usize::MAX;
            for &i in m {
                if i == last {
                    continue;
                }
                last = i;
                cand.extend(gas.incompatible(i, room).into_iter().filter(|&c| c >= floor));
            }
            cand.sort_unstable();
            cand.dedup();
            for c in cand {
                if gas.size(c) > room {
                    continue;
                }
                let mut nm = m.clone();
                let pos = nm.partition_point(|&x| x <= c);
                nm.insert(pos, c);
                if seen.insert(nm.clone()) {
                    next.push(nm);
                }
            }
        }
        if let Some(m) = next.first() {
            if m.len() > max_parts {
                return Err(RcmError::Cap { what: "cluster parts".into(), needed: m.len(), cap: max_parts });
            }
        }
        next.sort_unstable();
        out.extend(next.iter().cloned());
        level = next;
    }
    out.sort_unstable();
    Ok(out)
}

fn inv_factorials<F: Field>(m: &[usize]) -> F {
    let mut denom: i64 = 1;
    let mut run = 1;
    for k in 1..m.len() {
        if m[k] == m[k - 1] {
            run += 1;
            denom *= run;
        } else {
            run = 1;
        }
    }
    F::one() / F::from_int(denom)
}

fn product<P: Polymers + ?Sized>(gas: &P, m: &[usize]) -> P::F {
    let mut acc = P::F::one();
    for &i in m {
        acc = acc * gas.activity(i);
    }
    acc
}

/// Partial sums of a cluster series indexed by total polymer size.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeSeries<F> {
    pub by_size: Vec<F>,
}

impl<F: Field> SizeSeries<F> {
    pub fn zeros(budget: usize) -> Self {
        SizeSeries { by_size: vec![F::zero(); budget + 1] }
    }

    pub fn total(&self) -> F {
        self.by_size.iter().fold(F::zero(), |a, b| a + b.clone())
    }

    pub fn add(&mut self, other: &SizeSeries<F>) {
        for (a, b) in self.by_size.iter_mut().zip(&other.by_size) {
            *a = a.clone() + b.clone();
        }
    }

    pub fn scale(&self, f: &F) -> SizeSeries<F> {
        SizeSeries { by_size: self.by_size.iter().map(|x| x.clone() * f.clone()).collect() }
    }

    /// Cumulative sums: entry k is the sum of all sizes up to k.
    pub fn cumulative(&self) -> Vec<F> {
        let mut acc = F::zero();
        self.by_size
            .iter()
            .map(|x| {
                acc = acc.clone() + x.clone();
                acc.clone()
            })
            .collect()
    }
}

/// Truncated `ln Ξ`: clusters of total size at most `budget`.
pub fn log_series<P: Polymers + ?Sized>(gas: &P, budget: usize, max_parts: usize) -> Result<SizeSeries<P::F>> {
    let roots: Vec<usize> = (0..gas.len()).filter(|&r| gas.size(r) <= budget).collect();
    let parts: Vec<SizeSeries<P::F>> = roots
        .par_iter()
        .map(|&r| {
            let mut memo = UrsellMemo::new();
            let mut s = SizeSeries::<P::F>::zeros(budget);
            for m in connected_clusters(gas, &[r], r, budget, max_parts)? {
                if m[0] != r {
                    continue;
                }
                let phi = memo.get(gas, &m);
                if phi == 0 {
                    continue;
                }
                let w = P::F::from_int(phi) * product(gas, &m) * inv_factorials::<P::F>(&m);
                let k = total_size(gas, &m);
                s.by_size[k] = s.by_size[k].clone() + w;
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = SizeSeries::zeros(budget);
    for p in &parts {
        total.add(p);
    }
    Ok(total)
}

/// Truncated `∂ ln Ξ / ∂ρ(root)`, indexed by total size including the root.
pub fn rooted_series<P: Polymers + ?Sized>(
    gas: &P,
    root: usize,
    budget: usize,
    max_parts: usize,
) -> Result<SizeSeries<P::F>> {
    let mut memo = UrsellMemo::new();
    let mut s = SizeSeries::<P::F>::zeros(budget);
    for m in connected_clusters(gas, &[root], 0, budget, max_parts)? {
        let phi = memo.get(gas, &m);
        if phi == 0 {
            continue;
        }
        let mut rest = m.clone();
        let pos = rest.iter().position(|&x| x == root).unwrap();
        rest.remove(pos);
        let w = P::F::from_int(phi) * product(gas, &rest) * inv_factorials::<P::F>(&rest);
        let k = total_size(gas, &m);
        s.by_size[k] = s.by_size[k].clone() + w;
    }
    Ok(s)
}

/// Clusters reachable from any of `roots`, each once, with the Ursell weight
/// `Φ^T ρ^M / M!` attached. Used for per-site shares of `ln Ξ`.
pub fn weighted_clusters_from<P: Polymers + ?Sized>(
    gas: &P,
    roots: &[usize],
    budget: usize,
    max_parts: usize,
) -> Result<Vec<(Multiset, P::F)>> {
    let mut all: Vec<Multiset> = Vec::new();
    for &r in roots {
        all.extend(connected_clusters(gas, &[r], 0, budget, max_parts)?);
    }
    all.sort_unstable();
    all.dedup();
    let mut memo = UrsellMemo::new();
    let mut out = Vec::with_capacity(all.len());
    for m in all {
        let phi = memo.get(gas, &m);
        if phi == 0 {
            continue;
        }
        let w = P::F::from_int(phi) * product(gas, &m) * inv_factorials::<P::F>(&m);
        out.push((m, w));
    }
    Ok(out)
}

/// Explicit polymer family: sizes, activities and incompatibility lists.
#[derive(Clone, Debug)]
pub struct ListGas<F> {
    pub sizes: Vec<usize>,
    pub activities: Vec<F>,
    /// Sorted incompatibility lists, each containing its own index.
    pub incompat: Vec<Vec<usize>>,
}

impl<F: Field> Polymers for ListGas<F> {
    type F = F;
    fn len(&self) -> usize {
        self.sizes.len()
    }
    fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }
    fn activity(&self, i: usize) -> F {
        self.activities[i].clone()
    }
    fn incompatible(&self, i: usize, max_size: usize) -> Vec<usize> {
        self.incompat[i].iter().copied().filter(|&j| self.sizes[j] <= max_size).collect()
    }
    fn are_incompatible(&self, i: usize, j: usize) -> bool {
        self.incompat[i].binary_search(&j).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::rational::BigRational;

    fn complete(n: usize) -> Vec<u32> {
        (0..n).map(|i| ((1u32 << n) - 1) & !(1 << i)).collect()
    }

    fn brute_ursell(adj: &[u32]) -> i64 {
        let n = adj.len();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).filter(move |&j| adj[i] >> j & 1 == 1).map(move |j| (i, j)))
            .collect();
        let mut total = 0;
        for mask in 0u64..(1 << edges.len()) {
            let mut d = crate::graphcore::Dsu::new(n);
            let mut comps = n;
            for (k, &(a, b)) in edges.iter().enumerate() {
                if mask >> k & 1 == 1 && d.union(a, b) {
                    comps -= 1;
                }
            }
            if comps == 1 {
                total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            }
        }
        total
    }

    #[test]
    fn complete_graph_closed_form() {
        let mut fact = 1i64;
        for n in 1..=7usize {
            let expect = if n % 2 == 1 { fact } else { -fact };
            assert_eq!(ursell_graph(&complete(n)), expect, "n = {n}");
            fact *= n as i64;
        }
    }

    #[test]
    fn matches_subgraph_sum() {
        // path, cycle, star and a disconnected graph on 5 vertices
        let path = vec![0b00010, 0b00101, 0b01010, 0b10100, 0b01000];
        let cycle = vec![0b10010, 0b00101, 0b01010, 0b10100, 0b01001];
        let star = vec![0b11110, 1, 1, 1, 1];
        let split = vec![0b00010, 0b00001, 0b01000, 0b00100, 0];
        for g in [path, cycle, star, split] {
            assert_eq!(ursell_graph(&g), brute_ursell(&g));
        }
        assert_eq!(ursell_graph(&[0, 0]), 0);
    }

    fn two_site_gas() -> ListGas<BigRational> {
        // polymers {a}, {b}, {a,b} of an abstract gas with overlap incompatibility
        let tenth = BigRational::new(1.into(), 10.into());
        let twentieth = BigRational::new(1.into(), 20.into());
        ListGas {
            sizes: vec![1, 1, 2],
            activities: vec![tenth.clone(), tenth, twentieth],
            incompat: vec![vec![0, 2], vec![1, 2], vec![0, 1, 2]],
        }
    }

    #[test]
    fn log_series_reproduces_exact_log_on_small_gas() {
        // Ξ = 1 + 1/10 + 1/10 + 1/100 + 1/20 = 63/50
        let g = two_site_gas();
        let gf = ListGas {
            sizes: g.sizes.clone(),
            activities: g.activities.iter().map(Field::to_f64).collect::<Vec<f64>>(),
            incompat: g.incompat.clone(),
        };
        let s = log_series(&gf, 14, 14).unwrap();
        assert!((s.total() - (63.0f64 / 50.0).ln()).abs() < 1e-8);
        // size-2 coefficient: ρ_ab − ρ_a²/2 − ρ_b²/2
        let exact = log_series(&g, 2, 8).unwrap();
        let expect = BigRational::new(1.into(), 20.into()) - BigRational::new(1.into(), 100.into());
        assert_eq!(exact.by_size[2], expect);
    }

    #[test]
    fn rooted_series_is_log_derivative() {
        // ∂ ln Ξ / ∂ρ_ab = 1/Ξ
        let g = two_site_gas();
        let gf = ListGas {
            sizes: g.sizes.clone(),
            activities: g.activities.iter().map(Field::to_f64).collect::<Vec<f64>>(),
            incompat: g.incompat.clone(),
        };
        let s = rooted_series(&gf, 2, 15, 14).unwrap();
        assert!((s.total() - 50.0 / 63.0).abs() < 1e-8);
    }

    #[test]
    fn clusters_are_unique_and_connected() {
        let g = two_site_gas();
        let cs = connected_clusters(&g, &[0], 0, 4, 8).unwrap();
        let mut d = cs.clone();
        d.dedup();
        assert_eq!(d, cs);
        // {a,b} as singletons are compatible: the pair [0,1] never appears
        assert!(!cs.contains(&vec![0, 1]));
        assert!(cs.contains(&vec![0, 1, 2]));
        assert!(matches!(connected_clusters(&g, &[0], 0, 10, 3), Err(RcmError::Cap { .. })));
    }
}
