//! Host graphs, templates, metrics and enumeration primitives.

mod enumerate;
mod metrics;

pub use enumerate::{
    connected_sets_in, edge_adjacency, enumerate_connected_vertex_sets,
    enumerate_r_connected_edge_sets, r_connected_edge_sets_in, Caps,
};
pub(crate) use enumerate::grow_rooted;
pub use metrics::{
    cut_set_function, diameter, distance, edge_boundary, is_r_connected, r_threshold,
    saw_counts, set_distance, tree_distance, vertex_boundaries, SawCounts,
};

use std::collections::{HashMap, VecDeque};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{RcmError, Result};

pub type VertexSet = FixedBitSet;
pub type EdgeSet = FixedBitSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Free,
    Wired,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = RcmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" | "0" => Ok(BoundaryCondition::Free),
            "wired" | "1" => Ok(BoundaryCondition::Wired),
            _ => Err(RcmError::Parse(format!("unknown boundary condition {s:?}"))),
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryCondition::Free => "free",
            BoundaryCondition::Wired => "wired",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NameLit {
    Text(String),
    Int(i64),
}

impl NameLit {
    fn as_string(&self) -> String {
        match self {
            NameLit::Text(s) => s.clone(),
            NameLit::Int(i) => i.to_string(),
        }
    }
}

/// Graph descriptor, also the on-disk graph spec format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "lowercase")]
pub enum TemplateSpec {
    Zd {
        dims: Vec<usize>,
        #[serde(default)]
        margin: usize,
    },
    Tree {
        degree: usize,
        depth: usize,
        #[serde(default)]
        margin: usize,
    },
    /// Explicit edge list. `boundary` lists vertices that have a link to the
    /// rest of an ambient infinite graph; without it the graph is closed.
    Edges {
        vertices: Vec<NameLit>,
        edges: Vec<[NameLit; 2]>,
        #[serde(default)]
        boundary: Vec<NameLit>,
    },
}

impl TemplateSpec {
    pub fn zd(dims: &[usize], margin: usize) -> Self {
        TemplateSpec::Zd { dims: dims.to_vec(), margin }
    }

    pub fn tree(degree: usize, depth: usize, margin: usize) -> Self {
        TemplateSpec::Tree { degree, depth, margin }
    }

    pub fn edges<S: AsRef<str>>(vertices: &[S], edges: &[(S, S)], boundary: &[S]) -> Self {
        let lit = |s: &S| NameLit::Text(s.as_ref().to_string());
        TemplateSpec::Edges {
            vertices: vertices.iter().map(lit).collect(),
            edges: edges.iter().map(|(a, b)| [lit(a), lit(b)]).collect(),
            boundary: boundary.iter().map(lit).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RcmError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("template serializes")
    }
}

/// Orbit data of a quasi-transitive template: (orbit id, fraction, degree).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Orbit {
    pub id: usize,
    pub fraction: (u64, u64),
    pub degree: usize,
}

#[derive(Clone, Debug)]
pub struct HostGraph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    coords: Vec<Vec<i64>>,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
    vadj: Vec<Vec<usize>>,
    missing: Vec<usize>,
    window: VertexSet,
    window_list: Vec<usize>,
    window_edges: Vec<usize>,
    window_edge_mask: EdgeSet,
    int_boundary: VertexSet,
    crossing_edges: Vec<usize>,
    margin: usize,
    template: TemplateSpec,
    template_degree: usize,
    max_degree: usize,
    orbits: Option<Vec<Orbit>>,
    dist: Vec<u16>,
}

impl HostGraph {
    /// Build a host graph from a descriptor.
    pub fn build(spec: &TemplateSpec) -> Result<HostGraph> {
        match spec {
            TemplateSpec::Zd { dims, margin } => build_zd(dims, *margin, spec.clone()),
            TemplateSpec::Tree { degree, depth, margin } => {
                build_tree(*degree, *depth, *margin, spec.clone())
            }
            TemplateSpec::Edges { vertices, edges, boundary } => {
                build_edges(vertices, edges, boundary, spec.clone())
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        names: Vec<String>,
        coords: Vec<Vec<i64>>,
        edges: Vec<(usize, usize)>,
        missing: Vec<usize>,
        window: VertexSet,
        margin: usize,
        template: TemplateSpec,
        template_degree: usize,
        orbits: Option<Vec<Orbit>>,
    ) -> Result<HostGraph> {
        let n = names.len();
        if n == 0 {
            return Err(RcmError::Template("graph has no vertices".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in names.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(RcmError::Template(format!("duplicate vertex name {s:?}")));
            }
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(RcmError::Template(format!("self-loop at {:?}", names[a])));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(RcmError::Template(format!(
                    "duplicate edge {{{}, {}}}",
                    names[a], names[b]
                )));
            }
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.is_empty() {
                return Err(RcmError::Template(format!("vertex {:?} has degree 0", names[v])));
            }
        }
        let vadj: Vec<Vec<usize>> =
            adj.iter().map(|l| l.iter().map(|&(w, _)| w).collect()).collect();
        let max_degree = vadj.iter().map(Vec::len).max().unwrap_or(0);

        let mut dist = vec![u16::MAX; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                for &w in &vadj[u] {
                    if row[w] == u16::MAX {
                        row[w] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
            if row.iter().any(|&d| d == u16::MAX) {
                return Err(RcmError::Template("graph is not connected".into()));
            }
        }

        let window_list: Vec<usize> = window.ones().collect();
        if window_list.is_empty() {
            return Err(RcmError::Template("window is empty".into()));
        }
        let mut window_edge_mask = FixedBitSet::with_capacity(edges.len());
        let mut window_edges = Vec::new();
        let mut crossing_edges = Vec::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            match (window.contains(a), window.contains(b)) {
                (true, true) => {
                    window_edges.push(k);
                    window_edge_mask.insert(k);
                }
                (true, false) | (false, true) => crossing_edges.push(k),
                _ => {}
            }
        }
        let mut int_boundary = FixedBitSet::with_capacity(n);
        for &v in &window_list {
            if missing[v] > 0 || vadj[v].iter().any(|&w| !window.contains(w)) {
                int_boundary.insert(v);
            }
        }
        let g = HostGraph {
            names,
            index,
            coords,
            edges,
            adj,
            vadj,
            missing,
            window,
            window_list,
            window_edges,
            window_edge_mask,
            int_boundary,
            crossing_edges,
            margin,
            template,
            template_degree: template_degree.max(max_degree),
            max_degree,
            orbits,
            dist,
        };
        // margin invariant
        for &v in &g.window_list {
            let d = g.distance_to_host_boundary(v);
            if let Some(d) = d {
                if d < margin {
                    return Err(RcmError::Template(format!(
                        "window vertex {:?} is {} steps from the host boundary, margin is {}",
                        g.names[v], d, margin
                    )));
                }
            }
        }
        Ok(g)
    }

    pub fn n_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.index.get(name.trim()).copied()
    }

    /// Lattice coordinates (Z^d templates only).
    pub fn coords(&self, v: usize) -> Option<&[i64]> {
        self.coords.get(v).map(Vec::as_slice)
    }

    pub fn vertex_at(&self, c: &[i64]) -> Option<usize> {
        if self.coords.is_empty() {
            return None;
        }
        self.vertex(&coord_name(c))
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].iter().find(|&&(w, _)| w == b).map(|&(_, e)| e)
    }

    /// (neighbour, edge index) pairs.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vadj[v]
    }

    pub(crate) fn vadj(&self) -> &[Vec<usize>] {
        &self.vadj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.vadj[v].len()
    }

    /// Largest degree present in the host graph.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Degree bound of the graph the host stands in for.
    pub fn template_degree(&self) -> usize {
        self.template_degree
    }

    /// Number of template neighbours not present in the host.
    pub fn missing(&self, v: usize) -> usize {
        self.missing[v]
    }

    pub fn is_host_boundary(&self, v: usize) -> bool {
        self.missing[v] > 0
    }

    pub fn has_host_boundary(&self) -> bool {
        self.missing.iter().any(|&m| m > 0)
    }

    pub fn host_boundary(&self) -> VertexSet {
        let mut s = FixedBitSet::with_capacity(self.n_vertices());
        for (v, &m) in self.missing.iter().enumerate() {
            if m > 0 {
                s.insert(v);
            }
        }
        s
    }

    pub fn distance_to_host_boundary(&self, v: usize) -> Option<usize> {
        (0..self.n_vertices())
            .filter(|&w| self.missing[w] > 0)
            .map(|w| self.dist(v, w))
            .min()
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn template(&self) -> &TemplateSpec {
        &self.template
    }

    pub fn is_tree_template(&self) -> bool {
        matches!(self.template, TemplateSpec::Tree { .. })
    }

    pub fn orbit_fractions(&self) -> Option<&[Orbit]> {
        self.orbits.as_deref()
    }

    /// ½ Σ α_i Δ_i over vertex orbits: the limit of |E_N|/|V_N|.
    pub fn edge_density_limit(&self) -> Option<f64> {
        self.orbit_fractions().map(|o| {
            0.5 * o.iter().map(|x| (x.fraction.0 as f64 / x.fraction.1 as f64) * x.degree as f64).sum::<f64>()
        })
    }

    pub fn window(&self) -> &VertexSet {
        &self.window
    }

    pub fn window_vertices(&self) -> &[usize] {
        &self.window_list
    }

    pub fn in_window(&self, v: usize) -> bool {
        self.window.contains(v)
    }

    /// Edges of the host restricted to the window.
    pub fn window_edges(&self) -> &[usize] {
        &self.window_edges
    }

    pub fn window_edge_mask(&self) -> &EdgeSet {
        &self.window_edge_mask
    }

    /// Window vertices with a neighbour outside the window, counting
    /// template neighbours missing from the host.
    pub fn int_boundary(&self) -> &VertexSet {
        &self.int_boundary
    }

    /// Window vertices not on the internal boundary.
    pub fn window_interior(&self) -> VertexSet {
        let mut s = self.window.clone();
        s.difference_with(&self.int_boundary);
        s
    }

    /// Host edges with exactly one endpoint in the window.
    pub fn crossing_edges(&self) -> &[usize] {
        &self.crossing_edges
    }

    /// Size of the window edge boundary, counting links to missing
    /// template neighbours.
    pub fn window_edge_boundary_size(&self) -> usize {
        self.crossing_edges.len() + self.window_list.iter().map(|&v| self.missing[v]).sum::<usize>()
    }

    pub fn dist(&self, a: usize, b: usize) -> usize {
        self.dist[a * self.names.len() + b] as usize
    }

    /// Center vertex of the window (Z^d: the coordinate midpoint rounded
    /// down; trees: the root; explicit graphs: the vertex minimising
    /// eccentricity within the window).
    pub fn window_center(&self) -> usize {
        match &self.template {
            TemplateSpec::Zd { dims, .. } => {
                let c: Vec<i64> = dims.iter().map(|&l| ((l as i64) - 1) / 2).collect();
                self.vertex_at(&c).expect("center exists")
            }
            TemplateSpec::Tree { .. } => 0,
            TemplateSpec::Edges { .. } => *self
                .window_list
                .iter()
                .min_by_key(|&&v| {
                    self.window_list.iter().map(|&w| self.dist(v, w)).max().unwrap_or(0)
                })
                .unwrap(),
        }
    }

    pub fn vertex_set(&self, vs: &[usize]) -> VertexSet {
        let mut s = FixedBitSet::with_capacity(self.n_vertices());
        for &v in vs {
            s.insert(v);
        }
        s
    }

    pub fn edge_set(&self, es: &[usize]) -> EdgeSet {
        let mut s = FixedBitSet::with_capacity(self.n_edges());
        for &e in es {
            s.insert(e);
        }
        s
    }

    /// Parse comma-separated vertex names; commas inside parentheses are
    /// part of a name.
    pub fn parse_vertices(&self, text: &str) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        let flush = |cur: &mut String, out: &mut Vec<usize>| -> Result<()> {
            let t = cur.trim();
            if !t.is_empty() {
                let v = self
                    .vertex(t)
                    .ok_or_else(|| RcmError::Parse(format!("unknown vertex {t:?}")))?;
                out.push(v);
            }
            cur.clear();
            Ok(())
        };
        for ch in text.chars() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            if ch == ',' && depth == 0 {
                flush(&mut cur, &mut out)?;
            } else {
                cur.push(ch);
            }
        }
        flush(&mut cur, &mut out)?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Support (incident vertices) of an edge set.
    pub fn support(&self, s: &EdgeSet) -> VertexSet {
        let mut v = FixedBitSet::with_capacity(self.n_vertices());
        for e in s.ones() {
            let (a, b) = self.edges[e];
            v.insert(a);
            v.insert(b);
        }
        v
    }
}

pub(crate) fn coord_name(c: &[i64]) -> String {
    let parts: Vec<String> = c.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

fn build_zd(dims: &[usize], margin: usize, spec: TemplateSpec) -> Result<HostGraph> {
    if dims.is_empty() || dims.iter().any(|&l| l == 0) {
        return Err(RcmError::Template("Z^d box needs positive dims".into()));
    }
    let smallest = *dims.iter().min().unwrap();
    if 2 * margin >= smallest {
        return Err(RcmError::Template(format!(
            "margin {margin} too large for smallest side {smallest}"
        )));
    }
    let d = dims.len();
    let n: usize = dims.iter().product();
    let mut coords = Vec::with_capacity(n);
    for mut idx in 0..n {
        let mut c = vec![0i64; d];
        for axis in (0..d).rev() {
            c[axis] = (idx % dims[axis]) as i64;
            idx /= dims[axis];
        }
        coords.push(c);
    }
    let flat = |c: &[i64]| -> usize {
        let mut i = 0usize;
        for axis in 0..d {
            i = i * dims[axis] + c[axis] as usize;
        }
        i
    };
    let mut edges = Vec::new();
    for (v, c) in coords.iter().enumerate() {
        for axis in 0..d {
            if (c[axis] as usize) + 1 < dims[axis] {
                let mut c2 = c.clone();
                c2[axis] += 1;
                edges.push((v, flat(&c2)));
            }
        }
    }
    let mut missing = vec![0usize; n];
    let mut window = FixedBitSet::with_capacity(n);
    for (v, c) in coords.iter().enumerate() {
        let mut deg = 0;
        let mut inside = true;
        for axis in 0..d {
            let x = c[axis] as usize;
            if x > 0 {
                deg += 1;
            }
            if x + 1 < dims[axis] {
                deg += 1;
            }
            if x < margin || x + margin >= dims[axis] {
                inside = false;
            }
        }
        missing[v] = 2 * d - deg;
        if inside {
            window.insert(v);
        }
    }
    let names = coords.iter().map(|c| coord_name(c)).collect();
    HostGraph::assemble(
        names,
        coords,
        edges,
        missing,
        window,
        margin,
        spec,
        2 * d,
        Some(vec![Orbit { id: 0, fraction: (1, 1), degree: 2 * d }]),
    )
}

fn build_tree(k: usize, depth: usize, margin: usize, spec: TemplateSpec) -> Result<HostGraph> {
    if k < 2 {
        return Err(RcmError::Template("tree degree must be at least 2".into()));
    }
    if depth == 0 {
        return Err(RcmError::Template("tree of depth 0 has a degree-0 vertex".into()));
    }
    if margin > depth {
        return Err(RcmError::Template(format!("margin {margin} exceeds depth {depth}")));
    }
    let mut names = vec!["r".to_string()];
    let mut level = vec![0usize];
    let mut depth_of = vec![0usize];
    let mut edges = Vec::new();
    for dcur in 1..=depth {
        let mut next = Vec::new();
        for &parent in &level {
            let kids = if parent == 0 { k } else { k - 1 };
            for i in 0..kids {
                let id = names.len();
                names.push(format!("{}.{}", names[parent], i));
                depth_of.push(dcur);
                edges.push((parent, id));
                next.push(id);
            }
        }
        level = next;
    }
    let n = names.len();
    let mut deg = vec![0usize; n];
    for &(a, b) in &edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    let missing: Vec<usize> = deg.iter().map(|&x| k - x).collect();
    let mut window = FixedBitSet::with_capacity(n);
    for v in 0..n {
        if depth_of[v] + margin <= depth {
            window.insert(v);
        }
    }
    HostGraph::assemble(
        names,
        Vec::new(),
        edges,
        missing,
        window,
        margin,
        spec,
        k,
        Some(vec![Orbit { id: 0, fraction: (1, 1), degree: k }]),
    )
}

fn build_edges(
    vertices: &[NameLit],
    edges: &[[NameLit; 2]],
    boundary: &[NameLit],
    spec: TemplateSpec,
) -> Result<HostGraph> {
    let names: Vec<String> = vertices.iter().map(NameLit::as_string).collect();
    let lookup: HashMap<&str, usize> =
        names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let find = |l: &NameLit| -> Result<usize> {
        let s = l.as_string();
        lookup
            .get(s.as_str())
            .copied()
            .ok_or_else(|| RcmError::Template(format!("edge mentions unknown vertex {s:?}")))
    };
    let mut es = Vec::with_capacity(edges.len());
    for [a, b] in edges {
        es.push((find(a)?, find(b)?));
    }
    let mut missing = vec![0usize; names.len()];
    for b in boundary {
        missing[find(b)?] = 1;
    }
    let n = names.len();
    let mut window = FixedBitSet::with_capacity(n);
    window.insert_range(..);
    HostGraph::assemble(names, Vec::new(), es, missing, window, 0, spec, 0, None)
}

/// Disjoint-set forest over `0..n`.
#[derive(Clone, Debug)]
pub struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if ra < rb {
            self.parent[rb] = ra;
        } else {
            self.parent[ra] = rb;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_box_counts() {
        let g = HostGraph::build(&TemplateSpec::zd(&[5, 5], 0)).unwrap();
        assert_eq!(g.n_vertices(), 25);
        assert_eq!(g.n_edges(), 40);
        assert_eq!(g.template_degree(), 4);
        assert_eq!(g.int_boundary().count_ones(..), 16);
        assert_eq!(g.window_edges().len(), 40);
        // 4 sides of 5 plus 4 corners counted twice
        assert_eq!(g.window_edge_boundary_size(), 20);
    }

    #[test]
    fn margin_window() {
        let g = HostGraph::build(&TemplateSpec::zd(&[6, 6], 1)).unwrap();
        assert_eq!(g.window_vertices().len(), 16);
        assert_eq!(g.window_edges().len(), 24);
        assert_eq!(g.crossing_edges().len(), 16);
        assert_eq!(g.int_boundary().count_ones(..), 12);
        assert_eq!(g.window_center(), g.vertex("(2,2)").unwrap());
        assert!(HostGraph::build(&TemplateSpec::zd(&[4, 4], 2)).is_err());
    }

    #[test]
    fn tree_counts() {
        let g = HostGraph::build(&TemplateSpec::tree(3, 2, 0)).unwrap();
        assert_eq!(g.n_vertices(), 10);
        assert_eq!(g.n_edges(), 9);
        assert_eq!(g.missing(g.vertex("r.0.1").unwrap()), 2);
        assert_eq!(g.missing(0), 0);
        assert!(HostGraph::build(&TemplateSpec::tree(3, 0, 0)).is_err());
    }

    #[test]
    fn explicit_path() {
        let g = HostGraph::build(&TemplateSpec::edges(&["a", "b", "c"], &[("a", "b"), ("b", "c")], &[]))
            .unwrap();
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.int_boundary().count_ones(..), 0);
        let bad = TemplateSpec::edges(&["a", "b", "c", "d"], &[("a", "b"), ("c", "d")], &[]);
        assert!(matches!(HostGraph::build(&bad), Err(RcmError::Template(_))));
        let iso = TemplateSpec::edges(&["a", "b", "c"], &[("a", "b")], &[]);
        assert!(HostGraph::build(&iso).is_err());
        let dup = TemplateSpec::edges(&["a", "b"], &[("a", "b"), ("b", "a")], &[]);
        assert!(HostGraph::build(&dup).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = TemplateSpec::from_json(r#"{"template":"zd","dims":[3,4],"margin":1}"#).unwrap();
        assert_eq!(t, TemplateSpec::zd(&[3, 4], 1));
        let t = TemplateSpec::from_json(
            r#"{"template":"edges","vertices":[1,2,"x"],"edges":[[1,2],[2,"x"]],"boundary":["x"]}"#,
        )
        .unwrap();
        let g = HostGraph::build(&t).unwrap();
        assert_eq!(g.int_boundary().count_ones(..), 1);
        assert_eq!(TemplateSpec::from_json(&t.to_json()).unwrap(), t);
        assert!(TemplateSpec::from_json("{").is_err());
    }

    #[test]
    fn parse_names_with_commas() {
        let g = HostGraph::build(&TemplateSpec::zd(&[3, 3], 0)).unwrap();
        let xs = g.parse_vertices("(0,0), (1,2)").unwrap();
        assert_eq!(xs, vec![g.vertex("(0,0)").unwrap(), g.vertex("(1,2)").unwrap()]);
        assert!(g.parse_vertices("(9,9)").is_err());
    }
}
