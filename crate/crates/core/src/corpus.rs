//! Bundled small graphs and parameter pairs for the identity suites.

use crate::graphcore::TemplateSpec;

fn cycle(n: usize, boundary: &[usize]) -> TemplateSpec {
    let names: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let edges: Vec<(String, String)> = (0..n).map(|i| (names[i].clone(), names[(i + 1) % n].clone())).collect();
    let bd: Vec<String> = boundary.iter().map(|&i| names[i].clone()).collect();
    TemplateSpec::edges(&names, &edges, &bd)
}

fn listed(vertices: &[&str], edges: &[(&str, &str)], boundary: &[&str]) -> TemplateSpec {
    TemplateSpec::edges(vertices, edges, boundary)
}

/// Named graphs with at most 12 window edges: paths, cycles, grids, trees
/// and a few irregular graphs. Every entry has a nonempty boundary.
pub fn small_graphs() -> Vec<(&'static str, TemplateSpec)> {
    vec![
        ("path-2", TemplateSpec::zd(&[2], 0)),
        ("path-4", TemplateSpec::zd(&[4], 0)),
        ("path-7", TemplateSpec::zd(&[7], 0)),
        ("path-13", TemplateSpec::zd(&[13], 0)),
        ("path-5-in-9", TemplateSpec::zd(&[9], 2)),
        ("grid-2x2", TemplateSpec::zd(&[2, 2], 0)),
        ("grid-2x3", TemplateSpec::zd(&[2, 3], 0)),
        ("grid-2x4", TemplateSpec::zd(&[2, 4], 0)),
        ("grid-3x3", TemplateSpec::zd(&[3, 3], 0)),
        ("grid-3x3-in-5x5", TemplateSpec::zd(&[5, 5], 1)),
        ("grid-2x4-in-4x6", TemplateSpec::zd(&[4, 6], 1)),
        ("cube-2", TemplateSpec::zd(&[2, 2, 2], 0)),
        ("tree-3-2", TemplateSpec::tree(3, 2, 0)),
        ("tree-4-1", TemplateSpec::tree(4, 1, 0)),
        ("tree-3-3-window-2", TemplateSpec::tree(3, 3, 1)),
        ("cycle-3", cycle(3, &[0])),
        ("cycle-4", cycle(4, &[0])),
        ("cycle-6", cycle(6, &[0, 3])),
        ("cycle-8", cycle(8, &[0])),
        ("cycle-12", cycle(12, &[0, 6])),
        (
            "house",
            listed(&["a", "b", "c", "d", "e"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("c", "e"), ("d", "e")], &["a"]),
        ),
        (
            "k4",
            listed(&["a", "b", "c", "d"], &[("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")], &["a"]),
        ),
        (
            "kite-with-tail",
            listed(
                &["a", "b", "c", "d", "e", "f", "g"],
                &[("a", "b"), ("a", "c"), ("b", "c"), ("b", "d"), ("c", "d"), ("d", "e"), ("e", "f"), ("f", "g"), ("e", "g")],
                &["a", "g"],
            ),
        ),
        (
            "theta",
            listed(
                &["s", "t", "u1", "u2", "v1", "w1", "w2", "w3"],
                &[("s", "u1"), ("u1", "u2"), ("u2", "t"), ("s", "v1"), ("v1", "t"), ("s", "w1"), ("w1", "w2"), ("w2", "w3"), ("w3", "t")],
                &["s"],
            ),
        ),
    ]
}

/// Rational (p, q) pairs on both sides of q = 1.
pub fn rational_pairs() -> Vec<((i64, i64), (i64, i64))> {
    vec![
        ((1, 5), (1, 2)),
        ((1, 3), (3, 1)),
        ((2, 3), (2, 1)),
        ((9, 10), (1, 3)),
        ((1, 7), (5, 4)),
        ((3, 4), (7, 10)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphcore::HostGraph;

    #[test]
    fn corpus_shape() {
        let all = small_graphs();
        assert!(all.len() >= 20);
        for (name, spec) in all {
            let g = HostGraph::build(&spec).unwrap();
            assert!(g.window_edges().len() <= 12, "{name}");
            assert!(g.int_boundary().count_ones(..) > 0, "{name}");
        }
        assert!(rational_pairs().iter().any(|(_, q)| q.0 < q.1));
        assert!(rational_pairs().iter().any(|(_, q)| q.0 > q.1));
    }
}
