//! Handcrafted graphs shared by the integration and acceptance suites.

use pagestream::graph::{EdgeList, VertexId};

pub fn weighted(n: usize, edges: &[(VertexId, VertexId, u32)]) -> EdgeList {
    EdgeList::new(
        n,
        edges.iter().map(|&(s, d, _)| (s, d)).collect(),
        Some(edges.iter().map(|&(_, _, w)| w).collect()),
    )
    .unwrap()
}

/// Unit weights on an unweighted shape, so SSSP runs on it too.
pub fn unit(n: usize, edges: &[(VertexId, VertexId)]) -> EdgeList {
    let e: Vec<_> = edges.iter().map(|&(s, d)| (s, d, 1)).collect();
    weighted(n, &e)
}

pub fn corpus() -> Vec<(&'static str, EdgeList)> {
    let path: Vec<_> = (0..15).map(|i| (i, i + 1)).collect();
    let star: Vec<_> = (1..40).map(|i| (0, i)).collect();
    let in_star: Vec<_> = (1..40).map(|i| (i, 0)).collect();
    vec![
        ("single vertex", unit(1, &[])),
        ("edgeless", unit(6, &[])),
        ("path", unit(16, &path)),
        (
            "reversed path",
            unit(16, &path.iter().map(|&(a, b)| (b, a)).collect::<Vec<_>>()),
        ),
        ("out star", unit(40, &star)),
        ("in star", unit(40, &in_star)),
        (
            "disjoint components",
            unit(9, &[(0, 1), (1, 2), (3, 4), (5, 6), (6, 7), (7, 5)]),
        ),
        (
            "self loops",
            unit(4, &[(0, 0), (0, 1), (1, 1), (1, 2), (3, 3)]),
        ),
        (
            "duplicate edges",
            weighted(
                4,
                &[
                    (0, 1, 5),
                    (0, 1, 2),
                    (0, 1, 9),
                    (1, 2, 1),
                    (1, 2, 1),
                    (2, 3, 4),
                ],
            ),
        ),
        (
            "unreachable tail",
            unit(8, &[(0, 1), (1, 2), (4, 3), (5, 6), (6, 7)]),
        ),
        (
            "shortcut beats hops",
            weighted(
                5,
                &[
                    (0, 1, 1),
                    (1, 2, 1),
                    (2, 3, 1),
                    (3, 4, 1),
                    (0, 4, 10),
                    (0, 3, 2),
                ],
            ),
        ),
        (
            "max label wins nothing",
            unit(5, &[(4, 3), (3, 2), (2, 1), (1, 0)]),
        ),
        ("dense clique", {
            let mut e = Vec::new();
            for a in 0..12 {
                for b in 0..12 {
                    if a != b {
                        e.push((a, b, 1 + (a * 7 + b * 3) % 9));
                    }
                }
            }
            weighted(12, &e)
        }),
    ]
}
