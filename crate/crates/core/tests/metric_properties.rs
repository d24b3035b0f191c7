use corecheck::{from_points, metric_closure, validate, EuclideanConfig, GraphSpec, Instance};
use proptest::prelude::*;

/// A connected graph: a random spanning tree plus extra edges.
fn graph() -> impl Strategy<Value = GraphSpec> {
    (2usize..9)
        .prop_flat_map(|m| {
            let tree = proptest::collection::vec((any::<prop::sample::Index>(), 0.01f64..10.0), m - 1);
            let extra = proptest::collection::vec((0..m, 0..m, 0.01f64..10.0), 0..2 * m);
            let mult = proptest::collection::vec(1usize..4, m);
            (Just(m), tree, extra, mult)
        })
        .prop_map(|(m, tree, extra, mult)| {
            let labels: Vec<String> = (0..m).map(|i| format!("v{i}")).collect();
            let mut g = GraphSpec::new(labels.clone(), mult, 1);
            for (i, (parent, len)) in tree.into_iter().enumerate() {
                let child = i + 1;
                g.edge(&labels[child], &labels[parent.index(child)], len).unwrap();
            }
            for (a, b, len) in extra {
                if a != b {
                    g.edge(&labels[a], &labels[b], len).unwrap();
                }
            }
            g
        })
}

fn points(dim: usize) -> impl Strategy<Value = EuclideanConfig> {
    (1usize..9).prop_flat_map(move |m| {
        (
            proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, dim), m),
            proptest::collection::vec(1usize..4, m),
        )
            .prop_map(move |(coords, multiplicity)| EuclideanConfig {
                labels: (0..m).map(|i| format!("p{i}")).collect(),
                multiplicity,
                coords,
                k: 1,
            })
    })
}

/// Plain Floyd-Warshall from the edge list, for comparison.
fn floyd_warshall(g: &GraphSpec) -> Vec<Vec<f64>> {
    let m = g.labels.len();
    let mut d = vec![vec![f64::INFINITY; m]; m];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in &g.edges {
        d[e.a][e.b] = d[e.a][e.b].min(e.length);
        d[e.b][e.a] = d[e.b][e.a].min(e.length);
    }
    for h in 0..m {
        for i in 0..m {
            for j in 0..m {
                if d[i][h] + d[h][j] < d[i][j] {
                    d[i][j] = d[i][h] + d[h][j];
                }
            }
        }
    }
    d
}

fn scale_graph(g: &GraphSpec, lambda: f64) -> GraphSpec {
    let mut s = g.clone();
    for e in &mut s.edges {
        e.length *= lambda;
    }
    s
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn closure_is_exactly_metric(g in graph()) {
        let inst = metric_closure(&g).unwrap();
        let report = validate(&inst, 0.0);
        prop_assert!(report.is_empty(), "{}", report);
    }

    #[test]
    fn closure_matches_floyd_warshall(g in graph()) {
        let inst = metric_closure(&g).unwrap();
        let reference = floyd_warshall(&g);
        for (row, expected) in inst.dist_matrix().iter().zip(&reference) {
            for (&x, &y) in row.iter().zip(expected) {
                prop_assert!(close(x, y, 1e-12), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn points_are_metric(e in points(2)) {
        let inst = from_points(&e).unwrap();
        prop_assert!(validate(&inst, 1e-9).is_empty());
    }

    #[test]
    fn points_in_3d_are_metric(e in points(3)) {
        let inst = from_points(&e).unwrap();
        prop_assert!(validate(&inst, 1e-9).is_empty());
    }

    #[test]
    fn scaling_edges_scales_distances(g in graph(), lambda in 0.001f64..1000.0) {
        let base = metric_closure(&g).unwrap();
        let scaled = metric_closure(&scale_graph(&g, lambda)).unwrap();
        for (r0, r1) in base.dist_matrix().iter().zip(scaled.dist_matrix()) {
            for (&x, &y) in r0.iter().zip(r1) {
                prop_assert!(close(x * lambda, y, 1e-12), "{} vs {y}", x * lambda);
            }
        }
    }

    #[test]
    fn scaling_points_scales_distances(e in points(2), lambda in 0.001f64..1000.0) {
        let base = from_points(&e).unwrap();
        let mut s = e.clone();
        for p in &mut s.coords {
            for v in p {
                *v *= lambda;
            }
        }
        let scaled = from_points(&s).unwrap();
        for (r0, r1) in base.dist_matrix().iter().zip(scaled.dist_matrix()) {
            for (&x, &y) in r0.iter().zip(r1) {
                prop_assert!(close(x * lambda, y, 1e-12), "{} vs {y}", x * lambda);
            }
        }
        let by_method = base.scaled(lambda);
        for (r0, r1) in by_method.dist_matrix().iter().zip(scaled.dist_matrix()) {
            for (&x, &y) in r0.iter().zip(r1) {
                prop_assert!(close(x, y, 1e-12));
            }
        }
    }

    #[test]
    fn expansion_restricts_to_original(g in graph()) {
        let inst = metric_closure(&g).unwrap();
        let expanded: Instance = inst.expand();
        prop_assert_eq!(expanded.num_agents(), inst.num_agents());
        prop_assert_eq!(expanded.num_sites(), inst.num_agents());
        prop_assert!(expanded.multiplicity().iter().all(|&c| c == 1));
        for s in 0..inst.num_sites() {
            for t in 0..inst.num_sites() {
                let (a, b) = (inst.agent_id(s, 0), inst.agent_id(t, 0));
                prop_assert_eq!(expanded.dist(a, b), inst.dist(s, t));
            }
            for copy in 0..inst.multiplicity()[s] {
                prop_assert_eq!(expanded.dist(inst.agent_id(s, 0), inst.agent_id(s, copy)), 0.0);
            }
        }
        prop_assert!(validate(&expanded, 0.0).is_empty());
    }
}

#[test]
fn triangle_violation_is_reported() {
    let labels = vec!["1".to_string(), "2".to_string(), "3".to_string()];
    let dist = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
    let inst = Instance::new(labels.clone(), vec![1; 3], dist, 1).unwrap();
    let report = validate(&inst, 1e-9);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].describe(&labels), "triangle (1,2,3) violated by 3");
}
