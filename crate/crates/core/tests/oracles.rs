mod common;

use common::*;
use proptest::prelude::*;

use wsdt_core::maxflow::max_flow;
use wsdt_core::{waterfill, CapGraph};

fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..=10).prop_flat_map(|n| {
        (
            proptest::collection::vec(prop_oneof![1 => Just(0.0), 8 => 0.001..100.0f64], n),
            proptest::collection::vec(0.001..50.0f64, n),
            0.0..200.0f64,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn waterfill_matches_bisection((w, caps, budget) in triple()) {
        let fast = waterfill(&w, &caps, budget).rates;
        let slow = bisection_waterfill(&w, &caps, budget);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!(close(*a, *b, 1e-6), "{fast:?} vs {slow:?}");
        }
        let total: f64 = fast.iter().sum();
        prop_assert!(total <= budget * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn max_flow_matches_cut_enumeration(g in graph(8)) {
        let last = g.vertex_count() - 1;
        prop_assert_eq!(max_flow(&g, 0, last).unwrap(), exhaustive_min_cut(&g, 0, last));
    }
}

#[test]
fn diamond_with_cross_edge() {
    let mut g = CapGraph::new(4);
    g.add_edge(0, 1, 3.0).unwrap();
    g.add_edge(0, 2, 2.0).unwrap();
    g.add_edge(1, 3, 2.0).unwrap();
    g.add_edge(2, 3, 3.0).unwrap();
    g.add_edge(1, 2, 1.0).unwrap();
    assert_eq!(max_flow(&g, 0, 3).unwrap(), 5.0);
    assert_eq!(exhaustive_min_cut(&g, 0, 3), 5.0);
}

#[test]
fn weighted_waterfill_example() {
    let sol = waterfill(&[4.0, 1.0, 1.0], &[2.0; 3], 5.0);
    assert!((sol.level - 1.5).abs() < 1e-12);
    assert_eq!(
        sol.rates,
        bisection_waterfill(&[4.0, 1.0, 1.0], &[2.0; 3], 5.0)
            .iter()
            .map(|r| (r * 1e9).round() / 1e9)
            .collect::<Vec<_>>()
    );
}
