mod common;

use common::*;
use proptest::prelude::*;

use wsdt_core::maxflow::{finish_schedule, max_flow};
use wsdt_core::{
    case_scenario, depth2_rateless, mutualcast, validate_scenario, verify_static_schedule,
    wsdt_lower_bound, BenchmarkCase, Downlink, Network, PeerSpec, StaticScheme, WeightProfile,
};

proptest! {
    #[test]
    fn static_schemes_hold_their_invariants(net in network(12)) {
        let bad = static_violations(&net);
        prop_assert!(bad.iter().all(|(k, _)| *k != "capacity"), "{:?}", bad);
        prop_assert!(bad.iter().all(|(k, _)| *k != "min-cut"), "{:?}", bad);
        prop_assert!(bad.iter().all(|(k, _)| *k != "sum-optimal"), "{:?}", bad);
    }

    #[test]
    fn dominance_without_downlink_limits(net in unbounded_network(12)) {
        let bad = static_violations(&net);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn saturated_networks_run_at_the_downlink(net in saturated_network(12)) {
        let bad = static_violations(&net);
        prop_assert!(bad.iter().all(|(k, _)| *k != "saturated"), "{:?}", bad);
    }

    #[test]
    fn static_wsdt_is_above_the_bound(net in network(10)) {
        let bound = wsdt_lower_bound(&net).value;
        for scheme in StaticScheme::ALL {
            let got = scheme.allocate(&net).unwrap();
            let w = wsdt_core::wsdt(&got.flow_rates, &net.weights(), 1.0).unwrap_or(f64::INFINITY);
            prop_assert!(w >= bound * (1.0 - TOL), "{scheme}: {w} < {bound}");
        }
    }

    #[test]
    fn relays_never_outrun_their_source_share(net in network(10)) {
        let d = depth2_rateless(&net);
        let a = &d.allocation;
        for i in 0..net.len() {
            let src = a.get(i, i);
            for j in 0..net.len() {
                if j != i {
                    prop_assert!(a.get(i, j) <= src + TOL * src.max(1.0));
                }
            }
        }
    }

    #[test]
    fn bound_rates_use_the_whole_budget(net in network(12)) {
        let lb = wsdt_lower_bound(&net);
        let caps = net.effective_downlinks();
        let w = net.weights();
        let room: f64 = caps.iter().zip(&w).filter(|(_, &w)| w > 0.0).map(|(c, _)| c).sum();
        let want = net.total_uplink().min(room);
        prop_assert!(close(lb.rates.sum(), want, TOL));
    }

    #[test]
    fn bound_is_monotone_in_the_source(net in network(8), extra in 0.0..50.0f64) {
        let more = net.with_source_uplink(net.source_uplink() + extra).unwrap();
        let (a, b) = (wsdt_lower_bound(&net).value, wsdt_lower_bound(&more).value);
        prop_assert!(b <= a * (1.0 + TOL) || a.is_infinite());
    }

    #[test]
    fn bound_scales_with_weights(net in network(8), alpha in 0.1..10.0f64) {
        let w: Vec<f64> = net.weights().iter().map(|w| w * alpha).collect();
        let scaled = net.with_weights(&w).unwrap();
        let (a, b) = (wsdt_lower_bound(&net), wsdt_lower_bound(&scaled));
        for i in 0..net.len() {
            prop_assert!(close(a.rates[i], b.rates[i], 1e-9));
        }
        if a.value.is_finite() {
            prop_assert!(close(b.value, alpha * a.value, 1e-9));
        }
    }

    #[test]
    fn uniform_bound_is_the_fair_share(n in 1usize..12, us in 0.1..50.0f64, u in 0.0..20.0f64) {
        let peers = vec![PeerSpec::new(u, Downlink::Unbounded, 1.0); n];
        let net = Network::new(us, peers, 1.0).unwrap();
        let want = us.min(net.total_uplink() / n as f64);
        for r in wsdt_lower_bound(&net).rates.as_slice() {
            prop_assert!(close(*r, want, 1e-12));
        }
    }

    #[test]
    fn validation_is_idempotent(net in network(12)) {
        let again = validate_scenario(&net.to_scenario()).unwrap();
        prop_assert_eq!(again.to_scenario(), net.to_scenario());
    }

    #[test]
    fn max_flow_scales_linearly(g in graph(8), alpha in 0.01..100.0f64) {
        let last = g.vertex_count() - 1;
        let a = max_flow(&g, 0, last).unwrap();
        let b = max_flow(&g.scaled(alpha), 0, last).unwrap();
        if a.is_finite() {
            prop_assert!(b == a || close(b, alpha * a, 1e-9), "{b} vs {alpha} * {a}");
        }
    }

    #[test]
    fn finish_schedule_is_accepted(net in network(8)) {
        for scheme in StaticScheme::ALL {
            let out = scheme.allocate(&net).unwrap();
            if out.flow_rates.as_slice().iter().any(|&r| r <= 0.0) {
                continue;
            }
            let (order, durations) = finish_schedule(&out.flow_rates, net.file_size());
            let report = verify_static_schedule(&net, &out.allocation, &order, &durations).unwrap();
            prop_assert!(report.all_feasible(), "{scheme}: {:?}", report);
        }
    }

    #[test]
    fn mutualcast_delivers_any_feasible_rate(net in network(10), frac in 0.0..1.0f64) {
        let ceiling = wsdt_core::alloc::mutualcast_ceiling(&net);
        let rate = ceiling * frac;
        let order: Vec<usize> = (0..net.len()).collect();
        let alloc = mutualcast(&net, rate, &order).unwrap();
        alloc.check(&net).unwrap();
        let cut = wsdt_core::flow_rates_of_allocation(&net, &alloc).unwrap();
        for r in cut.as_slice() {
            prop_assert!(close(*r, rate, TOL));
        }
    }
}

#[test]
fn generated_cases_validate_unchanged() {
    for case in BenchmarkCase::ALL {
        for n in 1..=1000 {
            let raw = case_scenario(case, n, 3.0, &WeightProfile::Uniform, 1.0).unwrap();
            let net = validate_scenario(&raw).unwrap();
            for (i, (r, v)) in raw.peers.iter().zip(net.peers()).enumerate() {
                let clamped = case == BenchmarkCase::VI && r.uplink > r.downlink.as_f64();
                if clamped {
                    assert_eq!(v.uplink, r.downlink.as_f64());
                } else {
                    assert_eq!(r, v, "case {case} n {n} peer {i}");
                }
            }
        }
    }
}

#[test]
fn boosted_peers_are_the_upper_half() {
    for case in [BenchmarkCase::V, BenchmarkCase::VI] {
        for n in 1..=201 {
            let raw = case_scenario(case, n, 1.0, &WeightProfile::Uniform, 1.0).unwrap();
            let boosted = raw.peers.iter().filter(|p| p.uplink == 10.0).count();
            assert_eq!(boosted, n - n / 2, "case {case} n {n}");
        }
    }
}
