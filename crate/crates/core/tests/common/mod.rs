#![allow(dead_code)]

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use wsdt_core::alloc::tilde_rates;
use wsdt_core::{
    flow_rates_of_allocation, wsdt, wsdt_lower_bound, CapGraph, Downlink, Network, PeerSpec,
    StaticScheme,
};

pub const TOL: f64 = 1e-9;

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn downlink(unbounded: bool, d: f64) -> Downlink {
    if unbounded {
        Downlink::Unbounded
    } else {
        Downlink::Limited(d)
    }
}

fn peer(p_inf: f64) -> impl Strategy<Value = PeerSpec> {
    (
        prop_oneof![1 => Just(0.0), 6 => 0.0..20.0f64],
        proptest::bool::weighted(p_inf),
        0.05..40.0f64,
        prop_oneof![1 => Just(0.0), 6 => 0.0..10.0f64],
    )
        .prop_map(|(u, inf, d, w)| PeerSpec::new(u, downlink(inf, d), w))
}

fn network_from(peers: impl Strategy<Value = Vec<PeerSpec>>) -> impl Strategy<Value = Network> {
    (0.05..100.0f64, peers)
        .prop_map(|(us, peers)| Network::new(us, peers, 1.0).expect("generated peers are valid"))
}

/// Random network with `1..=max_n` peers, a mix of finite and unbounded
/// downlinks, and some zero uplinks and zero weights.
pub fn network(max_n: usize) -> impl Strategy<Value = Network> {
    network_from(proptest::collection::vec(peer(0.3), 1..=max_n))
}

/// Same as [`network`] with every downlink unbounded.
pub fn unbounded_network(max_n: usize) -> impl Strategy<Value = Network> {
    network_from(proptest::collection::vec(peer(1.0), 1..=max_n))
}

/// Network whose uplinks cover every effective downlink.
pub fn saturated_network(max_n: usize) -> impl Strategy<Value = Network> {
    network(max_n).prop_map(|net| {
        let short: f64 = net.effective_downlinks().iter().sum::<f64>() - net.total_uplink();
        if short <= 0.0 {
            return net;
        }
        let mut sc = net.to_scenario();
        sc.source_uplink += short * 1.5;
        wsdt_core::validate_scenario(&sc).unwrap()
    })
}

pub fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config::default(),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

/// `count` deterministic draws from `strategy`.
pub fn sample<S: Strategy>(strategy: S, count: usize) -> Vec<S::Value> {
    let mut runner = runner();
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).unwrap().current())
        .collect()
}

/// Water-filling by bisection on the level.
pub fn bisection_waterfill(weights: &[f64], caps: &[f64], budget: f64) -> Vec<f64> {
    let rates = |level: f64| -> Vec<f64> {
        weights
            .iter()
            .zip(caps)
            .map(|(&w, &c)| {
                if w > 0.0 {
                    (w.sqrt() * level).min(c)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let room: f64 = weights
        .iter()
        .zip(caps)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &c)| c)
        .sum();
    if budget >= room {
        return weights
            .iter()
            .zip(caps)
            .map(|(&w, &c)| if w > 0.0 { c } else { 0.0 })
            .collect();
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while rates(hi).iter().sum::<f64>() < budget {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if rates(mid).iter().sum::<f64>() < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    rates(0.5 * (lo + hi))
}

/// Minimum `source`-`sink` cut by enumerating every vertex subset.
pub fn exhaustive_min_cut(graph: &CapGraph, source: usize, sink: usize) -> f64 {
    let n = graph.vertex_count();
    let others: Vec<usize> = (0..n).filter(|&v| v != source && v != sink).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << others.len()) {
        let mut side = vec![false; n];
        side[source] = true;
        for (k, &v) in others.iter().enumerate() {
            if mask & (1 << k) != 0 {
                side[v] = true;
            }
        }
        let cut: f64 = graph
            .edges()
            .iter()
            .filter(|&&(u, v, _)| side[u] && !side[v])
            .map(|e| e.2)
            .sum();
        best = best.min(cut);
    }
    best
}

/// Random graph on `2..=max_v` vertices with integer capacities (some
/// unbounded) so the cut oracle is exact.
pub fn graph(max_v: usize) -> impl Strategy<Value = CapGraph> {
    (2..=max_v).prop_flat_map(|v| {
        let pairs = v * (v - 1);
        proptest::collection::vec(
            prop_oneof![4 => Just(None), 5 => (0u32..20).prop_map(|c| Some(c as f64)), 1 => Just(Some(f64::INFINITY))],
            pairs,
        )
        .prop_map(move |caps| {
            let mut g = CapGraph::new(v);
            let mut k = 0;
            for a in 0..v {
                for b in 0..v {
                    if a == b {
                        continue;
                    }
                    if let Some(c) = caps[k] {
                        g.add_edge(a, b, c).unwrap();
                    }
                    k += 1;
                }
            }
            g
        })
    })
}

/// Violations of the static-allocation properties on one network, as
/// human-readable strings tagged by property name.
pub fn static_violations(net: &Network) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let caps = net.effective_downlinks();
    let saturated = net.total_uplink() >= caps.iter().sum::<f64>();

    for scheme in StaticScheme::ALL {
        let outcome = match scheme.allocate(net) {
            Ok(o) => o,
            Err(e) => {
                out.push(("capacity", format!("{scheme}: {e}")));
                continue;
            }
        };
        if let Err(e) = outcome.allocation.check(net) {
            out.push(("capacity", format!("{scheme}: {e}")));
            continue;
        }
        let cut = flow_rates_of_allocation(net, &outcome.allocation).unwrap();
        for i in 0..net.len() {
            let (claim, got) = (outcome.flow_rates[i], cut[i]);
            let ok = if scheme == StaticScheme::Routing {
                got >= claim - TOL * claim.max(1.0)
            } else {
                close(claim, got, TOL)
            };
            if !ok {
                out.push((
                    "min-cut",
                    format!("{scheme} peer {i}: claimed {claim}, cut {got}"),
                ));
            }
            if claim > caps[i] * (1.0 + TOL) {
                out.push((
                    "capacity",
                    format!("{scheme} peer {i}: rate {claim} above {}", caps[i]),
                ));
            }
        }
        if saturated && matches!(scheme, StaticScheme::Depth2 | StaticScheme::Routing) {
            for (i, (&r, &cap)) in outcome.flow_rates.as_slice().iter().zip(&caps).enumerate() {
                if !close(r, cap, TOL) {
                    out.push(("saturated", format!("{scheme} peer {i}: {r} != {cap}")));
                }
            }
        }
        if scheme == StaticScheme::Extended {
            let ones = vec![1.0; net.len()];
            let bound = wsdt_lower_bound(&net.with_weights(&ones).unwrap()).value;
            let got = wsdt(&outcome.flow_rates, &ones, net.file_size()).unwrap_or(f64::INFINITY);
            if !(got == bound || close(got, bound, TOL)) {
                out.push(("sum-optimal", format!("extended {got} vs bound {bound}")));
            }
        }
        if scheme == StaticScheme::Depth2 {
            let rt = tilde_rates(&net.weights(), &caps, net.total_uplink());
            for (i, (&r, &t)) in outcome.flow_rates.as_slice().iter().zip(&rt).enumerate() {
                if r < t - TOL * t.max(1.0) {
                    out.push(("dominance", format!("peer {i}: {r} < {t}")));
                }
            }
        }
    }
    out
}
