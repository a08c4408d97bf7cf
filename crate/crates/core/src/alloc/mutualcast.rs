use super::check_permutation;
use crate::bound::waterfill;
use crate::error::AllocError;
use crate::model::{slack, FlowRates, Network, RateAllocation};

/// Residual capacities while broadcasts are layered on top of each other.
struct Residual {
    source: f64,
    uplink: Vec<f64>,
    downlink: Vec<f64>,
}

impl Residual {
    fn of(network: &Network) -> Self {
        Residual {
            source: network.source_uplink(),
            uplink: network.uplinks(),
            downlink: network.effective_downlinks(),
        }
    }
}

/// Broadcasts `rate` to every peer in `members`, relaying through each
/// member in turn; whatever the members cannot relay is sent by the source
/// directly to each of them.
fn broadcast(alloc: &mut RateAllocation, res: &mut Residual, members: &[usize], rate: f64) {
    let n = members.len();
    let mut remaining = rate;
    for &i in members {
        if remaining <= 0.0 {
            break;
        }
        let share = if n > 1 {
            res.uplink[i] / (n - 1) as f64
        } else {
            f64::INFINITY
        };
        let r = remaining.min(res.downlink[i]).min(share).max(0.0);
        if r == 0.0 {
            continue;
        }
        alloc.add(i, i, r);
        for &j in members {
            if j != i {
                alloc.add(i, j, r);
            }
            res.downlink[j] -= r;
        }
        res.uplink[i] -= r * (n - 1) as f64;
        res.source -= r;
        remaining -= r;
    }
    if remaining > 0.0 {
        for &i in members {
            alloc.add_depth1(i, remaining);
            res.downlink[i] -= remaining;
        }
        res.source -= remaining * n as f64;
    }
}

/// Largest rate every peer can receive simultaneously:
/// `min(U_s, (U_s + sum U_i) / N, min_i D_i)`.
pub fn mutualcast_ceiling(network: &Network) -> f64 {
    let n = network.len() as f64;
    let min_d = network
        .effective_downlinks()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    network
        .source_uplink()
        .min(network.total_uplink() / n)
        .min(min_d)
}

/// Delivers the same `rate` to every peer, visiting peers in `order`
/// (0-based) when handing out relay duty.
pub fn mutualcast(
    network: &Network,
    rate: f64,
    order: &[usize],
) -> Result<RateAllocation, AllocError> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(AllocError::InvalidRate(rate));
    }
    let ceiling = mutualcast_ceiling(network);
    if rate > ceiling + slack(ceiling) {
        return Err(AllocError::RateAboveCeiling { rate, ceiling });
    }
    check_permutation(order, network.len())?;
    let mut alloc = RateAllocation::zeros(network.len());
    let mut res = Residual::of(network);
    broadcast(&mut alloc, &mut res, order, rate);
    Ok(alloc)
}

/// Mutualcast layered over peers sorted by ascending effective downlink, so
/// peer `i` receives `min(R, D_i)` where `R` is the unweighted water level.
pub fn extended_mutualcast(network: &Network) -> (RateAllocation, FlowRates) {
    let n = network.len();
    let caps = network.effective_downlinks();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| caps[a].total_cmp(&caps[b]));

    let sol = waterfill(&vec![1.0; n], &caps, network.total_uplink());
    let level = sol.level;

    let mut alloc = RateAllocation::zeros(n);
    let mut res = Residual::of(network);
    let mut prev = 0.0;
    for k in 0..n {
        let target = level.min(caps[order[k]]);
        if target > prev {
            broadcast(&mut alloc, &mut res, &order[k..], target - prev);
            prev = target;
        }
    }
    (alloc, FlowRates(sol.rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxflow::flow_rates_of_allocation;
    use crate::model::{Downlink, PeerSpec};

    fn net(us: f64, peers: &[(f64, Downlink)]) -> Network {
        Network::new(
            us,
            peers
                .iter()
                .map(|&(u, d)| PeerSpec::new(u, d, 1.0))
                .collect(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn three_symmetric_peers() {
        let n = net(2.0, &[(1.0, Downlink::Unbounded); 3]);
        let a = mutualcast(&n, 5.0 / 3.0, &[0, 1, 2]).unwrap();
        a.check(&n).unwrap();
        for i in 0..3 {
            assert!(
                (a.source_rate(i) - 0.5).abs() < 1e-12
                    || (a.source_rate(i) - 2.0 / 3.0).abs() < 1e-12
            );
            assert!((a.download(i) - 5.0 / 3.0).abs() < 1e-12);
        }
        let f = flow_rates_of_allocation(&n, &a).unwrap();
        assert!(f.as_slice().iter().all(|&r| (r - 5.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn leftover_goes_direct_to_every_peer() {
        let n = net(10.0, &[(1.0, Downlink::Unbounded); 2]);
        let a = mutualcast(&n, 3.0, &[0, 1]).unwrap();
        a.check(&n).unwrap();
        for i in 0..2 {
            assert!((a.depth1_rate(i) - 1.0).abs() < 1e-12);
            assert!((a.download(i) - 3.0).abs() < 1e-12);
        }
        assert!((a.source_total() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_rate_above_ceiling() {
        let n = net(2.0, &[(1.0, Downlink::Unbounded); 3]);
        assert!(matches!(
            mutualcast(&n, 1.7, &[0, 1, 2]),
            Err(AllocError::RateAboveCeiling { .. })
        ));
        assert!(matches!(
            mutualcast(&n, 1.0, &[0, 0, 2]),
            Err(AllocError::InvalidOrder(3))
        ));
        assert!(matches!(
            mutualcast(&n, -1.0, &[0, 1, 2]),
            Err(AllocError::InvalidRate(_))
        ));
    }

    #[test]
    fn single_peer_takes_source_rate() {
        let n = net(3.0, &[(5.0, Downlink::Limited(2.0))]);
        let a = mutualcast(&n, 2.0, &[0]).unwrap();
        a.check(&n).unwrap();
        assert!((a.download(0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn extended_three_peers() {
        let n = net(
            2.0,
            &[
                (1.0, Downlink::Limited(1.0)),
                (1.0, Downlink::Limited(2.0)),
                (1.0, Downlink::Limited(2.0)),
            ],
        );
        let (a, f) = extended_mutualcast(&n);
        a.check(&n).unwrap();
        let want = [1.0, 2.0, 2.0];
        let cut = flow_rates_of_allocation(&n, &a).unwrap();
        for i in 0..3 {
            assert!((f[i] - want[i]).abs() < 1e-12);
            assert!((cut[i] - want[i]).abs() < 1e-9);
        }
    }
}
