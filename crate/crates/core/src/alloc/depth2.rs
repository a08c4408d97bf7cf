use super::{check_permutation, extended_mutualcast};
use crate::bound::{bounded_waterfill, waterfill};
use crate::error::AllocError;
use crate::model::{FlowRates, Network, RateAllocation};

/// Intermediate quantities of the depth-2 stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Depth2Stage {
    /// Fixed-point rates `r~` fed to the relay trees.
    pub tilde_rates: Vec<f64>,
    /// Scale applied to the relay trees so the source and downlinks fit.
    pub c: f64,
    pub alpha: f64,
    /// Rate each peer gets out of the relay trees (before depth-1 top-up).
    pub beta: Vec<f64>,
    /// Source rate spent on relay traffic that does not raise any flow rate.
    pub wasted_uplink: f64,
    /// Peers by descending `r~` (ties by index).
    pub order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Depth2Allocation {
    pub allocation: RateAllocation,
    pub flow_rates: FlowRates,
    /// `None` when the uplinks cover every downlink and the extended
    /// Mutualcast allocation is returned instead.
    pub stage: Option<Depth2Stage>,
}

/// Solves `r~ = waterfill(W, D~, U_s + sum U - max r~)`.
///
/// `m - max(waterfill(budget - m))` is increasing in `m`, so the fixed
/// point is found by bisection on `m = max r~`.
pub fn tilde_rates(weights: &[f64], caps: &[f64], total: f64) -> Vec<f64> {
    let peak = |m: f64| {
        waterfill(weights, caps, (total - m).max(0.0))
            .rates
            .into_iter()
            .fold(0.0, f64::max)
    };
    let mut lo = 0.0;
    let mut hi = caps.iter().copied().fold(0.0, f64::max).min(total);
    if peak(lo) <= lo {
        return waterfill(weights, caps, total).rates;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if peak(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    waterfill(weights, caps, (total - hi).max(0.0)).rates
}

fn descending_order(rt: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rt.len()).collect();
    order.sort_by(|&a, &b| rt[b].total_cmp(&rt[a]));
    order
}

/// Relay trees shared by both depth-2 schemes.
struct Trees {
    rt: Vec<f64>,
    sum: f64,
    max: f64,
    c: f64,
    alpha: f64,
    /// `c * (alpha r~_i + (max r~ - r~_i) U_i / (sum r~ - r~_i))`: what each
    /// peer downloads from the trees.
    download: Vec<f64>,
}

impl Trees {
    /// `None` when fewer than two peers carry positive `r~`: nobody could
    /// relay, and the source budget goes to depth-1 only.
    fn build(network: &Network, rt: Vec<f64>) -> Option<Trees> {
        let n = network.len();
        let sum: f64 = rt.iter().sum();
        let max = rt.iter().copied().fold(0.0, f64::max);
        if n < 2 || sum <= 0.0 || rt.iter().any(|&r| sum - r <= 1e-12 * sum) {
            return None;
        }
        let u = network.uplinks();
        let caps = network.effective_downlinks();
        let alpha: f64 = (0..n).map(|i| u[i] / (sum - rt[i])).sum();
        let base: Vec<f64> = (0..n)
            .map(|i| alpha * rt[i] + (max - rt[i]) * u[i] / (sum - rt[i]))
            .collect();
        let mut c: f64 = 1.0;
        if alpha * max > 0.0 {
            c = c.min(network.source_uplink() / (alpha * max));
        }
        for i in 0..n {
            if base[i] > 0.0 {
                c = c.min(caps[i] / base[i]);
            }
        }
        let download = base.iter().map(|b| c * b).collect();
        Some(Trees {
            rt,
            sum,
            max,
            c,
            alpha,
            download,
        })
    }

    fn install(&self, network: &Network, alloc: &mut RateAllocation) {
        for (i, &u) in network.uplinks().iter().enumerate() {
            let scale = self.c * u / (self.sum - self.rt[i]);
            for j in 0..network.len() {
                let r = if i == j { self.max } else { self.rt[j] };
                alloc.set(i, j, scale * r);
            }
        }
    }
}

/// Depth-2 allocation for rateless-coded content: every relay tree carries
/// independent coded blocks, so a peer's flow rate is its total download
/// rate.
pub fn depth2_rateless(network: &Network) -> Depth2Allocation {
    let caps = network.effective_downlinks();
    if network.total_uplink() >= caps.iter().sum::<f64>() {
        let (allocation, flow_rates) = extended_mutualcast(network);
        return Depth2Allocation {
            allocation,
            flow_rates,
            stage: None,
        };
    }
    let mut alloc = RateAllocation::zeros(network.len());
    let (stage, rates) = rateless_stage(network, Some(&mut alloc));
    for (i, (r, b)) in rates.iter().zip(&stage.beta).enumerate() {
        alloc.add_depth1(i, (r - b).max(0.0));
    }
    Depth2Allocation {
        allocation: alloc,
        flow_rates: FlowRates(rates),
        stage: Some(stage),
    }
}

/// Flow rates of [`depth2_rateless`] without materializing the allocation.
pub fn depth2_rateless_rates(network: &Network) -> FlowRates {
    let caps = network.effective_downlinks();
    let total = network.total_uplink();
    if total >= caps.iter().sum::<f64>() {
        return FlowRates(waterfill(&vec![1.0; caps.len()], &caps, total).rates);
    }
    FlowRates(rateless_stage(network, None).1)
}

fn rateless_stage(
    network: &Network,
    alloc: Option<&mut RateAllocation>,
) -> (Depth2Stage, Vec<f64>) {
    let n = network.len();
    let caps = network.effective_downlinks();
    let w = network.weights();
    let rt = tilde_rates(&w, &caps, network.total_uplink());
    let order = descending_order(&rt);
    let (stage, spent) = match Trees::build(network, rt.clone()) {
        Some(trees) => {
            if let Some(alloc) = alloc {
                trees.install(network, alloc);
            }
            let spent = trees.c * trees.alpha * trees.max;
            let stage = Depth2Stage {
                c: trees.c,
                alpha: trees.alpha,
                beta: trees.download,
                wasted_uplink: 0.0,
                tilde_rates: trees.rt,
                order,
            };
            (stage, spent)
        }
        None => {
            let stage = Depth2Stage {
                tilde_rates: rt,
                c: 0.0,
                alpha: 0.0,
                beta: vec![0.0; n],
                wasted_uplink: 0.0,
                order,
            };
            (stage, 0.0)
        }
    };
    let budget = (network.source_uplink() - spent).max(0.0);
    let (_, rates) = bounded_waterfill(&w, &stage.beta, &caps, budget);
    (stage, rates)
}

/// Depth-2 allocation for plain (non-coded) content. Peers finish in order
/// of descending `r~`; relay traffic a peer receives beyond its predecessor's
/// `r~` duplicates what it already has, so it is not counted in the flow
/// rate. `order` (0-based) overrides the computed order but must still list
/// `r~` in non-increasing order.
pub fn routing_based(
    network: &Network,
    order: Option<&[usize]>,
) -> Result<Depth2Allocation, AllocError> {
    let n = network.len();
    let caps = network.effective_downlinks();
    let total = network.total_uplink();
    let w = network.weights();
    let saturated = total >= caps.iter().sum::<f64>();
    let rt = if saturated {
        caps.clone()
    } else {
        tilde_rates(&w, &caps, total)
    };
    let order = match order {
        Some(o) => {
            check_permutation(o, n)?;
            for pair in o.windows(2) {
                let (a, b) = (rt[pair[0]], rt[pair[1]]);
                if b > a + 1e-9 * a.abs().max(1.0) {
                    return Err(AllocError::OrderNotDescending);
                }
            }
            o.to_vec()
        }
        None => descending_order(&rt),
    };
    if saturated {
        let (allocation, flow_rates) = extended_mutualcast(network);
        return Ok(Depth2Allocation {
            allocation,
            flow_rates,
            stage: None,
        });
    }

    let mut alloc = RateAllocation::zeros(n);
    let u = network.uplinks();
    let mut beta = vec![0.0; n];
    let mut download = vec![0.0; n];
    let mut wasted = 0.0;
    let (c, alpha) = match Trees::build(network, rt.clone()) {
        Some(trees) => {
            trees.install(network, &mut alloc);
            let first = rt[order[0]];
            let mut prev = first;
            for &i in &order {
                let dup = u[i] / (trees.sum - rt[i]);
                beta[i] = trees.c * (trees.alpha * rt[i] + (prev - rt[i]) * dup);
                wasted += trees.c * (first - prev) * dup;
                prev = rt[i];
            }
            download.clone_from(&trees.download);
            (trees.c, trees.alpha)
        }
        None => (0.0, 0.0),
    };

    // Later peers inherit the tightest weight and residual downlink of
    // every peer finishing before them.
    let mut w_hat = vec![0.0; n];
    let mut room = vec![0.0; n];
    let mut wmin = f64::INFINITY;
    let mut dmin = f64::INFINITY;
    for &i in &order {
        wmin = wmin.min(w[i]);
        dmin = dmin.min(caps[i] - download[i]);
        w_hat[i] = wmin;
        room[i] = beta[i] + dmin.max(0.0);
    }
    let budget = (network.source_uplink() - alloc.source_total()).max(0.0);
    let (_, mut rates) = bounded_waterfill(&w_hat, &beta, &room, budget);
    // depth-1 rates must not increase along the finish order
    let mut cap = f64::INFINITY;
    for &i in &order {
        let d1 = (rates[i] - beta[i]).max(0.0).min(cap);
        cap = d1;
        rates[i] = beta[i] + d1;
        alloc.add_depth1(i, d1);
    }
    Ok(Depth2Allocation {
        allocation: alloc,
        flow_rates: FlowRates(rates),
        stage: Some(Depth2Stage {
            tilde_rates: rt,
            c,
            alpha,
            beta,
            wasted_uplink: wasted,
            order,
        }),
    })
}
