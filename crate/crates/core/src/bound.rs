//! Closed-form water-filling and the uplink-sum lower bound on WSDT.
//!
//! Minimizing `sum W_i B / r_i` subject to `sum r_i <= U_s + sum U_i` and
//! `0 <= r_i <= min(D_i, U_s)` has the KKT solution
//! `r_i = min(sqrt(W_i) * R, cap_i)` for a single water level `R`. The
//! multipliers never need to be materialized: the budget equation is
//! piecewise linear in `R` and is solved exactly by walking its breakpoints.

use crate::alloc::wsdt;
use crate::model::{FlowRates, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillSolution {
    /// Water level `R`.
    pub level: f64,
    pub rates: Vec<f64>,
    /// `true` where the cap binds.
    pub binding: Vec<bool>,
}

/// Solves `sum_i min(sqrt(W_i) R, cap_i) = min(budget, sum caps)` for `R`.
///
/// Zero-weight entries get rate 0. When the budget covers every cap the
/// returned level is the smallest one saturating all of them.
pub fn waterfill(weights: &[f64], caps: &[f64], budget: f64) -> WaterfillSolution {
    let floors = vec![0.0; weights.len()];
    let (level, rates) = bounded_waterfill(weights, &floors, caps, budget);
    let binding = rates
        .iter()
        .zip(caps)
        .zip(weights)
        .map(|((r, c), &w)| w > 0.0 && *r >= *c)
        .collect();
    WaterfillSolution {
        level,
        rates,
        binding,
    }
}

/// Water-filling between per-entry floors and caps:
/// `r_i = clamp(sqrt(W_i) R, floor_i, cap_i)` with
/// `sum_i (r_i - floor_i) = budget` (or every positive-weight entry at its
/// cap when the budget is larger than the room). Zero-weight entries stay at
/// their floor. Returns `(R, rates)`.
pub fn bounded_waterfill(
    weights: &[f64],
    floors: &[f64],
    caps: &[f64],
    budget: f64,
) -> (f64, Vec<f64>) {
    assert_eq!(weights.len(), floors.len());
    assert_eq!(weights.len(), caps.len());
    let n = weights.len();
    let slopes: Vec<f64> = weights.iter().map(|&w| w.max(0.0).sqrt()).collect();
    let caps: Vec<f64> = caps.iter().zip(floors).map(|(&c, &f)| c.max(f)).collect();
    let clamp = |i: usize, level: f64| (slopes[i] * level).max(floors[i]).min(caps[i]);
    let active: Vec<usize> = (0..n).filter(|&i| slopes[i] > 0.0).collect();

    let room: f64 = active.iter().map(|&i| caps[i] - floors[i]).sum();
    if budget >= room {
        let level = active
            .iter()
            .map(|&i| caps[i] / slopes[i])
            .fold(0.0, f64::max);
        let rates = (0..n)
            .map(|i| if slopes[i] > 0.0 { caps[i] } else { floors[i] })
            .collect();
        return (level, rates);
    }
    if budget <= 0.0 || active.is_empty() {
        return (0.0, floors.to_vec());
    }

    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * active.len());
    for &i in &active {
        events.push((floors[i] / slopes[i], slopes[i]));
        events.push((caps[i] / slopes[i], -slopes[i]));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));

    let mut filled = 0.0;
    let mut slope = 0.0;
    let mut pos = 0.0;
    let mut level = f64::NAN;
    for &(x, ds) in &events {
        if slope > 0.0 {
            let next = filled + slope * (x - pos);
            if next >= budget {
                level = pos + (budget - filled) / slope;
                break;
            }
            filled = next;
        }
        pos = x;
        slope += ds;
    }
    if level.is_nan() {
        level = pos;
    }

    // one exact correction on the located segment to absorb slope drift
    let got: f64 = active.iter().map(|&i| clamp(i, level) - floors[i]).sum();
    let seg_slope: f64 = active
        .iter()
        .filter(|&&i| {
            let x = slopes[i] * level;
            x > floors[i] && x < caps[i]
        })
        .map(|&i| slopes[i])
        .sum();
    if seg_slope > 0.0 {
        level += (budget - got) / seg_slope;
    }

    let rates = (0..n)
        .map(|i| {
            if slopes[i] > 0.0 {
                clamp(i, level)
            } else {
                floors[i]
            }
        })
        .collect();
    (level, rates)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    /// Relaxed optimal flow rates `r*_i`.
    pub rates: FlowRates,
    pub level: f64,
    /// `sum W_i B / r*_i`; `f64::INFINITY` when a positive-weight peer gets no
    /// rate.
    pub value: f64,
}

impl LowerBound {
    pub fn is_unbounded(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Lower bound on the weighted sum download time, valid for both static
/// and dynamic allocations.
pub fn wsdt_lower_bound(network: &Network) -> LowerBound {
    let sol = waterfill(
        &network.weights(),
        &network.effective_downlinks(),
        network.total_uplink(),
    );
    let rates = FlowRates(sol.rates);
    let value = wsdt(&rates, &network.weights(), network.file_size()).unwrap_or(f64::INFINITY);
    LowerBound {
        rates,
        level: sol.level,
        value,
    }
}
