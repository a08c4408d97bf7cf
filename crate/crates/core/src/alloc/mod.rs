//! Constructive static allocators and WSDT evaluation.
//!
//! All allocators return a [`RateAllocation`] together with the flow rates
//! they claim; for every scheme except the routing-based one the claim is
//! exactly the min-cut rate of the allocation's rate graph.

mod depth2;
mod mutualcast;

use std::fmt;
use std::str::FromStr;

pub use depth2::{
    depth2_rateless, depth2_rateless_rates, routing_based, tilde_rates, Depth2Allocation,
    Depth2Stage,
};
pub use mutualcast::{extended_mutualcast, mutualcast, mutualcast_ceiling};

use crate::error::{AllocError, Error};
use crate::model::{FlowRates, Network, RateAllocation};

/// `sum W_i B / r_i` with `0 * inf = 0`: zero-weight peers never contribute.
pub fn wsdt(rates: &FlowRates, weights: &[f64], file_size: f64) -> Result<f64, AllocError> {
    if rates.len() != weights.len() {
        return Err(AllocError::LengthMismatch {
            expected: weights.len(),
            got: rates.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&r, &w)) in rates.as_slice().iter().zip(weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        if r <= 0.0 {
            return Err(AllocError::Unbounded { peer: i + 1 });
        }
        total += w * file_size / r;
    }
    Ok(total)
}

/// The static allocators selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StaticScheme {
    /// Mutualcast at its highest common rate.
    Mutualcast,
    Extended,
    Depth2,
    Routing,
}

impl StaticScheme {
    pub const ALL: [StaticScheme; 4] = [
        StaticScheme::Mutualcast,
        StaticScheme::Extended,
        StaticScheme::Depth2,
        StaticScheme::Routing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StaticScheme::Mutualcast => "mutualcast",
            StaticScheme::Extended => "extended",
            StaticScheme::Depth2 => "depth2",
            StaticScheme::Routing => "routing",
        }
    }

    pub fn allocate(self, network: &Network) -> Result<StaticOutcome, AllocError> {
        Ok(match self {
            StaticScheme::Mutualcast => {
                let rate = mutualcast_ceiling(network);
                let order: Vec<usize> = (0..network.len()).collect();
                let allocation = mutualcast(network, rate, &order)?;
                StaticOutcome {
                    allocation,
                    flow_rates: FlowRates(vec![rate; network.len()]),
                    stage: None,
                }
            }
            StaticScheme::Extended => {
                let (allocation, flow_rates) = extended_mutualcast(network);
                StaticOutcome {
                    allocation,
                    flow_rates,
                    stage: None,
                }
            }
            StaticScheme::Depth2 => depth2_rateless(network).into(),
            StaticScheme::Routing => routing_based(network, None)?.into(),
        })
    }
}

impl fmt::Display for StaticScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StaticScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mutualcast" => Ok(StaticScheme::Mutualcast),
            "extended" | "extended-mutualcast" => Ok(StaticScheme::Extended),
            "depth2" | "rateless" => Ok(StaticScheme::Depth2),
            "routing" => Ok(StaticScheme::Routing),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

/// Output shared by every static scheme.
#[derive(Debug, Clone)]
pub struct StaticOutcome {
    pub allocation: RateAllocation,
    pub flow_rates: FlowRates,
    pub stage: Option<Depth2Stage>,
}

impl From<Depth2Allocation> for StaticOutcome {
    fn from(d: Depth2Allocation) -> Self {
        StaticOutcome {
            allocation: d.allocation,
            flow_rates: d.flow_rates,
            stage: d.stage,
        }
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<(), AllocError> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(AllocError::InvalidOrder(n));
    }
    for &p in order {
        if p >= n || seen[p] {
            return Err(AllocError::InvalidOrder(n));
        }
        seen[p] = true;
    }
    Ok(())
}
