//! Problem instances: peers, networks, rate allocations and the benchmark
//! case generators.
//!
//! Bandwidths are expressed in file units per unit time. Peer indices are
//! 0-based in code; CSV and documentation use 1-based indices.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::ModelError;

/// Relative tolerance used by every capacity check.
pub const CAPACITY_TOL: f64 = 1e-9;

/// Tolerance scaled to the magnitude of the capacity being checked.
#[inline]
pub fn slack(capacity: f64) -> f64 {
    CAPACITY_TOL * capacity.abs().max(1.0)
}

/// A peer's downlink capacity. `Unbounded` is a first-class value rather
/// than a large sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Downlink {
    Limited(f64),
    Unbounded,
}

impl Downlink {
    /// Capacity as a float, `f64::INFINITY` when unbounded.
    pub fn as_f64(self) -> f64 {
        match self {
            Downlink::Limited(d) => d,
            Downlink::Unbounded => f64::INFINITY,
        }
    }

    /// `min(D, cap)`, resolving `Unbounded` to `cap`.
    pub fn min_with(self, cap: f64) -> f64 {
        match self {
            Downlink::Limited(d) => d.min(cap),
            Downlink::Unbounded => cap,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Downlink::Unbounded)
    }

    pub fn from_f64(d: f64) -> Self {
        if d == f64::INFINITY {
            Downlink::Unbounded
        } else {
            Downlink::Limited(d)
        }
    }
}

impl fmt::Display for Downlink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Downlink::Limited(d) => write!(f, "{d}"),
            Downlink::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for Downlink {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Downlink::Limited(d) => serializer.serialize_f64(*d),
            Downlink::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Downlink {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DownlinkVisitor;

        impl Visitor<'_> for DownlinkVisitor {
            type Value = Downlink;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Downlink, E> {
                Ok(Downlink::from_f64(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Downlink, E> {
                Ok(Downlink::Limited(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Downlink, E> {
                Ok(Downlink::Limited(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Downlink, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "unbounded" => Ok(Downlink::Unbounded),
                    other => other
                        .parse::<f64>()
                        .map(Downlink::from_f64)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        deserializer.deserialize_any(DownlinkVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeerSpec {
    pub uplink: f64,
    pub downlink: Downlink,
    pub weight: f64,
}

impl PeerSpec {
    pub fn new(uplink: f64, downlink: Downlink, weight: f64) -> Self {
        PeerSpec {
            uplink,
            downlink,
            weight,
        }
    }

    fn validate(&self, peer: usize) -> Result<(), ModelError> {
        if !self.uplink.is_finite() {
            return Err(ModelError::NonFinite {
                field: format!("peers[{peer}].uplink"),
            });
        }
        if !self.weight.is_finite() {
            return Err(ModelError::NonFinite {
                field: format!("peers[{peer}].weight"),
            });
        }
        if self.uplink < 0.0 {
            return Err(ModelError::NegativeUplink {
                peer: peer + 1,
                value: self.uplink,
            });
        }
        if self.weight < 0.0 {
            return Err(ModelError::NegativeWeight {
                peer: peer + 1,
                value: self.weight,
            });
        }
        if let Downlink::Limited(d) = self.downlink {
            if d.is_nan() {
                return Err(ModelError::NonFinite {
                    field: format!("peers[{peer}].downlink"),
                });
            }
            if d <= 0.0 {
                return Err(ModelError::NonPositiveDownlink {
                    peer: peer + 1,
                    value: d,
                });
            }
        }
        Ok(())
    }

    /// Uplink clamped to the downlink: a peer never uploads more than it can
    /// download.
    fn clamped(self) -> Self {
        PeerSpec {
            uplink: self.uplink.min(self.downlink.as_f64()),
            ..self
        }
    }
}

/// Unvalidated scenario as read from a scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub source_uplink: f64,
    pub file_size: f64,
    pub peers: Vec<PeerSpec>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A validated problem instance. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    source_uplink: f64,
    peers: Vec<PeerSpec>,
    file_size: f64,
}

impl Network {
    /// Validates and clamps. Equivalent to [`validate_scenario`].
    pub fn new(
        source_uplink: f64,
        peers: Vec<PeerSpec>,
        file_size: f64,
    ) -> Result<Network, ModelError> {
        if peers.is_empty() {
            return Err(ModelError::NoPeers);
        }
        if source_uplink.is_nan() || source_uplink <= 0.0 {
            return Err(ModelError::NonPositiveSourceUplink(source_uplink));
        }
        if !source_uplink.is_finite() {
            return Err(ModelError::NonFinite {
                field: "source_uplink".into(),
            });
        }
        if file_size.is_nan() || file_size <= 0.0 {
            return Err(ModelError::NonPositiveFileSize(file_size));
        }
        if !file_size.is_finite() {
            return Err(ModelError::NonFinite {
                field: "file_size".into(),
            });
        }
        for (i, p) in peers.iter().enumerate() {
            p.validate(i)?;
        }
        Ok(Network {
            source_uplink,
            peers: peers.into_iter().map(PeerSpec::clamped).collect(),
            file_size,
        })
    }

    pub fn source_uplink(&self) -> f64 {
        self.source_uplink
    }

    pub fn file_size(&self) -> f64 {
        self.file_size
    }

    pub fn peers(&self) -> &[PeerSpec] {
        &self.peers
    }

    pub fn peer(&self, i: usize) -> &PeerSpec {
        &self.peers[i]
    }

    pub fn len(&self) -> usize {
        self.peers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peers.is_empty()
    }

    pub fn uplinks(&self) -> Vec<f64> {
        self.peers.iter().map(|p| p.uplink).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.peers.iter().map(|p| p.weight).collect()
    }

    pub fn total_peer_uplink(&self) -> f64 {
        self.peers.iter().map(|p| p.uplink).sum()
    }

    /// `U_s + sum U_i`: every byte uploaded anywhere in the network.
    pub fn total_uplink(&self) -> f64 {
        self.source_uplink + self.total_peer_uplink()
    }

    /// `min(D_i, U_s)`, the hard ceiling on any flow rate to peer `i`.
    pub fn effective_downlink(&self, i: usize) -> f64 {
        self.peers[i].downlink.min_with(self.source_uplink)
    }

    pub fn effective_downlinks(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.effective_downlink(i))
            .collect()
    }

    /// Same peers and capacities with the weights replaced.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Network, ModelError> {
        if weights.len() != self.len() {
            return Err(ModelError::WeightCount {
                expected: self.len(),
                got: weights.len(),
            });
        }
        let peers = self
            .peers
            .iter()
            .zip(weights)
            .map(|(p, &w)| PeerSpec { weight: w, ..*p })
            .collect();
        Network::new(self.source_uplink, peers, self.file_size)
    }

    pub fn with_source_uplink(&self, source_uplink: f64) -> Result<Network, ModelError> {
        Network::new(source_uplink, self.peers.clone(), self.file_size)
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            source_uplink: self.source_uplink,
            file_size: self.file_size,
            peers: self.peers.clone(),
        }
    }
}

/// Validates a raw scenario: rejects empty or non-positive instances and
/// clamps every uplink to its peer's downlink. Idempotent.
pub fn validate_scenario(raw: &Scenario) -> Result<Network, ModelError> {
    Network::new(raw.source_uplink, raw.peers.clone(), raw.file_size)
}

/// Transfer rates for a static allocation.
///
/// Entry `(i, j)` with `i != j` is the relay rate from peer `i` to peer `j`;
/// the diagonal `(i, i)` holds the source-to-peer rate. The source rate is
/// further split into a depth-1 part (delivered but never relayed) and the
/// remaining depth-2 part.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    n: usize,
    rates: Vec<f64>,
    depth1: Vec<f64>,
}

impl RateAllocation {
    pub fn zeros(n: usize) -> Self {
        RateAllocation {
            n,
            rates: vec![0.0; n * n],
            depth1: vec![0.0; n],
        }
    }

    /// Builds from a dense row-major matrix; the whole diagonal is taken as
    /// depth-2 source rate.
    pub fn from_matrix(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut alloc = RateAllocation::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::MatrixShape {
                    row: i + 1,
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, r) in row.into_iter().enumerate() {
                alloc.set(i, j, r);
            }
        }
        Ok(alloc)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, rate: f64) {
        self.rates[i * self.n + j] = rate;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, rate: f64) {
        self.rates[i * self.n + j] += rate;
    }

    pub fn source_rate(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    pub fn depth1_rate(&self, i: usize) -> f64 {
        self.depth1[i]
    }

    pub fn depth2_rate(&self, i: usize) -> f64 {
        self.get(i, i) - self.depth1[i]
    }

    /// Adds a depth-1 (not relayed) source rate to peer `i`.
    pub fn add_depth1(&mut self, i: usize, rate: f64) {
        self.add(i, i, rate);
        self.depth1[i] += rate;
    }

    pub fn source_total(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Total upload rate of peer `i` (row sum without the diagonal).
    pub fn upload(&self, i: usize) -> f64 {
        (0..self.n)
            .filter(|&j| j != i)
            .map(|j| self.get(i, j))
            .sum()
    }

    /// Total download rate of peer `j` (column sum including the diagonal).
    pub fn download(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rates.chunks(self.n.max(1))
    }

    /// Checks nonnegativity and the source, uplink and downlink capacities
    /// at relative tolerance [`CAPACITY_TOL`].
    pub fn check(&self, network: &Network) -> Result<(), ModelError> {
        if self.n != network.len() {
            return Err(ModelError::AllocationSize {
                expected: network.len(),
                got: self.n,
            });
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let r = self.get(i, j);
                if !r.is_finite() || r < -slack(0.0) {
                    return Err(ModelError::NegativeRate {
                        from: i + 1,
                        to: j + 1,
                        value: r,
                    });
                }
            }
            if self.depth1[i] < -slack(0.0)
                || self.depth1[i] > self.get(i, i) + slack(self.get(i, i))
            {
                return Err(ModelError::NegativeRate {
                    from: 0,
                    to: i + 1,
                    value: self.depth1[i],
                });
            }
        }
        let src = self.source_total();
        if src > network.source_uplink() + slack(network.source_uplink()) {
            return Err(ModelError::SourceOverload {
                used: src,
                capacity: network.source_uplink(),
            });
        }
        for i in 0..self.n {
            let up = self.upload(i);
            let cap = network.peer(i).uplink;
            if up > cap + slack(cap) {
                return Err(ModelError::UplinkOverload {
                    peer: i + 1,
                    used: up,
                    capacity: cap,
                });
            }
            let down = self.download(i);
            let dcap = network.peer(i).downlink.as_f64();
            if down > dcap + slack(dcap) {
                return Err(ModelError::DownlinkOverload {
                    peer: i + 1,
                    used: down,
                    capacity: dcap,
                });
            }
        }
        Ok(())
    }
}

/// Per-peer information flow rates `r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRates(pub Vec<f64>);

impl FlowRates {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `B / r_i`, infinite for a zero rate.
    pub fn download_times(&self, file_size: f64) -> Vec<f64> {
        self.0
            .iter()
            .map(|&r| {
                if r > 0.0 {
                    file_size / r
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }
}

impl std::ops::Index<usize> for FlowRates {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Weight assignments used by the benchmark grids.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightProfile {
    /// `W_i = 1`.
    Uniform,
    /// `W_i = i / N`.
    Linear,
    /// `W_i = 1 + 99 * [i > N/2]`.
    TwoClass,
    /// `W_i = 1 + [i > N/2]`.
    TwoClassMild,
    Custom(Vec<f64>),
}

impl WeightProfile {
    pub fn weights(&self, n: usize) -> Result<Vec<f64>, ModelError> {
        let upper = |i: usize| 2 * i > n;
        Ok(match self {
            WeightProfile::Uniform => vec![1.0; n],
            WeightProfile::Linear => (1..=n).map(|i| i as f64 / n as f64).collect(),
            WeightProfile::TwoClass => (1..=n)
                .map(|i| if upper(i) { 100.0 } else { 1.0 })
                .collect(),
            WeightProfile::TwoClassMild => {
                (1..=n).map(|i| if upper(i) { 2.0 } else { 1.0 }).collect()
            }
            WeightProfile::Custom(w) => {
                if w.len() != n {
                    return Err(ModelError::WeightCount {
                        expected: n,
                        got: w.len(),
                    });
                }
                w.clone()
            }
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            WeightProfile::Uniform => "uniform",
            WeightProfile::Linear => "linear",
            WeightProfile::TwoClass => "two-class",
            WeightProfile::TwoClassMild => "two-class-mild",
            WeightProfile::Custom(_) => "custom",
        }
    }
}

impl FromStr for WeightProfile {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(WeightProfile::Uniform),
            "linear" => Ok(WeightProfile::Linear),
            "two-class" | "twoclass" => Ok(WeightProfile::TwoClass),
            "two-class-mild" => Ok(WeightProfile::TwoClassMild),
            other => {
                let parsed: Result<Vec<f64>, _> =
                    other.split(',').map(|t| t.trim().parse::<f64>()).collect();
                parsed
                    .map(WeightProfile::Custom)
                    .map_err(|_| ModelError::UnknownWeightProfile(s.to_string()))
            }
        }
    }
}

/// The six benchmark network settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchmarkCase {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl BenchmarkCase {
    pub const ALL: [BenchmarkCase; 6] = [
        BenchmarkCase::I,
        BenchmarkCase::II,
        BenchmarkCase::III,
        BenchmarkCase::IV,
        BenchmarkCase::V,
        BenchmarkCase::VI,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BenchmarkCase::I => "I",
            BenchmarkCase::II => "II",
            BenchmarkCase::III => "III",
            BenchmarkCase::IV => "IV",
            BenchmarkCase::V => "V",
            BenchmarkCase::VI => "VI",
        }
    }

    /// Uplink and downlink of 1-based peer `i` out of `n`.
    pub fn capacities(self, i: usize, n: usize) -> (f64, Downlink) {
        let frac = i as f64 / n as f64;
        let boosted = if 2 * i > n { 10.0 } else { 1.0 };
        match self {
            BenchmarkCase::I => (1.0, Downlink::Unbounded),
            BenchmarkCase::II => (1.0, Downlink::Limited(8.0)),
            BenchmarkCase::III => (frac, Downlink::Unbounded),
            BenchmarkCase::IV => (frac, Downlink::Limited(8.0 * frac)),
            BenchmarkCase::V => (boosted, Downlink::Unbounded),
            BenchmarkCase::VI => (boosted, Downlink::Limited(8.0 * frac)),
        }
    }
}

impl fmt::Display for BenchmarkCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BenchmarkCase {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(BenchmarkCase::I),
            "II" | "2" => Ok(BenchmarkCase::II),
            "III" | "3" => Ok(BenchmarkCase::III),
            "IV" | "4" => Ok(BenchmarkCase::IV),
            "V" | "5" => Ok(BenchmarkCase::V),
            "VI" | "6" => Ok(BenchmarkCase::VI),
            _ => Err(ModelError::UnknownCase(s.to_string())),
        }
    }
}

/// Raw benchmark parameters, before the uplink clamp `U_i <- min(U_i, D_i)`.
pub fn case_scenario(
    case: BenchmarkCase,
    n: usize,
    source_uplink: f64,
    weights: &WeightProfile,
    file_size: f64,
) -> Result<Scenario, ModelError> {
    if n == 0 {
        return Err(ModelError::NoPeers);
    }
    let w = weights.weights(n)?;
    let peers = (1..=n)
        .zip(w)
        .map(|(i, weight)| {
            let (uplink, downlink) = case.capacities(i, n);
            PeerSpec::new(uplink, downlink, weight)
        })
        .collect();
    Ok(Scenario {
        source_uplink,
        file_size,
        peers,
    })
}

/// Validated benchmark network. Boosted uplinks in Case VI exceed the
/// downlink of low-index peers and come back clamped.
pub fn generate_case(
    case: BenchmarkCase,
    n: usize,
    source_uplink: f64,
    weights: &WeightProfile,
    file_size: f64,
) -> Result<Network, ModelError> {
    validate_scenario(&case_scenario(case, n, source_uplink, weights, file_size)?)
}
