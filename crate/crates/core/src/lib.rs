//! Weighted-sum-download-time (WSDT) minimization for peer-assisted file
//! distribution: lower bounds, static rate allocators, max-flow
//! verification and an epoch-based dynamic simulator.

pub mod alloc;
pub mod bound;
pub mod dynamic;
pub mod error;
pub mod maxflow;
pub mod model;
pub mod sweep;

pub use alloc::{
    depth2_rateless, extended_mutualcast, mutualcast, routing_based, wsdt, Depth2Allocation,
    StaticOutcome, StaticScheme,
};
pub use bound::{waterfill, wsdt_lower_bound, LowerBound, WaterfillSolution};
pub use dynamic::{simulate_dynamic, DynamicTrace, Join, Mode};
pub use error::{AllocError, DynamicError, Error, FlowError, ModelError};
pub use maxflow::{flow_rates_of_allocation, max_flow, verify_static_schedule, CapGraph};
pub use model::{
    case_scenario, generate_case, validate_scenario, BenchmarkCase, Downlink, FlowRates, Network,
    PeerSpec, RateAllocation, Scenario, WeightProfile,
};
