//! Max-flow / min-cut over rate graphs and time-expanded graphs.
//!
//! The solver is the shortest-augmenting-path method (BFS, Edmonds-Karp).
//! Instances here are small and dense, so the simple method is adequate and
//! keeps the arithmetic easy to reason about.

use std::collections::{HashMap, VecDeque};

use crate::error::FlowError;
use crate::model::{slack, FlowRates, Network, RateAllocation};

/// Directed graph with nonnegative edge capacities. At most one edge per
/// ordered vertex pair; `f64::INFINITY` marks an unbounded edge.
#[derive(Debug, Clone, Default)]
pub struct CapGraph {
    vertices: usize,
    edges: Vec<(usize, usize, f64)>,
    index: HashMap<(usize, usize), usize>,
}

impl CapGraph {
    pub fn new(vertices: usize) -> Self {
        CapGraph {
            vertices,
            ..Default::default()
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn capacity(&self, from: usize, to: usize) -> Option<f64> {
        self.index.get(&(from, to)).map(|&e| self.edges[e].2)
    }

    fn check_vertex(&self, v: usize) -> Result<(), FlowError> {
        if v >= self.vertices {
            return Err(FlowError::VertexOutOfRange {
                vertex: v,
                size: self.vertices,
            });
        }
        Ok(())
    }

    pub fn add_edge(&mut self, from: usize, to: usize, capacity: f64) -> Result<(), FlowError> {
        self.check_vertex(from)?;
        self.check_vertex(to)?;
        if capacity.is_nan() || capacity < 0.0 {
            return Err(FlowError::InvalidCapacity { from, to, capacity });
        }
        if self.index.contains_key(&(from, to)) {
            return Err(FlowError::DuplicateEdge { from, to });
        }
        self.index.insert((from, to), self.edges.len());
        self.edges.push((from, to, capacity));
        Ok(())
    }

    /// Copy with every finite capacity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CapGraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            if e.2.is_finite() {
                e.2 *= factor;
            }
        }
        g
    }

    /// Sum of all finite capacities.
    pub fn finite_capacity(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.2)
            .filter(|c| c.is_finite())
            .sum()
    }
}

/// Result of a max-flow computation with the source side of a minimum cut.
#[derive(Debug, Clone)]
pub struct MaxFlow {
    pub value: f64,
    pub source_side: Vec<bool>,
}

struct Arc {
    to: usize,
    cap: f64,
}

/// Max-flow from `source` to `sink`.
pub fn max_flow(graph: &CapGraph, source: usize, sink: usize) -> Result<f64, FlowError> {
    max_flow_cut(graph, source, sink).map(|m| m.value)
}

pub fn max_flow_cut(graph: &CapGraph, source: usize, sink: usize) -> Result<MaxFlow, FlowError> {
    graph.check_vertex(source)?;
    graph.check_vertex(sink)?;
    if source == sink {
        return Err(FlowError::SourceIsSink(source));
    }
    // a path of unbounded edges carries unbounded flow
    let mut seen = vec![false; graph.vertices];
    seen[source] = true;
    let mut stack = vec![source];
    while let Some(u) = stack.pop() {
        for &(a, b, c) in &graph.edges {
            if a == u && c == f64::INFINITY && !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    if seen[sink] {
        return Ok(MaxFlow {
            value: f64::INFINITY,
            source_side: seen,
        });
    }
    let finite = graph.finite_capacity();
    let unbounded = finite + 1.0;
    // residual arcs in pairs: arc 2k forward, 2k+1 backward
    let mut arcs: Vec<Arc> = Vec::with_capacity(graph.edges.len() * 2);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); graph.vertices];
    for &(u, v, c) in &graph.edges {
        if c == 0.0 || u == v {
            continue;
        }
        let cap = if c.is_finite() { c } else { unbounded };
        adj[u].push(arcs.len());
        arcs.push(Arc { to: v, cap });
        adj[v].push(arcs.len());
        arcs.push(Arc { to: u, cap: 0.0 });
    }
    let eps = 1e-15 * unbounded;

    let mut value = 0.0;
    let mut parent: Vec<Option<usize>> = vec![None; graph.vertices];
    loop {
        parent.iter_mut().for_each(|p| *p = None);
        let mut seen = vec![false; graph.vertices];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for &a in &adj[u] {
                let arc = &arcs[a];
                if !seen[arc.to] && arc.cap > eps {
                    seen[arc.to] = true;
                    parent[arc.to] = Some(a);
                    queue.push_back(arc.to);
                }
            }
        }
        if !seen[sink] {
            return Ok(MaxFlow {
                value,
                source_side: seen,
            });
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while let Some(a) = parent[v] {
            bottleneck = bottleneck.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = sink;
        while let Some(a) = parent[v] {
            arcs[a].cap -= bottleneck;
            arcs[a ^ 1].cap += bottleneck;
            v = arcs[a ^ 1].to;
        }
        value += bottleneck;
    }
}

/// Rate graph of an allocation: vertex 0 is the source, peer `i` is vertex
/// `i + 1`.
pub fn rate_graph(alloc: &RateAllocation) -> CapGraph {
    let n = alloc.len();
    let mut g = CapGraph::new(n + 1);
    for i in 0..n {
        for j in 0..n {
            let r = alloc.get(i, j);
            if r > 0.0 {
                let from = if i == j { 0 } else { i + 1 };
                g.add_edge(from, j + 1, r).expect("one edge per pair");
            }
        }
    }
    g
}

/// Min-cut flow rate from the source to every peer under a fixed allocation.
pub fn flow_rates_of_allocation(
    network: &Network,
    alloc: &RateAllocation,
) -> Result<FlowRates, FlowError> {
    alloc.check(network)?;
    let g = rate_graph(alloc);
    (0..alloc.len())
        .map(|i| max_flow(&g, 0, i + 1))
        .collect::<Result<Vec<_>, _>>()
        .map(FlowRates)
}

/// A vertex of the original overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Source,
    Peer(usize),
}

/// Epoch-replicated capacity graph. Transmission edges in epoch `k` carry
/// `rate * durations[k]`; memory edges `v(k) -> v(k+1)` are unbounded.
#[derive(Debug, Clone)]
pub struct TimeExpandedGraph {
    peers: usize,
    durations: Vec<f64>,
    graph: CapGraph,
}

impl TimeExpandedGraph {
    pub fn build(alloc: &RateAllocation, durations: &[f64]) -> Result<Self, FlowError> {
        let n = alloc.len();
        if durations.len() != n {
            return Err(FlowError::DurationCount {
                expected: n,
                got: durations.len(),
            });
        }
        for (k, &d) in durations.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(FlowError::InvalidDuration {
                    epoch: k + 1,
                    value: d,
                });
            }
        }
        let layer = n + 1;
        let mut graph = CapGraph::new(layer * n);
        for (k, &dt) in durations.iter().enumerate() {
            let base = k * layer;
            for i in 0..n {
                for j in 0..n {
                    let cap = alloc.get(i, j) * dt;
                    if cap > 0.0 {
                        let from = if i == j { base } else { base + i + 1 };
                        graph.add_edge(from, base + j + 1, cap)?;
                    }
                }
            }
            if k + 1 < n {
                for v in 0..layer {
                    graph.add_edge(base + v, base + layer + v, f64::INFINITY)?;
                }
            }
        }
        Ok(TimeExpandedGraph {
            peers: n,
            durations: durations.to_vec(),
            graph,
        })
    }

    /// Vertex index of `node` in 0-based `epoch`.
    pub fn vertex(&self, node: Node, epoch: usize) -> usize {
        let offset = match node {
            Node::Source => 0,
            Node::Peer(i) => i + 1,
        };
        epoch * (self.peers + 1) + offset
    }

    pub fn epochs(&self) -> usize {
        self.durations.len()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn graph(&self) -> &CapGraph {
        &self.graph
    }

    /// Information that can reach `peer` by the end of 0-based `epoch`.
    pub fn flow_to(&self, peer: usize, epoch: usize) -> Result<f64, FlowError> {
        max_flow(
            &self.graph,
            self.vertex(Node::Source, 0),
            self.vertex(Node::Peer(peer), epoch),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerVerdict {
    /// 0-based peer index.
    pub peer: usize,
    /// 0-based epoch at whose end the peer must hold the file.
    pub epoch: usize,
    pub finish_time: f64,
    pub flow: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub verdicts: Vec<PeerVerdict>,
}

impl ScheduleReport {
    pub fn all_feasible(&self) -> bool {
        self.verdicts.iter().all(|v| v.feasible)
    }

    /// Verdict for 0-based `peer`.
    pub fn peer(&self, peer: usize) -> &PeerVerdict {
        self.verdicts
            .iter()
            .find(|v| v.peer == peer)
            .expect("one verdict per peer")
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<(), FlowError> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(FlowError::InvalidPermutation(n));
    }
    for &p in order {
        if p >= n || seen[p] {
            return Err(FlowError::InvalidPermutation(n));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Checks that a static allocation delivers the whole file to peer
/// `finish_order[k]` by the end of epoch `k`, for every `k`.
///
/// `finish_order` holds 0-based peer indices.
pub fn verify_static_schedule(
    network: &Network,
    alloc: &RateAllocation,
    finish_order: &[usize],
    durations: &[f64],
) -> Result<ScheduleReport, FlowError> {
    let n = network.len();
    check_permutation(finish_order, n)?;
    alloc.check(network)?;
    let teg = TimeExpandedGraph::build(alloc, durations)?;
    let b = network.file_size();
    let mut elapsed = 0.0;
    let mut verdicts = Vec::with_capacity(n);
    for (epoch, &peer) in finish_order.iter().enumerate() {
        elapsed += durations[epoch];
        let flow = teg.flow_to(peer, epoch)?;
        verdicts.push(PeerVerdict {
            peer,
            epoch,
            finish_time: elapsed,
            flow,
            feasible: flow >= b - slack(b),
        });
    }
    verdicts.sort_by_key(|v| v.peer);
    Ok(ScheduleReport { verdicts })
}

/// The finish order and epoch durations that realize `t_i = B / r_i`:
/// peers sorted by rate descending (ties by index), `dt_k = B/r_k - B/r_{k-1}`.
pub fn finish_schedule(rates: &FlowRates, file_size: f64) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then(a.cmp(&b)));
    let mut prev = 0.0;
    let durations = order
        .iter()
        .map(|&i| {
            let t = if rates[i] > 0.0 {
                file_size / rates[i]
            } else {
                f64::INFINITY
            };
            let dt = (t - prev).max(0.0);
            prev = t;
            dt
        })
        .collect();
    (order, durations)
}
