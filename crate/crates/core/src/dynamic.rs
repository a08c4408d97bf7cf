//! Epoch-driven simulation of the dynamic rateless-coding scheme.
//!
//! At every event (a peer finishing or joining) the active peers are ranked
//! by `W_i / q_i`, the leading ones are given epoch weight 1 and the rest
//! weight 0, and the static depth-2 rateless allocator is rerun on the
//! residual instance. Peers that hold the whole file either keep uploading
//! (their uplink joins the source pool) or leave.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alloc::depth2_rateless_rates;
use crate::error::{DynamicError, Error};
use crate::model::{Network, PeerSpec};
use crate::sweep::format_num;

/// Residual fraction below which a peer counts as finished.
pub const FINISH_TOL: f64 = 1e-12;

/// What a peer holding the complete file does next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Retain,
    Leave,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Retain => "retain",
            Mode::Leave => "leave",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "retain" => Ok(Mode::Retain),
            "leave" | "leave-on-finish" => Ok(Mode::Leave),
            _ => Err(Error::Parse(format!(
                "unknown mode {s:?} (expected retain or leave)"
            ))),
        }
    }
}

/// A peer entering the network at `time` with nothing downloaded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Join {
    pub time: f64,
    #[serde(flatten)]
    pub peer: PeerSpec,
}

/// A peer as seen by the ordering rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerState {
    pub weight: f64,
    /// Fraction of the file still missing.
    pub q: f64,
    pub d_tilde: f64,
}

/// Whether peer `i` should be fully supported ahead of peer `j` when `s`
/// units of uplink serve the pair (exact two-peer condition).
pub fn precedes(i: &PeerState, j: &PeerState, s: f64) -> bool {
    let ratio = weight_ratio(i, j);
    if i.q / i.d_tilde < j.q / j.d_tilde {
        ratio > (i.q / j.q).max((s - j.d_tilde) / j.d_tilde)
    } else {
        ratio > 1.0 / (j.q / i.q).max((s - i.d_tilde) / i.d_tilde)
    }
}

/// Necessary condition for a selection that fully supports `i` and leaves
/// `j` out: [`precedes`] with `s = D~_i`.
pub fn selection_precedes(i: &PeerState, j: &PeerState) -> bool {
    precedes(i, j, i.d_tilde)
}

/// The transitive approximation `W_i / q_i >= W_j / q_j`.
pub fn approx_precedes(i: &PeerState, j: &PeerState) -> bool {
    i.weight * j.q >= j.weight * i.q
}

fn weight_ratio(i: &PeerState, j: &PeerState) -> f64 {
    if j.weight == 0.0 {
        if i.weight > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    } else {
        i.weight / j.weight
    }
}

/// Peers chosen for full support in one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    /// Local indices by descending `W / q` (ties: smaller `q`, then index).
    pub order: Vec<usize>,
    /// The first `selected` entries of `order` are supported.
    pub selected: usize,
    /// 0/1 epoch weights by local index.
    pub weights: Vec<f64>,
}

impl SupportSet {
    pub fn supported(&self) -> &[usize] {
        &self.order[..self.selected]
    }
}

/// Ranks peers by `W / q` and supports the shortest prefix whose downlinks
/// can absorb `budget` (everybody when none can).
pub fn select_support_set(peers: &[PeerState], budget: f64) -> SupportSet {
    let mut order: Vec<usize> = (0..peers.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&peers[a], &peers[b]);
        (pb.weight * pa.q)
            .total_cmp(&(pa.weight * pb.q))
            .then(pa.q.total_cmp(&pb.q))
            .then(a.cmp(&b))
    });
    let mut selected = order.len();
    let mut acc = 0.0;
    for (k, &i) in order.iter().enumerate() {
        acc += peers[i].d_tilde;
        if acc >= budget {
            selected = k + 1;
            break;
        }
    }
    let mut weights = vec![0.0; peers.len()];
    for &i in &order[..selected] {
        weights[i] = 1.0;
    }
    SupportSet {
        order,
        selected,
        weights,
    }
}

/// One epoch of the simulation. Per-peer vectors are indexed by global
/// peer id (initial peers first, then joins in schedule order).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub start: f64,
    pub duration: f64,
    /// Peers fully supported in this epoch (global ids, ranking order).
    pub supported: Vec<usize>,
    pub weights: Vec<f64>,
    pub rates: Vec<f64>,
    /// Residual fractions at the end of the epoch.
    pub q: Vec<f64>,
    /// Peers finishing at the end of the epoch.
    pub finished: Vec<usize>,
    /// Peers joining at the end of the epoch.
    pub joined: Vec<usize>,
}

impl EpochRecord {
    /// `finish:1,2;join:5` style label, 1-based ids.
    pub fn event(&self) -> String {
        let ids = |v: &[usize]| {
            v.iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut parts = Vec::new();
        if !self.finished.is_empty() {
            parts.push(format!("finish:{}", ids(&self.finished)));
        }
        if !self.joined.is_empty() {
            parts.push(format!("join:{}", ids(&self.joined)));
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeerOutcome {
    pub weight: f64,
    pub join_time: f64,
    pub finish_time: f64,
}

impl PeerOutcome {
    pub fn download_time(&self) -> f64 {
        self.finish_time - self.join_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicTrace {
    pub mode: Mode,
    pub epochs: Vec<EpochRecord>,
    pub peers: Vec<PeerOutcome>,
    /// `sum W_i (finish_i - join_i)` under the original weights.
    pub wsdt: f64,
}

impl DynamicTrace {
    pub fn finish_times(&self) -> Vec<f64> {
        self.peers.iter().map(|p| p.finish_time).collect()
    }

    /// Epoch table: `epoch,t_start,duration,event,supported_ids,r_1..r_N`
    /// with 1-based ids separated by spaces.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["epoch", "t_start", "duration", "event", "supported_ids"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=self.peers.len()).map(|i| format!("r_{i}")));
        w.write_record(&header)?;
        for (k, e) in self.epochs.iter().enumerate() {
            let mut rec = vec![
                (k + 1).to_string(),
                format_num(e.start),
                format_num(e.duration),
                e.event(),
                e.supported
                    .iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            ];
            rec.extend(e.rates.iter().map(|&r| format_num(r)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<trace>".into(),
            source: e,
        })?;
        Ok(())
    }

    /// Global ids in the order they finished (ties by id).
    pub fn finish_order(&self) -> Vec<usize> {
        self.epochs
            .iter()
            .flat_map(|e| e.finished.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Pending,
    Active,
    Done,
}

/// Runs the dynamic scheme until every peer, including late joiners, has
/// the file.
pub fn simulate_dynamic(
    network: &Network,
    mode: Mode,
    joins: &[Join],
) -> Result<DynamicTrace, DynamicError> {
    for (k, j) in joins.iter().enumerate() {
        if !j.time.is_finite() || j.time < 0.0 {
            return Err(DynamicError::InvalidJoinTime(k + 1));
        }
        if k > 0 && j.time < joins[k - 1].time {
            return Err(DynamicError::UnsortedJoins(k + 1));
        }
    }
    let mut specs = network.peers().to_vec();
    specs.extend(joins.iter().map(|j| j.peer));
    // validates and clamps the joining peers as well
    let all = Network::new(network.source_uplink(), specs, network.file_size())?;
    let specs = all.peers();
    let initial = network.len();
    let total = specs.len();
    let b = network.file_size();

    let mut status = vec![Status::Pending; total];
    let mut join_time = vec![0.0; total];
    for (k, j) in joins.iter().enumerate() {
        join_time[initial + k] = j.time;
    }
    status[..initial].fill(Status::Active);
    let mut q = vec![0.0; total];
    q[..initial].fill(1.0);
    let mut finish = vec![f64::NAN; total];
    let mut pool = network.source_uplink();
    let mut next_join = 0;
    let mut t = 0.0;
    let mut epochs = Vec::new();

    let admit = |t: f64, next_join: &mut usize, status: &mut [Status], q: &mut [f64]| {
        let mut joined = Vec::new();
        while *next_join < joins.len() && joins[*next_join].time <= t {
            let id = initial + *next_join;
            status[id] = Status::Active;
            q[id] = 1.0;
            joined.push(id);
            *next_join += 1;
        }
        joined
    };
    admit(t, &mut next_join, &mut status, &mut q);

    loop {
        let active: Vec<usize> = (0..total)
            .filter(|&i| status[i] == Status::Active)
            .collect();
        if active.is_empty() {
            if next_join >= joins.len() {
                break;
            }
            t = joins[next_join].time;
            admit(t, &mut next_join, &mut status, &mut q);
            continue;
        }

        let states: Vec<PeerState> = active
            .iter()
            .map(|&i| PeerState {
                weight: specs[i].weight,
                q: q[i],
                d_tilde: specs[i].downlink.min_with(pool),
            })
            .collect();
        let budget = pool + active.iter().map(|&i| specs[i].uplink).sum::<f64>();
        let support = select_support_set(&states, budget);
        let epoch_net = Network::new(
            pool,
            active
                .iter()
                .zip(&support.weights)
                .map(|(&i, &w)| PeerSpec {
                    weight: w,
                    ..specs[i]
                })
                .collect(),
            b,
        )?;
        let local_rates = depth2_rateless_rates(&epoch_net).0;

        let mut dt = f64::INFINITY;
        for (k, &i) in active.iter().enumerate() {
            if local_rates[k] > 0.0 {
                dt = dt.min(q[i] * b / local_rates[k]);
            }
        }
        if next_join < joins.len() {
            dt = dt.min(joins[next_join].time - t);
        }
        if !dt.is_finite() {
            let peer = active
                .iter()
                .copied()
                .find(|&i| specs[i].weight > 0.0)
                .unwrap_or(active[0]);
            return Err(DynamicError::Diverged {
                peer: peer + 1,
                time: t,
            });
        }

        let mut rates = vec![0.0; total];
        let mut weights = vec![0.0; total];
        let mut finished = Vec::new();
        for (k, &i) in active.iter().enumerate() {
            let r = local_rates[k];
            rates[i] = r;
            weights[i] = support.weights[k];
            if r > 0.0 && q[i] * b / r <= dt * (1.0 + FINISH_TOL) {
                q[i] = 0.0;
            } else {
                q[i] -= r * dt / b;
            }
            if q[i] <= FINISH_TOL {
                q[i] = 0.0;
                status[i] = Status::Done;
                finish[i] = t + dt;
                finished.push(i);
                if mode == Mode::Retain {
                    pool += specs[i].uplink;
                }
            }
        }
        let start = t;
        t += dt;
        let joined = admit(t, &mut next_join, &mut status, &mut q);
        epochs.push(EpochRecord {
            start,
            duration: dt,
            supported: support.supported().iter().map(|&k| active[k]).collect(),
            weights,
            rates,
            q: q.clone(),
            finished,
            joined,
        });
    }

    let peers: Vec<PeerOutcome> = (0..total)
        .map(|i| PeerOutcome {
            weight: specs[i].weight,
            join_time: join_time[i],
            finish_time: finish[i],
        })
        .collect();
    let wsdt = peers
        .iter()
        .filter(|p| p.weight > 0.0)
        .map(|p| p.weight * p.download_time())
        .sum();
    Ok(DynamicTrace {
        mode,
        epochs,
        peers,
        wsdt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Downlink;

    fn st(weight: f64, q: f64, d_tilde: f64) -> PeerState {
        PeerState { weight, q, d_tilde }
    }

    fn uniform(us: f64, uplinks: &[f64]) -> Network {
        Network::new(
            us,
            uplinks
                .iter()
                .map(|&u| PeerSpec::new(u, Downlink::Unbounded, 1.0))
                .collect(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn approximate_relation() {
        assert!(approx_precedes(&st(2.0, 1.0, 2.0), &st(1.0, 1.0, 2.0)));
        assert!(!approx_precedes(&st(1.0, 1.0, 2.0), &st(2.0, 1.0, 2.0)));
        assert!(approx_precedes(&st(1.0, 0.5, 3.0), &st(1.0, 1.0, 1.0)));
    }

    #[test]
    fn selection_condition_branches() {
        // q_i/D_i < q_j/D_j: needs W_i/W_j > max(q_i/q_j, (D_i - D_j)/D_j)
        let i = st(1.5, 1.0, 4.0);
        let j = st(1.0, 1.0, 1.0);
        assert!(!selection_precedes(&i, &j));
        let i = st(3.5, 1.0, 4.0);
        assert!(selection_precedes(&i, &j));
        // q_i/D_i > q_j/D_j: needs W_i/W_j > q_i/q_j
        let i = st(1.1, 1.0, 1.0);
        let j = st(1.0, 1.0, 4.0);
        assert!(selection_precedes(&i, &j));
        assert!(!selection_precedes(&st(0.9, 1.0, 1.0), &j));
    }

    #[test]
    fn support_set_examples() {
        let s = select_support_set(&[st(1.0, 1.0, 2.0); 3], 5.0);
        assert_eq!(s.selected, 3);
        assert_eq!(s.weights, vec![1.0; 3]);

        let s = select_support_set(&vec![st(1.0, 1.0, 10.0); 100], 110.0);
        assert_eq!(s.selected, 11);
        assert_eq!(s.supported(), &(0..11).collect::<Vec<_>>()[..]);

        let s = select_support_set(&[st(1.0, 1.0, 1.0)], 50.0);
        assert_eq!(s.selected, 1);
    }

    #[test]
    fn support_ties_prefer_smaller_q() {
        let s = select_support_set(&[st(1.0, 1.0, 1.0), st(0.5, 0.5, 1.0)], 1.0);
        assert_eq!(s.order, vec![1, 0]);
        assert_eq!(s.weights, vec![0.0, 1.0]);
    }

    #[test]
    fn three_peer_single_epoch() {
        let tr = simulate_dynamic(&uniform(2.0, &[1.0; 3]), Mode::Retain, &[]).unwrap();
        assert_eq!(tr.epochs.len(), 1);
        assert!((tr.wsdt - 1.8).abs() < 1e-9);
        assert_eq!(tr.finish_order(), vec![0, 1, 2]);
    }

    #[test]
    fn single_peer_finish_time() {
        let n = Network::new(
            3.0,
            vec![PeerSpec::new(1.0, Downlink::Limited(2.0), 5.0)],
            4.0,
        )
        .unwrap();
        let tr = simulate_dynamic(&n, Mode::Leave, &[]).unwrap();
        assert!((tr.peers[0].finish_time - 2.0).abs() < 1e-12);
        assert!((tr.wsdt - 10.0).abs() < 1e-12);
    }

    #[test]
    fn two_peers_fully_supported() {
        let tr = simulate_dynamic(&uniform(1.0, &[1.0, 1.0]), Mode::Retain, &[]).unwrap();
        assert!((tr.peers[0].finish_time - 1.0).abs() < 1e-12);
        assert!((tr.peers[1].finish_time - 1.0).abs() < 1e-12);
        assert!((tr.wsdt - 2.0).abs() < 1e-12);
    }

    #[test]
    fn join_truncates_epoch() {
        let joins = [Join {
            time: 0.25,
            peer: PeerSpec::new(1.0, Downlink::Unbounded, 1.0),
        }];
        let tr = simulate_dynamic(&uniform(1.0, &[1.0]), Mode::Retain, &joins).unwrap();
        assert!((tr.epochs[0].duration - 0.25).abs() < 1e-12);
        assert_eq!(tr.epochs[0].joined, vec![1]);
        assert_eq!(tr.epochs[0].event(), "join:2");
        assert!(tr.peers.iter().all(|p| p.finish_time.is_finite()));
        assert!(tr.peers[1].download_time() > 0.0);
    }

    #[test]
    fn late_join_after_idle_gap() {
        let joins = [Join {
            time: 10.0,
            peer: PeerSpec::new(1.0, Downlink::Unbounded, 2.0),
        }];
        let tr = simulate_dynamic(&uniform(1.0, &[1.0]), Mode::Leave, &joins).unwrap();
        assert!((tr.peers[1].join_time - 10.0).abs() < 1e-12);
        assert!((tr.peers[1].download_time() - 1.0).abs() < 1e-12);
        assert!((tr.wsdt - 3.0).abs() < 1e-12);
    }

    #[test]
    fn trace_csv_layout() {
        let tr = simulate_dynamic(&uniform(2.0, &[1.0; 3]), Mode::Retain, &[]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,t_start,duration,event,supported_ids,r_1,r_2,r_3"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,0,0.6,\"finish:1,2,3\",1 2 3,1.66666666667,1.66666666667,1.66666666667"
        );
    }

    #[test]
    fn bad_join_schedules() {
        let p = PeerSpec::new(1.0, Downlink::Unbounded, 1.0);
        let net = uniform(1.0, &[1.0]);
        let unsorted = [Join { time: 2.0, peer: p }, Join { time: 1.0, peer: p }];
        assert_eq!(
            simulate_dynamic(&net, Mode::Retain, &unsorted).unwrap_err(),
            DynamicError::UnsortedJoins(2)
        );
        let negative = [Join {
            time: -1.0,
            peer: p,
        }];
        assert_eq!(
            simulate_dynamic(&net, Mode::Retain, &negative).unwrap_err(),
            DynamicError::InvalidJoinTime(1)
        );
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("retain".parse::<Mode>().unwrap(), Mode::Retain);
        assert_eq!("leave-on-finish".parse::<Mode>().unwrap(), Mode::Leave);
        assert!("stay".parse::<Mode>().is_err());
    }
}
