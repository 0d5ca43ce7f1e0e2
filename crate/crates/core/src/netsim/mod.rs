//! Deterministic network simulator with exact communication accounting.
//!
//! Cost is counted in real values transmitted. Broadcasting one real from
//! `origin` costs a fixed per-topology constant `B(origin)`:
//!
//! | topology | `B(origin)` |
//! |---|---|
//! | star (hub + leaves) | `N` |
//! | rooted tree | `depth(origin) + N − 1` (up to the root, then down every edge) |
//! | fully connected | `N − 1` |
//! | general graph, fully distributed flood | `M` |
//!
//! A single-node network costs nothing. Reductions of one scalar per node cost
//! `Σ_i B(i)` when every node floods its scalar, and exactly `(N − 1)` reals
//! up plus `(N − 1)` reals down when aggregated along a spanning tree or at a
//! star coordinator.

mod drop;
mod topology;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use drop::DropFilter;
pub use topology::{Topology, TopologyKind, TopologySpec};

use crate::error::{Error, Result};

/// What a batch of transmitted reals was carrying.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    /// Local gradient maxima `g_i`.
    GradScalar,
    /// Stopping-criterion partial sums `S_i`.
    PartialSum,
    /// Atom coordinates (or a labelled training point).
    AtomPayload,
    /// The selected atom index `j`.
    IndexScalar,
    /// Results sent back down by a reduction.
    ReduceScalar,
    /// Line-search step computed by the winning node.
    StepScalar,
    /// Vertex sign sent along with an atom when messages are point-to-point.
    SignScalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub iteration: usize,
    pub kind: MessageKind,
    pub reals: u64,
}

/// Append-only count of real values transmitted.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MessageLedger {
    entries: Vec<LedgerEntry>,
    total: u64,
}

impl MessageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, iteration: usize, kind: MessageKind, reals: u64) {
        if reals == 0 {
            return;
        }
        self.entries.push(LedgerEntry {
            iteration,
            kind,
            reals,
        });
        self.total += reals;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn iteration_total(&self, iteration: usize) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.iteration == iteration)
            .map(|e| e.reals)
            .sum()
    }

    pub fn kind_total(&self, kind: MessageKind) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.reals)
            .sum()
    }

    /// Per-iteration totals for iterations `0..=last`.
    pub fn per_iteration(&self) -> Vec<u64> {
        let last = self.entries.iter().map(|e| e.iteration).max();
        let mut out = vec![0; last.map_or(0, |l| l + 1)];
        for e in &self.entries {
            out[e.iteration] += e.reals;
        }
        out
    }
}

/// How per-node scalars are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BroadcastStrategy {
    /// Every node broadcasts its scalar to everyone.
    NaiveFlood,
    /// Aggregate up a spanning tree rooted at node 0, send the result down.
    TreeReduce,
    /// Leaves report to the star hub, which replies to every leaf.
    StarCoordinator,
}

impl FromStr for BroadcastStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flood" | "naive-flood" => Ok(Self::NaiveFlood),
            "tree" | "tree-reduce" => Ok(Self::TreeReduce),
            "star" | "star-coordinator" => Ok(Self::StarCoordinator),
            other => Err(Error::InvalidParameter(format!(
                "unknown strategy {other:?}"
            ))),
        }
    }
}

/// Cost `B(origin)` of broadcasting one real to every node.
pub fn broadcast_cost(topo: &Topology, origin: usize) -> Result<u64> {
    topo.check_node(origin)?;
    let n = topo.n_nodes() as u64;
    if n == 1 {
        return Ok(0);
    }
    Ok(match topo.kind() {
        TopologyKind::Star => n,
        TopologyKind::RootedTree { .. } => topo.depth(origin) as u64 + n - 1,
        TopologyKind::FullyConnected => n - 1,
        TopologyKind::General { .. } => topo.n_edges() as u64,
    })
}

/// Broadcasts `reals` values from `origin`; returns the ledger increment.
pub fn broadcast(
    ledger: &mut MessageLedger,
    topo: &Topology,
    origin: usize,
    reals: u64,
    iteration: usize,
    kind: MessageKind,
) -> Result<u64> {
    let cost = broadcast_cost(topo, origin)? * reals;
    ledger.charge(iteration, kind, cost);
    Ok(cost)
}

/// Ledger cost of combining one scalar per node under `strategy`, split as
/// (cost charged to the scalar's own kind, cost of the reply phase).
pub fn reduction_cost(topo: &Topology, strategy: BroadcastStrategy) -> Result<(u64, u64)> {
    let n = topo.n_nodes() as u64;
    match strategy {
        BroadcastStrategy::NaiveFlood => {
            let mut total = 0;
            for i in 0..topo.n_nodes() {
                total += broadcast_cost(topo, i)?;
            }
            Ok((total, 0))
        }
        BroadcastStrategy::TreeReduce => Ok((n - 1, n - 1)),
        BroadcastStrategy::StarCoordinator => {
            if !topo.is_star() {
                return Err(Error::InvalidParameter(
                    "the star-coordinator strategy needs a star topology".into(),
                ));
            }
            Ok((n - 1, n - 1))
        }
    }
}

fn charge_reduction(
    ledger: &mut MessageLedger,
    topo: &Topology,
    strategy: BroadcastStrategy,
    iteration: usize,
    kind: MessageKind,
) -> Result<u64> {
    let (up, down) = reduction_cost(topo, strategy)?;
    ledger.charge(iteration, kind, up);
    ledger.charge(iteration, MessageKind::ReduceScalar, down);
    Ok(up + down)
}

/// Elects one entry per node using `better(candidate, incumbent)`, scanning
/// nodes in increasing id order so that ties go to the smallest id. `None`
/// entries (nodes without candidates) never win.
pub fn elect<T: Copy>(
    ledger: &mut MessageLedger,
    topo: &Topology,
    strategy: BroadcastStrategy,
    iteration: usize,
    values: &[Option<T>],
    better: impl Fn(&T, &T) -> bool,
) -> Result<Option<(usize, T)>> {
    if values.len() != topo.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: topo.n_nodes(),
            found: values.len(),
        });
    }
    charge_reduction(ledger, topo, strategy, iteration, MessageKind::GradScalar)?;
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            if best.as_ref().is_none_or(|(_, b)| better(v, b)) {
                best = Some((i, *v));
            }
        }
    }
    Ok(best)
}

/// Largest `|value|` across nodes, known to all; ties go to the smallest node id.
pub fn reduce_max(
    ledger: &mut MessageLedger,
    topo: &Topology,
    strategy: BroadcastStrategy,
    iteration: usize,
    values: &[f64],
) -> Result<(usize, f64)> {
    let wrapped: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
    elect(ledger, topo, strategy, iteration, &wrapped, |a, b| {
        a.abs() > b.abs()
    })?
    .ok_or(Error::Protocol("reduction over an empty network".into()))
}

/// Sum across nodes, folded left in node-id order, known to all.
pub fn reduce_sum(
    ledger: &mut MessageLedger,
    topo: &Topology,
    strategy: BroadcastStrategy,
    iteration: usize,
    values: &[f64],
) -> Result<f64> {
    if values.len() != topo.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: topo.n_nodes(),
            found: values.len(),
        });
    }
    charge_reduction(ledger, topo, strategy, iteration, MessageKind::PartialSum)?;
    Ok(values.iter().fold(0.0, |acc, v| acc + v))
}
