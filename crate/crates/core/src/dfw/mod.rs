//! The distributed Frank-Wolfe protocol over a simulated network.
//!
//! Every round, each node picks its best local atom and reports the gradient
//! entry `g_i` together with its share `S_i` of `⟨α, ∇f(α)⟩`. The node with
//! the best `g_i` wins, broadcasts its atom, and every node applies the same
//! update to its own copy of `α`. The stopping quantity
//! `Σ_i S_i − ⟨s, ∇f(α)⟩` is exactly the Frank-Wolfe duality gap, so in
//! synchronous mode the run follows the centralized solver step for step.
//!
//! Elections rank bids by the LMO criterion and break ties on the atom index,
//! which makes the winner independent of how atoms are spread over nodes.

mod node;
mod partition;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use node::{outranks, LocalBid, NodeAtoms, NodeState};
pub use partition::{Partition, PartitionScheme};

use crate::error::{Error, Result};
use crate::fw::{gap_from_parts, harmonic_step, IterationRecord, RunTrace, SolverConfig, StepRule};
use crate::netsim::{
    broadcast, elect, reduce_sum, BroadcastStrategy, DropFilter, MessageKind, MessageLedger,
    Topology,
};
use crate::objectives::{AtomMatrix, Domain, Iterate, ObjectiveKind};

/// Replicas further apart than this abort a synchronous run.
pub const REPLICA_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExecutionMode {
    /// Lock-step rounds, no losses.
    Sync,
    /// Point-to-point messages, each lost independently with probability `p`.
    Drop { p: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DfwConfig {
    pub solver: SolverConfig,
    pub strategy: BroadcastStrategy,
    pub mode: ExecutionMode,
}

impl DfwConfig {
    pub fn sync(solver: SolverConfig, strategy: BroadcastStrategy) -> Self {
        Self {
            solver,
            strategy,
            mode: ExecutionMode::Sync,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DfwOutcome {
    pub trace: RunTrace,
    pub ledger: MessageLedger,
    /// Objective of every node's replica at each round (drop mode only).
    pub node_objectives: Option<Vec<Vec<f64>>>,
}

/// The nodes of a network together with the ledger charged for their traffic.
pub struct Cluster {
    domain: Domain,
    topo: Topology,
    partition: Partition,
    nodes: Vec<NodeState>,
    ledger: MessageLedger,
    payload: u64,
}

impl Cluster {
    /// Hands each node its local atoms. On the simplex every node also gets
    /// a copy of atom 0, the start vertex, as part of setup (not charged).
    pub fn new(
        kind: ObjectiveKind,
        atoms: &AtomMatrix,
        domain: Domain,
        partition: Partition,
        topo: Topology,
    ) -> Result<Self> {
        let n = atoms.n_atoms();
        if partition.n_atoms() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: partition.n_atoms(),
            });
        }
        if partition.n_nodes() != topo.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: topo.n_nodes(),
                found: partition.n_nodes(),
            });
        }
        let payload = kind.atom_payload(atoms.dim());
        let start = Iterate::start(domain);
        let mut stores = Vec::with_capacity(topo.n_nodes());
        for i in 0..topo.n_nodes() {
            stores.push(NodeAtoms::from_matrix(atoms, &partition.local(i))?);
        }
        for (j, _) in start.iter() {
            let origin = partition.owner(j);
            let (col, label) = stores[origin].payload(j)?;
            for store in stores.iter_mut() {
                store.receive(j, col.clone(), label);
            }
        }
        let nodes = stores
            .into_iter()
            .enumerate()
            .map(|(i, store)| {
                NodeState::new(i, kind.clone(), store, n, partition.local(i), start.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            domain,
            topo,
            partition,
            nodes,
            ledger: MessageLedger::new(),
            payload,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn ledger(&self) -> &MessageLedger {
        &self.ledger
    }

    /// Reals needed to ship one atom.
    pub fn payload(&self) -> u64 {
        self.payload
    }

    fn check_replicas(&self, k: usize) -> Result<()> {
        let reference = self.nodes[0].replica();
        for node in &self.nodes[1..] {
            let diff = node.replica().max_abs_diff(reference);
            if diff > REPLICA_TOLERANCE {
                return Err(Error::Protocol(format!(
                    "replica of node {} diverged by {diff:e} after round {k}",
                    node.id()
                )));
            }
        }
        Ok(())
    }

    fn into_outcome(self, trace: RunTrace, node_objectives: Option<Vec<Vec<f64>>>) -> DfwOutcome {
        DfwOutcome {
            trace,
            ledger: self.ledger,
            node_objectives,
        }
    }
}

/// Decides which local atoms each node may offer, and observes each round.
pub trait CandidateRule {
    /// Sorted subset of `node.local()` scanned this round.
    fn candidates(&self, node: &NodeState) -> Vec<usize>;

    /// Called once the winner is known, before any update.
    fn observe(&mut self, _k: usize, _cluster: &Cluster, _winner: &LocalBid) -> Result<()> {
        Ok(())
    }

    /// Called after the update of round `k`.
    fn advance(&mut self, _k: usize, _cluster: &Cluster) -> Result<()> {
        Ok(())
    }
}

/// Every local atom is a candidate.
pub struct AllLocal;

impl CandidateRule for AllLocal {
    fn candidates(&self, node: &NodeState) -> Vec<usize> {
        node.local().to_vec()
    }
}

fn check_value(k: usize, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            iteration: k,
            value,
        })
    }
}

/// Runs the synchronous protocol to completion.
pub fn run_sync(
    cluster: &mut Cluster,
    solver: &SolverConfig,
    strategy: BroadcastStrategy,
    rule: &mut impl CandidateRule,
) -> Result<RunTrace> {
    let started = Instant::now();
    let domain = cluster.domain;
    let mut records = Vec::new();
    let mut k = 0;
    loop {
        let value = check_value(k, cluster.nodes[0].value())?;
        let bids = cluster
            .nodes
            .iter()
            .map(|n| n.local_select(&rule.candidates(n)))
            .collect::<Result<Vec<_>>>()?;
        let (winner, bid) = elect(
            &mut cluster.ledger,
            &cluster.topo,
            strategy,
            k,
            &bids,
            |a, b| outranks(domain, a, b),
        )?
        .ok_or_else(|| Error::Protocol(format!("no node offered an atom in round {k}")))?;
        let sums: Vec<f64> = bids
            .iter()
            .map(|b| b.map_or(0.0, |b| b.partial_sum))
            .collect();
        let inner = reduce_sum(&mut cluster.ledger, &cluster.topo, strategy, k, &sums)?;
        let gap = gap_from_parts(inner, &bid.vertex, bid.grad);
        rule.observe(k, cluster, &bid)?;

        let mut record = IterationRecord {
            iter: k,
            atom: bid.atom(),
            owner: winner,
            step: 0.0,
            objective: value,
            gap,
            support: cluster.nodes[0].replica().support_len(),
            cum_reals: cluster.ledger.total(),
            elapsed_ns: 0,
        };
        if gap <= solver.epsilon || k >= solver.max_iter {
            record.elapsed_ns = started.elapsed().as_nanos() as u64;
            records.push(record);
            let final_iterate = cluster.nodes[0].replica().clone();
            return Ok(RunTrace {
                records,
                final_iterate,
                converged: gap <= solver.epsilon,
            });
        }

        let gamma = match solver.step_rule {
            StepRule::Harmonic => harmonic_step(k),
            StepRule::LineSearch => {
                cluster.nodes[winner].line_search(gap, &bid.vertex, bid.grad)?
            }
        };
        let (ledger, topo) = (&mut cluster.ledger, &cluster.topo);
        broadcast(ledger, topo, winner, 1, k, MessageKind::IndexScalar)?;
        broadcast(
            ledger,
            topo,
            winner,
            cluster.payload,
            k,
            MessageKind::AtomPayload,
        )?;
        if solver.step_rule == StepRule::LineSearch {
            broadcast(ledger, topo, winner, 1, k, MessageKind::StepScalar)?;
        }
        let j = bid.atom();
        let (column, label) = cluster.nodes[winner].atoms().payload(j)?;
        for node in cluster.nodes.iter_mut() {
            node.receive(j, column.clone(), label);
            node.apply(gamma, j, bid.vertex.coefficient(), Some(bid.grad))?;
        }
        cluster.check_replicas(k)?;

        record.step = gamma;
        record.cum_reals = cluster.ledger.total();
        record.elapsed_ns = started.elapsed().as_nanos() as u64;
        records.push(record);
        rule.advance(k, cluster)?;
        k += 1;
    }
}

fn charge_update(ledger: &mut MessageLedger, k: usize, payload: u64) {
    ledger.charge(k, MessageKind::IndexScalar, 1);
    ledger.charge(k, MessageKind::SignScalar, 1);
    ledger.charge(k, MessageKind::AtomPayload, payload);
    ledger.charge(k, MessageKind::StepScalar, 1);
}

/// Runs `max_iter` rounds in which every message may be lost.
///
/// Nodes report `(g_i, S_i)` to the coordinator, which keeps the last value
/// it heard from each node, and notifies the winner of the election. The
/// winner hands `(j, coefficient, atom, γ)` to the coordinator, which commits
/// it to every node, the winner included. A lost report leaves the
/// coordinator's view stale; a lost notification or hand-off cancels the
/// round; a lost commit leaves that replica behind. Harmonic steps are
/// numbered by committed updates. Delivered messages cost their size in
/// reals, lost ones nothing.
pub fn run_with_drops(
    cluster: &mut Cluster,
    solver: &SolverConfig,
    p: f64,
    seed: u64,
) -> Result<(RunTrace, Vec<Vec<f64>>)> {
    let started = Instant::now();
    let mut filter = DropFilter::new(p, seed)?;
    let domain = cluster.domain;
    let coord = cluster.topo.coordinator();
    let n_nodes = cluster.nodes.len();
    let mut view: Vec<Option<LocalBid>> = vec![None; n_nodes];
    let mut records = Vec::new();
    let mut per_node = Vec::new();
    // harmonic steps count committed updates, not rounds
    let mut commits = 0;
    for k in 0..=solver.max_iter {
        let values = cluster
            .nodes
            .iter()
            .map(|n| check_value(k, n.value()))
            .collect::<Result<Vec<_>>>()?;
        let average = values.iter().sum::<f64>() / n_nodes as f64;
        let fresh = cluster
            .nodes
            .iter()
            .map(|n| n.local_select(n.local()))
            .collect::<Result<Vec<_>>>()?;
        for (i, bid) in fresh.iter().enumerate() {
            if i == coord {
                view[i] = *bid;
            } else if let Some(bid) = bid {
                if filter.keep() {
                    cluster.ledger.charge(k, MessageKind::GradScalar, 1);
                    cluster.ledger.charge(k, MessageKind::PartialSum, 1);
                    view[i] = Some(*bid);
                }
            }
        }
        let mut best: Option<(usize, LocalBid)> = None;
        for (i, bid) in view.iter().enumerate() {
            if let Some(bid) = bid {
                if best.as_ref().is_none_or(|(_, b)| outranks(domain, bid, b)) {
                    best = Some((i, *bid));
                }
            }
        }
        let (winner, chosen) = match best {
            Some(b) => b,
            None => {
                // nothing reached the coordinator yet
                records.push(IterationRecord {
                    iter: k,
                    atom: 0,
                    owner: coord,
                    step: 0.0,
                    objective: average,
                    gap: f64::INFINITY,
                    support: cluster.nodes[coord].replica().support_len(),
                    cum_reals: cluster.ledger.total(),
                    elapsed_ns: started.elapsed().as_nanos() as u64,
                });
                per_node.push(values);
                continue;
            }
        };
        let inner = view
            .iter()
            .fold(0.0, |acc, b| acc + b.map_or(0.0, |b| b.partial_sum));
        let gap = gap_from_parts(inner, &chosen.vertex, chosen.grad);
        let mut record = IterationRecord {
            iter: k,
            atom: chosen.atom(),
            owner: winner,
            step: 0.0,
            objective: average,
            gap,
            support: cluster.nodes[coord].replica().support_len(),
            cum_reals: cluster.ledger.total(),
            elapsed_ns: 0,
        };
        per_node.push(values);
        if k == solver.max_iter {
            record.elapsed_ns = started.elapsed().as_nanos() as u64;
            records.push(record);
            break;
        }

        let notified = winner == coord || {
            let kept = filter.keep();
            if kept {
                cluster.ledger.charge(k, MessageKind::ReduceScalar, 1);
            }
            kept
        };
        // The winner hands its step to the coordinator, which commits it to
        // every node. Each hop may drop; the winner only moves on commit.
        let handed = notified
            && (winner == coord || {
                let kept = filter.keep();
                if kept {
                    charge_update(&mut cluster.ledger, k, cluster.payload);
                }
                kept
            });
        if let (true, Some(own)) = (handed, fresh[winner]) {
            let gamma = match solver.step_rule {
                StepRule::Harmonic => harmonic_step(commits),
                StepRule::LineSearch => {
                    cluster.nodes[winner].line_search(gap, &own.vertex, own.grad)?
                }
            };
            commits += 1;
            let (j, coef) = (own.atom(), own.vertex.coefficient());
            let (column, label) = cluster.nodes[winner].atoms().payload(j)?;
            for i in 0..n_nodes {
                if i != coord {
                    if !filter.keep() {
                        continue;
                    }
                    if i == winner {
                        // the owner needs no payload
                        let ledger = &mut cluster.ledger;
                        ledger.charge(k, MessageKind::IndexScalar, 1);
                        ledger.charge(k, MessageKind::SignScalar, 1);
                        ledger.charge(k, MessageKind::StepScalar, 1);
                    } else {
                        charge_update(&mut cluster.ledger, k, cluster.payload);
                    }
                }
                let node = &mut cluster.nodes[i];
                let grad = (i == winner).then_some(own.grad);
                if i != winner {
                    node.receive(j, column.clone(), label);
                }
                node.apply(gamma, j, coef, grad)?;
            }
            record.atom = j;
            record.step = gamma;
        }
        record.cum_reals = cluster.ledger.total();
        record.elapsed_ns = started.elapsed().as_nanos() as u64;
        records.push(record);
    }
    let last_gap = records.last().map_or(f64::INFINITY, |r| r.gap);
    Ok((
        RunTrace {
            records,
            final_iterate: cluster.nodes[coord].replica().clone(),
            converged: last_gap <= solver.epsilon,
        },
        per_node,
    ))
}

/// Distributed Frank-Wolfe on `atoms` split by `partition` over `topo`.
pub fn solve_dfw(
    kind: ObjectiveKind,
    atoms: &AtomMatrix,
    domain: Domain,
    partition: Partition,
    topo: Topology,
    config: &DfwConfig,
) -> Result<DfwOutcome> {
    let mut cluster = Cluster::new(kind, atoms, domain, partition, topo)?;
    match config.mode {
        ExecutionMode::Sync => {
            let trace = run_sync(&mut cluster, &config.solver, config.strategy, &mut AllLocal)?;
            Ok(cluster.into_outcome(trace, None))
        }
        ExecutionMode::Drop { p, seed } => {
            let (trace, per_node) = run_with_drops(&mut cluster, &config.solver, p, seed)?;
            Ok(cluster.into_outcome(trace, Some(per_node)))
        }
    }
}
