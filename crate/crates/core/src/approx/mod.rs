//! Approximate dFW: each node offers only the atoms it picked as cluster
//! centers, so it never has to scan (or hold the gradient of) its full set.
//!
//! With greedy radius `r` and `G = max ‖∇g(Aα)‖∞` over the domain, the
//! selected atom is within `2 r G` of the best one in the LMO criterion.
//! [`solve_approx_dfw`] can check that on every round against the exact
//! gradient, recomputed by every node over all of its atoms.

mod greedy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use greedy::{
    brute_force_optimal_radius, greedy_selection, CenterSet, Metric, BRUTE_FORCE_LIMIT,
};

use crate::dfw::{
    run_sync, CandidateRule, Cluster, DfwConfig, DfwOutcome, ExecutionMode, LocalBid, NodeState,
    Partition,
};
use crate::error::{Error, Result};
use crate::netsim::Topology;
use crate::objectives::{AtomMatrix, Domain, ObjectiveKind};

/// How many centers each node keeps at round `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CenterSchedule {
    /// `m` centers per node (capped by the node's atom count).
    Fixed(usize),
    /// Every node keeps as many centers as the median node has atoms, so the
    /// largest nodes stop dominating the per-round work.
    AutoBalance,
    /// `⌈rate⌉` centers to start, `⌈rate⌉` more after every round.
    Linear(f64),
}

impl FromStr for CenterSchedule {
    type Err = Error;

    /// `fixed:M`, `fixed:auto-balance`, `linear:RATE`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
                "unknown center schedule {s:?}; expected fixed:M, fixed:auto-balance or linear:RATE"
            ))
        };
        match s.split_once(':') {
            Some(("fixed", "auto-balance")) => Ok(Self::AutoBalance),
            Some(("fixed", m)) => {
                let m: usize = m.parse().map_err(|_| bad())?;
                if m == 0 {
                    return Err(Error::InvalidParameter("need at least one center".into()));
                }
                Ok(Self::Fixed(m))
            }
            Some(("linear", r)) => {
                let r: f64 = r.parse().map_err(|_| bad())?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "rate must be positive, got {r}"
                    )));
                }
                Ok(Self::Linear(r))
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for CenterSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(m) => write!(f, "fixed:{m}"),
            Self::AutoBalance => write!(f, "fixed:auto-balance"),
            Self::Linear(r) => write!(f, "linear:{r}"),
        }
    }
}

impl CenterSchedule {
    /// Center counts `m_i^(k)` for nodes of the given sizes.
    pub fn counts(&self, k: usize, sizes: &[usize]) -> Vec<usize> {
        let target = match self {
            Self::Fixed(m) => *m,
            Self::AutoBalance => {
                let mut held: Vec<usize> = sizes.iter().copied().filter(|&s| s > 0).collect();
                held.sort_unstable();
                held.get((held.len().max(1) - 1) / 2).copied().unwrap_or(0)
            }
            Self::Linear(rate) => {
                let step = rate.ceil() as usize;
                step.saturating_mul(k + 1)
            }
        };
        sizes.iter().map(|&s| s.min(target)).collect()
    }
}

/// Upper bound on `‖∇g(Aα)‖∞` over the feasible domain, scaled so that
/// `|∇f_i − ∇f_j| ≤ G · d(a_i, a_j)` under the clustering metric.
pub fn grad_bound(kind: &ObjectiveKind, atoms: &AtomMatrix, domain: Domain) -> Result<f64> {
    let scale = match domain {
        Domain::L1Ball { beta } => beta,
        Domain::Simplex => 1.0,
    };
    match kind {
        ObjectiveKind::Lasso { target } => {
            let col_max = atoms
                .columns()
                .iter()
                .map(|c| c.norm_inf())
                .fold(0.0, f64::max);
            let y_max = target.iter().map(|v| v.abs()).fold(0.0, f64::max);
            Ok(2.0 * (scale * col_max + y_max))
        }
        ObjectiveKind::Adaboost { temperature } => Ok(1.0 / temperature),
        ObjectiveKind::SvmDual { kernel } => {
            // ∇f_j = 2⟨φ̃_j, Σ α_l φ̃_l⟩ and ‖Σ α_l φ̃_l‖ ≤ scale · max ‖φ̃_l‖
            let mut feat_max: f64 = 0.0;
            for j in 0..atoms.n_atoms() {
                feat_max = feat_max.max(kernel.augmented_at(atoms, j, j)?.sqrt());
            }
            Ok(2.0 * scale * feat_max)
        }
    }
}

/// Clustering metric natural for each objective.
pub fn metric_for(kind: &ObjectiveKind) -> Metric {
    match kind {
        ObjectiveKind::SvmDual { kernel } => Metric::AugmentedKernel(*kernel),
        _ => Metric::L1,
    }
}

/// Selection error of one round, measured against the exact LMO.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub iter: usize,
    /// How much worse the selected atom is than the best atom overall.
    pub delta: f64,
    /// Largest center radius over nodes, in the metric's linear scale.
    pub radius: f64,
    /// `2 · radius · G`
    pub bound: f64,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.delta <= self.bound + 1e-12 * self.bound.abs().max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxOutcome {
    pub outcome: DfwOutcome,
    /// Center counts per node when the run stopped.
    pub centers: Vec<usize>,
    /// One entry per round when certification was requested.
    pub certificates: Vec<Certificate>,
    pub grad_bound: f64,
}

struct CenterRule {
    sets: Vec<CenterSet>,
    schedule: CenterSchedule,
    metric: Metric,
    sizes: Vec<usize>,
    certify: bool,
    grad_bound: f64,
    certificates: Vec<Certificate>,
}

impl CenterRule {
    fn grow_to(&mut self, nodes: &[NodeState], k: usize) -> Result<()> {
        let counts = self.schedule.counts(k, &self.sizes);
        for (set, (node, want)) in self.sets.iter_mut().zip(nodes.iter().zip(counts)) {
            let add = want.saturating_sub(set.len());
            set.grow(node.atoms(), add, &self.metric)?;
        }
        Ok(())
    }

    fn radius(&self) -> f64 {
        self.sets
            .iter()
            .map(|s| self.metric.linear_radius(s.radius()))
            .fold(0.0, f64::max)
    }
}

impl CandidateRule for CenterRule {
    fn candidates(&self, node: &NodeState) -> Vec<usize> {
        self.sets[node.id()].sorted_centers()
    }

    fn observe(&mut self, k: usize, cluster: &Cluster, winner: &LocalBid) -> Result<()> {
        if !self.certify {
            return Ok(());
        }
        let mut grads = Vec::new();
        for node in cluster.nodes() {
            grads.extend(node.local_gradient()?);
        }
        let delta = match cluster.domain() {
            Domain::L1Ball { .. } => {
                grads.iter().map(|g| g.abs()).fold(0.0, f64::max) - winner.grad.abs()
            }
            Domain::Simplex => winner.grad - grads.iter().copied().fold(f64::INFINITY, f64::min),
        };
        let radius = self.radius();
        self.certificates.push(Certificate {
            iter: k,
            delta,
            radius,
            bound: 2.0 * radius * self.grad_bound,
        });
        Ok(())
    }

    fn advance(&mut self, k: usize, cluster: &Cluster) -> Result<()> {
        self.grow_to(cluster.nodes(), k + 1)
    }
}

/// dFW where node `i` only offers its `m_i^(k)` greedy centers.
///
/// With `certify`, every round also records how far the selection is from
/// the exact LMO; this reads every node's full local gradient and is meant
/// for testing.
#[allow(clippy::too_many_arguments)]
pub fn solve_approx_dfw(
    kind: ObjectiveKind,
    atoms: &AtomMatrix,
    domain: Domain,
    partition: Partition,
    topo: Topology,
    config: &DfwConfig,
    schedule: CenterSchedule,
    certify: bool,
) -> Result<ApproxOutcome> {
    if config.mode != ExecutionMode::Sync {
        return Err(Error::InvalidParameter(
            "approximate dFW runs in synchronous mode only".into(),
        ));
    }
    let grad_bound = grad_bound(&kind, atoms, domain)?;
    let metric = metric_for(&kind);
    let sizes = partition.sizes();
    let mut cluster = Cluster::new(kind, atoms, domain, partition, topo)?;
    let mut rule = CenterRule {
        sets: cluster
            .nodes()
            .iter()
            .map(|n| CenterSet::empty(n.local().to_vec()))
            .collect(),
        schedule,
        metric,
        sizes,
        certify,
        grad_bound,
        certificates: Vec::new(),
    };
    rule.grow_to(cluster.nodes(), 0)?;
    let trace = run_sync(&mut cluster, &config.solver, config.strategy, &mut rule)?;
    let ledger = cluster.ledger().clone();
    Ok(ApproxOutcome {
        outcome: DfwOutcome {
            trace,
            ledger,
            node_objectives: None,
        },
        centers: rule.sets.iter().map(|s| s.len()).collect(),
        certificates: rule.certificates,
        grad_bound,
    })
}

/// Atoms reachable by approximate dFW under a fixed schedule: the centers
/// every node would pick at round 0.
pub fn initial_centers(
    kind: &ObjectiveKind,
    atoms: &AtomMatrix,
    partition: &Partition,
    schedule: CenterSchedule,
) -> Result<Vec<usize>> {
    let metric = metric_for(kind);
    let counts = schedule.counts(0, &partition.sizes());
    let mut all = Vec::new();
    for (i, m) in counts.into_iter().enumerate() {
        let mut set = CenterSet::empty(partition.local(i));
        set.grow(atoms, m, &metric)?;
        all.extend(set.sorted_centers());
    }
    all.sort_unstable();
    Ok(all)
}
