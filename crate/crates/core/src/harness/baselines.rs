//! One-shot baselines: every node ships a fixed number of atoms to a solver
//! node, which then runs Frank-Wolfe on their union.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dfw::Partition;
use crate::error::{Error, Result};
use crate::fw::{solve_fw, RunTrace, SolverConfig, StepRule};
use crate::objectives::{AtomMatrix, Domain, Iterate, Objective, ObjectiveKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Each node ships `m` atoms drawn uniformly at random.
    Random { seed: u64 },
    /// Each node runs Frank-Wolfe on its own atoms and ships what it selected.
    LocalFw,
}

impl FromStr for BaselineKind {
    type Err = Error;

    /// `random:SEED` or `localfw`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "localfw" => Ok(Self::LocalFw),
            Some(("random", seed)) => Ok(Self::Random {
                seed: seed
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad seed in {s:?}")))?,
            }),
            _ => Err(Error::InvalidParameter(format!(
                "unknown baseline {s:?}; expected random:SEED or localfw"
            ))),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random { seed } => write!(f, "random:{seed}"),
            Self::LocalFw => write!(f, "localfw"),
        }
    }
}

/// One point of an objective-versus-communication curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub cum_reals: u64,
    pub objective: f64,
    pub shipped_atoms: usize,
}

/// Node that receives the shipped atoms (the star hub, the tree root, or node 0).
pub const SOLVER_NODE: usize = 0;

fn local_fw_selection(
    kind: &ObjectiveKind,
    atoms: &AtomMatrix,
    domain: Domain,
    local: &[usize],
    m: usize,
) -> Result<Vec<usize>> {
    let sub = atoms.select(local)?;
    let start = Iterate::start(domain);
    let iterations = match domain {
        Domain::L1Ball { .. } => m,
        Domain::Simplex => m.saturating_sub(1),
    };
    let cfg = SolverConfig::new(f64::MIN_POSITIVE, iterations, StepRule::LineSearch)?;
    let trace = solve_fw(
        &mut Objective::central(kind.clone(), &sub, &start)?,
        domain,
        &cfg,
    )?;
    let mut picked: Vec<usize> = trace.selected_atoms();
    picked.extend(start.iter().map(|(j, _)| j));
    picked.sort_unstable();
    picked.dedup();
    Ok(picked.into_iter().map(|p| local[p]).collect())
}

/// Atoms each node would ship for a given `m` (capped by the node's size).
pub fn baseline_selection(
    baseline: BaselineKind,
    kind: &ObjectiveKind,
    atoms: &AtomMatrix,
    domain: Domain,
    partition: &Partition,
    m: usize,
) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    (0..partition.n_nodes())
        .map(|i| {
            let local = partition.local(i);
            if local.is_empty() {
                return Ok(Vec::new());
            }
            let take = m.min(local.len());
            match baseline {
                BaselineKind::Random { seed } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
                    let mut picked: Vec<usize> = sample(&mut rng, local.len(), take)
                        .into_iter()
                        .map(|p| local[p])
                        .collect();
                    picked.sort_unstable();
                    Ok(picked)
                }
                BaselineKind::LocalFw => local_fw_selection(kind, atoms, domain, &local, take),
            }
        })
        .collect()
}

/// Ships each node's selection to [`SOLVER_NODE`] and solves on the union.
/// Each shipped atom costs its payload in reals; the solver node's own
/// atoms are free.
pub fn run_baseline(
    baseline: BaselineKind,
    kind: &ObjectiveKind,
    atoms: &AtomMatrix,
    domain: Domain,
    partition: &Partition,
    m: usize,
    solver: &SolverConfig,
) -> Result<(CurvePoint, RunTrace)> {
    let picks = baseline_selection(baseline, kind, atoms, domain, partition, m)?;
    let payload = kind.atom_payload(atoms.dim());
    let cum_reals = picks
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != SOLVER_NODE)
        .map(|(_, p)| p.len() as u64 * payload)
        .sum();
    let mut union: Vec<usize> = picks.into_iter().flatten().collect();
    union.sort_unstable();
    let sub = atoms.select(&union)?;
    let trace = solve_fw(
        &mut Objective::central(kind.clone(), &sub, &Iterate::start(domain))?,
        domain,
        solver,
    )?;
    Ok((
        CurvePoint {
            m,
            cum_reals,
            objective: trace.final_objective(),
            shipped_atoms: union.len(),
        },
        trace,
    ))
}

/// Baseline curve over several values of `m`.
pub fn baseline_curve(
    baseline: BaselineKind,
    kind: &ObjectiveKind,
    atoms: &AtomMatrix,
    domain: Domain,
    partition: &Partition,
    ms: &[usize],
    solver: &SolverConfig,
) -> Result<Vec<CurvePoint>> {
    ms.iter()
        .map(|&m| run_baseline(baseline, kind, atoms, domain, partition, m, solver).map(|(p, _)| p))
        .collect()
}

/// Objective of `trace` at the last iterate whose cost to reach is at most
/// `budget`. Iterate `k` costs what the first `k` rounds transmitted.
pub fn objective_at_budget(trace: &RunTrace, budget: u64) -> f64 {
    let mut best = trace.records[0].objective;
    for pair in trace.records.windows(2) {
        if pair[0].cum_reals > budget {
            break;
        }
        best = pair[1].objective;
    }
    best
}
