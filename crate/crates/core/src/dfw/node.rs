use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fw::{select_vertex, LmoResult};
use crate::objectives::{
    AtomMatrix, AtomSource, Column, Domain, Iterate, Objective, ObjectiveKind,
};

/// The atoms a node can see: its own, plus every atom broadcast to it.
///
/// There is no path back to the global matrix, so anything a node computes
/// is computed from data it legitimately holds.
#[derive(Clone, Debug)]
pub struct NodeAtoms {
    dim: usize,
    store: HashMap<usize, (Column, Option<f64>)>,
}

impl NodeAtoms {
    /// Copies the columns (and labels) of `local` out of `atoms`.
    pub fn from_matrix(atoms: &AtomMatrix, local: &[usize]) -> Result<Self> {
        let mut store = HashMap::with_capacity(local.len());
        for &j in local {
            let col = atoms.column(j).ok_or(Error::AtomOutOfRange {
                index: j,
                count: atoms.n_atoms(),
            })?;
            store.insert(j, (col.clone(), atoms.label(j)));
        }
        Ok(Self {
            dim: atoms.dim(),
            store,
        })
    }

    /// Stores a broadcast atom; a copy already held is kept.
    pub fn receive(&mut self, j: usize, column: Column, label: Option<f64>) {
        self.store.entry(j).or_insert((column, label));
    }

    pub fn holds(&self, j: usize) -> bool {
        self.store.contains_key(&j)
    }

    pub fn stored(&self) -> usize {
        self.store.len()
    }

    /// Column and label of a held atom, as they would be sent on the wire.
    pub fn payload(&self, j: usize) -> Result<(Column, Option<f64>)> {
        self.store.get(&j).cloned().ok_or(Error::AtomUnavailable(j))
    }
}

impl AtomSource for NodeAtoms {
    fn dim(&self) -> usize {
        self.dim
    }

    fn column(&self, j: usize) -> Option<&Column> {
        self.store.get(&j).map(|(c, _)| c)
    }

    fn label(&self, j: usize) -> Option<f64> {
        self.store.get(&j).and_then(|(_, l)| *l)
    }
}

/// What a node reports in a round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalBid {
    pub vertex: LmoResult,
    /// `∇f_j` for the locally selected atom.
    pub grad: f64,
    /// `Σ_{j local} α_j ∇f_j`.
    pub partial_sum: f64,
}

impl LocalBid {
    pub fn atom(&self) -> usize {
        self.vertex.index
    }
}

/// `true` when `a` should win an election against `b`.
pub fn outranks(domain: Domain, a: &LocalBid, b: &LocalBid) -> bool {
    let (ka, kb) = match domain {
        Domain::L1Ball { .. } => (-a.grad.abs(), -b.grad.abs()),
        Domain::Simplex => (a.grad, b.grad),
    };
    ka < kb || (ka == kb && a.atom() < b.atom())
}

/// One simulated machine: its atoms, its replica of `α`, and its objective cache.
pub struct NodeState {
    id: usize,
    local: Vec<usize>,
    replica: Iterate,
    objective: Objective<NodeAtoms>,
}

impl NodeState {
    /// `atoms` must already hold every atom in the support of `start`.
    pub fn new(
        id: usize,
        kind: ObjectiveKind,
        atoms: NodeAtoms,
        n_atoms: usize,
        local: Vec<usize>,
        start: Iterate,
    ) -> Result<Self> {
        let objective = Objective::new(kind, atoms, n_atoms, local.clone(), &start)?;
        Ok(Self {
            id,
            local,
            replica: start,
            objective,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn local(&self) -> &[usize] {
        &self.local
    }

    pub fn replica(&self) -> &Iterate {
        &self.replica
    }

    pub fn objective(&self) -> &Objective<NodeAtoms> {
        &self.objective
    }

    pub fn atoms(&self) -> &NodeAtoms {
        self.objective.atoms()
    }

    pub fn value(&self) -> f64 {
        self.objective.value()
    }

    fn is_local(&self, j: usize) -> bool {
        self.local.binary_search(&j).is_ok()
    }

    /// Selects among `candidates` (sorted local atoms) and computes the partial
    /// sum over the local support. `None` when there is nothing to offer.
    pub fn local_select(&self, candidates: &[usize]) -> Result<Option<LocalBid>> {
        if candidates.is_empty() {
            return Ok(None);
        }
        let support: Vec<usize> = self
            .replica
            .iter()
            .map(|(j, _)| j)
            .filter(|&j| self.is_local(j))
            .collect();
        let mut wanted = candidates.to_vec();
        wanted.extend_from_slice(&support);
        let grads = self.objective.gradient_entries(&wanted)?;
        let (cand_grads, support_grads) = grads.split_at(candidates.len());
        let (vertex, grad) = select_vertex(
            self.replica.domain(),
            candidates.iter().copied().zip(cand_grads.iter().copied()),
        )
        .expect("candidates are nonempty");
        let partial_sum = support
            .iter()
            .zip(support_grads)
            .map(|(&j, g)| self.replica.get(j) * g)
            .sum();
        Ok(Some(LocalBid {
            vertex,
            grad,
            partial_sum,
        }))
    }

    /// Gradient over every local atom, in local order.
    pub fn local_gradient(&self) -> Result<Vec<f64>> {
        self.objective.tracked_gradient()
    }

    pub fn line_search(&self, gap: f64, vertex: &LmoResult, grad: f64) -> Result<f64> {
        self.objective
            .line_search(gap, vertex.index, vertex.coefficient(), grad)
    }

    pub fn receive(&mut self, j: usize, column: Column, label: Option<f64>) {
        self.objective.atoms_mut().receive(j, column, label);
    }

    /// Applies `α ← (1 − γ)α + γ · coef · e_j` to the replica and the cache.
    ///
    /// `grad` must be `∇f_j` at the replica; when it is not known (a stale
    /// replica under message drops) pass `None` and the cache is rebuilt.
    pub fn apply(&mut self, gamma: f64, j: usize, coef: f64, grad: Option<f64>) -> Result<()> {
        if !self.objective.atoms().holds(j) {
            return Err(Error::AtomUnavailable(j));
        }
        self.replica.step(gamma, j, coef);
        match (grad, self.objective.kind()) {
            (None, ObjectiveKind::SvmDual { .. }) => self.objective.reset(&self.replica),
            (g, _) => self.objective.apply_step(gamma, j, coef, g.unwrap_or(0.0)),
        }
    }
}
