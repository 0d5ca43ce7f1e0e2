//! Centralized Frank-Wolfe with ℓ1-ball and simplex linear minimization oracles.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{AtomSource, Domain, Iterate, Objective};

/// A scaled basis vertex `sign · magnitude · e_j` returned by the LMO.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmoResult {
    pub index: usize,
    pub sign: f64,
    pub magnitude: f64,
}

impl LmoResult {
    /// The vertex weight `sign · magnitude`.
    pub fn coefficient(&self) -> f64 {
        self.sign * self.magnitude
    }
}

/// Step-size rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// `γ_k = 2 / (k + 2)`
    Harmonic,
    LineSearch,
}

impl std::str::FromStr for StepRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(StepRule::Harmonic),
            "linesearch" | "line-search" => Ok(StepRule::LineSearch),
            other => Err(Error::InvalidParameter(format!(
                "unknown step rule {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    /// Optional curvature constant `C_f`, metadata for the iteration bound.
    pub curvature_bound: Option<f64>,
}

impl SolverConfig {
    pub fn new(epsilon: f64, max_iter: usize, step_rule: StepRule) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            max_iter,
            step_rule,
            curvature_bound: None,
        })
    }

    pub fn with_curvature_bound(mut self, c_f: f64) -> Self {
        self.curvature_bound = Some(c_f);
        self
    }

    /// `⌈6.75 · C_f / ε⌉` when a curvature bound is known.
    pub fn iteration_bound(&self) -> Option<usize> {
        self.curvature_bound
            .map(|c| (6.75 * c / self.epsilon).ceil() as usize)
    }
}

/// One line of a run trace, describing iterate `α^(k)` and the step taken from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Atom selected by the LMO at `α^(k)`.
    pub atom: usize,
    /// Node that owns the selected atom (0 for centralized runs).
    pub owner: usize,
    /// Step applied to reach `α^(k+1)`; 0 on the final record.
    pub step: f64,
    pub objective: f64,
    pub gap: f64,
    pub support: usize,
    /// Cumulative real values transmitted after this round.
    pub cum_reals: u64,
    /// Time since the solver started, taken when the record was written.
    #[serde(default)]
    pub elapsed_ns: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub final_iterate: Iterate,
    pub converged: bool,
}

impl RunTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("traces hold at least one record")
    }

    pub fn final_objective(&self) -> f64 {
        self.last().objective
    }

    pub fn final_gap(&self) -> f64 {
        self.last().gap
    }

    /// Number of steps taken.
    pub fn steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn selected_atoms(&self) -> Vec<usize> {
        self.records[..self.steps()]
            .iter()
            .map(|r| r.atom)
            .collect()
    }
}

/// ℓ1-ball LMO over `(atom, ∇f_atom)` pairs given in increasing atom order.
///
/// Picks the largest `|∇f_j|` (first index on ties) and returns the vertex
/// `sgn(−∇f_j) β e_j` with `sgn(0) = +1`.
pub fn select_l1(
    entries: impl IntoIterator<Item = (usize, f64)>,
    beta: f64,
) -> Option<(LmoResult, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, g) in entries {
        if best.is_none_or(|(_, b)| g.abs() > b.abs()) {
            best = Some((j, g));
        }
    }
    best.map(|(j, g)| {
        let sign = if g > 0.0 { -1.0 } else { 1.0 };
        (
            LmoResult {
                index: j,
                sign,
                magnitude: beta,
            },
            g,
        )
    })
}

/// Simplex LMO over `(atom, ∇f_atom)` pairs: smallest `∇f_j`, first index on ties.
pub fn select_simplex(entries: impl IntoIterator<Item = (usize, f64)>) -> Option<(LmoResult, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, g) in entries {
        if best.is_none_or(|(_, b)| g < b) {
            best = Some((j, g));
        }
    }
    best.map(|(j, g)| {
        (
            LmoResult {
                index: j,
                sign: 1.0,
                magnitude: 1.0,
            },
            g,
        )
    })
}

/// Domain-dispatching LMO over `(atom, ∇f_atom)` pairs.
pub fn select_vertex(
    domain: Domain,
    entries: impl IntoIterator<Item = (usize, f64)>,
) -> Option<(LmoResult, f64)> {
    match domain {
        Domain::L1Ball { beta } => select_l1(entries, beta),
        Domain::Simplex => select_simplex(entries),
    }
}

pub fn lmo_l1(grad: &[f64], beta: f64) -> Result<LmoResult> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    select_l1(grad.iter().copied().enumerate(), beta)
        .map(|(s, _)| s)
        .ok_or(Error::EmptyGradient)
}

pub fn lmo_simplex(grad: &[f64]) -> Result<LmoResult> {
    select_simplex(grad.iter().copied().enumerate())
        .map(|(s, _)| s)
        .ok_or(Error::EmptyGradient)
}

/// `⟨α, ∇f⟩` over the support, in increasing atom order.
pub fn support_inner(alpha: &Iterate, grad: impl Fn(usize) -> f64) -> f64 {
    alpha.iter().map(|(j, w)| w * grad(j)).sum()
}

/// Surrogate gap `⟨α − s, ∇f(α)⟩` from its two pieces.
pub fn gap_from_parts(inner: f64, vertex: &LmoResult, grad_at_vertex: f64) -> f64 {
    inner - vertex.coefficient() * grad_at_vertex
}

/// `⟨α − s, ∇f(α)⟩`; `grad` must cover `supp(α) ∪ {s.index}`.
pub fn duality_gap(alpha: &Iterate, vertex: &LmoResult, grad: impl Fn(usize) -> f64) -> f64 {
    let inner = support_inner(alpha, &grad);
    gap_from_parts(inner, vertex, grad(vertex.index))
}

pub fn harmonic_step(k: usize) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// Step size for iteration `k` towards `vertex`, given the current gap and `∇f_j`.
pub fn step_size<S: AtomSource>(
    k: usize,
    rule: StepRule,
    objective: &Objective<S>,
    vertex: &LmoResult,
    gap: f64,
    grad_at_vertex: f64,
) -> Result<f64> {
    match rule {
        StepRule::Harmonic => Ok(harmonic_step(k)),
        StepRule::LineSearch => {
            objective.line_search(gap, vertex.index, vertex.coefficient(), grad_at_vertex)
        }
    }
}

/// Runs Frank-Wolfe from the canonical start of `domain`.
pub fn solve_fw<S: AtomSource>(
    objective: &mut Objective<S>,
    domain: Domain,
    config: &SolverConfig,
) -> Result<RunTrace> {
    solve_fw_from(objective, Iterate::start(domain), config, |_| 0)
}

/// Runs Frank-Wolfe from `alpha`; `owner` maps atoms to the node reported in the trace.
pub fn solve_fw_from<S: AtomSource>(
    objective: &mut Objective<S>,
    mut alpha: Iterate,
    config: &SolverConfig,
    owner: impl Fn(usize) -> usize,
) -> Result<RunTrace> {
    let started = Instant::now();
    objective.reset(&alpha)?;
    let domain = alpha.domain();
    let n = objective.n_atoms();
    if n == 0 {
        return Err(Error::EmptyGradient);
    }
    let atoms: Vec<usize> = (0..n).collect();
    let mut records = Vec::new();
    let mut k = 0;
    loop {
        let value = objective.value();
        if !value.is_finite() {
            return Err(Error::NonFinite {
                iteration: k,
                value,
            });
        }
        let grad = objective.gradient_entries(&atoms)?;
        let (vertex, g_j) =
            select_vertex(domain, grad.iter().copied().enumerate()).ok_or(Error::EmptyGradient)?;
        let gap = duality_gap(&alpha, &vertex, |j| grad[j]);
        let mut record = IterationRecord {
            iter: k,
            atom: vertex.index,
            owner: owner(vertex.index),
            step: 0.0,
            objective: value,
            gap,
            support: alpha.support_len(),
            cum_reals: 0,
            elapsed_ns: started.elapsed().as_nanos() as u64,
        };
        if gap <= config.epsilon || k >= config.max_iter {
            let converged = gap <= config.epsilon;
            records.push(record);
            return Ok(RunTrace {
                records,
                final_iterate: alpha,
                converged,
            });
        }
        let gamma = step_size(k, config.step_rule, objective, &vertex, gap, g_j)?;
        record.step = gamma;
        records.push(record);
        objective.apply_step(gamma, vertex.index, vertex.coefficient(), g_j)?;
        alpha.step(gamma, vertex.index, vertex.coefficient());
        k += 1;
    }
}
