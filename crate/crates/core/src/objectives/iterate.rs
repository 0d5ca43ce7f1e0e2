use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasible set of the weight vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// `{α : ‖α‖₁ ≤ β}`
    L1Ball { beta: f64 },
    /// The unit simplex `Δ_n`.
    Simplex,
}

impl Domain {
    pub fn l1(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "l1 radius must be positive, got {beta}"
            )));
        }
        Ok(Domain::L1Ball { beta })
    }

    pub fn is_simplex(&self) -> bool {
        matches!(self, Domain::Simplex)
    }
}

/// Sparse weight vector `α` with an explicit support.
///
/// The support never stores explicit zeros; iteration order is by atom index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    support: BTreeMap<usize, f64>,
    domain: Domain,
}

impl Iterate {
    /// Starting point: `0` on the ℓ1 ball, vertex `e₀` on the simplex.
    pub fn start(domain: Domain) -> Self {
        let mut support = BTreeMap::new();
        if domain.is_simplex() {
            support.insert(0, 1.0);
        }
        Self { support, domain }
    }

    /// Starting vertex `e_j` on the simplex.
    pub fn simplex_vertex(j: usize) -> Self {
        Self {
            support: BTreeMap::from([(j, 1.0)]),
            domain: Domain::Simplex,
        }
    }

    pub fn from_entries(domain: Domain, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let support = entries.into_iter().filter(|(_, v)| *v != 0.0).collect();
        Self { support, domain }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn get(&self, j: usize) -> f64 {
        self.support.get(&j).copied().unwrap_or(0.0)
    }

    /// Nonzero entries in increasing atom order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().map(|(&j, &v)| (j, v))
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.support.values().map(|v| v.abs()).sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }

    /// `α ← (1 − γ) α + γ · coef · e_j`
    pub fn step(&mut self, gamma: f64, j: usize, coef: f64) {
        if gamma == 1.0 {
            self.support.clear();
        } else if gamma != 0.0 {
            let keep = 1.0 - gamma;
            for v in self.support.values_mut() {
                *v *= keep;
            }
        }
        if gamma != 0.0 {
            *self.support.entry(j).or_insert(0.0) += gamma * coef;
        }
        self.support.retain(|_, v| *v != 0.0);
    }

    /// Checks the domain invariant with a relative slack of `1e-12`.
    pub fn is_feasible(&self) -> bool {
        match self.domain {
            Domain::L1Ball { beta } => self.l1_norm() <= beta * (1.0 + 1e-12),
            Domain::Simplex => {
                self.support.values().all(|v| *v >= 0.0)
                    && (self.support.values().sum::<f64>() - 1.0).abs() <= 1e-12
            }
        }
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Iterate) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, v) in self.iter() {
            worst = worst.max((v - other.get(j)).abs());
        }
        for (j, v) in other.iter() {
            worst = worst.max((v - self.get(j)).abs());
        }
        worst
    }
}
