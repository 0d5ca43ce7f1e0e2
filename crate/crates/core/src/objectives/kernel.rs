use serde::{Deserialize, Serialize};

use super::atoms::{AtomMatrix, AtomSource, Column};
use crate::error::{Error, Result};

/// Kernel `k(x, x')` on raw training points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BaseKernel {
    Linear,
    /// `exp(−‖x − x'‖² / (2σ²))`
    Rbf {
        sigma: f64,
    },
}

/// Base kernel plus the SVM constant `C` of the augmented kernel
/// `k̃(z_i, z_j) = y_i y_j k(x_i, x_j) + y_i y_j + δ_ij / C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub base: BaseKernel,
    pub c: f64,
}

impl KernelSpec {
    pub fn new(base: BaseKernel, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {c}"
            )));
        }
        if let BaseKernel::Rbf { sigma } = base {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "RBF bandwidth must be positive, got {sigma}"
                )));
            }
        }
        Ok(Self { base, c })
    }

    pub fn base_value(&self, x: &Column, x2: &Column, dim: usize) -> f64 {
        match self.base {
            BaseKernel::Linear => x.dot(&x2.to_dense(dim)),
            BaseKernel::Rbf { sigma } => (-x.sq_distance(x2, dim) / (2.0 * sigma * sigma)).exp(),
        }
    }

    /// `k̃(z_i, z_j)`; `same` is the Kronecker delta on atom identity.
    pub fn augmented(
        &self,
        (x_i, y_i): (&Column, f64),
        (x_j, y_j): (&Column, f64),
        same: bool,
        dim: usize,
    ) -> f64 {
        let yy = y_i * y_j;
        let diag = if same { 1.0 / self.c } else { 0.0 };
        yy * self.base_value(x_i, x_j, dim) + yy + diag
    }

    /// `k̃(z_i, z_j)` looked up through an atom source.
    pub fn augmented_at<S: AtomSource + ?Sized>(
        &self,
        atoms: &S,
        i: usize,
        j: usize,
    ) -> Result<f64> {
        let (xi, yi) = labelled(atoms, i)?;
        let (xj, yj) = labelled(atoms, j)?;
        Ok(self.augmented((xi, yi), (xj, yj), i == j, atoms.dim()))
    }

    /// Squared distance `‖φ̃(z_i) − φ̃(z_j)‖²` in augmented feature space.
    pub fn feature_sq_distance<S: AtomSource + ?Sized>(
        &self,
        atoms: &S,
        i: usize,
        j: usize,
    ) -> Result<f64> {
        if i == j {
            return Ok(0.0);
        }
        let kii = self.augmented_at(atoms, i, i)?;
        let kjj = self.augmented_at(atoms, j, j)?;
        let kij = self.augmented_at(atoms, i, j)?;
        Ok((kii + kjj - 2.0 * kij).max(0.0))
    }
}

pub(crate) fn labelled<S: AtomSource + ?Sized>(atoms: &S, j: usize) -> Result<(&Column, f64)> {
    let x = atoms.column(j).ok_or(Error::AtomUnavailable(j))?;
    let y = atoms
        .label(j)
        .ok_or(Error::KindMismatch("kernel SVM atoms need labels"))?;
    Ok((x, y))
}

/// Mean pairwise Euclidean distance over at most `max_samples` evenly spaced
/// atoms; the default RBF bandwidth.
pub fn mean_pairwise_distance(atoms: &AtomMatrix, max_samples: usize) -> f64 {
    let n = atoms.n_atoms();
    let take = n.min(max_samples.max(2));
    let picks: Vec<usize> = (0..take).map(|t| t * n / take).collect();
    let dim = atoms.dim();
    let dense: Vec<Vec<f64>> = picks
        .iter()
        .map(|&j| atoms.columns()[j].to_dense(dim))
        .collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for a in 0..dense.len() {
        for b in (a + 1)..dense.len() {
            let d2: f64 = dense[a]
                .iter()
                .zip(&dense[b])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            total += d2.sqrt();
            count += 1;
        }
    }
    if count == 0 || total == 0.0 {
        1.0
    } else {
        total / count as f64
    }
}
