//! Column-partitioned atom storage.
//!
//! An atom is one column `a_j` of the `d x n` data matrix. Columns with more
//! than half of their entries nonzero are stored dense, the rest as sorted
//! `(index, value)` pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single atom `a_j ∈ ℝ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Dense(Vec<f64>),
    Sparse {
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

impl Column {
    /// Builds a column from a dense vector, choosing the storage by density.
    pub fn from_dense(values: Vec<f64>) -> Self {
        let nnz = values.iter().filter(|v| **v != 0.0).count();
        if 2 * nnz > values.len() {
            Column::Dense(values)
        } else {
            let (indices, values) = values
                .into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .unzip();
            Column::Sparse { indices, values }
        }
    }

    /// Builds a column from `(index, value)` pairs. Indices must be strictly
    /// increasing and below `dim`.
    pub fn from_pairs(dim: usize, pairs: Vec<(usize, f64)>) -> Result<Self> {
        let mut last = None;
        for &(i, _) in &pairs {
            if i >= dim {
                return Err(Error::InvalidMatrix(format!(
                    "sparse index {i} outside dimension {dim}"
                )));
            }
            if last.is_some_and(|l| i <= l) {
                return Err(Error::InvalidMatrix(
                    "sparse indices must be strictly increasing".into(),
                ));
            }
            last = Some(i);
        }
        let pairs: Vec<_> = pairs.into_iter().filter(|(_, v)| *v != 0.0).collect();
        if 2 * pairs.len() > dim {
            let mut dense = vec![0.0; dim];
            for (i, v) in pairs {
                dense[i] = v;
            }
            Ok(Column::Dense(dense))
        } else {
            let (indices, values) = pairs.into_iter().unzip();
            Ok(Column::Sparse { indices, values })
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Column::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Column::Sparse { indices, .. } => indices.len(),
        }
    }

    /// Iterates over stored `(row, value)` pairs (dense columns yield every row).
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            Column::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Column::Sparse { indices, values } => {
                Box::new(indices.iter().copied().zip(values.iter().copied()))
            }
        }
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        match self {
            Column::Dense(c) => c.iter().zip(v).map(|(a, b)| a * b).sum(),
            Column::Sparse { indices, values } => {
                indices.iter().zip(values).map(|(&i, a)| a * v[i]).sum()
            }
        }
    }

    /// `out += scale * self`
    pub fn axpy(&self, scale: f64, out: &mut [f64]) {
        for (i, a) in self.entries() {
            out[i] += scale * a;
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy(1.0, &mut out);
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries().map(|(_, a)| a * a).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.entries().fold(0.0, |m, (_, a)| m.max(a.abs()))
    }

    /// `‖self − other‖₁`
    pub fn l1_distance(&self, other: &Column, dim: usize) -> f64 {
        let mut diff = self.to_dense(dim);
        other.axpy(-1.0, &mut diff);
        diff.iter().map(|x| x.abs()).sum()
    }

    /// `‖self − other‖₂²`
    pub fn sq_distance(&self, other: &Column, dim: usize) -> f64 {
        let mut diff = self.to_dense(dim);
        other.axpy(-1.0, &mut diff);
        diff.iter().map(|x| x * x).sum()
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            Column::Dense(v) if v.len() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            }),
            Column::Dense(_) => Ok(()),
            Column::Sparse { indices, values } => {
                if indices.len() != values.len() {
                    return Err(Error::InvalidMatrix(
                        "sparse column has mismatched index/value lengths".into(),
                    ));
                }
                if indices.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidMatrix(
                        "sparse indices must be strictly increasing".into(),
                    ));
                }
                if indices.last().is_some_and(|&i| i >= dim) {
                    return Err(Error::InvalidMatrix(format!(
                        "sparse index outside dimension {dim}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Read access to atoms by global index.
///
/// The full [`AtomMatrix`] implements this for every atom; a network node
/// implements it only for the atoms it owns or has received.
pub trait AtomSource {
    fn dim(&self) -> usize;
    fn column(&self, j: usize) -> Option<&Column>;
    /// Label attached to atom `j` (training labels for kernel SVM).
    fn label(&self, j: usize) -> Option<f64>;
}

/// The atom matrix `A = [a_1 … a_n] ∈ ℝ^{d×n}` with optional per-atom labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomMatrix {
    dim: usize,
    columns: Vec<Column>,
    labels: Option<Vec<f64>>,
}

impl AtomMatrix {
    pub fn new(dim: usize, columns: Vec<Column>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix(
                "dimension d must be at least 1".into(),
            ));
        }
        if columns.is_empty() {
            return Err(Error::InvalidMatrix("at least one atom is required".into()));
        }
        for c in &columns {
            c.check(dim)?;
        }
        Ok(Self {
            dim,
            columns,
            labels: None,
        })
    }

    /// Builds from dense columns, choosing sparse storage where it pays off.
    pub fn from_dense_columns(dim: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dim, columns.into_iter().map(Column::from_dense).collect())
    }

    /// Builds from a row-major dense `d x n` matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let columns = (0..n)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        Self::from_dense_columns(dim, columns)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let columns = (0..dim)
            .map(|j| Column::Sparse {
                indices: vec![j],
                values: vec![1.0],
            })
            .collect();
        Self::new(dim, columns)
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_atoms(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Restricts the matrix to the given atoms, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<AtomMatrix> {
        let n = self.n_atoms();
        let mut columns = Vec::with_capacity(indices.len());
        for &j in indices {
            columns.push(
                self.columns
                    .get(j)
                    .ok_or(Error::AtomOutOfRange { index: j, count: n })?
                    .clone(),
            );
        }
        let mut out = AtomMatrix::new(self.dim, columns)?;
        if let Some(labels) = &self.labels {
            out.labels = Some(indices.iter().map(|&j| labels[j]).collect());
        }
        Ok(out)
    }

    /// `A α` for a dense weight vector.
    pub fn multiply(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.n_atoms() {
            return Err(Error::DimensionMismatch {
                expected: self.n_atoms(),
                found: weights.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        for (c, &w) in self.columns.iter().zip(weights) {
            if w != 0.0 {
                c.axpy(w, &mut out);
            }
        }
        Ok(out)
    }

    /// `Aᵀ v`
    pub fn transpose_multiply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(self.columns.iter().map(|c| c.dot(v)).collect())
    }

    /// Row-major dense copy, mostly for tests and small examples.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_atoms()]; self.dim];
        for (j, c) in self.columns.iter().enumerate() {
            for (i, v) in c.entries() {
                rows[i][j] = v;
            }
        }
        rows
    }

    /// Swaps the roles of rows and columns.
    pub fn transpose(&self) -> Result<AtomMatrix> {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.dim];
        for (j, c) in self.columns.iter().enumerate() {
            for (i, v) in c.entries() {
                if v != 0.0 {
                    cols[i].push((j, v));
                }
            }
        }
        let n = self.n_atoms();
        let columns = cols
            .into_iter()
            .map(|pairs| Column::from_pairs(n, pairs))
            .collect::<Result<Vec<_>>>()?;
        AtomMatrix::new(n, columns)
    }
}

impl AtomSource for AtomMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn column(&self, j: usize) -> Option<&Column> {
        self.columns.get(j)
    }

    fn label(&self, j: usize) -> Option<f64> {
        self.labels.as_ref().and_then(|l| l.get(j).copied())
    }
}

impl<S: AtomSource + ?Sized> AtomSource for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn column(&self, j: usize) -> Option<&Column> {
        (**self).column(j)
    }

    fn label(&self, j: usize) -> Option<f64> {
        (**self).label(j)
    }
}

impl<S: AtomSource + ?Sized> AtomSource for std::sync::Arc<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn column(&self, j: usize) -> Option<&Column> {
        (**self).column(j)
    }

    fn label(&self, j: usize) -> Option<f64> {
        (**self).label(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_follows_density() {
        assert!(matches!(
            Column::from_dense(vec![1.0, 2.0, 0.0]),
            Column::Dense(_)
        ));
        assert!(matches!(
            Column::from_dense(vec![1.0, 0.0, 0.0, 0.0]),
            Column::Sparse { .. }
        ));
    }

    #[test]
    fn rejects_unsorted_sparse_indices() {
        assert!(Column::from_pairs(4, vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(Column::from_pairs(4, vec![(4, 1.0)]).is_err());
        let bad = Column::Sparse {
            indices: vec![1, 1],
            values: vec![1.0, 2.0],
        };
        assert!(AtomMatrix::new(3, vec![bad]).is_err());
    }

    #[test]
    fn rejects_empty_or_ragged() {
        assert!(AtomMatrix::new(2, vec![]).is_err());
        assert!(AtomMatrix::new(0, vec![Column::Dense(vec![])]).is_err());
        assert!(AtomMatrix::new(2, vec![Column::Dense(vec![1.0])]).is_err());
    }

    #[test]
    fn products_agree_with_dense_rows() {
        let rows = vec![vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 0.5]];
        let a = AtomMatrix::from_rows(&rows).unwrap();
        assert_eq!(a.multiply(&[1.0, 2.0, 3.0]).unwrap(), vec![7.0, -0.5]);
        assert_eq!(
            a.transpose_multiply(&[1.0, 2.0]).unwrap(),
            vec![1.0, -2.0, 3.0]
        );
        assert_eq!(a.to_rows(), rows);
        assert_eq!(a.transpose().unwrap().transpose().unwrap().to_rows(), rows);
    }

    #[test]
    fn distances() {
        let a = Column::from_dense(vec![1.0, 0.0, 3.0]);
        let b = Column::from_dense(vec![0.0, 2.0, 0.0]);
        assert_eq!(a.l1_distance(&b, 3), 6.0);
        assert_eq!(a.sq_distance(&b, 3), 14.0);
    }
}
