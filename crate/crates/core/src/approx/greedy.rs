use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{AtomSource, KernelSpec};

/// Largest instance [`brute_force_optimal_radius`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Distance used to cluster atoms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    /// `‖a_i − a_j‖₁` on raw atoms.
    L1,
    /// `‖φ̃(z_i) − φ̃(z_j)‖²` in augmented kernel feature space.
    AugmentedKernel(KernelSpec),
}

impl Metric {
    pub fn distance<S: AtomSource + ?Sized>(&self, atoms: &S, i: usize, j: usize) -> Result<f64> {
        match self {
            Metric::L1 => {
                let a = atoms.column(i).ok_or(Error::AtomUnavailable(i))?;
                let b = atoms.column(j).ok_or(Error::AtomUnavailable(j))?;
                Ok(a.l1_distance(b, atoms.dim()))
            }
            Metric::AugmentedKernel(k) => k.feature_sq_distance(atoms, i, j),
        }
    }

    /// Converts a radius under this metric to a distance in the space where
    /// gradients are Lipschitz (the kernel metric is squared).
    pub fn linear_radius(&self, radius: f64) -> f64 {
        match self {
            Metric::L1 => radius,
            Metric::AugmentedKernel(_) => radius.max(0.0).sqrt(),
        }
    }
}

/// Centers chosen among one node's atoms, with each atom's distance to its
/// nearest center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    atoms: Vec<usize>,
    /// Centers in the order they were added.
    centers: Vec<usize>,
    is_center: Vec<bool>,
    nearest: Vec<f64>,
}

impl CenterSet {
    /// No centers yet over the atoms `atoms`.
    pub fn empty(atoms: Vec<usize>) -> Self {
        let n = atoms.len();
        Self {
            atoms,
            centers: Vec::new(),
            is_center: vec![false; n],
            nearest: vec![f64::INFINITY; n],
        }
    }

    pub fn atoms(&self) -> &[usize] {
        &self.atoms
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Centers in increasing atom order.
    pub fn sorted_centers(&self) -> Vec<usize> {
        self.atoms
            .iter()
            .zip(&self.is_center)
            .filter(|(_, c)| **c)
            .map(|(j, _)| *j)
            .collect()
    }

    /// `max_j d(a_j, C)`; infinite before the first center, 0 with no atoms.
    pub fn radius(&self) -> f64 {
        if self.atoms.is_empty() {
            return 0.0;
        }
        self.nearest.iter().copied().fold(0.0, f64::max)
    }

    /// Nearest-center distance of every atom, aligned with [`Self::atoms`].
    pub fn distances(&self) -> &[f64] {
        &self.nearest
    }

    fn add<S: AtomSource + ?Sized>(
        &mut self,
        pos: usize,
        source: &S,
        metric: &Metric,
    ) -> Result<()> {
        let c = self.atoms[pos];
        self.is_center[pos] = true;
        self.centers.push(c);
        for (t, &j) in self.atoms.iter().enumerate() {
            let d = if t == pos {
                0.0
            } else {
                metric.distance(source, j, c)?
            };
            if d < self.nearest[t] {
                self.nearest[t] = d;
            }
        }
        Ok(())
    }

    /// Adds up to `count` centers, each time the atom farthest from the
    /// current centers (smallest index on ties). An empty set is seeded with
    /// its smallest atom, which counts as one of the additions.
    pub fn grow<S: AtomSource + ?Sized>(
        &mut self,
        source: &S,
        count: usize,
        metric: &Metric,
    ) -> Result<()> {
        for _ in 0..count {
            let next = if self.centers.is_empty() {
                (!self.atoms.is_empty()).then_some(0)
            } else {
                let mut best: Option<usize> = None;
                for t in 0..self.atoms.len() {
                    if self.is_center[t] {
                        continue;
                    }
                    if best.is_none_or(|b| self.nearest[t] > self.nearest[b]) {
                        best = Some(t);
                    }
                }
                best
            };
            match next {
                Some(pos) => self.add(pos, source, metric)?,
                None => break,
            }
        }
        Ok(())
    }
}

/// Greedy m-center selection: `existing` grown by `delta` centers.
pub fn greedy_selection<S: AtomSource + ?Sized>(
    source: &S,
    existing: CenterSet,
    delta: usize,
    metric: &Metric,
) -> Result<CenterSet> {
    let mut set = existing;
    set.grow(source, delta, metric)?;
    Ok(set)
}

/// Smallest achievable radius with `m` centers drawn from `atoms`, by
/// enumerating every subset.
pub fn brute_force_optimal_radius<S: AtomSource + ?Sized>(
    source: &S,
    atoms: &[usize],
    m: usize,
    metric: &Metric,
) -> Result<f64> {
    if atoms.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "brute force is limited to {BRUTE_FORCE_LIMIT} atoms, got {}",
            atoms.len()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one center".into()));
    }
    if m >= atoms.len() {
        return Ok(0.0);
    }
    let n = atoms.len();
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let d = metric.distance(source, atoms[a], atoms[b])?;
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let best = (0..n)
        .combinations(m)
        .map(|centers| {
            (0..n)
                .map(|t| {
                    centers
                        .iter()
                        .map(|&c| dist[t][c])
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::AtomMatrix;

    fn line(points: &[f64]) -> AtomMatrix {
        AtomMatrix::from_dense_columns(1, points.iter().map(|&p| vec![p]).collect()).unwrap()
    }

    #[test]
    fn farthest_point_is_added() {
        let a = line(&[0.0, 1.0, 10.0]);
        let mut set = CenterSet::empty(vec![0, 1, 2]);
        set.grow(&a, 1, &Metric::L1).unwrap();
        assert_eq!(set.centers(), &[0]);
        assert_eq!(set.radius(), 10.0);
        let set = greedy_selection(&a, set, 1, &Metric::L1).unwrap();
        assert_eq!(set.centers(), &[0, 2]);
        assert_eq!(set.radius(), 1.0);
    }

    #[test]
    fn zero_and_full_growth() {
        let a = line(&[0.0, 1.0, 10.0]);
        let mut set = CenterSet::empty(vec![0, 1, 2]);
        set.grow(&a, 1, &Metric::L1).unwrap();
        let same = greedy_selection(&a, set.clone(), 0, &Metric::L1).unwrap();
        assert_eq!(same, set);
        let all = greedy_selection(&a, CenterSet::empty(vec![0, 1, 2]), 7, &Metric::L1).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all.radius(), 0.0);
        assert_eq!(all.sorted_centers(), vec![0, 1, 2]);
    }

    #[test]
    fn tie_goes_to_smallest_index() {
        let a = line(&[0.0, -3.0, 3.0]);
        let mut set = CenterSet::empty(vec![0, 1, 2]);
        set.grow(&a, 2, &Metric::L1).unwrap();
        assert_eq!(set.centers(), &[0, 1]);
    }

    #[test]
    fn brute_force_examples() {
        let a = line(&[0.0, 1.0, 10.0]);
        assert_eq!(
            brute_force_optimal_radius(&a, &[0, 1, 2], 2, &Metric::L1).unwrap(),
            1.0
        );
        assert_eq!(
            brute_force_optimal_radius(&a, &[0, 1, 2], 3, &Metric::L1).unwrap(),
            0.0
        );
        let b = line(&[0.0, 4.0]);
        assert_eq!(
            brute_force_optimal_radius(&b, &[0, 1], 1, &Metric::L1).unwrap(),
            4.0
        );
        let big = line(&[0.0; 13]);
        let all: Vec<usize> = (0..13).collect();
        assert!(brute_force_optimal_radius(&big, &all, 2, &Metric::L1).is_err());
    }
}
