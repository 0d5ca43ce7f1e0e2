//! The three objective families `f(α) = g(Aα)` and their oracles.
//!
//! An [`Objective`] keeps a running composite vector so that one
//! Frank-Wolfe step costs a single column (or a single kernel row):
//!
//! * LASSO and ℓ1-Adaboost cache `Aα ∈ ℝ^d`;
//! * the kernel SVM dual caches `(K̃α)_j` for every tracked atom `j`, plus
//!   the scalar `αᵀK̃α`.
//!
//! The same type serves the centralized solver (all atoms tracked, full
//! matrix) and each network node (only local atoms tracked, columns limited to
//! local and received atoms), which is what makes the distributed trace
//! reproduce the centralized one operation for operation.

mod atoms;
mod iterate;
mod kernel;

use std::num::NonZeroUsize;

use lru::LruCache;
use serde::{Deserialize, Serialize};

pub use atoms::{AtomMatrix, AtomSource, Column};
pub use iterate::{Domain, Iterate};
pub use kernel::{mean_pairwise_distance, BaseKernel, KernelSpec};

use crate::error::{Error, Result};

/// Default number of kernel rows kept by the SVM row cache.
pub const DEFAULT_ROW_CACHE: usize = 256;

const UNTRACKED: usize = usize::MAX;

/// Which loss `g` is applied to `Aα`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// `‖y − Aα‖²₂`
    Lasso { target: Vec<f64> },
    /// `αᵀK̃α` over the augmented kernel; atoms are training points with labels.
    SvmDual { kernel: KernelSpec },
    /// `log((1/d) Σ_i exp(−(Aα)_i / T))`
    Adaboost { temperature: f64 },
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Lasso { .. } => "lasso",
            ObjectiveKind::SvmDual { .. } => "svm",
            ObjectiveKind::Adaboost { .. } => "adaboost",
        }
    }

    /// Reals needed to ship one atom: `d`, or `d + 1` for a labelled SVM point.
    pub fn atom_payload(&self, dim: usize) -> u64 {
        match self {
            ObjectiveKind::SvmDual { .. } => dim as u64 + 1,
            _ => dim as u64,
        }
    }
}

/// Objective oracle with an incrementally maintained cache.
pub struct Objective<S> {
    kind: ObjectiveKind,
    atoms: S,
    n_atoms: usize,
    tracked: Vec<usize>,
    slot: Vec<usize>,
    composite: Vec<f64>,
    quad_value: f64,
    rows: Option<LruCache<usize, Vec<f64>>>,
}

impl<'a> Objective<&'a AtomMatrix> {
    /// Objective over the full matrix, every atom tracked, cache built for `alpha`.
    pub fn central(kind: ObjectiveKind, atoms: &'a AtomMatrix, alpha: &Iterate) -> Result<Self> {
        let n = atoms.n_atoms();
        Objective::new(kind, atoms, n, (0..n).collect(), alpha)
    }
}

impl<S: AtomSource> Objective<S> {
    /// `tracked` lists the atoms whose gradient entries this instance serves.
    pub fn new(
        kind: ObjectiveKind,
        atoms: S,
        n_atoms: usize,
        tracked: Vec<usize>,
        alpha: &Iterate,
    ) -> Result<Self> {
        let dim = atoms.dim();
        match &kind {
            ObjectiveKind::Lasso { target } if target.len() != dim => {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: target.len(),
                })
            }
            ObjectiveKind::Adaboost { temperature } if !(*temperature > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "temperature must be positive, got {temperature}"
                )))
            }
            _ => {}
        }
        let mut slot = vec![UNTRACKED; n_atoms];
        for (s, &j) in tracked.iter().enumerate() {
            if j >= n_atoms {
                return Err(Error::AtomOutOfRange {
                    index: j,
                    count: n_atoms,
                });
            }
            if let ObjectiveKind::SvmDual { .. } = kind {
                kernel::labelled(&atoms, j)?;
            }
            slot[j] = s;
        }
        let rows = matches!(kind, ObjectiveKind::SvmDual { .. })
            .then(|| LruCache::new(NonZeroUsize::new(DEFAULT_ROW_CACHE).unwrap()));
        let mut obj = Self {
            kind,
            atoms,
            n_atoms,
            tracked,
            slot,
            composite: Vec::new(),
            quad_value: 0.0,
            rows,
        };
        obj.reset(alpha)?;
        Ok(obj)
    }

    /// Bounds the SVM kernel row cache (ignored for other kinds).
    pub fn with_row_cache(mut self, rows: usize) -> Self {
        if self.rows.is_some() {
            self.rows = Some(LruCache::new(
                NonZeroUsize::new(rows.max(1)).expect("nonzero"),
            ));
        }
        self
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn atoms(&self) -> &S {
        &self.atoms
    }

    pub fn atoms_mut(&mut self) -> &mut S {
        &mut self.atoms
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    /// The cached composite: `Aα`, or `(K̃α)_j` in tracked order for the SVM dual.
    pub fn composite(&self) -> &[f64] {
        &self.composite
    }

    fn column(&self, j: usize) -> Result<&Column> {
        if j >= self.n_atoms {
            return Err(Error::AtomOutOfRange {
                index: j,
                count: self.n_atoms,
            });
        }
        self.atoms.column(j).ok_or(Error::AtomUnavailable(j))
    }

    fn check_iterate(&self, alpha: &Iterate) -> Result<()> {
        if let Some((j, _)) = alpha.iter().last() {
            if j >= self.n_atoms {
                return Err(Error::AtomOutOfRange {
                    index: j,
                    count: self.n_atoms,
                });
            }
        }
        Ok(())
    }

    fn linear_image(&self, alpha: &Iterate) -> Result<Vec<f64>> {
        let mut u = vec![0.0; self.dim()];
        for (j, w) in alpha.iter() {
            self.column(j)?.axpy(w, &mut u);
        }
        Ok(u)
    }

    fn kernel(&self) -> Option<&KernelSpec> {
        match &self.kind {
            ObjectiveKind::SvmDual { kernel } => Some(kernel),
            _ => None,
        }
    }

    /// Rebuilds the cache from scratch for `alpha`.
    pub fn reset(&mut self, alpha: &Iterate) -> Result<()> {
        self.check_iterate(alpha)?;
        match self.kernel().copied() {
            None => self.composite = self.linear_image(alpha)?,
            Some(k) => {
                let mut comp = Vec::with_capacity(self.tracked.len());
                for &t in &self.tracked {
                    let mut acc = 0.0;
                    for (l, w) in alpha.iter() {
                        acc += w * k.augmented_at(&self.atoms, t, l)?;
                    }
                    comp.push(acc);
                }
                self.composite = comp;
                self.quad_value = self.quadratic_form(alpha)?;
            }
        }
        Ok(())
    }

    fn quadratic_form(&self, alpha: &Iterate) -> Result<f64> {
        let k = self.kernel().expect("svm kernel");
        let mut total = 0.0;
        for (l, wl) in alpha.iter() {
            for (m, wm) in alpha.iter() {
                total += wl * wm * k.augmented_at(&self.atoms, l, m)?;
            }
        }
        Ok(total)
    }

    /// `f(α)` at the iterate the cache was built for.
    pub fn value(&self) -> f64 {
        match &self.kind {
            ObjectiveKind::Lasso { target } => self
                .composite
                .iter()
                .zip(target)
                .map(|(u, y)| (y - u) * (y - u))
                .sum(),
            ObjectiveKind::SvmDual { .. } => self.quad_value,
            ObjectiveKind::Adaboost { temperature } => {
                adaboost_value(&self.composite, *temperature)
            }
        }
    }

    /// `f(α)` evaluated from scratch, independent of the cache.
    pub fn objective_value(&self, alpha: &Iterate) -> Result<f64> {
        self.check_iterate(alpha)?;
        match &self.kind {
            ObjectiveKind::Lasso { target } => {
                let u = self.linear_image(alpha)?;
                Ok(u.iter().zip(target).map(|(u, y)| (y - u) * (y - u)).sum())
            }
            ObjectiveKind::SvmDual { .. } => self.quadratic_form(alpha),
            ObjectiveKind::Adaboost { temperature } => {
                Ok(adaboost_value(&self.linear_image(alpha)?, *temperature))
            }
        }
    }

    /// `∇g(Aα)` for the kinds that have an explicit composite.
    pub fn outer_gradient(&self) -> Option<Vec<f64>> {
        match &self.kind {
            ObjectiveKind::Lasso { target } => Some(
                self.composite
                    .iter()
                    .zip(target)
                    .map(|(u, y)| 2.0 * (u - y))
                    .collect(),
            ),
            ObjectiveKind::Adaboost { temperature } => {
                let t = *temperature;
                Some(
                    softmax_weights(&self.composite, t)
                        .into_iter()
                        .map(|w| -w / t)
                        .collect(),
                )
            }
            ObjectiveKind::SvmDual { .. } => None,
        }
    }

    fn entry_with(&self, outer: Option<&[f64]>, j: usize) -> Result<f64> {
        match outer {
            Some(v) => Ok(self.column(j)?.dot(v)),
            None => {
                if j >= self.n_atoms {
                    return Err(Error::AtomOutOfRange {
                        index: j,
                        count: self.n_atoms,
                    });
                }
                match self.slot[j] {
                    UNTRACKED => Err(Error::AtomUnavailable(j)),
                    s => Ok(2.0 * self.composite[s]),
                }
            }
        }
    }

    /// `∇f(α)_j = a_jᵀ ∇g(Aα)` (or `2 (K̃α)_j` for the SVM dual).
    pub fn gradient_entry(&self, j: usize) -> Result<f64> {
        let outer = self.outer_gradient();
        self.entry_with(outer.as_deref(), j)
    }

    /// Gradient entries for several atoms, sharing one `∇g` evaluation.
    pub fn gradient_entries(&self, atoms: &[usize]) -> Result<Vec<f64>> {
        let outer = self.outer_gradient();
        atoms
            .iter()
            .map(|&j| self.entry_with(outer.as_deref(), j))
            .collect()
    }

    /// The full gradient over all tracked atoms, in tracked order.
    pub fn tracked_gradient(&self) -> Result<Vec<f64>> {
        match self.kind {
            ObjectiveKind::SvmDual { .. } => Ok(self.composite.iter().map(|v| 2.0 * v).collect()),
            _ => self.gradient_entries(&self.tracked),
        }
    }

    /// Boosting weights `w = softmax(−Aα / T)`.
    pub fn adaboost_weights(&self) -> Result<Vec<f64>> {
        match &self.kind {
            ObjectiveKind::Adaboost { temperature } => {
                Ok(softmax_weights(&self.composite, *temperature))
            }
            _ => Err(Error::KindMismatch(
                "boosting weights need an Adaboost objective",
            )),
        }
    }

    fn kernel_row(&mut self, j: usize) -> Result<Vec<f64>> {
        let k = *self.kernel().expect("svm kernel");
        if let Some(row) = self.rows.as_mut().and_then(|r| r.get(&j)) {
            return Ok(row.clone());
        }
        let row = self
            .tracked
            .iter()
            .map(|&t| k.augmented_at(&self.atoms, t, j))
            .collect::<Result<Vec<_>>>()?;
        if let Some(cache) = self.rows.as_mut() {
            cache.put(j, row.clone());
        }
        Ok(row)
    }

    /// Moves the cache from `α` to `(1 − γ)α + γ · coef · e_j`.
    ///
    /// `grad_j` must be `∇f(α)_j` at the old iterate; the SVM dual uses it to
    /// update `αᵀK̃α` without touching non-local atoms.
    pub fn apply_step(&mut self, gamma: f64, j: usize, coef: f64, grad_j: f64) -> Result<()> {
        let keep = 1.0 - gamma;
        match self.kernel().copied() {
            None => {
                let col = self.column(j)?.clone();
                for u in self.composite.iter_mut() {
                    *u *= keep;
                }
                col.axpy(gamma * coef, &mut self.composite);
            }
            Some(k) => {
                let row = self.kernel_row(j)?;
                for (u, r) in self.composite.iter_mut().zip(&row) {
                    *u = keep * *u + gamma * coef * r;
                }
                let kjj = k.augmented_at(&self.atoms, j, j)?;
                self.quad_value = keep * keep * self.quad_value
                    + gamma * keep * coef * grad_j
                    + gamma * gamma * coef * coef * kjj;
            }
        }
        Ok(())
    }

    /// Exact line search along `s − α` with `s = coef · e_j`.
    ///
    /// `gap = ⟨α − s, ∇f(α)⟩`. Quadratic losses use the closed form
    /// `γ* = gap / (2 ‖A(s − α)‖²)` (resp. `(s − α)ᵀK̃(s − α)`), clipped to
    /// `[0, 1]`; a zero curvature gives `γ = 1`. Adaboost uses golden-section
    /// search on `[0, 1]`.
    pub fn line_search(&self, gap: f64, j: usize, coef: f64, grad_j: f64) -> Result<f64> {
        match &self.kind {
            ObjectiveKind::Lasso { .. } => {
                let mut dir = self.composite.iter().map(|u| -u).collect::<Vec<_>>();
                self.column(j)?.axpy(coef, &mut dir);
                let curv: f64 = dir.iter().map(|x| x * x).sum();
                Ok(closed_form_step(gap, curv))
            }
            ObjectiveKind::SvmDual { kernel } => {
                let kjj = kernel.augmented_at(&self.atoms, j, j)?;
                let curv = coef * coef * kjj - coef * grad_j + self.quad_value;
                Ok(closed_form_step(gap, curv.max(0.0)))
            }
            ObjectiveKind::Adaboost { temperature } => {
                let t = *temperature;
                let col = self.column(j)?;
                let mut dir = self.composite.iter().map(|u| -u).collect::<Vec<_>>();
                col.axpy(coef, &mut dir);
                let base = &self.composite;
                let phi = |g: f64| {
                    let u: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + g * d).collect();
                    adaboost_value(&u, t)
                };
                Ok(golden_section(phi, 0.0, 1.0, 1e-10))
            }
        }
    }
}

fn closed_form_step(gap: f64, curvature: f64) -> f64 {
    if curvature <= 0.0 {
        return 1.0;
    }
    (gap / (2.0 * curvature)).clamp(0.0, 1.0)
}

/// Minimizes a unimodal `phi` on `[lo, hi]` to interval width `tol`.
pub fn golden_section(phi: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ends = [hi, lo];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = phi(c);
    let mut fd = phi(d);
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = phi(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = phi(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the bracketing loop never probes the endpoints themselves
    let mut best = (phi(mid), mid);
    for g in ends {
        let v = phi(g);
        if v < best.0 {
            best = (v, g);
        }
    }
    best.1
}

/// `w = exp(−u/T) / Σ exp(−u_i/T)`, computed with a max shift.
pub fn softmax_weights(composite: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = composite.iter().map(|u| -u / temperature).collect();
    let shift = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|s| (s - shift).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn adaboost_value(composite: &[f64], temperature: f64) -> f64 {
    let scaled: Vec<f64> = composite.iter().map(|u| -u / temperature).collect();
    let shift = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scaled.iter().map(|s| (s - shift).exp()).sum();
    shift + sum.ln() - (composite.len() as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lasso_i2() -> (AtomMatrix, ObjectiveKind) {
        (
            AtomMatrix::identity(2).unwrap(),
            ObjectiveKind::Lasso {
                target: vec![1.0, 0.0],
            },
        )
    }

    fn svm_single() -> (AtomMatrix, ObjectiveKind) {
        let atoms = AtomMatrix::from_dense_columns(1, vec![vec![1.0]])
            .unwrap()
            .with_labels(vec![1.0])
            .unwrap();
        let kernel = KernelSpec::new(BaseKernel::Linear, 1.0).unwrap();
        (atoms, ObjectiveKind::SvmDual { kernel })
    }

    fn boost_pair() -> (AtomMatrix, ObjectiveKind) {
        (
            AtomMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap(),
            ObjectiveKind::Adaboost { temperature: 1.0 },
        )
    }

    #[test]
    fn lasso_at_zero() {
        let (a, kind) = lasso_i2();
        let alpha = Iterate::start(Domain::L1Ball { beta: 1.0 });
        let obj = Objective::central(kind, &a, &alpha).unwrap();
        assert_eq!(obj.value(), 1.0);
        assert_eq!(obj.objective_value(&alpha).unwrap(), 1.0);
        assert_eq!(obj.gradient_entry(0).unwrap(), -2.0);
        assert_eq!(obj.gradient_entry(1).unwrap(), 0.0);
    }

    #[test]
    fn svm_single_atom() {
        let (a, kind) = svm_single();
        let alpha = Iterate::start(Domain::Simplex);
        let obj = Objective::central(kind, &a, &alpha).unwrap();
        assert_eq!(obj.value(), 3.0);
        assert_eq!(obj.gradient_entry(0).unwrap(), 6.0);
    }

    #[test]
    fn boosting_balanced_pair() {
        let (a, kind) = boost_pair();
        let alpha = Iterate::from_entries(Domain::Simplex, [(0, 0.5), (1, 0.5)]);
        let obj = Objective::central(kind, &a, &alpha).unwrap();
        assert_eq!(obj.value(), 0.0);
        assert_eq!(obj.adaboost_weights().unwrap(), vec![1.0]);
        assert_eq!(obj.gradient_entry(0).unwrap(), -1.0);
        assert_eq!(obj.gradient_entry(1).unwrap(), 1.0);
    }

    #[test]
    fn boosting_weights() {
        assert_eq!(softmax_weights(&[0.0, 0.0], 1.0), vec![0.5, 0.5]);
        let w = softmax_weights(&[2f64.ln(), 0.0], 1.0);
        assert_relative_eq!(w[0], 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(w[1], 2.0 / 3.0, max_relative = 1e-15);
        // large magnitudes must not overflow
        let w = softmax_weights(&[-1e6, 1e6, -1e6], 0.5);
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(w.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn weights_need_boosting_kind() {
        let (a, kind) = lasso_i2();
        let obj = Objective::central(kind, &a, &Iterate::start(Domain::Simplex)).unwrap();
        assert!(matches!(
            obj.adaboost_weights(),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn errors_on_bad_index_and_dims() {
        let (a, _) = lasso_i2();
        let alpha = Iterate::start(Domain::Simplex);
        assert!(Objective::central(
            ObjectiveKind::Lasso {
                target: vec![1.0; 3]
            },
            &a,
            &alpha
        )
        .is_err());
        let obj = Objective::central(
            ObjectiveKind::Lasso {
                target: vec![1.0; 2],
            },
            &a,
            &alpha,
        )
        .unwrap();
        assert!(matches!(
            obj.gradient_entry(5),
            Err(Error::AtomOutOfRange { .. })
        ));
        let far = Iterate::simplex_vertex(9);
        assert!(obj.objective_value(&far).is_err());
    }

    #[test]
    fn step_extremes() {
        let (a, kind) = lasso_i2();
        let alpha = Iterate::from_entries(Domain::L1Ball { beta: 1.0 }, [(0, 0.3), (1, -0.2)]);
        let mut obj = Objective::central(kind, &a, &alpha).unwrap();
        let before = obj.composite().to_vec();
        obj.apply_step(0.0, 1, 1.0, 0.0).unwrap();
        assert_eq!(obj.composite(), &before[..]);
        obj.apply_step(1.0, 1, -1.0, 0.0).unwrap();
        assert_eq!(obj.composite(), &[0.0, -1.0]);
    }

    #[test]
    fn simplex_line_search_midpoint() {
        let a = AtomMatrix::identity(2).unwrap();
        let kind = ObjectiveKind::Lasso {
            target: vec![0.0, 0.0],
        };
        let alpha = Iterate::start(Domain::Simplex);
        let obj = Objective::central(kind, &a, &alpha).unwrap();
        let g = obj.gradient_entries(&[0, 1]).unwrap();
        // gap = <α - e1, ∇f> = 2 - 0
        let gap = g[0] - g[1];
        assert_eq!(obj.line_search(gap, 1, 1.0, g[1]).unwrap(), 0.5);
    }

    #[test]
    fn golden_section_finds_interior_and_endpoints() {
        let g = golden_section(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((g - 0.3).abs() < 1e-8);
        assert_eq!(golden_section(|x| x, 0.0, 1.0, 1e-10), 0.0);
        assert_eq!(golden_section(|x| -x, 0.0, 1.0, 1e-10), 1.0);
    }
}
