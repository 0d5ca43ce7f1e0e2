//! Seeded sparse LASSO instances `y = Aα_true + η`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{AtomMatrix, Column};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthLassoParams {
    pub d: usize,
    pub n: usize,
    /// Fraction of nonzeros per column of `A`.
    pub density_a: f64,
    /// Fraction of nonzeros in `α_true`.
    pub density_alpha: f64,
    pub noise_variance: f64,
    pub seed: u64,
}

impl SynthLassoParams {
    pub fn new(d: usize, n: usize, density_a: f64, density_alpha: f64, seed: u64) -> Self {
        Self {
            d,
            n,
            density_a,
            density_alpha,
            noise_variance: 1e-3,
            seed,
        }
    }
}

/// How `λ_max` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMaxRule {
    /// `‖Aᵀy‖∞`, the smallest `λ` for which the LASSO solution is zero.
    #[default]
    Correlation,
    /// `‖Ay‖∞`, only defined when `A` is square.
    AsWritten,
}

impl std::str::FromStr for LambdaMaxRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(Self::Correlation),
            "as-written" => Ok(Self::AsWritten),
            other => Err(Error::InvalidParameter(format!(
                "unknown lambda rule {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthLasso {
    pub atoms: AtomMatrix,
    pub target: Vec<f64>,
    pub alpha_true: Vec<f64>,
    pub lambda_max: f64,
    /// `‖α̂‖₁` for the solution of the problem regularized with `0.1 λ_max`.
    pub beta: f64,
}

/// Nonzero count for a density: `round(s · n)`, at least 1.
pub fn density_count(s: f64, n: usize) -> usize {
    ((s * n as f64).round() as usize).clamp(1, n)
}

fn check_density(name: &str, s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be in (0, 1], got {s}"
        )));
    }
    Ok(())
}

pub fn synth_lasso(params: &SynthLassoParams, rule: LambdaMaxRule) -> Result<SynthLasso> {
    let SynthLassoParams { d, n, .. } = *params;
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter("d and n must be positive".into()));
    }
    check_density("density_a", params.density_a)?;
    check_density("density_alpha", params.density_alpha)?;
    if !(params.noise_variance >= 0.0) {
        return Err(Error::InvalidParameter(
            "noise variance must be nonnegative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let per_col = density_count(params.density_a, d);
    let mut columns = Vec::with_capacity(n);
    for _ in 0..n {
        let mut rows = sample(&mut rng, d, per_col).into_vec();
        rows.sort_unstable();
        let pairs = rows
            .into_iter()
            .map(|i| (i, StandardNormal.sample(&mut rng)))
            .collect();
        columns.push(Column::from_pairs(d, pairs)?);
    }
    let atoms = AtomMatrix::new(d, columns)?;

    let mut alpha_true = vec![0.0; n];
    for j in sample(&mut rng, n, density_count(params.density_alpha, n)) {
        alpha_true[j] = StandardNormal.sample(&mut rng);
    }
    let noise = Normal::new(0.0, params.noise_variance.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut target = atoms.multiply(&alpha_true)?;
    for y in target.iter_mut() {
        *y += noise.sample(&mut rng);
    }

    let lambda_max = match rule {
        LambdaMaxRule::Correlation => inf_norm(&atoms.transpose_multiply(&target)?),
        LambdaMaxRule::AsWritten => {
            if d != n {
                return Err(Error::InvalidParameter(format!(
                    "‖Ay‖∞ needs a square matrix, got {d}×{n}"
                )));
            }
            inf_norm(&atoms.multiply(&target)?)
        }
    };
    let alpha_hat = lasso_fista(&atoms, &target, 0.1 * lambda_max, 1000, 1e-10)?;
    let beta = alpha_hat.iter().map(|a| a.abs()).sum();
    Ok(SynthLasso {
        atoms,
        target,
        alpha_true,
        lambda_max,
        beta,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Largest eigenvalue of `AᵀA` by power iteration.
fn spectral_sq(atoms: &AtomMatrix) -> Result<f64> {
    let n = atoms.n_atoms();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut est = 0.0;
    for _ in 0..100 {
        let w = atoms.transpose_multiply(&atoms.multiply(&v)?)?;
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = norm;
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - est).abs() <= 1e-9 * next {
            return Ok(next);
        }
        est = next;
    }
    Ok(est)
}

/// Accelerated proximal gradient for `½‖y − Aα‖² + λ‖α‖₁`.
pub fn lasso_fista(
    atoms: &AtomMatrix,
    target: &[f64],
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let n = atoms.n_atoms();
    let lip = spectral_sq(atoms)? * 1.01;
    if lip == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let step = 1.0 / lip;
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t: f64 = 1.0;
    for _ in 0..max_iter {
        let mut resid = atoms.multiply(&z)?;
        for (r, y) in resid.iter_mut().zip(target) {
            *r -= y;
        }
        let grad = atoms.transpose_multiply(&resid)?;
        let next: Vec<f64> = z
            .iter()
            .zip(&grad)
            .map(|(zi, gi)| {
                let u = zi - step * gi;
                u.signum() * (u.abs() - step * lambda).max(0.0)
            })
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        z = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        x = next;
        t = t_next;
        if change <= tol {
            break;
        }
    }
    Ok(x)
}
