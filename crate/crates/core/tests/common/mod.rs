#![allow(dead_code)]

use dfw_core::harness::{synth_lasso, LambdaMaxRule, SynthLassoParams};
use dfw_core::objectives::{AtomMatrix, BaseKernel, Domain, KernelSpec, ObjectiveKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub kind: ObjectiveKind,
    pub atoms: AtomMatrix,
    pub domain: Domain,
}

/// Seeded sparse LASSO with `d` rows and `n` atoms over the suggested ℓ1 ball.
pub fn lasso(d: usize, n: usize, seed: u64) -> Instance {
    let s = synth_lasso(
        &SynthLassoParams::new(d, n, 0.2, 0.05, seed),
        LambdaMaxRule::Correlation,
    )
    .unwrap();
    Instance {
        kind: ObjectiveKind::Lasso { target: s.target },
        atoms: s.atoms,
        domain: Domain::l1(s.beta).unwrap(),
    }
}

/// Two labelled Gaussian blobs in `dim` dimensions.
pub fn labelled_points(n: usize, dim: usize, seed: u64) -> AtomMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let y = if j % 2 == 0 { 1.0 } else { -1.0 };
        cols.push(
            (0..dim)
                .map(|_| y * 0.8 + rng.sample::<f64, _>(StandardNormal))
                .collect(),
        );
        labels.push(y);
    }
    AtomMatrix::from_dense_columns(dim, cols)
        .unwrap()
        .with_labels(labels)
        .unwrap()
}

pub fn svm_rbf(n: usize, dim: usize, seed: u64) -> Instance {
    Instance {
        kind: ObjectiveKind::SvmDual {
            kernel: KernelSpec::new(BaseKernel::Rbf { sigma: 1.5 }, 10.0).unwrap(),
        },
        atoms: labelled_points(n, dim, seed),
        domain: Domain::Simplex,
    }
}

/// `‖α‖²` over the simplex `Δ_d`, whose minimum is `1/d`.
pub fn simplex_quadratic(d: usize) -> Instance {
    Instance {
        kind: ObjectiveKind::Lasso {
            target: vec![0.0; d],
        },
        atoms: AtomMatrix::identity(d).unwrap(),
        domain: Domain::Simplex,
    }
}

pub fn dense_random(d: usize, n: usize, rng: &mut ChaCha8Rng) -> AtomMatrix {
    let cols = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    AtomMatrix::from_dense_columns(d, cols).unwrap()
}
