mod common;

use std::io::Cursor;

use dfw_core::approx::{grad_bound, metric_for};
use dfw_core::dfw::{Partition, PartitionScheme};
use dfw_core::fw::{lmo_l1, lmo_simplex, SolverConfig, StepRule};
use dfw_core::harness::{matrix_rows, read_libsvm, write_libsvm};
use dfw_core::netsim::{DropFilter, Topology, TopologyKind};
use dfw_core::objectives::{
    AtomMatrix, BaseKernel, Domain, Iterate, KernelSpec, Objective, ObjectiveKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kind_for(which: u8, d: usize, rng: &mut ChaCha8Rng) -> ObjectiveKind {
    match which % 3 {
        0 => ObjectiveKind::Lasso {
            target: (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        },
        1 => ObjectiveKind::SvmDual {
            kernel: KernelSpec::new(
                BaseKernel::Rbf {
                    sigma: rng.gen_range(0.3..3.0),
                },
                10.0,
            )
            .unwrap(),
        },
        _ => ObjectiveKind::Adaboost {
            temperature: rng.gen_range(0.2..2.0),
        },
    }
}

fn atoms_for(kind: &ObjectiveKind, d: usize, n: usize, seed: u64) -> AtomMatrix {
    match kind {
        ObjectiveKind::SvmDual { .. } => common::labelled_points(n, d, seed),
        _ => common::dense_random(d, n, &mut ChaCha8Rng::seed_from_u64(seed)),
    }
}

fn domain_for(kind: &ObjectiveKind) -> Domain {
    match kind {
        ObjectiveKind::SvmDual { .. } => Domain::Simplex,
        _ => Domain::l1(1.5).unwrap(),
    }
}

/// A random feasible point reached by `steps` Frank-Wolfe-style moves.
fn random_feasible(domain: Domain, n: usize, steps: usize, rng: &mut ChaCha8Rng) -> Iterate {
    let mut alpha = Iterate::start(domain);
    let scale = match domain {
        Domain::L1Ball { beta } => beta,
        Domain::Simplex => 1.0,
    };
    for _ in 0..steps {
        let j = rng.gen_range(0..n);
        let sign = if domain.is_simplex() || rng.gen_bool(0.5) {
            1.0
        } else {
            -1.0
        };
        alpha.step(rng.gen_range(0.05..0.9), j, sign * scale);
    }
    alpha
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_cache_matches_recomputation(
        which in 0u8..3, d in 2usize..8, n in 2usize..12, seed in any::<u64>(), steps in 1usize..30,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = kind_for(which, d, &mut rng);
        let atoms = atoms_for(&kind, d, n, seed);
        let domain = domain_for(&kind);
        let mut alpha = Iterate::start(domain);
        let mut obj = Objective::central(kind.clone(), &atoms, &alpha).unwrap();
        let scale = if let Domain::L1Ball { beta } = domain { beta } else { 1.0 };
        for _ in 0..steps {
            let j = rng.gen_range(0..n);
            let coef = if domain.is_simplex() || rng.gen_bool(0.5) { scale } else { -scale };
            let gamma = rng.gen_range(0.01..1.0);
            let g = obj.gradient_entry(j).unwrap();
            obj.apply_step(gamma, j, coef, g).unwrap();
            alpha.step(gamma, j, coef);
            prop_assert!(alpha.is_feasible());
            let fresh = Objective::central(kind.clone(), &atoms, &alpha).unwrap();
            let scale_f = fresh.value().abs().max(1.0);
            prop_assert!((obj.value() - fresh.value()).abs() <= 1e-9 * scale_f);
            prop_assert!((obj.value() - obj.objective_value(&alpha).unwrap()).abs() <= 1e-9 * scale_f);
            for l in 0..n {
                let a = obj.gradient_entry(l).unwrap();
                let b = fresh.gradient_entry(l).unwrap();
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_differences_respect_the_bound(
        which in 0u8..3, d in 2usize..6, n in 2usize..10, seed in any::<u64>(), steps in 0usize..20,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = kind_for(which, d, &mut rng);
        let atoms = atoms_for(&kind, d, n, seed);
        let domain = domain_for(&kind);
        let g_max = grad_bound(&kind, &atoms, domain).unwrap();
        let metric = metric_for(&kind);
        let alpha = random_feasible(domain, n, steps, &mut rng);
        let obj = Objective::central(kind, &atoms, &alpha).unwrap();
        for i in 0..n {
            for j in 0..n {
                let diff = (obj.gradient_entry(i).unwrap() - obj.gradient_entry(j).unwrap()).abs();
                let dist = metric.linear_radius(metric.distance(&atoms, i, j).unwrap());
                prop_assert!(diff <= g_max * dist * (1.0 + 1e-9) + 1e-12, "{diff} > {g_max} · {dist}");
            }
        }
    }

    #[test]
    fn lmo_vertices_minimize_the_linear_model(
        grad in prop::collection::vec(-10.0f64..10.0, 1..20), beta in 0.1f64..5.0,
    ) {
        let l1 = lmo_l1(&grad, beta).unwrap();
        let best = grad.iter().map(|g| -beta * g.abs()).fold(f64::INFINITY, f64::min);
        prop_assert!((grad[l1.index] * l1.coefficient() - best).abs() <= 1e-12);
        let sx = lmo_simplex(&grad).unwrap();
        prop_assert_eq!(grad[sx.index], grad.iter().copied().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(sx.coefficient(), 1.0);
    }

    #[test]
    fn libsvm_round_trip(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 4), 1..10),
        labels_seed in any::<u64>(),
    ) {
        let atoms = AtomMatrix::from_rows(&rows).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(labels_seed);
        let labels: Vec<f64> = (0..atoms.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let sparse = matrix_rows(&atoms);
        let mut text = Vec::new();
        write_libsvm(&mut text, &labels, &sparse).unwrap();
        let back = read_libsvm(Cursor::new(text), Some(atoms.n_atoms())).unwrap();
        prop_assert_eq!(&back.labels, &labels);
        prop_assert_eq!(&back.rows, &sparse);
        let (again, y) = back.into_features().unwrap();
        prop_assert_eq!(again.to_rows(), atoms.to_rows());
        prop_assert_eq!(y, labels);
    }

    #[test]
    fn partitions_cover_every_atom_once(
        n_atoms in 1usize..200, n_nodes in 1usize..12, seed in any::<u64>(), frac in 0.05f64..0.95,
        hub in any::<bool>(),
    ) {
        let topo = Topology::build(TopologyKind::Star, n_nodes).unwrap();
        for scheme in [
            PartitionScheme::Contiguous,
            PartitionScheme::UniformRandom { seed },
            PartitionScheme::Unbalanced { fraction: frac, seed },
        ] {
            let Ok(p) = Partition::for_topology(&scheme, n_atoms, &topo, hub, true) else {
                continue;
            };
            prop_assert_eq!(p.n_atoms(), n_atoms);
            let mut seen = vec![0; n_atoms];
            for i in 0..n_nodes {
                for j in p.local(i) {
                    prop_assert_eq!(p.owner(j), i);
                    seen[j] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            prop_assert_eq!(p.sizes().iter().sum::<usize>(), n_atoms);
            if n_nodes > 1 && !hub {
                prop_assert!(p.local(0).is_empty());
            }
            if matches!(scheme, PartitionScheme::UniformRandom { .. }) {
                let held: Vec<usize> = p.sizes().into_iter().skip(usize::from(n_nodes > 1 && !hub)).collect();
                let (lo, hi) = (held.iter().min().unwrap(), held.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
        }
    }

    #[test]
    fn drop_streams_are_reproducible(p in 0.0f64..0.99, seed in any::<u64>()) {
        let a: Vec<bool> = DropFilter::new(p, seed).unwrap().take(200).collect();
        let b: Vec<bool> = DropFilter::new(p, seed).unwrap().take(200).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn solver_iterates_stay_feasible(which in 0u8..3, seed in any::<u64>(), harmonic in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = kind_for(which, 4, &mut rng);
        let atoms = atoms_for(&kind, 4, 8, seed);
        let domain = domain_for(&kind);
        let rule = if harmonic { StepRule::Harmonic } else { StepRule::LineSearch };
        let cfg = SolverConfig::new(1e-9, 60, rule).unwrap();
        let mut obj = Objective::central(kind, &atoms, &Iterate::start(domain)).unwrap();
        let trace = dfw_core::fw::solve_fw(&mut obj, domain, &cfg).unwrap();
        prop_assert!(trace.final_iterate.is_feasible());
        for r in &trace.records {
            prop_assert!(r.gap >= -1e-9, "gap {}", r.gap);
            prop_assert!((0.0..=1.0).contains(&r.step));
        }
    }
}
