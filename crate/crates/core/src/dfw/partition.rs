use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netsim::Topology;

/// How atoms are dealt to nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PartitionScheme {
    /// Consecutive blocks; the first `n mod N` holders get one extra atom.
    Contiguous,
    /// Atoms shuffled with `seed`, then dealt round-robin.
    UniformRandom { seed: u64 },
    /// The first holder gets `floor(fraction · n)` atoms, the rest are dealt
    /// at random among the other holders.
    Unbalanced { fraction: f64, seed: u64 },
}

impl FromStr for PartitionScheme {
    type Err = Error;

    /// `contiguous`, `random:SEED`, `unbalanced:FRACTION:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidParameter(format!(
            "unknown partition {s:?}; expected contiguous, random:SEED or unbalanced:FRACTION:SEED"
        ))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["contiguous"] => Ok(Self::Contiguous),
            ["random", seed] => Ok(Self::UniformRandom {
                seed: seed.parse().map_err(|_| bad())?,
            }),
            ["unbalanced", frac, seed] => Ok(Self::Unbalanced {
                fraction: frac.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PartitionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Contiguous => write!(f, "contiguous"),
            Self::UniformRandom { seed } => write!(f, "random:{seed}"),
            Self::Unbalanced { fraction, seed } => write!(f, "unbalanced:{fraction}:{seed}"),
        }
    }
}

/// Assignment of every atom to exactly one node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    owner: Vec<usize>,
    n_nodes: usize,
}

impl Partition {
    /// Deals `n_atoms` atoms over the nodes listed in `holders`.
    ///
    /// Fails when a holder would receive no atom, unless `allow_empty`.
    pub fn with_holders(
        scheme: &PartitionScheme,
        n_atoms: usize,
        n_nodes: usize,
        holders: &[usize],
        allow_empty: bool,
    ) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::InvalidParameter("nothing to partition".into()));
        }
        if holders.is_empty() {
            return Err(Error::InvalidParameter("no node may hold atoms".into()));
        }
        if let Some(&h) = holders.iter().find(|&&h| h >= n_nodes) {
            return Err(Error::NodeOutOfRange {
                node: h,
                count: n_nodes,
            });
        }
        let h = holders.len();
        let mut owner = vec![0; n_atoms];
        match scheme {
            PartitionScheme::Contiguous => {
                let (base, extra) = (n_atoms / h, n_atoms % h);
                let mut j = 0;
                for (slot, &node) in holders.iter().enumerate() {
                    let size = base + usize::from(slot < extra);
                    owner[j..j + size].fill(node);
                    j += size;
                }
            }
            PartitionScheme::UniformRandom { seed } => {
                let mut order: Vec<usize> = (0..n_atoms).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                for (pos, j) in order.into_iter().enumerate() {
                    owner[j] = holders[pos % h];
                }
            }
            PartitionScheme::Unbalanced { fraction, seed } => {
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "unbalanced fraction must be in (0, 1], got {fraction}"
                    )));
                }
                let mut order: Vec<usize> = (0..n_atoms).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                let heavy = if h == 1 {
                    n_atoms
                } else {
                    (fraction * n_atoms as f64).floor() as usize
                };
                for (pos, j) in order.into_iter().enumerate() {
                    owner[j] = if pos < heavy {
                        holders[0]
                    } else {
                        holders[1 + (pos - heavy) % (h - 1)]
                    };
                }
            }
        }
        let part = Self { owner, n_nodes };
        if !allow_empty {
            let sizes = part.sizes();
            if let Some(&node) = holders.iter().find(|&&i| sizes[i] == 0) {
                return Err(Error::InvalidParameter(format!(
                    "node {node} received no atoms ({n_atoms} atoms over {h} holders)"
                )));
            }
        }
        Ok(part)
    }

    /// Deals atoms over every node.
    pub fn new(scheme: &PartitionScheme, n_atoms: usize, n_nodes: usize) -> Result<Self> {
        let holders: Vec<usize> = (0..n_nodes).collect();
        Self::with_holders(scheme, n_atoms, n_nodes, &holders, false)
    }

    /// Deals atoms over the nodes of `topo`. A star hub only coordinates and
    /// holds no atoms unless `hub_holds_atoms` (or it is the only node).
    pub fn for_topology(
        scheme: &PartitionScheme,
        n_atoms: usize,
        topo: &Topology,
        hub_holds_atoms: bool,
        allow_empty: bool,
    ) -> Result<Self> {
        let n = topo.n_nodes();
        let skip_hub = topo.is_star() && !hub_holds_atoms && n > 1;
        let holders: Vec<usize> = (usize::from(skip_hub)..n).collect();
        Self::with_holders(scheme, n_atoms, n, &holders, allow_empty)
    }

    /// Explicit owner list, `owner[j]` being the node holding atom `j`.
    pub fn from_owners(owner: Vec<usize>, n_nodes: usize) -> Result<Self> {
        if let Some(&node) = owner.iter().find(|&&o| o >= n_nodes) {
            return Err(Error::NodeOutOfRange {
                node,
                count: n_nodes,
            });
        }
        Ok(Self { owner, n_nodes })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_atoms(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, atom: usize) -> usize {
        self.owner[atom]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    /// Atoms held by `node`, increasing.
    pub fn local(&self, node: usize) -> Vec<usize> {
        (0..self.owner.len())
            .filter(|&j| self.owner[j] == node)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_nodes];
        for &o in &self.owner {
            sizes[o] += 1;
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::TopologyKind;

    #[test]
    fn contiguous_blocks() {
        let p = Partition::new(&PartitionScheme::Contiguous, 6, 3).unwrap();
        assert_eq!(p.local(0), vec![0, 1]);
        assert_eq!(p.local(1), vec![2, 3]);
        assert_eq!(p.local(2), vec![4, 5]);
        let p = Partition::new(&PartitionScheme::Contiguous, 7, 3).unwrap();
        assert_eq!(p.sizes(), vec![3, 2, 2]);
    }

    #[test]
    fn random_is_exact_and_seeded() {
        let s = PartitionScheme::UniformRandom { seed: 7 };
        let p = Partition::new(&s, 100, 10).unwrap();
        assert_eq!(p.sizes().iter().sum::<usize>(), 100);
        let mut all: Vec<usize> = (0..10).flat_map(|i| p.local(i)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(p, Partition::new(&s, 100, 10).unwrap());
    }

    #[test]
    fn unbalanced_floor() {
        let s = PartitionScheme::Unbalanced {
            fraction: 0.5,
            seed: 3,
        };
        let p = Partition::new(&s, 100, 10).unwrap();
        assert_eq!(p.sizes()[0], 50);
        assert!(p.sizes()[1..].iter().all(|&c| c >= 5));
    }

    #[test]
    fn too_many_nodes() {
        assert!(Partition::new(&PartitionScheme::Contiguous, 2, 3).is_err());
        let holders = [0, 1, 2];
        let p =
            Partition::with_holders(&PartitionScheme::Contiguous, 2, 3, &holders, true).unwrap();
        assert_eq!(p.sizes(), vec![1, 1, 0]);
    }

    #[test]
    fn star_hub_holds_nothing_by_default() {
        let star = Topology::build(TopologyKind::Star, 4).unwrap();
        let p =
            Partition::for_topology(&PartitionScheme::Contiguous, 9, &star, false, false).unwrap();
        assert_eq!(p.sizes(), vec![0, 3, 3, 3]);
        let p =
            Partition::for_topology(&PartitionScheme::Contiguous, 8, &star, true, false).unwrap();
        assert_eq!(p.sizes(), vec![2, 2, 2, 2]);
        let single = Topology::build(TopologyKind::Star, 1).unwrap();
        let p = Partition::for_topology(&PartitionScheme::Contiguous, 3, &single, false, false)
            .unwrap();
        assert_eq!(p.sizes(), vec![3]);
    }

    #[test]
    fn scheme_strings() {
        for s in ["contiguous", "random:7", "unbalanced:0.5:3"] {
            assert_eq!(s.parse::<PartitionScheme>().unwrap().to_string(), s);
        }
        assert!("blocks".parse::<PartitionScheme>().is_err());
    }
}
