use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the communication graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    /// Hub `0` connected to leaves `1..N`.
    Star,
    /// Complete `branching`-ary tree rooted at `0`, nodes in breadth-first order.
    RootedTree {
        branching: usize,
    },
    /// Connected Erdős–Rényi graph, resampled until connected.
    General {
        seed: u64,
    },
    FullyConnected,
}

/// Parsed form of the `star:N`, `tree:B:N`, `general:N:SEED`, `full:N` strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub nodes: usize,
}

impl FromStr for TopologySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| -> Result<u64> {
            p.parse()
                .map_err(|_| Error::InvalidParameter(format!("bad number {p:?} in topology {s:?}")))
        };
        let (kind, nodes) = match parts.as_slice() {
            ["star", n] => (TopologyKind::Star, num(n)?),
            ["tree", b, n] => (
                TopologyKind::RootedTree {
                    branching: num(b)? as usize,
                },
                num(n)?,
            ),
            ["general", n, seed] => (TopologyKind::General { seed: num(seed)? }, num(n)?),
            ["full", n] => (TopologyKind::FullyConnected, num(n)?),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown topology {s:?}; expected star:N, tree:B:N, general:N:SEED or full:N"
                )))
            }
        };
        Ok(Self {
            kind,
            nodes: nodes as usize,
        })
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TopologyKind::Star => write!(f, "star:{}", self.nodes),
            TopologyKind::RootedTree { branching } => write!(f, "tree:{branching}:{}", self.nodes),
            TopologyKind::General { seed } => write!(f, "general:{}:{seed}", self.nodes),
            TopologyKind::FullyConnected => write!(f, "full:{}", self.nodes),
        }
    }
}

/// An undirected connected graph over nodes `0..N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    kind: TopologyKind,
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    /// Parent in the spanning tree rooted at node 0 (BFS tree for general graphs).
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl Topology {
    pub fn build(kind: TopologyKind, n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidParameter(
                "a topology needs at least one node".into(),
            ));
        }
        let edges = match &kind {
            TopologyKind::Star => (1..n_nodes).map(|i| (0, i)).collect(),
            TopologyKind::RootedTree { branching } => {
                if *branching == 0 {
                    return Err(Error::InvalidParameter(
                        "tree branching must be at least 1".into(),
                    ));
                }
                (1..n_nodes).map(|i| ((i - 1) / branching, i)).collect()
            }
            TopologyKind::FullyConnected => (0..n_nodes)
                .flat_map(|i| ((i + 1)..n_nodes).map(move |j| (i, j)))
                .collect(),
            TopologyKind::General { seed } => random_connected(n_nodes, *seed),
        };
        let (parent, depth) = bfs_tree(n_nodes, &edges);
        if depth.contains(&usize::MAX) {
            return Err(Error::InvalidParameter("topology is not connected".into()));
        }
        Ok(Self {
            kind,
            n_nodes,
            edges,
            parent,
            depth,
        })
    }

    pub fn from_spec(spec: &TopologySpec) -> Result<Self> {
        Self::build(spec.kind.clone(), spec.nodes)
    }

    pub fn kind(&self) -> &TopologyKind {
        &self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Hops from node 0 along the spanning tree.
    pub fn depth(&self, node: usize) -> usize {
        self.depth[node]
    }

    /// Node that coordinates reductions: the star hub, the tree root, or node 0.
    pub fn coordinator(&self) -> usize {
        0
    }

    pub fn is_star(&self) -> bool {
        self.kind == TopologyKind::Star
    }

    pub(crate) fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes {
            return Err(Error::NodeOutOfRange {
                node,
                count: self.n_nodes,
            });
        }
        Ok(())
    }
}

fn bfs_tree(n: usize, edges: &[(usize, usize)]) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }
    let mut parent = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    depth[0] = 0;
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    (parent, depth)
}

fn random_connected(n: usize, seed: u64) -> Vec<(usize, usize)> {
    if n == 1 {
        return Vec::new();
    }
    let p = (2.0 * (n as f64).ln() / n as f64).clamp(0.3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(p))
            .collect();
        let (_, depth) = bfs_tree(n, &edges);
        if depth.iter().all(|d| *d != usize::MAX) {
            return edges;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_of_four() {
        let t = Topology::build(TopologyKind::Star, 4).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(t.n_edges(), 3);
    }

    #[test]
    fn binary_tree_of_seven() {
        let t = Topology::build(TopologyKind::RootedTree { branching: 2 }, 7).unwrap();
        assert_eq!(t.n_edges(), 6);
        assert_eq!((0..7).map(|i| t.depth(i)).max(), Some(2));
        assert_eq!(t.parent(6), Some(2));
    }

    #[test]
    fn general_is_connected_and_seeded() {
        let a = Topology::build(TopologyKind::General { seed: 7 }, 5).unwrap();
        let b = Topology::build(TopologyKind::General { seed: 7 }, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.n_edges() >= 4);
    }

    #[test]
    fn full_graph_edges() {
        let t = Topology::build(TopologyKind::FullyConnected, 5).unwrap();
        assert_eq!(t.n_edges(), 10);
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(Topology::build(TopologyKind::Star, 0).is_err());
    }

    #[test]
    fn spec_strings() {
        for s in ["star:4", "tree:2:7", "general:5:7", "full:4"] {
            let spec: TopologySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("ring:4".parse::<TopologySpec>().is_err());
        assert!("star:x".parse::<TopologySpec>().is_err());
    }
}
