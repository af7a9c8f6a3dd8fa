use std::collections::BTreeSet;

use serde::Serialize;

use super::cycles::{cycle_edges, primitive_cycles};
use crate::error::{Error, Result};
use crate::graph::{DisjointSets, Graph};

/// Node `center` together with its incident edges and every edge and node on
/// a primitive cycle through it of length at most `r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Neighborhood {
    pub center: usize,
    pub r: usize,
    /// Member nodes, sorted, excluding the center.
    pub nodes: Vec<usize>,
    /// Edges `(u, v)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl Neighborhood {
    /// Number of edges, `k`.
    pub fn k(&self) -> usize {
        self.edges.len()
    }
}

pub fn build_neighborhood(graph: &Graph, i: usize, r: usize) -> Result<Neighborhood> {
    let cycles = primitive_cycles(graph, i, r)?;
    let mut edges: BTreeSet<(usize, usize)> = graph
        .neighbors(i)
        .iter()
        .map(|&j| (i.min(j), i.max(j)))
        .collect();
    let mut nodes: BTreeSet<usize> = graph.neighbors(i).iter().copied().collect();
    for cycle in &cycles {
        edges.extend(cycle_edges(cycle));
        nodes.extend(cycle.iter().copied().filter(|&v| v != i));
    }
    Ok(Neighborhood {
        center: i,
        r,
        nodes: nodes.into_iter().collect(),
        edges: edges.into_iter().collect(),
    })
}

/// The part of `N_j` that `j` uses when sending to `i`: `N_j` with `i` and
/// every other node of `N_i` removed, together with their edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MessageNeighborhood {
    pub receiver: usize,
    pub sender: usize,
    /// Member nodes, sorted, excluding the sender.
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// True when some removed edge joined a retained member other than the
    /// sender to `N_i`. That only happens when a primitive cycle through the
    /// receiver is longer than `r`.
    pub overlapped: bool,
}

pub fn build_message_neighborhood(
    receiver: &Neighborhood,
    sender: &Neighborhood,
) -> MessageNeighborhood {
    let (i, j) = (receiver.center, sender.center);
    let removed = |v: usize| v != j && (v == i || receiver.nodes.binary_search(&v).is_ok());
    let nodes: Vec<usize> = sender.nodes.iter().copied().filter(|&v| !removed(v)).collect();
    let mut edges = Vec::new();
    let mut overlapped = false;
    for &(u, v) in &sender.edges {
        match (removed(u), removed(v)) {
            (false, false) => edges.push((u, v)),
            (true, false) if v != j => overlapped = true,
            (false, true) if u != j => overlapped = true,
            _ => {}
        }
    }
    debug_assert!(nodes.iter().all(|&v| v == j || !removed(v)));
    MessageNeighborhood {
        receiver: i,
        sender: j,
        nodes,
        edges,
        overlapped,
    }
}

/// An assignment of occupied/empty to a neighborhood's edges; bit `b` of
/// `mask` is edge `b` in the neighborhood's edge order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeConfiguration {
    pub mask: u64,
    pub k: usize,
}

impl EdgeConfiguration {
    pub fn new(mask: u64, k: usize) -> Result<EdgeConfiguration> {
        if k > 64 || (k < 64 && mask >> k != 0) {
            return Err(Error::InvalidParameter(format!(
                "mask {mask:#b} does not fit {k} edges"
            )));
        }
        Ok(EdgeConfiguration { mask, k })
    }

    /// Number of occupied edges, `m`.
    pub fn occupied(&self) -> u32 {
        self.mask.count_ones()
    }

    /// `p^m (1 - p)^(k - m)`.
    pub fn probability(&self, p: f64) -> f64 {
        let m = self.occupied() as i32;
        p.powi(m) * (1.0 - p).powi(self.k as i32 - m)
    }
}

/// For each member node, whether an occupied path joins it to the center.
pub fn reachability(neighborhood: &Neighborhood, config: EdgeConfiguration) -> Result<Vec<bool>> {
    if config.k != neighborhood.k() {
        return Err(Error::LengthMismatch {
            expected: neighborhood.k(),
            found: config.k,
        });
    }
    let local = LocalGraph::new(neighborhood.center, &neighborhood.nodes, &neighborhood.edges);
    let mut dsu = DisjointSets::new(local.size());
    Ok(local.reached(&mut dsu, |b| config.mask >> b & 1 == 1))
}

/// A neighborhood relabeled to local ids: the center is 0 and member `m`
/// is `m + 1`.
#[derive(Clone, Debug)]
pub(crate) struct LocalGraph {
    pub(crate) members: Vec<usize>,
    pub(crate) edges: Vec<(usize, usize)>,
}

impl LocalGraph {
    pub(crate) fn new(center: usize, members: &[usize], edges: &[(usize, usize)]) -> LocalGraph {
        let local = |v: usize| {
            if v == center {
                0
            } else {
                members.binary_search(&v).expect("edge endpoint is a member") + 1
            }
        };
        LocalGraph {
            members: members.to_vec(),
            edges: edges.iter().map(|&(u, v)| (local(u), local(v))).collect(),
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.members.len() + 1
    }

    /// Union-find over the edges for which `occupied(edge_index)` holds.
    pub(crate) fn reached(&self, dsu: &mut DisjointSets, occupied: impl Fn(usize) -> bool) -> Vec<bool> {
        dsu.reset();
        for (b, &(u, v)) in self.edges.iter().enumerate() {
            if occupied(b) {
                dsu.union(u, v);
            }
        }
        let root = dsu.find(0);
        (1..self.size()).map(|m| dsu.find(m) == root).collect()
    }
}
