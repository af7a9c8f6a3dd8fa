//! Immutable sparse undirected graphs in compressed adjacency layout.

mod generate;
mod io;

pub(crate) use generate::validate_block_model;
pub use generate::{
    generate_er, generate_random_tree, generate_regular, generate_sbm,
    generate_triangle_regular, PlantedGraph,
};
pub use io::{parse_edge_list, read_edge_list, LoadStats};

use crate::error::{Error, Result};

/// A simple undirected graph on nodes `0..n`.
///
/// Neighbor lists are sorted and stored contiguously: the neighbors of node
/// `i` are `targets[offsets[i]..offsets[i + 1]]`. There are no self-loops and
/// no duplicate edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph on `n` nodes. Self-loops and duplicate edges (in either
    /// orientation) are dropped.
    pub fn new<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Graph::with_stats(n, edges).map(|(g, _)| g)
    }

    /// Like [`Graph::new`], also reporting how many self-loops and duplicate
    /// edges were dropped.
    pub fn with_stats<I>(n: usize, edges: I) -> Result<(Graph, LoadStats)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut stats = LoadStats::default();
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a node outside 0..{n}"
                )));
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            pairs.push((u.min(v), u.max(v)));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        stats.duplicates = before - pairs.len();

        let mut degree = vec![0usize; n];
        for &(u, v) in &pairs {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0usize; 2 * pairs.len()];
        for &(u, v) in &pairs {
            targets[cursor[u]] = v;
            cursor[u] += 1;
            targets[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok((Graph { offsets, targets }, stats))
    }

    pub fn empty(n: usize) -> Graph {
        Graph {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Returns the graph with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                found: perm.len(),
            });
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
            }
        }
        Graph::new(self.n(), self.edges().map(|(u, v)| (perm[u], perm[v])))
    }

    /// Connected components, labeled in order of their smallest node.
    pub fn components(&self) -> Components {
        let n = self.n();
        let mut dsu = DisjointSets::new(n);
        for (u, v) in self.edges() {
            dsu.union(u, v);
        }
        let mut root_label = vec![usize::MAX; n];
        let mut labels = vec![0; n];
        let mut sizes = Vec::new();
        for i in 0..n {
            let root = dsu.find(i);
            if root_label[root] == usize::MAX {
                root_label[root] = sizes.len();
                sizes.push(0);
            }
            labels[i] = root_label[root];
            sizes[labels[i]] += 1;
        }
        // Labels follow smallest-node order, so the first maximum wins ties.
        let largest = sizes
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, usize)>, (c, &s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((c, s)),
            })
            .map(|(c, _)| c);
        Components {
            labels,
            sizes,
            largest,
        }
    }

    /// True when the graph has no cycles.
    pub fn is_forest(&self) -> bool {
        self.m() + self.components().sizes.len() == self.n()
    }

    /// Canonical edge-list text: one `u v` line per edge, `u < v`, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.m() * 12);
        for (u, v) in self.edges() {
            out.push_str(&u.to_string());
            out.push(' ');
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Result of [`Graph::components`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    /// Component label per node; component `c` is the one whose smallest
    /// node is the `c`-th smallest among component minima.
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Largest component, ties broken toward the smallest contained node id.
    /// `None` only for the empty graph.
    pub largest: Option<usize>,
}

impl Components {
    pub fn in_largest(&self) -> Vec<bool> {
        match self.largest {
            Some(c) => self.labels.iter().map(|&l| l == c).collect(),
            None => Vec::new(),
        }
    }
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub(crate) fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.size.fill(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn basic_accessors() {
        let g = path3();
        assert_eq!((g.n(), g.m()), (3, 2));
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(g.has_edge(2, 1));
        assert!(!g.has_edge(0, 2));
        let degree_sum: usize = (0..g.n()).map(|i| g.degree(i)).sum();
        assert_eq!(degree_sum, 2 * g.m());
    }

    #[test]
    fn drops_loops_and_duplicates() {
        let (g, stats) = Graph::with_stats(3, [(0, 1), (1, 0), (2, 2), (0, 1)]).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(stats.self_loops, 1);
        assert_eq!(stats.duplicates, 2);
    }

    #[test]
    fn out_of_range_endpoint_is_rejected() {
        assert!(Graph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn components_of_path() {
        let c = path3().components();
        assert_eq!(c.sizes, vec![3]);
        assert_eq!(c.largest, Some(0));
    }

    #[test]
    fn components_tie_breaks_to_smallest_node() {
        let g = Graph::new(4, [(2, 3), (0, 1)]).unwrap();
        let c = g.components();
        assert_eq!(c.sizes, vec![2, 2]);
        assert_eq!(c.labels[0], c.largest.unwrap());
        assert_eq!(c.in_largest(), vec![true, true, false, false]);
    }

    #[test]
    fn triangle_plus_isolated() {
        let g = Graph::new(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = g.components();
        let mut sizes = c.sizes.clone();
        sizes.sort();
        assert_eq!(sizes, vec![1, 3]);
        assert!(!g.is_forest());
        assert!(path3().is_forest());
    }

    #[test]
    fn empty_graph_components() {
        let c = Graph::empty(0).components();
        assert!(c.sizes.is_empty());
        assert_eq!(c.largest, None);
    }

    #[test]
    fn relabel_preserves_structure() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let h = g.relabel(&[3, 2, 1, 0]).unwrap();
        assert_eq!(h.to_edge_list(), "0 1\n1 2\n2 3\n");
        assert!(g.relabel(&[0, 0, 1, 2]).is_err());
    }
}
