//! Brute-force reference computations.
//!
//! Nothing here calls into the message-passing modules: every quantity is
//! recomputed from the raw adjacency structure by simulation or exhaustive
//! enumeration, so agreement with message passing is independent evidence.

mod enumerate;
mod jacobi;
mod sim;

pub use enumerate::{
    brute_percolation_enumerate, ising_enumerate, sbm_posterior_enumerate, tree_percolation_dp,
    BruteEnumeration, IsingEnumeration, MAX_BRUTE_EDGES, MAX_ISING_NODES, MAX_SBM_ASSIGNMENTS,
};
pub use jacobi::{dense_spectrum, dense_spectrum_with, histogram_density, MAX_DENSE_NODES};
pub use sim::{percolation_sim, percolation_sim_with, SimStats};

/// Plain union-find used by the oracles.
struct Clusters {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Clusters {
    fn new(n: usize) -> Clusters {
        Clusters {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn root(&mut self, mut x: usize) -> usize {
        let mut top = x;
        while self.parent[top] != top {
            top = self.parent[top];
        }
        while self.parent[x] != top {
            let next = self.parent[x];
            self.parent[x] = top;
            x = next;
        }
        top
    }

    fn join(&mut self, a: usize, b: usize) {
        let (a, b) = (self.root(a), self.root(b));
        if a != b {
            let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
            self.parent[small] = big;
            self.size[big] += self.size[small];
        }
    }

    /// Membership in the largest cluster, ties going to the cluster of the
    /// smallest node. A largest cluster of a single node has no members.
    fn largest_members(&mut self) -> Vec<bool> {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).map(|v| self.root(v)).collect();
        let best = (0..n).map(|v| self.size[roots[v]]).max().unwrap_or(0);
        if best < 2 {
            return vec![false; n];
        }
        let chosen = roots[(0..n).find(|&v| self.size[roots[v]] == best).unwrap()];
        roots.iter().map(|&r| r == chosen).collect()
    }
}
