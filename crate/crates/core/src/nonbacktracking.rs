//! Directed-edge indexing and the non-backtracking (Hashimoto) operator.
//!
//! Directed edge `e = (i <- j)` is identified with the position of `j` in the
//! adjacency list of `i`. The messages received by node `i` therefore occupy
//! the contiguous range `offsets[i]..offsets[i + 1]`, and the successors of
//! `e` are all messages received by `j` except the one coming from `i`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::exec::{map_blocks_mut, Execution};
use crate::graph::Graph;

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
pub const DEFAULT_EIGEN_MAX_ITER: usize = 100_000;

const BLOCK: usize = 4096;

#[derive(Clone, Debug)]
pub struct HalfEdgeIndex {
    offsets: Vec<usize>,
    senders: Vec<usize>,
    receivers: Vec<usize>,
    reverse: Vec<usize>,
}

impl HalfEdgeIndex {
    pub fn new(graph: &Graph) -> HalfEdgeIndex {
        let offsets = graph.offsets().to_vec();
        let senders = graph.targets().to_vec();
        let mut receivers = vec![0; senders.len()];
        for i in 0..graph.n() {
            receivers[offsets[i]..offsets[i + 1]].fill(i);
        }
        let reverse = (0..senders.len())
            .map(|e| {
                let (i, j) = (receivers[e], senders[e]);
                let pos = graph
                    .neighbors(j)
                    .binary_search(&i)
                    .expect("adjacency is symmetric");
                offsets[j] + pos
            })
            .collect();
        HalfEdgeIndex {
            offsets,
            senders,
            receivers,
            reverse,
        }
    }

    /// Number of directed edges, `2m`.
    pub fn len(&self) -> usize {
        self.senders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.senders.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn receiver(&self, e: usize) -> usize {
        self.receivers[e]
    }

    pub fn sender(&self, e: usize) -> usize {
        self.senders[e]
    }

    pub fn reverse(&self, e: usize) -> usize {
        self.reverse[e]
    }

    /// Directed edges whose receiver is `node`.
    pub fn incoming(&self, node: usize) -> Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    /// Non-backtracking successors of `e = (i <- j)`: every `(j <- k)` with `k != i`.
    pub fn successors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let skip = self.reverse[e];
        self.incoming(self.senders[e]).filter(move |&f| f != skip)
    }

    /// `out = B v`.
    pub fn apply(&self, v: &[f64], exec: Execution) -> Result<Vec<f64>> {
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out, exec)?;
        Ok(out)
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64], exec: Execution) -> Result<()> {
        for len in [v.len(), out.len()] {
            if len != self.len() {
                return Err(Error::LengthMismatch {
                    expected: self.len(),
                    found: len,
                });
            }
        }
        map_blocks_mut(exec, out, BLOCK, |offset, chunk| {
            for (k, slot) in chunk.iter_mut().enumerate() {
                *slot = self.successors(offset + k).map(|f| v[f]).sum();
            }
        });
        Ok(())
    }

    /// Leading eigenvalue of `B`.
    ///
    /// Forests have a nilpotent `B` and return 0 directly. Otherwise power
    /// iteration runs on `B + I` from the all-ones vector with L1
    /// normalization; the shift removes the periodicity that bipartite graphs
    /// and plain cycles would otherwise cause. Because `B` is nonnegative the
    /// L1 norm of `(B + I) x` for unit `x` converges to `lambda + 1`.
    pub fn leading_eigenvalue(&self, tol: f64, max_iter: usize, exec: Execution) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::NoEdges);
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol = {tol} must be positive")));
        }
        if self.is_forest() {
            return Ok(0.0);
        }
        let len = self.len();
        let mut x = vec![1.0 / len as f64; len];
        let mut y = vec![0.0; len];
        let mut estimate = f64::NAN;
        for _ in 0..max_iter {
            self.apply_into(&x, &mut y, exec)?;
            let mut norm = 0.0;
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi += xi;
                norm += *yi;
            }
            if norm == 0.0 {
                return Ok(0.0);
            }
            for yi in y.iter_mut() {
                *yi /= norm;
            }
            std::mem::swap(&mut x, &mut y);
            let next = norm - 1.0;
            if (next - estimate).abs() < tol {
                return Ok(next.max(0.0));
            }
            estimate = next;
        }
        Err(Error::NotConverged {
            iterations: max_iter,
            estimate,
        })
    }

    fn is_forest(&self) -> bool {
        let n = self.node_count();
        let mut dsu = crate::graph::DisjointSets::new(n);
        (0..self.len())
            .filter(|&e| self.receivers[e] < self.senders[e])
            .all(|e| dsu.union(self.receivers[e], self.senders[e]))
    }
}

/// `B v` for the graph's non-backtracking matrix.
pub fn nb_apply(index: &HalfEdgeIndex, v: &[f64]) -> Result<Vec<f64>> {
    index.apply(v, Execution::default())
}

/// Leading eigenvalue of the non-backtracking matrix with default tolerances.
pub fn nb_leading_eigenvalue(graph: &Graph) -> Result<f64> {
    HalfEdgeIndex::new(graph).leading_eigenvalue(
        DEFAULT_EIGEN_TOL,
        DEFAULT_EIGEN_MAX_ITER,
        Execution::default(),
    )
}
