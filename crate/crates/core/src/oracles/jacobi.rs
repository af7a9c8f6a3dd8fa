use crate::error::{Error, Result};
use crate::exec::{map_blocks_mut, Execution};
use crate::graph::Graph;

pub const MAX_DENSE_NODES: usize = 2000;
const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-10;

/// All adjacency eigenvalues, ascending, by cyclic Jacobi rotation.
///
/// Each sweep visits every pair `(p, q)` once in round-robin order, so the
/// `n / 2` rotations of a round touch disjoint rows and columns and are
/// applied together. Iteration stops when the off-diagonal Frobenius norm
/// drops below `1e-10` times the norm of the matrix.
pub fn dense_spectrum(graph: &Graph) -> Result<Vec<f64>> {
    dense_spectrum_with(graph, Execution::default())
}

pub fn dense_spectrum_with(graph: &Graph, exec: Execution) -> Result<Vec<f64>> {
    let n = graph.n();
    if n > MAX_DENSE_NODES {
        return Err(Error::CapExceeded {
            what: "nodes for dense diagonalization".into(),
            limit: MAX_DENSE_NODES,
            found: n,
        });
    }
    let mut a = vec![0.0; n * n];
    for (u, v) in graph.edges() {
        a[u * n + v] = 1.0;
        a[v * n + u] = 1.0;
    }
    let norm = (2.0 * graph.m() as f64).sqrt();
    let skip = 1e-3 * OFF_DIAGONAL_TOL * norm / n.max(1) as f64;
    let players = n + n % 2;
    let mut seats: Vec<usize> = (0..players).collect();

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal(&a, n);
        if off <= OFF_DIAGONAL_TOL * norm {
            let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for _ in 1..players {
            let rotations: Vec<(usize, usize, f64, f64)> = (0..players / 2)
                .map(|k| (seats[k], seats[players - 1 - k]))
                .filter(|&(p, q)| p < n && q < n)
                .filter_map(|(p, q)| {
                    let (p, q) = (p.min(q), p.max(q));
                    let apq = a[p * n + q];
                    if apq.abs() <= skip {
                        return None;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    Some((p, q, c, t * c))
                })
                .collect();
            if !rotations.is_empty() {
                rotate(&mut a, n, &rotations, exec);
            }
            seats[1..].rotate_right(1);
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_SWEEPS,
        estimate: off_diagonal(&a, n) / norm,
    })
}

fn off_diagonal(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// `A <- J^T A J` for a set of rotations on disjoint index pairs.
fn rotate(a: &mut [f64], n: usize, rotations: &[(usize, usize, f64, f64)], exec: Execution) {
    map_blocks_mut(exec, a, n, |_, row| {
        for &(p, q, c, s) in rotations {
            let (x, y) = (row[p], row[q]);
            row[p] = c * x - s * y;
            row[q] = s * x + c * y;
        }
    });
    let mut rows: Vec<Option<&mut [f64]>> = a.chunks_mut(n).map(Some).collect();
    let mut pairs: Vec<(&mut [f64], &mut [f64], f64, f64)> = rotations
        .iter()
        .map(|&(p, q, c, s)| (rows[p].take().unwrap(), rows[q].take().unwrap(), c, s))
        .collect();
    map_blocks_mut(exec, &mut pairs, 1, |_, chunk| {
        let (rp, rq, c, s) = &mut chunk[0];
        for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
            let (u, v) = (*x, *y);
            *x = *c * u - *s * v;
            *y = *s * u + *c * v;
        }
    });
    for &(p, q, _, _) in rotations {
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
    }
}

/// Normalized histogram of `values` over `bins` bins of width `width`
/// starting at `start`: bin `k` covers `[start + k width, start + (k + 1) width)`
/// and holds `count / (len(values) width)`.
pub fn histogram_density(values: &[f64], start: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = ((v - start) / width).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    let scale = 1.0 / (values.len().max(1) as f64 * width);
    counts.iter().map(|&c| c as f64 * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn small_spectra() {
        let edge = Graph::new(2, [(0, 1)]).unwrap();
        assert!(close(&dense_spectrum(&edge).unwrap(), &[-1.0, 1.0]));
        let tri = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(close(&dense_spectrum(&tri).unwrap(), &[-1.0, -1.0, 2.0]));
        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let r3 = 3f64.sqrt();
        assert!(close(&dense_spectrum(&star).unwrap(), &[-r3, 0.0, 0.0, r3]));
        assert!(dense_spectrum(&Graph::empty(0)).unwrap().is_empty());
    }

    #[test]
    fn cycle_spectrum() {
        let n = 9;
        let c = Graph::new(n, (0..n).map(|k| (k, (k + 1) % n))).unwrap();
        let mut want: Vec<f64> = (0..n)
            .map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        assert!(close(&dense_spectrum(&c).unwrap(), &want));
    }

    #[test]
    fn histogram_normalizes() {
        let h = histogram_density(&[0.05, 0.15, 0.15, 0.95, 2.0], 0.0, 0.1, 10);
        assert!((h[1] - 4.0).abs() < 1e-12);
        assert!((h.iter().sum::<f64>() * 0.1 - 0.8).abs() < 1e-12);
    }
}
