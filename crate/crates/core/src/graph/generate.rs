//! Seeded random graph generators. The same seed always yields the same graph.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{check_probability, Error, Result};

const MAX_PAIRING_ATTEMPTS: usize = 10_000;

/// A graph together with the group label each node was generated from.
#[derive(Clone, Debug)]
pub struct PlantedGraph {
    pub graph: Graph,
    pub labels: Vec<usize>,
}

/// Erdős–Rényi graph: each of the `n(n-1)/2` pairs is an edge independently
/// with probability `p`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    check_probability("p", p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let mut edges = Vec::new();
    sample_pair_indices(total, p, &mut rng, |k| edges.push(triangular_pair(k)));
    Graph::new(n, edges.into_iter().map(|(a, b)| (a as usize, b as usize)))
}

/// Uniform random `d`-regular simple graph by stub pairing; any pairing that
/// produces a self-loop or multi-edge is discarded and redrawn from scratch.
pub fn generate_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d >= n.max(1) && !(n == 0 && d == 0) {
        return Err(Error::InvalidParameter(format!(
            "degree {d} must be smaller than the node count {n}"
        )));
    }
    if (n * d) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "n * d = {} must be even",
            n * d
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, d)).collect();
    for _ in 0..MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut rng);
        if let Some(edges) = simple_pairing(&stubs, |_, _| false) {
            return Graph::new(n, edges);
        }
    }
    Err(Error::GenerationFailed(format!(
        "no simple {d}-regular pairing found in {MAX_PAIRING_ATTEMPTS} attempts"
    )))
}

/// Stochastic block model. Node labels are drawn independently from
/// `priors`; nodes in groups `r` and `s` are joined with probability
/// `omega[r][s]`.
pub fn generate_sbm(
    n: usize,
    priors: &[f64],
    omega: &[Vec<f64>],
    seed: u64,
) -> Result<PlantedGraph> {
    validate_block_model(priors, omega)?;
    let q = priors.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(q);
    let mut acc = 0.0;
    for &p in priors {
        acc += p;
        cumulative.push(acc);
    }
    let last_nonzero = priors.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(last_nonzero)
        })
        .collect();

    let mut members = vec![Vec::new(); q];
    for (i, &g) in labels.iter().enumerate() {
        members[g].push(i);
    }
    let mut edges = Vec::new();
    for r in 0..q {
        for s in r..q {
            let p = omega[r][s];
            if r == s {
                let a = &members[r];
                let total = (a.len() as u64) * (a.len() as u64).saturating_sub(1) / 2;
                sample_pair_indices(total, p, &mut rng, |k| {
                    let (x, y) = triangular_pair(k);
                    edges.push((a[x as usize], a[y as usize]));
                });
            } else {
                let (a, b) = (&members[r], &members[s]);
                let total = (a.len() as u64) * (b.len() as u64);
                let width = b.len() as u64;
                sample_pair_indices(total, p, &mut rng, |k| {
                    edges.push((a[(k / width) as usize], b[(k % width) as usize]));
                });
            }
        }
    }
    Ok(PlantedGraph {
        graph: Graph::new(n, edges)?,
        labels,
    })
}

/// Random recursive tree: node `v > 0` attaches to a uniformly chosen `u < v`.
pub fn generate_random_tree(n: usize, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    Graph::new(n, edges)
}

/// Graph in which every node belongs to exactly one triangle and carries
/// `single_degree` further edges to random partners.
///
/// Triangles come from a random partition of the nodes into triples; the
/// single edges come from stub pairing, redrawn from scratch whenever a
/// pairing creates a self-loop, a multi-edge, or duplicates a triangle edge.
/// Away from the triangles the graph is locally tree-like, which makes it a
/// convenient test bed for message passing with short loops.
pub fn generate_triangle_regular(n: usize, single_degree: usize, seed: u64) -> Result<Graph> {
    if n % 3 != 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "node count {n} must be a positive multiple of 3"
        )));
    }
    if (n * single_degree) % 2 != 0 || single_degree + 3 > n {
        return Err(Error::InvalidParameter(format!(
            "cannot attach {single_degree} single edges to each of {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut triangle_of = vec![0usize; n];
    let mut edges = Vec::with_capacity(n + n * single_degree / 2);
    for (t, tri) in order.chunks(3).enumerate() {
        for &v in tri {
            triangle_of[v] = t;
        }
        edges.extend([(tri[0], tri[1]), (tri[1], tri[2]), (tri[0], tri[2])]);
    }
    let mut stubs: Vec<usize> = (0..n)
        .flat_map(|i| std::iter::repeat_n(i, single_degree))
        .collect();
    for _ in 0..MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut rng);
        if let Some(singles) = simple_pairing(&stubs, |u, v| triangle_of[u] == triangle_of[v]) {
            edges.extend(singles);
            return Graph::new(n, edges);
        }
    }
    Err(Error::GenerationFailed(format!(
        "no valid single-edge pairing found in {MAX_PAIRING_ATTEMPTS} attempts"
    )))
}

pub(crate) fn validate_block_model(priors: &[f64], omega: &[Vec<f64>]) -> Result<()> {
    let q = priors.len();
    if q == 0 {
        return Err(Error::InvalidParameter("at least one group is required".into()));
    }
    if priors.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidParameter("priors must lie in [0, 1]".into()));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "priors sum to {total}, not 1"
        )));
    }
    if omega.len() != q || omega.iter().any(|row| row.len() != q) {
        return Err(Error::InvalidParameter(format!("omega must be {q}x{q}")));
    }
    for r in 0..q {
        for s in 0..q {
            check_probability("omega entry", omega[r][s])?;
            if (omega[r][s] - omega[s][r]).abs() > 1e-12 {
                return Err(Error::InvalidParameter("omega must be symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Pairs consecutive stubs. Returns `None` if any pair is a self-loop, a
/// repeat, or is rejected by `forbidden`.
fn simple_pairing(
    stubs: &[usize],
    forbidden: impl Fn(usize, usize) -> bool,
) -> Option<Vec<(usize, usize)>> {
    let mut pairs: Vec<(usize, usize)> = stubs
        .chunks_exact(2)
        .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
        .collect();
    if pairs.iter().any(|&(u, v)| u == v || forbidden(u, v)) {
        return None;
    }
    pairs.sort_unstable();
    if pairs.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(pairs)
}

/// Visits each index in `0..total` independently with probability `p`, using
/// geometric skips so the cost is proportional to the number of hits.
fn sample_pair_indices(total: u64, p: f64, rng: &mut ChaCha8Rng, mut visit: impl FnMut(u64)) {
    if total == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        (0..total).for_each(visit);
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut k: u64 = 0;
    let mut first = true;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor().min(u64::MAX as f64 / 4.0) as u64;
        k = if first { skip } else { k.saturating_add(1 + skip) };
        first = false;
        if k >= total {
            return;
        }
        visit(k);
    }
}

/// Maps a linear index over `{(a, b) : b < a}` (row-major in `a`) to the pair.
fn triangular_pair(k: u64) -> (u64, u64) {
    let mut a = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0) as u64;
    while a * (a.saturating_sub(1)) / 2 > k {
        a -= 1;
    }
    while (a + 1) * a / 2 <= k {
        a += 1;
    }
    (a, k - a * (a - 1) / 2)
}
