use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Clusters;
use crate::error::{check_probability, Error, Result};
use crate::exec::{map_range, Execution};
use crate::graph::Graph;

/// Outcome of repeated bond-percolation draws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimStats {
    /// Fraction of draws in which each node belonged to the largest cluster.
    pub frequencies: Vec<f64>,
    /// Mean fraction of nodes in the largest cluster.
    pub mean_s: f64,
    /// Sample standard deviation of that fraction over `sqrt(reps)`; zero
    /// for a single draw.
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Direct simulation of bond percolation. Draw `k` uses its own ChaCha
/// stream `k` under `seed`, so results do not depend on the thread count.
pub fn percolation_sim(graph: &Graph, p: f64, reps: usize, seed: u64) -> Result<SimStats> {
    percolation_sim_with(graph, p, reps, seed, Execution::default())
}

pub fn percolation_sim_with(
    graph: &Graph,
    p: f64,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<SimStats> {
    check_probability("p", p)?;
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let n = graph.n();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let draws = map_range(exec, reps, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut clusters = Clusters::new(n);
        for &(u, v) in &edges {
            if rng.random::<f64>() < p {
                clusters.join(u, v);
            }
        }
        clusters.largest_members()
    });

    let mut counts = vec![0u64; n];
    let mut sizes = Vec::with_capacity(reps);
    for members in &draws {
        let mut size = 0u64;
        for (c, &m) in counts.iter_mut().zip(members) {
            if m {
                *c += 1;
                size += 1;
            }
        }
        sizes.push(size as f64 / n as f64);
    }
    let mean_s = sizes.iter().sum::<f64>() / reps as f64;
    let std_error = if reps > 1 {
        let var = sizes.iter().map(|s| (s - mean_s).powi(2)).sum::<f64>() / (reps - 1) as f64;
        (var / reps as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimStats {
        frequencies: counts.iter().map(|&c| c as f64 / reps as f64).collect(),
        mean_s,
        std_error,
        reps,
        seed,
    })
}
