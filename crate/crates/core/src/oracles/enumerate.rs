use std::collections::VecDeque;

use serde::Serialize;

use super::Clusters;
use crate::error::{check_probability, Error, Result};
use crate::graph::{validate_block_model, Graph};

pub const MAX_ISING_NODES: usize = 20;
pub const MAX_BRUTE_EDGES: usize = 20;
pub const MAX_SBM_ASSIGNMENTS: usize = 1_000_000;

/// Per-node probability of lying outside the giant cluster on a forest,
/// from one upward and one downward pass over each tree.
pub fn tree_percolation_dp(graph: &Graph, p: f64) -> Result<Vec<f64>> {
    check_probability("p", p)?;
    let n = graph.n();
    let mut clusters = Clusters::new(n);
    for (u, v) in graph.edges() {
        if clusters.root(u) == clusters.root(v) {
            return Err(Error::NotAForest);
        }
        clusters.join(u, v);
    }

    let factor = |x: f64| 1.0 - p + p * x;
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in graph.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
    }

    // up[v]: what v tells its parent. down[v]: what the parent tells v.
    let mut up = vec![1.0; n];
    for &v in order.iter().rev() {
        up[v] = graph
            .neighbors(v)
            .iter()
            .filter(|&&w| w != parent[v])
            .map(|&w| factor(up[w]))
            .product();
    }
    let mut down = vec![1.0; n];
    for &v in &order {
        let nbrs = graph.neighbors(v);
        let incoming: Vec<f64> = nbrs
            .iter()
            .map(|&w| if w == parent[v] { down[v] } else { up[w] })
            .map(factor)
            .collect();
        let mut prefix = vec![1.0; nbrs.len() + 1];
        for k in 0..nbrs.len() {
            prefix[k + 1] = prefix[k] * incoming[k];
        }
        let mut suffix = 1.0;
        for k in (0..nbrs.len()).rev() {
            let w = nbrs[k];
            if w != parent[v] {
                down[w] = prefix[k] * suffix;
            }
            suffix *= incoming[k];
        }
    }
    Ok((0..n)
        .map(|v| {
            graph
                .neighbors(v)
                .iter()
                .map(|&w| factor(if w == parent[v] { down[v] } else { up[w] }))
                .product()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsingEnumeration {
    pub z: f64,
    pub log_z: f64,
    /// `(P[s = +1], P[s = -1])` per node.
    pub marginals: Vec<[f64; 2]>,
}

/// Exact partition function and marginals of the zero-field Ising model
/// `H = -sum_edges s_i s_j` by summing all `2^n` states.
pub fn ising_enumerate(graph: &Graph, beta: f64) -> Result<IsingEnumeration> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} must be finite and nonnegative"
        )));
    }
    let n = graph.n();
    if n > MAX_ISING_NODES {
        return Err(Error::CapExceeded {
            what: "nodes for Ising enumeration".into(),
            limit: MAX_ISING_NODES,
            found: n,
        });
    }
    let m = graph.m();
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    // A state with d unequal edges has energy 2d - m; weights are taken
    // relative to the ground state.
    let relative: Vec<f64> = (0..=m).map(|d| (-2.0 * beta * d as f64).exp()).collect();
    let mut total = 0.0;
    let mut up = vec![0.0; n];
    for state in 0u32..(1u32 << n) {
        let unequal = edges
            .iter()
            .filter(|&&(u, v)| (state >> u ^ state >> v) & 1 == 1)
            .count();
        let w = relative[unequal];
        total += w;
        for (i, acc) in up.iter_mut().enumerate() {
            if state >> i & 1 == 0 {
                *acc += w;
            }
        }
    }
    let log_z = beta * m as f64 + total.ln();
    Ok(IsingEnumeration {
        z: log_z.exp(),
        log_z,
        marginals: up
            .iter()
            .map(|&u| {
                let plus = u / total;
                [plus, 1.0 - plus]
            })
            .collect(),
    })
}

/// Exact posterior group marginals of the stochastic block model given the
/// observed graph, summing over all `q^n` assignments:
///
/// ```text
/// P[g | A] ∝ prod_i pi_{g_i} prod_{i<j} omega_{g_i g_j}^A_ij (1 - omega_{g_i g_j})^(1 - A_ij)
/// ```
pub fn sbm_posterior_enumerate(
    graph: &Graph,
    priors: &[f64],
    omega: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    validate_block_model(priors, omega)?;
    let (n, q) = (graph.n(), priors.len());
    let count = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(q).filter(|&c| c <= MAX_SBM_ASSIGNMENTS));
    let Some(count) = count else {
        return Err(Error::CapExceeded {
            what: "assignments for block-model enumeration".into(),
            limit: MAX_SBM_ASSIGNMENTS,
            found: (q as f64).powi(n as i32).min(usize::MAX as f64) as usize,
        });
    };
    let log_prior: Vec<f64> = priors.iter().map(|x| x.ln()).collect();
    let log_edge: Vec<Vec<f64>> = omega.iter().map(|row| row.iter().map(|x| x.ln()).collect()).collect();
    let log_gap: Vec<Vec<f64>> = omega
        .iter()
        .map(|row| row.iter().map(|x| (1.0 - x).ln()).collect())
        .collect();

    let mut groups = vec![0usize; n];
    let mut logs = Vec::with_capacity(count);
    for a in 0..count {
        let mut code = a;
        for g in groups.iter_mut() {
            *g = code % q;
            code /= q;
        }
        let mut lw: f64 = groups.iter().map(|&g| log_prior[g]).sum();
        for i in 0..n {
            for j in i + 1..n {
                let (r, s) = (groups[i], groups[j]);
                lw += if graph.has_edge(i, j) { log_edge[r][s] } else { log_gap[r][s] };
            }
        }
        logs.push(lw);
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::NumericDomain {
            index: 0,
            message: "every assignment has zero likelihood".into(),
        });
    }
    let mut marginals = vec![vec![0.0; q]; n];
    let mut total = 0.0;
    for (a, lw) in logs.iter().enumerate() {
        let w = (lw - top).exp();
        total += w;
        let mut code = a;
        for row in marginals.iter_mut() {
            row[code % q] += w;
            code /= q;
        }
    }
    for row in marginals.iter_mut() {
        row.iter_mut().for_each(|x| *x /= total);
    }
    Ok(marginals)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteEnumeration {
    /// Probability that each node belongs to the largest cluster.
    pub membership: Vec<f64>,
    /// Expected fraction of nodes in the largest cluster.
    pub s: f64,
}

/// Exact largest-cluster statistics of bond percolation, summing over all
/// `2^m` edge configurations. Largest clusters are chosen as in the
/// simulation oracle.
pub fn brute_percolation_enumerate(graph: &Graph, p: f64) -> Result<BruteEnumeration> {
    check_probability("p", p)?;
    let (n, m) = (graph.n(), graph.m());
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if m > MAX_BRUTE_EDGES {
        return Err(Error::CapExceeded {
            what: "edges for percolation enumeration".into(),
            limit: MAX_BRUTE_EDGES,
            found: m,
        });
    }
    let edges: Vec<(usize, usize)> = graph.edges().collect();
    let mut membership = vec![0.0; n];
    for mask in 0u32..(1u32 << m) {
        let on = mask.count_ones() as i32;
        let w = p.powi(on) * (1.0 - p).powi(m as i32 - on);
        if w == 0.0 {
            continue;
        }
        let mut clusters = Clusters::new(n);
        for (b, &(u, v)) in edges.iter().enumerate() {
            if mask >> b & 1 == 1 {
                clusters.join(u, v);
            }
        }
        for (acc, inside) in membership.iter_mut().zip(clusters.largest_members()) {
            if inside {
                *acc += w;
            }
        }
    }
    let s = membership.iter().sum::<f64>() / n as f64;
    Ok(BruteEnumeration { membership, s })
}
