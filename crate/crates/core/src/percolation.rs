//! Giant-component and bond-percolation message passing.
//!
//! The message `mu[i <- j]` is the probability that `j` is not connected to
//! the giant cluster once `i` is removed. Under bond percolation with
//! occupation probability `p` it satisfies
//! `mu[i <- j] = prod_{k in N(j) \ i} (1 - p + p mu[j <- k])`, and the
//! giant-component problem is the case `p = 1`.

use serde::Serialize;

use crate::engine::{
    initial_field, iterate, FixedPointConfig, Init, IterationReport, MessageField, MessageUpdate,
    PayloadKind,
};
use crate::error::{check_probability, Error, Result};
use crate::graph::Graph;
use crate::nonbacktracking::{HalfEdgeIndex, DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL};
use crate::sweep::SweepResult;

/// Giant-component classification cut on `mu_i`.
pub const MEMBERSHIP_CUT: f64 = 0.5;

pub(crate) struct PercolationUpdate<'a> {
    pub(crate) index: &'a HalfEdgeIndex,
    pub(crate) p: f64,
}

impl MessageUpdate for PercolationUpdate<'_> {
    fn kind(&self) -> PayloadKind {
        PayloadKind::Probability
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn update(&self, idx: usize, field: &MessageField, out: &mut [f64]) -> Result<()> {
        let q = 1.0 - self.p;
        out[0] = self
            .index
            .successors(idx)
            .map(|f| q + self.p * field.scalar(f))
            .product();
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PercolationResult {
    /// Probability that each node is not in the giant cluster.
    pub node_probabilities: Vec<f64>,
    pub giant_cluster_fraction: f64,
    pub p: f64,
    pub report: IterationReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Leading eigenvalue of the non-backtracking matrix.
    pub lambda: f64,
    /// `1 / lambda`, or `None` when `lambda = 0` and there is no transition.
    pub p_c: Option<f64>,
}

/// Solves the giant-component equations. Messages start from seeded random
/// values unless `config.init` says otherwise.
pub fn giant_component_messages(
    graph: &Graph,
    config: &FixedPointConfig,
) -> Result<(MessageField, IterationReport)> {
    let index = HalfEdgeIndex::new(graph);
    solve(&index, 1.0, config, Init::Random)
}

/// Flags nodes whose probability of lying outside the giant component is
/// below [`MEMBERSHIP_CUT`].
pub fn giant_component_membership(graph: &Graph, messages: &MessageField) -> Result<Vec<bool>> {
    Ok(percolation_node_probabilities(graph, messages, 1.0)?
        .into_iter()
        .map(|mu| mu < MEMBERSHIP_CUT)
        .collect())
}

/// Solves the bond-percolation equations at occupation probability `p`.
/// Messages start from zeros unless `config.init` says otherwise, which
/// converges monotonically to the smallest fixed point.
pub fn percolation_messages(
    graph: &Graph,
    p: f64,
    config: &FixedPointConfig,
) -> Result<(MessageField, IterationReport)> {
    check_probability("p", p)?;
    let index = HalfEdgeIndex::new(graph);
    solve(&index, p, config, Init::Zeros)
}

fn solve(
    index: &HalfEdgeIndex,
    p: f64,
    config: &FixedPointConfig,
    default_init: Init,
) -> Result<(MessageField, IterationReport)> {
    let field = initial_field(
        PayloadKind::Probability,
        index.len(),
        &config.init_or(default_init),
        config.seed,
    )?;
    iterate(&mut PercolationUpdate { index, p }, field, config)
}

/// `mu_i = prod_{j in N(i)} (1 - p + p mu[i <- j])`; isolated nodes get 1.
pub fn percolation_node_probabilities(
    graph: &Graph,
    messages: &MessageField,
    p: f64,
) -> Result<Vec<f64>> {
    check_probability("p", p)?;
    if messages.len() != 2 * graph.m() || messages.kind() != PayloadKind::Probability {
        return Err(Error::LengthMismatch {
            expected: 2 * graph.m(),
            found: messages.len(),
        });
    }
    let offsets = graph.offsets();
    Ok((0..graph.n())
        .map(|i| {
            (offsets[i]..offsets[i + 1])
                .map(|e| 1.0 - p + p * messages.scalar(e))
                .product()
        })
        .collect())
}

/// `S = 1 - mean(mu_i)`.
pub fn giant_cluster_size(node_probabilities: &[f64]) -> Result<f64> {
    if node_probabilities.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mean = node_probabilities.iter().sum::<f64>() / node_probabilities.len() as f64;
    Ok((1.0 - mean).clamp(0.0, 1.0))
}

/// Messages, node probabilities and giant-cluster size at one `p`.
pub fn percolate(graph: &Graph, p: f64, config: &FixedPointConfig) -> Result<PercolationResult> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let (messages, report) = percolation_messages(graph, p, config)?;
    finish(graph, &messages, p, report)
}

fn finish(
    graph: &Graph,
    messages: &MessageField,
    p: f64,
    report: IterationReport,
) -> Result<PercolationResult> {
    let node_probabilities = percolation_node_probabilities(graph, messages, p)?;
    let giant_cluster_fraction = giant_cluster_size(&node_probabilities)?;
    Ok(PercolationResult {
        node_probabilities,
        giant_cluster_fraction,
        p,
        report,
    })
}

/// `p_c = 1 / lambda` from the non-backtracking matrix.
pub fn percolation_threshold(graph: &Graph) -> Result<ThresholdResult> {
    let lambda = HalfEdgeIndex::new(graph).leading_eigenvalue(
        DEFAULT_EIGEN_TOL,
        DEFAULT_EIGEN_MAX_ITER,
        Default::default(),
    )?;
    Ok(ThresholdResult {
        lambda,
        p_c: (lambda > 0.0).then(|| 1.0 / lambda),
    })
}

/// Giant-cluster size over a grid of occupation probabilities.
///
/// Points are solved from the largest `p` downward, each warm-started from
/// the fixed point of the next larger `p`. That fixed point lies below the
/// smallest fixed point at the smaller `p`, so the iteration still rises
/// monotonically to the same solution a zero start would reach, only in
/// fewer sweeps. `config.init` applies to the first point solved.
///
/// Series: `S`, `iterations`, `residual`. Per node: `mu`.
pub fn sweep_percolation(
    graph: &Graph,
    p_grid: &[f64],
    config: &FixedPointConfig,
    per_node: bool,
) -> Result<SweepResult> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    for &p in p_grid {
        check_probability("p", p)?;
    }
    let index = HalfEdgeIndex::new(graph);
    let mut order: Vec<usize> = (0..p_grid.len()).collect();
    order.sort_by(|&a, &b| p_grid[b].total_cmp(&p_grid[a]).then(a.cmp(&b)));

    let mut sweep = SweepResult::new("p", p_grid.to_vec());
    let mut warm: Option<MessageField> = None;
    for k in order {
        let p = p_grid[k];
        let outcome = match warm.take() {
            Some(field) => iterate(&mut PercolationUpdate { index: &index, p }, field, config),
            None => solve(&index, p, config, Init::Zeros),
        };
        match outcome.and_then(|(messages, report)| {
            let result = finish(graph, &messages, p, report)?;
            Ok((messages, result))
        }) {
            Ok((messages, result)) => {
                sweep.series_mut("S")[k] = result.giant_cluster_fraction;
                sweep.series_mut("iterations")[k] = result.report.iterations as f64;
                sweep.series_mut("residual")[k] = result.report.residual;
                sweep.reports[k] = Some(result.report);
                if per_node {
                    sweep.per_node_mut("mu")[k] = result.node_probabilities;
                }
                warm = Some(messages);
            }
            Err(e) => {
                sweep.series_mut("S")[k] = f64::NAN;
                sweep.errors[k] = Some(e.to_string());
            }
        }
    }
    Ok(sweep)
}
