//! Belief propagation for the zero-field Ising model with unit couplings.
//!
//! Message `e = (i <- j)` holds `(P+, P-)`, the distribution of spin `j`
//! with `i` removed. All products of Boltzmann factors are accumulated as
//! sums of logarithms so that large `beta` cannot overflow.

use serde::Serialize;

use crate::engine::{
    initial_field, iterate, FixedPointConfig, Init, IterationReport, MessageField, MessageUpdate,
    PayloadKind,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nonbacktracking::{HalfEdgeIndex, DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL};
use crate::sweep::SweepResult;

/// Initial message used by sweeps to select the spin-up branch.
pub const TILT: [f64; 2] = [0.51, 0.49];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IsingParams {
    pub beta: f64,
}

impl IsingParams {
    pub fn new(beta: f64) -> Result<IsingParams> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta = {beta} must be finite and nonnegative"
            )));
        }
        Ok(IsingParams { beta })
    }
}

/// Messages initialized at `(0.51, 0.49)`.
pub fn tilted_init() -> Init {
    Init::Constant(TILT.to_vec())
}

pub(crate) fn logaddexp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Log-weights `(L+, L-)` of the spin receiving `messages`.
fn log_fields(beta: f64, field: &MessageField, messages: impl Iterator<Item = usize>) -> (f64, f64) {
    let (mut up, mut down) = (0.0, 0.0);
    for f in messages {
        let m = field.get(f);
        let (lp, lm) = (m[0].ln(), m[1].ln());
        up += logaddexp(beta + lp, -beta + lm);
        down += logaddexp(-beta + lp, beta + lm);
    }
    (up, down)
}

struct IsingUpdate<'a> {
    index: &'a HalfEdgeIndex,
    beta: f64,
}

impl MessageUpdate for IsingUpdate<'_> {
    fn kind(&self) -> PayloadKind {
        PayloadKind::Pair
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn update(&self, idx: usize, field: &MessageField, out: &mut [f64]) -> Result<()> {
        let (up, down) = log_fields(self.beta, field, self.index.successors(idx));
        out[0] = sigmoid(up - down);
        out[1] = sigmoid(down - up);
        Ok(())
    }
}

/// Solves the message equations. Messages start from seeded random pairs
/// unless `config.init` says otherwise.
pub fn ising_messages(
    graph: &Graph,
    params: IsingParams,
    config: &FixedPointConfig,
) -> Result<(MessageField, IterationReport)> {
    let index = HalfEdgeIndex::new(graph);
    solve(&index, params, config, None)
}

fn solve(
    index: &HalfEdgeIndex,
    params: IsingParams,
    config: &FixedPointConfig,
    warm: Option<MessageField>,
) -> Result<(MessageField, IterationReport)> {
    IsingParams::new(params.beta)?;
    let field = match warm {
        Some(field) => field,
        None => initial_field(
            PayloadKind::Pair,
            index.len(),
            &config.init_or(Init::Random),
            config.seed,
        )?,
    };
    iterate(
        &mut IsingUpdate {
            index,
            beta: params.beta,
        },
        field,
        config,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsingMarginals {
    /// `(P[s_i = +1], P[s_i = -1])` per node.
    pub marginals: Vec<[f64; 2]>,
    pub magnetization_per_node: Vec<f64>,
    pub magnetization: f64,
    /// `log Z_i` per node.
    pub log_node_norms: Vec<f64>,
}

pub fn ising_marginals(
    graph: &Graph,
    messages: &MessageField,
    params: IsingParams,
) -> Result<IsingMarginals> {
    check_messages(graph, messages)?;
    let beta = params.beta;
    let offsets = graph.offsets();
    let mut marginals = Vec::with_capacity(graph.n());
    let mut log_node_norms = Vec::with_capacity(graph.n());
    for i in 0..graph.n() {
        let (up, down) = log_fields(beta, messages, offsets[i]..offsets[i + 1]);
        marginals.push([sigmoid(up - down), sigmoid(down - up)]);
        log_node_norms.push(logaddexp(up, down));
    }
    let magnetization_per_node: Vec<f64> = marginals.iter().map(|m| m[0] - m[1]).collect();
    let magnetization = if graph.n() == 0 {
        0.0
    } else {
        magnetization_per_node.iter().sum::<f64>() / graph.n() as f64
    };
    Ok(IsingMarginals {
        marginals,
        magnetization_per_node,
        magnetization,
        log_node_norms,
    })
}

/// `log Z_{i <- j}`: the normalizer of each message computed from the
/// messages it depends on.
pub fn ising_edge_norms(graph: &Graph, messages: &MessageField, params: IsingParams) -> Result<Vec<f64>> {
    check_messages(graph, messages)?;
    let index = HalfEdgeIndex::new(graph);
    Ok((0..index.len())
        .map(|e| {
            let (up, down) = log_fields(params.beta, messages, index.successors(e));
            logaddexp(up, down)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionFunction {
    /// Symmetric form: `sum_i log Z_i - sum_{edges ij} log Z_ij`.
    pub log_z: f64,
    /// Form anchored at one node per component,
    /// `log Z_i + sum_{j in N(i)} log Z_{i <- j}`, with `Z_{i <- j}` the full
    /// partition function of the branch behind `j`. Available on forests only.
    pub log_z_anchored: Option<f64>,
    /// `-log_z / beta`; absent at `beta = 0`.
    pub free_energy: Option<f64>,
    pub free_energy_per_node: Option<f64>,
}

/// Partition function and free energy from converged messages.
///
/// The symmetric form is exact on forests and is the Bethe approximation
/// elsewhere. Here `Z_ij = sum_{r,s} e^{beta r s} mu^r_{j<-i} mu^s_{i<-j}`
/// corrects for each edge being counted from both of its ends.
pub fn ising_partition_function(
    graph: &Graph,
    messages: &MessageField,
    marginals: &IsingMarginals,
    params: IsingParams,
) -> Result<PartitionFunction> {
    check_messages(graph, messages)?;
    if marginals.log_node_norms.len() != graph.n() {
        return Err(Error::LengthMismatch {
            expected: graph.n(),
            found: marginals.log_node_norms.len(),
        });
    }
    let beta = params.beta;
    let index = HalfEdgeIndex::new(graph);
    let mut log_z: f64 = marginals.log_node_norms.iter().sum();
    for e in 0..index.len() {
        let r = index.reverse(e);
        if e > r {
            continue;
        }
        let (a, b) = (messages.get(e), messages.get(r));
        let aligned = (a[0] * b[0] + a[1] * b[1]).ln();
        let opposed = (a[0] * b[1] + a[1] * b[0]).ln();
        log_z -= logaddexp(beta + aligned, -beta + opposed);
    }
    let log_z_anchored = if graph.is_forest() {
        Some(anchored_log_z(graph, &index, messages, marginals, beta))
    } else {
        None
    };
    let free_energy = (beta > 0.0).then(|| -log_z / beta);
    let n = graph.n() as f64;
    Ok(PartitionFunction {
        log_z,
        log_z_anchored,
        free_energy,
        free_energy_per_node: free_energy.filter(|_| n > 0.0).map(|f| f / n),
    })
}

/// On a forest, the branch partition function obeys
/// `log Z_{i <- j} = log z_{i <- j} + sum_{k in N(j) \ i} log Z_{j <- k}`,
/// where `z_{i <- j}` is the local message normalizer. Each component is
/// rooted at its smallest node and branches are accumulated leaves first.
fn anchored_log_z(
    graph: &Graph,
    index: &HalfEdgeIndex,
    messages: &MessageField,
    marginals: &IsingMarginals,
    beta: f64,
) -> f64 {
    let n = graph.n();
    let mut visited = vec![false; n];
    let mut parent_edge = vec![usize::MAX; n];
    let mut branch_sum = vec![0.0; n];
    let mut total = 0.0;
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut order = vec![root];
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for e in index.incoming(v) {
                let w = index.sender(e);
                if !visited[w] {
                    visited[w] = true;
                    parent_edge[w] = e;
                    order.push(w);
                }
            }
        }
        for &v in order[1..].iter().rev() {
            let e = parent_edge[v];
            let (up, down) = log_fields(beta, messages, index.successors(e));
            branch_sum[index.receiver(e)] += logaddexp(up, down) + branch_sum[v];
        }
        total += marginals.log_node_norms[root] + branch_sum[root];
    }
    total
}

fn check_messages(graph: &Graph, messages: &MessageField) -> Result<()> {
    if messages.kind() != PayloadKind::Pair || messages.len() != 2 * graph.m() {
        return Err(Error::LengthMismatch {
            expected: 2 * graph.m(),
            found: messages.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct IsingResult {
    pub beta: f64,
    pub marginals: Vec<[f64; 2]>,
    pub magnetization_per_node: Vec<f64>,
    pub magnetization: f64,
    pub log_z: f64,
    pub log_z_anchored: Option<f64>,
    pub free_energy: Option<f64>,
    pub free_energy_per_node: Option<f64>,
    pub log_node_norms: Vec<f64>,
    pub log_edge_norms: Vec<f64>,
    pub report: IterationReport,
}

/// Messages, marginals, partition function and free energy at one `beta`.
pub fn ising(graph: &Graph, params: IsingParams, config: &FixedPointConfig) -> Result<IsingResult> {
    let (messages, report) = ising_messages(graph, params, config)?;
    assemble(graph, &messages, params, report)
}

fn assemble(
    graph: &Graph,
    messages: &MessageField,
    params: IsingParams,
    report: IterationReport,
) -> Result<IsingResult> {
    let marginals = ising_marginals(graph, messages, params)?;
    let z = ising_partition_function(graph, messages, &marginals, params)?;
    Ok(IsingResult {
        beta: params.beta,
        log_edge_norms: ising_edge_norms(graph, messages, params)?,
        marginals: marginals.marginals,
        magnetization_per_node: marginals.magnetization_per_node,
        magnetization: marginals.magnetization,
        log_z: z.log_z,
        log_z_anchored: z.log_z_anchored,
        free_energy: z.free_energy,
        free_energy_per_node: z.free_energy_per_node,
        log_node_norms: marginals.log_node_norms,
        report,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub lambda: f64,
    /// `arctanh(1 / lambda)`; `None` unless `lambda > 1`.
    pub beta_c: Option<f64>,
    pub t_c: Option<f64>,
}

pub fn ising_critical_temperature(graph: &Graph) -> Result<CriticalPoint> {
    let lambda = HalfEdgeIndex::new(graph).leading_eigenvalue(
        DEFAULT_EIGEN_TOL,
        DEFAULT_EIGEN_MAX_ITER,
        Default::default(),
    )?;
    Ok(critical_point(lambda))
}

pub fn critical_point(lambda: f64) -> CriticalPoint {
    let beta_c = (lambda > 1.0).then(|| (1.0 / lambda).atanh());
    CriticalPoint {
        lambda,
        beta_c,
        t_c: beta_c.map(|b| 1.0 / b),
    }
}

/// Magnetization over a temperature grid.
///
/// Temperatures are visited in increasing order, each warm-started from the
/// previous fixed point so the ordered branch is followed up to where it
/// disappears. The first point starts from [`tilted_init`] unless
/// `config.init` is set.
///
/// Series: `abs_m`, `m`, `log_Z`, `iterations`, `residual`. Per node: `m_i`.
pub fn sweep_magnetization(
    graph: &Graph,
    t_grid: &[f64],
    config: &FixedPointConfig,
    per_node: bool,
) -> Result<SweepResult> {
    if let Some(t) = t_grid.iter().find(|&&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "temperature {t} must be positive and finite"
        )));
    }
    let index = HalfEdgeIndex::new(graph);
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]).then(a.cmp(&b)));
    let config = FixedPointConfig {
        init: Some(config.init_or(tilted_init())),
        ..config.clone()
    };

    let mut sweep = SweepResult::new("T", t_grid.to_vec());
    let mut warm: Option<MessageField> = None;
    for k in order {
        let params = IsingParams { beta: 1.0 / t_grid[k] };
        let outcome = solve(&index, params, &config, warm.take()).and_then(|(messages, report)| {
            let result = assemble(graph, &messages, params, report)?;
            Ok((messages, result))
        });
        match outcome {
            Ok((messages, result)) => {
                sweep.series_mut("abs_m")[k] = result.magnetization.abs();
                sweep.series_mut("m")[k] = result.magnetization;
                sweep.series_mut("log_Z")[k] = result.log_z;
                sweep.series_mut("iterations")[k] = result.report.iterations as f64;
                sweep.series_mut("residual")[k] = result.report.residual;
                sweep.reports[k] = Some(result.report);
                if per_node {
                    sweep.per_node_mut("m_i")[k] = result.magnetization_per_node;
                }
                warm = Some(messages);
            }
            Err(e) => {
                sweep.series_mut("abs_m")[k] = f64::NAN;
                sweep.errors[k] = Some(e.to_string());
            }
        }
    }
    Ok(sweep)
}
