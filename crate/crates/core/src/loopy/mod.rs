//! Percolation message passing on networks with short loops.
//!
//! Every node `i` gets a neighborhood `N_i` holding all primitive cycles
//! through it up to length `r`, and receives a message from every node of
//! that neighborhood. The message from `j` averages, over the occupied-edge
//! configurations of `N_{i <- j}` (the part of `N_j` outside `N_i`), the
//! product of the messages `j` receives from the nodes it can reach:
//!
//! ```text
//! mu[i <- j] = sum_G P[G] prod_{k in N_{i<-j}} mu[j <- k]^sigma_jk(G)
//! mu_i       = sum_G P[G] prod_{j in N_i}      mu[i <- j]^sigma_ij(G)
//! ```
//!
//! With `r = 2` the neighborhoods are stars and this is ordinary percolation
//! message passing.

mod cycles;
mod neighborhood;

pub use cycles::primitive_cycles;
pub use neighborhood::{
    build_message_neighborhood, build_neighborhood, reachability, EdgeConfiguration,
    MessageNeighborhood, Neighborhood,
};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    initial_field, iterate, FixedPointConfig, Init, IterationReport, MessageField, MessageUpdate,
    PayloadKind,
};
use crate::error::{check_probability, Error, Result};
use crate::exec::{map_range, Execution};
use crate::graph::{DisjointSets, Graph};
use crate::percolation::{giant_cluster_size, PercolationResult};
use crate::sweep::SweepResult;
use neighborhood::LocalGraph;

/// Largest neighborhood edge count enumerated exhaustively.
pub const EXACT_EDGE_CAP: usize = 22;
pub const DEFAULT_MC_SAMPLES: usize = 10;

/// How configuration averages are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopyMode {
    /// All `2^k` configurations of every neighborhood.
    Exact,
    /// `samples` seeded configurations per neighborhood, drawn from an
    /// independent stream for every message and node.
    MonteCarlo { samples: usize, seed: u64 },
}

/// One configuration average: either exact outcome counts or a local graph
/// to sample from. `targets[m]` is the message read for local member `m`.
#[derive(Clone, Debug)]
struct Unit {
    targets: Vec<usize>,
    local: LocalGraph,
    /// Exact mode: distinct reach sets with the number of configurations
    /// producing each, indexed by occupied-edge count.
    outcomes: Vec<(Vec<u32>, Vec<u64>)>,
}

/// Per-`p` mixture over reach sets, flattened.
#[derive(Clone, Debug, Default)]
struct Mixture {
    probs: Vec<f64>,
    starts: Vec<usize>,
    members: Vec<usize>,
}

impl Mixture {
    fn push(&mut self, prob: f64, reached: impl Iterator<Item = usize>) {
        self.starts.push(self.members.len());
        self.probs.push(prob);
        self.members.extend(reached);
    }

    fn evaluate(&self, field: &MessageField) -> f64 {
        let mut total = 0.0;
        for (o, &prob) in self.probs.iter().enumerate() {
            let end = self.starts.get(o + 1).copied().unwrap_or(self.members.len());
            let product: f64 = self.members[self.starts[o]..end]
                .iter()
                .map(|&t| field.scalar(t))
                .product();
            total += prob * product;
        }
        total
    }
}

/// Neighborhood structure of a graph for one `r`, reusable across `p`.
#[derive(Clone, Debug)]
pub struct LoopyModel {
    n: usize,
    r: usize,
    mode: LoopyMode,
    exec: Execution,
    /// Messages received by node `i` are `offsets[i]..offsets[i + 1]`, from
    /// the sorted members of `N_i`.
    offsets: Vec<usize>,
    senders: Vec<usize>,
    message_units: Vec<Unit>,
    node_units: Vec<Unit>,
    overlaps: usize,
    max_edges: usize,
}

impl LoopyModel {
    pub fn new(graph: &Graph, r: usize, mode: LoopyMode, exec: Execution) -> Result<LoopyModel> {
        if r < 2 {
            return Err(Error::InvalidParameter(format!(
                "cycle length bound r = {r} must be at least 2"
            )));
        }
        if let LoopyMode::MonteCarlo { samples: 0, .. } = mode {
            return Err(Error::InvalidParameter("at least one sample is required".into()));
        }
        let n = graph.n();
        let hoods: Vec<Neighborhood> = map_range(exec, n, |i| build_neighborhood(graph, i, r))
            .into_iter()
            .collect::<Result<_>>()?;
        let max_edges = hoods.iter().map(Neighborhood::k).max().unwrap_or(0);
        if mode == LoopyMode::Exact {
            if let Some(h) = hoods.iter().find(|h| h.k() > EXACT_EDGE_CAP) {
                return Err(Error::CapExceeded {
                    what: format!(
                        "edges in the neighborhood of node {} (use Monte Carlo mode)",
                        h.center
                    ),
                    limit: EXACT_EDGE_CAP,
                    found: h.k(),
                });
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut senders = Vec::new();
        for h in &hoods {
            senders.extend(&h.nodes);
            offsets.push(senders.len());
        }
        let index_of = |i: usize, j: usize| {
            offsets[i] + hoods[i].nodes.binary_search(&j).expect("sender is in the neighborhood")
        };
        let receivers: Vec<usize> = (0..n)
            .flat_map(|i| std::iter::repeat_n(i, offsets[i + 1] - offsets[i]))
            .collect();

        let built: Vec<(Unit, bool)> = map_range(exec, senders.len(), |e| {
            let (i, j) = (receivers[e], senders[e]);
            let hood = build_message_neighborhood(&hoods[i], &hoods[j]);
            let targets = hood.nodes.iter().map(|&k| index_of(j, k)).collect();
            let local = LocalGraph::new(j, &hood.nodes, &hood.edges);
            (make_unit(targets, local, mode), hood.overlapped)
        });
        let overlaps = built.iter().filter(|(_, o)| *o).count();
        if overlaps > 0 {
            log::warn!(
                "{overlaps} message neighborhoods overlap their receiver's neighborhood; \
                 primitive cycles longer than r = {r} are present"
            );
        }
        let message_units = built.into_iter().map(|(u, _)| u).collect();
        let node_units = map_range(exec, n, |i| {
            let h = &hoods[i];
            let targets = h.nodes.iter().map(|&j| index_of(i, j)).collect();
            make_unit(targets, LocalGraph::new(i, &h.nodes, &h.edges), mode)
        });
        Ok(LoopyModel {
            n,
            r,
            mode,
            exec,
            offsets,
            senders,
            message_units,
            node_units,
            overlaps,
            max_edges,
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn mode(&self) -> LoopyMode {
        self.mode
    }

    /// Number of messages, `sum_i |N_i|`.
    pub fn message_count(&self) -> usize {
        self.senders.len()
    }

    /// Index of the message `i <- j`, if `j` belongs to `N_i`.
    pub fn message_index(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.senders[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|pos| range.start + pos)
    }

    /// Message neighborhoods that had to be cut where they met the
    /// receiver's neighborhood away from the sender.
    pub fn overlaps(&self) -> usize {
        self.overlaps
    }

    /// Largest node neighborhood edge count.
    pub fn max_edges(&self) -> usize {
        self.max_edges
    }

    fn mixtures(&self, units: &[Unit], p: f64, stream_base: usize) -> Vec<Mixture> {
        map_range(self.exec, units.len(), |u| {
            mixture(&units[u], p, self.mode, (stream_base + u) as u64)
        })
    }

    /// Solves the message equations at occupation probability `p`, starting
    /// from zeros unless `config.init` says otherwise.
    pub fn messages(&self, p: f64, config: &FixedPointConfig) -> Result<(MessageField, IterationReport)> {
        self.solve(p, config, None)
    }

    fn solve(
        &self,
        p: f64,
        config: &FixedPointConfig,
        warm: Option<MessageField>,
    ) -> Result<(MessageField, IterationReport)> {
        check_probability("p", p)?;
        let field = match warm {
            Some(field) => field,
            None => initial_field(
                PayloadKind::Probability,
                self.message_count(),
                &config.init_or(Init::Zeros),
                config.seed,
            )?,
        };
        let mut update = LoopyUpdate {
            mixtures: self.mixtures(&self.message_units, p, 0),
        };
        iterate(&mut update, field, config)
    }

    /// Probability that each node is outside the giant cluster.
    pub fn node_probabilities(&self, p: f64, messages: &MessageField) -> Result<Vec<f64>> {
        check_probability("p", p)?;
        if messages.len() != self.message_count() {
            return Err(Error::LengthMismatch {
                expected: self.message_count(),
                found: messages.len(),
            });
        }
        let mixtures = self.mixtures(&self.node_units, p, self.message_count());
        Ok(mixtures
            .iter()
            .map(|m| m.evaluate(messages).clamp(0.0, 1.0))
            .collect())
    }

    pub fn percolate(&self, p: f64, config: &FixedPointConfig) -> Result<PercolationResult> {
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        let (messages, report) = self.messages(p, config)?;
        self.finish(p, &messages, report)
    }

    fn finish(&self, p: f64, messages: &MessageField, report: IterationReport) -> Result<PercolationResult> {
        let node_probabilities = self.node_probabilities(p, messages)?;
        Ok(PercolationResult {
            giant_cluster_fraction: giant_cluster_size(&node_probabilities)?,
            node_probabilities,
            p,
            report,
        })
    }

    /// Giant-cluster size over a grid, solved from the largest `p` down with
    /// warm starts, exactly as for ordinary percolation sweeps.
    ///
    /// Series: `S`, `iterations`, `residual`. Per node: `mu`.
    pub fn sweep(&self, p_grid: &[f64], config: &FixedPointConfig, per_node: bool) -> Result<SweepResult> {
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        for &p in p_grid {
            check_probability("p", p)?;
        }
        let mut order: Vec<usize> = (0..p_grid.len()).collect();
        order.sort_by(|&a, &b| p_grid[b].total_cmp(&p_grid[a]).then(a.cmp(&b)));
        let mut sweep = SweepResult::new("p", p_grid.to_vec());
        let mut warm = None;
        for k in order {
            let p = p_grid[k];
            let outcome = self.solve(p, config, warm.take()).and_then(|(messages, report)| {
                let result = self.finish(p, &messages, report)?;
                Ok((messages, result))
            });
            match outcome {
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
}

fn make_unit(targets: Vec<usize>, local: LocalGraph, mode: LoopyMode) -> Unit {
    let outcomes = match mode {
        LoopyMode::Exact => enumerate_outcomes(&local),
        LoopyMode::MonteCarlo { .. } => Vec::new(),
    };
    Unit {
        targets,
        local,
        outcomes,
    }
}

/// Reach set of every configuration, grouped by reach set and occupied-edge
/// count. Independent of `p`.
fn enumerate_outcomes(local: &LocalGraph) -> Vec<(Vec<u32>, Vec<u64>)> {
    let k = local.edges.len();
    let mut dsu = DisjointSets::new(local.size());
    let mut table: HashMap<Vec<u32>, Vec<u64>> = HashMap::new();
    for mask in 0u64..(1u64 << k) {
        let reached = local.reached(&mut dsu, |b| mask >> b & 1 == 1);
        let key: Vec<u32> = reached
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(m, _)| m as u32)
            .collect();
        table.entry(key).or_insert_with(|| vec![0; k + 1])[mask.count_ones() as usize] += 1;
    }
    let mut outcomes: Vec<_> = table.into_iter().collect();
    outcomes.sort();
    outcomes
}

fn mixture(unit: &Unit, p: f64, mode: LoopyMode, stream: u64) -> Mixture {
    let mut out = Mixture::default();
    match mode {
        LoopyMode::Exact => {
            let k = unit.local.edges.len();
            for (reached, counts) in &unit.outcomes {
                let prob: f64 = counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(m, &c)| c as f64 * p.powi(m as i32) * (1.0 - p).powi((k - m) as i32))
                    .sum();
                if prob > 0.0 {
                    out.push(prob, reached.iter().map(|&m| unit.targets[m as usize]));
                }
            }
        }
        LoopyMode::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut dsu = DisjointSets::new(unit.local.size());
            let weight = 1.0 / samples as f64;
            let mut occupied = vec![false; unit.local.edges.len()];
            for _ in 0..samples {
                for slot in occupied.iter_mut() {
                    *slot = rng.random::<f64>() < p;
                }
                let reached = unit.local.reached(&mut dsu, |b| occupied[b]);
                out.push(
                    weight,
                    reached
                        .iter()
                        .enumerate()
                        .filter(|(_, &r)| r)
                        .map(|(m, _)| unit.targets[m]),
                );
            }
        }
    }
    out
}

struct LoopyUpdate {
    mixtures: Vec<Mixture>,
}

impl MessageUpdate for LoopyUpdate {
    fn kind(&self) -> PayloadKind {
        PayloadKind::Probability
    }

    fn len(&self) -> usize {
        self.mixtures.len()
    }

    fn update(&self, idx: usize, field: &MessageField, out: &mut [f64]) -> Result<()> {
        out[0] = self.mixtures[idx].evaluate(field).clamp(0.0, 1.0);
        Ok(())
    }
}

/// Loopy percolation at a single `p`.
pub fn loopy_percolation(
    graph: &Graph,
    p: f64,
    r: usize,
    config: &FixedPointConfig,
    mode: LoopyMode,
) -> Result<PercolationResult> {
    check_probability("p", p)?;
    LoopyModel::new(graph, r, mode, config.execution)?.percolate(p, config)
}
