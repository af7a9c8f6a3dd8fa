//! Belief propagation for the stochastic block model with known parameters.
//!
//! Message `mu[i <- j]` is the distribution of `j`'s group with `i` removed:
//!
//! ```text
//! mu^r[i <- j] ∝ pi_r · h_j^r · prod_{k in N(j) \ i} sum_s omega_rs mu^s[j <- k]
//! h_j^r = prod_{k not in N(j), k != j} (1 - sum_s q_k^s omega_rs)
//! ```
//!
//! where `q_k` is the current marginal of node `k`. The field `h` accounts
//! for the absent edges; it is recomputed once per sweep, in log space, from
//! the marginals implied by the previous sweep's messages.

use serde::Serialize;

use crate::engine::{
    initial_field, iterate, FixedPointConfig, Init, IterationReport, MessageField, MessageUpdate,
    PayloadKind,
};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::graph::{validate_block_model, Graph};
use crate::nonbacktracking::HalfEdgeIndex;

/// Weight of the previous sweep's non-edge field in the next one.
const FIELD_RELAXATION: f64 = 0.5;

/// Largest group count accepted by [`overlap`].
pub const MAX_OVERLAP_GROUPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SbmParams {
    pub priors: Vec<f64>,
    /// Symmetric `q x q` edge probabilities.
    pub omega: Vec<Vec<f64>>,
}

impl SbmParams {
    pub fn new(priors: Vec<f64>, omega: Vec<Vec<f64>>) -> Result<SbmParams> {
        validate_block_model(&priors, &omega)?;
        Ok(SbmParams { priors, omega })
    }

    /// Equal-size groups with mean within-group degree `c_in` and mean
    /// between-group degree `c_out` on `n` nodes: `omega = c / n`.
    pub fn planted(n: usize, q: usize, c_in: f64, c_out: f64) -> Result<SbmParams> {
        if n == 0 || q == 0 {
            return Err(Error::InvalidParameter("n and q must be positive".into()));
        }
        let n = n as f64;
        let omega = (0..q)
            .map(|r| (0..q).map(|s| if r == s { c_in / n } else { c_out / n }).collect())
            .collect();
        SbmParams::new(vec![1.0 / q as f64; q], omega)
    }

    pub fn q(&self) -> usize {
        self.priors.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommunityResult {
    /// Per-node group distribution.
    pub marginals: Vec<Vec<f64>>,
    /// Most probable group per node, ties to the lowest index.
    pub hard_labels: Vec<usize>,
    pub report: IterationReport,
}

struct SbmUpdate<'a> {
    index: &'a HalfEdgeIndex,
    q: usize,
    log_priors: Vec<f64>,
    omega: &'a [Vec<f64>],
    exec: Execution,
    /// Current node marginals, `n x q`.
    marginals: Vec<f64>,
    /// Log non-edge field `log h_j^r`, `n x q`.
    field: Vec<f64>,
    field_ready: bool,
}

impl<'a> SbmUpdate<'a> {
    fn new(index: &'a HalfEdgeIndex, params: &'a SbmParams, exec: Execution) -> Self {
        let q = params.q();
        let n = index.node_count();
        let mut update = SbmUpdate {
            index,
            q,
            log_priors: params.priors.iter().map(|p| p.ln()).collect(),
            omega: &params.omega,
            exec,
            marginals: params.priors.repeat(n),
            field: vec![0.0; n * q],
            field_ready: false,
        };
        update.refresh_field();
        update
    }

    /// Unnormalized log weights of node `j`'s groups given the messages in
    /// `messages`, written into `out`.
    fn log_weights(&self, j: usize, field: &MessageField, messages: impl Iterator<Item = usize>, out: &mut [f64]) {
        let q = self.q;
        for r in 0..q {
            out[r] = self.log_priors[r] + self.field[j * q + r];
        }
        for f in messages {
            let mu = field.get(f);
            for r in 0..q {
                let s: f64 = self.omega[r].iter().zip(mu).map(|(w, m)| w * m).sum();
                out[r] += s.ln();
            }
        }
    }

    fn refresh_marginals(&mut self, messages: &MessageField) -> Result<()> {
        let q = self.q;
        let rows = map_range(self.exec, self.index.node_count(), |i| {
            let mut w = vec![0.0; q];
            self.log_weights(i, messages, self.index.incoming(i), &mut w);
            normalize_log(&mut w).map(|_| w).ok_or(i)
        });
        for (i, row) in rows.into_iter().enumerate() {
            let row = row.map_err(|node| Error::NumericDomain {
                index: node,
                message: "all group weights vanish in the node marginal".into(),
            })?;
            self.marginals[i * q..(i + 1) * q].copy_from_slice(&row);
        }
        Ok(())
    }

    /// `log h_j^r` from the stored marginals. Terms equal to `-inf` are
    /// counted separately so that excluding them stays exact.
    ///
    /// After the first evaluation the field moves halfway toward the
    /// recomputed value on each sweep. Fixed points are unaffected.
    fn refresh_field(&mut self) {
        let q = self.q;
        let n = self.index.node_count();
        let log_f: Vec<f64> = (0..n * q)
            .map(|idx| {
                let (k, r) = (idx / q, idx % q);
                let hit: f64 = (0..q)
                    .map(|s| self.marginals[k * q + s] * self.omega[r][s])
                    .sum();
                (1.0 - hit).max(0.0).ln()
            })
            .collect();
        let mut finite_total = vec![0.0; q];
        let mut infinite_total = vec![0usize; q];
        for k in 0..n {
            for r in 0..q {
                let v = log_f[k * q + r];
                if v.is_finite() {
                    finite_total[r] += v;
                } else {
                    infinite_total[r] += 1;
                }
            }
        }
        let field = map_range(self.exec, n, |j| {
            let mut row = vec![0.0; q];
            for r in 0..q {
                let mut finite = finite_total[r];
                let mut infinite = infinite_total[r];
                for k in std::iter::once(j).chain(self.index.incoming(j).map(|e| self.index.sender(e))) {
                    let v = log_f[k * q + r];
                    if v.is_finite() {
                        finite -= v;
                    } else {
                        infinite -= 1;
                    }
                }
                row[r] = if infinite > 0 { f64::NEG_INFINITY } else { finite };
            }
            row
        });
        let keep = if self.field_ready { FIELD_RELAXATION } else { 0.0 };
        for (j, row) in field.into_iter().enumerate() {
            for (old, new) in self.field[j * q..(j + 1) * q].iter_mut().zip(row) {
                *old = if old.is_finite() && new.is_finite() {
                    keep * *old + (1.0 - keep) * new
                } else {
                    new
                };
            }
        }
        self.field_ready = true;
    }
}

impl MessageUpdate for SbmUpdate<'_> {
    fn kind(&self) -> PayloadKind {
        PayloadKind::Simplex(self.q)
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn prepare(&mut self, field: &MessageField) -> Result<()> {
        self.refresh_marginals(field)?;
        self.refresh_field();
        Ok(())
    }

    fn update(&self, idx: usize, field: &MessageField, out: &mut [f64]) -> Result<()> {
        let j = self.index.sender(idx);
        self.log_weights(j, field, self.index.successors(idx), out);
        normalize_log(out).ok_or_else(|| Error::NumericDomain {
            index: idx,
            message: "all group weights vanish".into(),
        })
    }
}

/// Turns log weights into probabilities in place. `None` if every weight is
/// zero.
fn normalize_log(w: &mut [f64]) -> Option<()> {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut total = 0.0;
    for x in w.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in w.iter_mut() {
        *x /= total;
    }
    Some(())
}

/// Runs belief propagation and reads off marginals and hard labels.
/// Messages start from seeded random simplices unless `config.init` says
/// otherwise.
pub fn sbm_bp(
    graph: &Graph,
    params: &SbmParams,
    config: &FixedPointConfig,
) -> Result<(MessageField, CommunityResult)> {
    validate_block_model(&params.priors, &params.omega)?;
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let q = params.q();
    let index = HalfEdgeIndex::new(graph);
    let mut update = SbmUpdate::new(&index, params, config.execution);
    let field = initial_field(
        PayloadKind::Simplex(q),
        index.len(),
        &config.init_or(Init::Random),
        config.seed,
    )?;
    let (messages, report) = iterate(&mut update, field, config)?;
    update.prepare(&messages)?;
    update.refresh_marginals(&messages)?;
    let marginals: Vec<Vec<f64>> = update.marginals.chunks(q).map(<[f64]>::to_vec).collect();
    let hard_labels = marginals.iter().map(|m| argmax(m)).collect();
    Ok((
        messages,
        CommunityResult {
            marginals,
            hard_labels,
            report,
        },
    ))
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (r, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = r;
        }
    }
    best
}

/// Chance-corrected agreement between `labels` and `truth`, maximized over
/// relabelings of the groups: 0 at chance level, 1 for a perfect match.
pub fn overlap(labels: &[usize], truth: &[usize], q: usize) -> Result<f64> {
    if labels.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: labels.len(),
        });
    }
    if q > MAX_OVERLAP_GROUPS {
        return Err(Error::CapExceeded {
            what: "group count for overlap".into(),
            limit: MAX_OVERLAP_GROUPS,
            found: q,
        });
    }
    if q < 2 || labels.is_empty() {
        return Err(Error::InvalidParameter(
            "overlap needs at least two groups and one node".into(),
        ));
    }
    if labels.iter().chain(truth).any(|&g| g >= q) {
        return Err(Error::InvalidParameter(format!("labels must lie in 0..{q}")));
    }
    let mut confusion = vec![vec![0usize; q]; q];
    for (&a, &b) in labels.iter().zip(truth) {
        confusion[a][b] += 1;
    }
    let mut perm: Vec<usize> = (0..q).collect();
    let mut best = 0;
    permutations(&mut perm, 0, &mut |p| {
        best = best.max((0..q).map(|a| confusion[a][p[a]]).sum());
    });
    let frac = best as f64 / labels.len() as f64;
    let chance = 1.0 / q as f64;
    Ok(((frac - chance) / (1.0 - chance)).clamp(0.0, 1.0))
}

fn permutations(p: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// `(c_in - c_out) - sqrt(2 (c_in + c_out))`; positive means the planted
/// two-group structure is detectable.
pub fn detectability_margin(c_in: f64, c_out: f64) -> Result<f64> {
    if !(c_in >= 0.0 && c_out >= 0.0) || !c_in.is_finite() || !c_out.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mean degrees ({c_in}, {c_out}) must be finite and nonnegative"
        )));
    }
    Ok((c_in - c_out) - (2.0 * (c_in + c_out)).sqrt())
}
