//! Generic fixed-point iteration over per-directed-edge messages.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_blocks_mut, Execution};

/// Messages per parallel work block.
const BLOCK: usize = 1024;
const DOMAIN_SLACK: f64 = 1e-12;
const SUM_SLACK: f64 = 1e-9;

/// What a single message holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    /// A probability in `[0, 1]`.
    Probability,
    /// A normalized pair `(a, b)` with `a + b = 1`.
    Pair,
    /// A complex number stored as `(re, im)`.
    Complex,
    /// A point of the probability simplex with `q` entries.
    Simplex(usize),
}

impl PayloadKind {
    pub fn width(self) -> usize {
        match self {
            PayloadKind::Probability => 1,
            PayloadKind::Pair | PayloadKind::Complex => 2,
            PayloadKind::Simplex(q) => q,
        }
    }
}

/// Flat storage of one payload per directed edge.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageField {
    kind: PayloadKind,
    values: Vec<f64>,
}

impl MessageField {
    pub fn zeros(kind: PayloadKind, len: usize) -> MessageField {
        MessageField {
            kind,
            values: vec![0.0; len * kind.width()],
        }
    }

    /// Wraps raw values, checking the length and every payload.
    pub fn from_values(kind: PayloadKind, values: Vec<f64>) -> Result<MessageField> {
        let width = kind.width();
        if width == 0 || values.len() % width != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} values do not split into payloads of width {width}",
                values.len()
            )));
        }
        let mut field = MessageField { kind, values };
        for idx in 0..field.len() {
            let w = field.kind.width();
            normalize_payload(kind, idx, &mut field.values[idx * w..(idx + 1) * w])?;
        }
        Ok(field)
    }

    pub fn kind(&self) -> PayloadKind {
        self.kind
    }

    /// Number of messages.
    pub fn len(&self) -> usize {
        self.values.len() / self.kind.width().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, idx: usize) -> &[f64] {
        let w = self.kind.width();
        &self.values[idx * w..(idx + 1) * w]
    }

    /// Scalar message value. Only meaningful for [`PayloadKind::Probability`].
    pub fn scalar(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Complex message value. Only meaningful for [`PayloadKind::Complex`].
    pub fn complex(&self, idx: usize) -> Complex64 {
        Complex64::new(self.values[2 * idx], self.values[2 * idx + 1])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Initial message values.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    /// Independent seeded draws: uniform in `(0, 1)` for scalars, uniform
    /// first entry for pairs, normalized uniform draws for simplices, and
    /// uniform real and imaginary parts for complex payloads.
    Random,
    /// `1/q` in every entry.
    UniformSimplex,
    /// The same payload for every message.
    Constant(Vec<f64>),
    /// Explicit values for every message, flattened.
    Custom(Vec<f64>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Every message is recomputed from the previous sweep's values.
    #[default]
    Synchronous,
    /// Messages are updated in index order, in place.
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the old value retained on each update.
    pub damping: f64,
    pub schedule: Schedule,
    pub seed: u64,
    /// `None` selects the algorithm's own default.
    pub init: Option<Init>,
    pub execution: Execution,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            tol: 1e-10,
            max_iter: 100_000,
            damping: 0.0,
            schedule: Schedule::Synchronous,
            seed: 0,
            init: None,
            execution: Execution::default(),
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidParameter(format!(
                "damping = {} must lie in [0, 1)",
                self.damping
            )));
        }
        Ok(())
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = Some(init);
        self
    }

    pub(crate) fn init_or(&self, default: Init) -> Init {
        self.init.clone().unwrap_or(default)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationReport {
    pub converged: bool,
    pub iterations: usize,
    /// Largest absolute change of any message entry in the final sweep.
    pub residual: f64,
}

/// A per-message update rule.
pub trait MessageUpdate: Sync {
    fn kind(&self) -> PayloadKind;

    /// Number of messages.
    fn len(&self) -> usize;

    /// Called once before every sweep with the field the sweep will read.
    fn prepare(&mut self, _field: &MessageField) -> Result<()> {
        Ok(())
    }

    /// Writes the new, undamped payload of message `idx` into `out`.
    fn update(&self, idx: usize, field: &MessageField, out: &mut [f64]) -> Result<()>;
}

/// Builds the starting field for an update rule.
pub fn initial_field(kind: PayloadKind, len: usize, init: &Init, seed: u64) -> Result<MessageField> {
    let w = kind.width();
    let values = match init {
        Init::Zeros => vec![0.0; len * w],
        Init::Ones => vec![1.0; len * w],
        Init::UniformSimplex => vec![1.0 / w as f64; len * w],
        Init::Constant(payload) => {
            if payload.len() != w {
                return Err(Error::LengthMismatch {
                    expected: w,
                    found: payload.len(),
                });
            }
            payload.repeat(len)
        }
        Init::Custom(values) => {
            if values.len() != len * w {
                return Err(Error::LengthMismatch {
                    expected: len * w,
                    found: values.len(),
                });
            }
            values.clone()
        }
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut values = Vec::with_capacity(len * w);
            for _ in 0..len {
                match kind {
                    PayloadKind::Probability => values.push(open_unit(&mut rng)),
                    PayloadKind::Pair => {
                        let a = open_unit(&mut rng);
                        values.extend([a, 1.0 - a]);
                    }
                    PayloadKind::Complex => {
                        values.extend([rng.random::<f64>(), rng.random::<f64>()]);
                    }
                    PayloadKind::Simplex(q) => {
                        let draws: Vec<f64> = (0..q).map(|_| open_unit(&mut rng)).collect();
                        let total: f64 = draws.iter().sum();
                        values.extend(draws.iter().map(|d| d / total));
                    }
                }
            }
            values
        }
    };
    MessageField::from_values(kind, values)
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Iterates `update` from `field` until the residual drops below `tol` or
/// `max_iter` sweeps have run.
pub fn iterate<U: MessageUpdate>(
    update: &mut U,
    field: MessageField,
    config: &FixedPointConfig,
) -> Result<(MessageField, IterationReport)> {
    iterate_with_observer(update, field, config, |_, _| {})
}

/// Like [`iterate`], calling `observer(sweep, field)` after every sweep.
pub fn iterate_with_observer<U, F>(
    update: &mut U,
    mut field: MessageField,
    config: &FixedPointConfig,
    mut observer: F,
) -> Result<(MessageField, IterationReport)>
where
    U: MessageUpdate,
    F: FnMut(usize, &MessageField),
{
    config.validate()?;
    if field.kind() != update.kind() {
        return Err(Error::InvalidParameter(format!(
            "field holds {:?} payloads but the update produces {:?}",
            field.kind(),
            update.kind()
        )));
    }
    if field.len() != update.len() {
        return Err(Error::LengthMismatch {
            expected: update.len(),
            found: field.len(),
        });
    }
    let kind = field.kind();
    let w = kind.width();
    let damping = config.damping;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        update.prepare(&field)?;
        let rule: &U = update;
        residual = match config.schedule {
            Schedule::Synchronous => {
                let old = &field;
                let mut next = vec![0.0; old.values.len()];
                let blocks = map_blocks_mut(config.execution, &mut next, BLOCK * w, |offset, chunk| {
                    let mut worst = 0.0f64;
                    for (k, slot) in chunk.chunks_mut(w).enumerate() {
                        let idx = offset / w + k;
                        rule.update(idx, old, slot)?;
                        worst = worst.max(finish_payload(kind, idx, old.get(idx), slot, damping)?);
                    }
                    Ok::<f64, Error>(worst)
                });
                let mut worst = 0.0f64;
                for block in blocks {
                    worst = worst.max(block?);
                }
                field.values = next;
                worst
            }
            Schedule::Sequential => {
                let mut slot = vec![0.0; w];
                let mut worst = 0.0f64;
                for idx in 0..field.len() {
                    rule.update(idx, &field, &mut slot)?;
                    let old = field.get(idx).to_vec();
                    worst = worst.max(finish_payload(kind, idx, &old, &mut slot, damping)?);
                    field.values[idx * w..(idx + 1) * w].copy_from_slice(&slot);
                }
                worst
            }
        };
        observer(iterations, &field);
        if residual < config.tol {
            return Ok((
                field,
                IterationReport {
                    converged: true,
                    iterations,
                    residual,
                },
            ));
        }
    }
    Ok((
        field,
        IterationReport {
            converged: false,
            iterations,
            residual,
        },
    ))
}

/// Validates a freshly computed payload, applies damping, and returns the
/// change relative to `old`.
fn finish_payload(
    kind: PayloadKind,
    idx: usize,
    old: &[f64],
    new: &mut [f64],
    damping: f64,
) -> Result<f64> {
    normalize_payload(kind, idx, new)?;
    if damping > 0.0 {
        for (n, o) in new.iter_mut().zip(old) {
            *n = damping * o + (1.0 - damping) * *n;
        }
    }
    Ok(match kind {
        PayloadKind::Complex => (new[0] - old[0]).hypot(new[1] - old[1]),
        _ => new
            .iter()
            .zip(old)
            .fold(0.0f64, |acc, (n, o)| acc.max((n - o).abs())),
    })
}

/// Checks a payload against its kind, absorbing rounding dust: scalars are
/// clamped into `[0, 1]`, pairs and simplices are renormalized.
fn normalize_payload(kind: PayloadKind, idx: usize, payload: &mut [f64]) -> Result<()> {
    let domain = |message: String| Error::NumericDomain { index: idx, message };
    if let Some(bad) = payload.iter().find(|x| !x.is_finite()) {
        return Err(domain(format!("non-finite entry {bad}")));
    }
    match kind {
        PayloadKind::Complex => {}
        PayloadKind::Probability => {
            let x = payload[0];
            if !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
                return Err(domain(format!("probability {x} outside [0, 1]")));
            }
            payload[0] = x.clamp(0.0, 1.0);
        }
        PayloadKind::Pair | PayloadKind::Simplex(_) => {
            if let Some(neg) = payload.iter().find(|&&x| x < -DOMAIN_SLACK) {
                return Err(domain(format!("negative entry {neg}")));
            }
            let total: f64 = payload.iter().map(|x| x.max(0.0)).sum();
            if (total - 1.0).abs() > SUM_SLACK {
                return Err(domain(format!("entries sum to {total}")));
            }
            for x in payload.iter_mut() {
                *x = x.max(0.0) / total;
            }
        }
    }
    Ok(())
}
