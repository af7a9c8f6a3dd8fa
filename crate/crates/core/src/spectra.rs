//! Spectral density of the adjacency matrix by message passing.
//!
//! At `z = x + i eta` the message `mu[i <- j](z)` is the generating function
//! of excursions from `j` that avoid `i`, and satisfies
//! `mu[i <- j] = z^-2 / (1 - sum_{k in N(j) \ i} mu[j <- k])`. The density is
//! then `rho(x) = Im[-1/(n pi z) sum_i 1 / (1 - sum_{j in N(i)} mu[i <- j])]`,
//! the eigenvalue density broadened by a Lorentzian of half-width `eta`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{
    initial_field, iterate, FixedPointConfig, Init, IterationReport, MessageField, MessageUpdate,
    PayloadKind,
};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nonbacktracking::HalfEdgeIndex;
use crate::sweep::SweepResult;

pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_DAMPING: f64 = 0.5;
const SINGULAR: f64 = 1e-14;

/// Engine defaults for the complex iteration: damping 0.5, zero start.
pub fn default_spectral_config() -> FixedPointConfig {
    FixedPointConfig {
        damping: DEFAULT_DAMPING,
        ..Default::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralParams {
    pub eta: f64,
    pub x_grid: Vec<f64>,
}

impl SpectralParams {
    pub fn validate(&self) -> Result<()> {
        check_eta(self.eta)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eta = {eta} must be positive")))
    }
}

struct SpectralUpdate<'a> {
    index: &'a HalfEdgeIndex,
    inv_z2: Complex64,
}

impl MessageUpdate for SpectralUpdate<'_> {
    fn kind(&self) -> PayloadKind {
        PayloadKind::Complex
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn update(&self, idx: usize, field: &MessageField, out: &mut [f64]) -> Result<()> {
        let sum: Complex64 = self.index.successors(idx).map(|f| field.complex(f)).sum();
        let denom = Complex64::new(1.0, 0.0) - sum;
        if denom.norm() < SINGULAR {
            return Err(Error::SingularUpdate { index: idx });
        }
        let mu = self.inv_z2 / denom;
        out[0] = mu.re;
        out[1] = mu.im;
        Ok(())
    }
}

/// Solves the message equations at complex `z` with `Im z > 0`.
pub fn spectral_messages(
    graph: &Graph,
    z: Complex64,
    config: &FixedPointConfig,
) -> Result<(MessageField, IterationReport)> {
    let index = HalfEdgeIndex::new(graph);
    solve(&index, z, config, None)
}

fn solve(
    index: &HalfEdgeIndex,
    z: Complex64,
    config: &FixedPointConfig,
    warm: Option<MessageField>,
) -> Result<(MessageField, IterationReport)> {
    check_eta(z.im)?;
    let field = match warm {
        Some(field) => field,
        None => initial_field(
            PayloadKind::Complex,
            index.len(),
            &config.init_or(Init::Zeros),
            config.seed,
        )?,
    };
    let mut update = SpectralUpdate {
        index,
        inv_z2: (z * z).inv(),
    };
    iterate(&mut update, field, config)
}

/// Density at `z` from converged messages, clamped at zero.
pub fn density_from_messages(graph: &Graph, messages: &MessageField, z: Complex64) -> Result<f64> {
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    if messages.kind() != PayloadKind::Complex || messages.len() != 2 * graph.m() {
        return Err(Error::LengthMismatch {
            expected: 2 * graph.m(),
            found: messages.len(),
        });
    }
    let offsets = graph.offsets();
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..graph.n() {
        let sum: Complex64 = (offsets[i]..offsets[i + 1]).map(|e| messages.complex(e)).sum();
        let denom = Complex64::new(1.0, 0.0) - sum;
        if denom.norm() < SINGULAR {
            return Err(Error::SingularUpdate { index: i });
        }
        total += denom.inv();
    }
    let rho = (-total / (graph.n() as f64 * PI * z)).im;
    Ok(rho.max(0.0))
}

/// `rho(x)` at broadening `eta`.
pub fn spectral_density_at(
    graph: &Graph,
    x: f64,
    eta: f64,
    config: &FixedPointConfig,
) -> Result<(f64, IterationReport)> {
    let z = Complex64::new(x, eta);
    let (messages, report) = spectral_messages(graph, z, config)?;
    Ok((density_from_messages(graph, &messages, z)?, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralDensityResult {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    pub reports: Vec<Option<IterationReport>>,
    pub errors: Vec<Option<String>>,
    /// Trapezoid integral of the density over the grid.
    pub mass: f64,
}

impl SpectralDensityResult {
    /// Series: `rho`, `iterations`, `residual`.
    pub fn to_sweep(&self) -> SweepResult {
        let mut sweep = SweepResult::new("x", self.x.clone());
        *sweep.series_mut("rho") = self.density.clone();
        *sweep.series_mut("iterations") = self
            .reports
            .iter()
            .map(|r| r.map_or(f64::NAN, |r| r.iterations as f64))
            .collect();
        *sweep.series_mut("residual") = self
            .reports
            .iter()
            .map(|r| r.map_or(f64::NAN, |r| r.residual))
            .collect();
        sweep.reports = self.reports.clone();
        sweep.errors = self.errors.clone();
        sweep
    }
}

/// Density over `params.x_grid`, each point warm-started from the previous
/// one. Failed points are recorded and leave `NaN` in the density.
pub fn spectral_density_grid(
    graph: &Graph,
    params: &SpectralParams,
    config: &FixedPointConfig,
) -> Result<SpectralDensityResult> {
    params.validate()?;
    if graph.n() == 0 {
        return Err(Error::EmptyGraph);
    }
    let index = HalfEdgeIndex::new(graph);
    let len = params.x_grid.len();
    let mut density = vec![f64::NAN; len];
    let mut reports = vec![None; len];
    let mut errors = vec![None; len];
    let mut warm = None;
    for (k, &x) in params.x_grid.iter().enumerate() {
        let z = Complex64::new(x, params.eta);
        let outcome = solve(&index, z, config, warm.take()).and_then(|(messages, report)| {
            let rho = density_from_messages(graph, &messages, z)?;
            Ok((messages, report, rho))
        });
        match outcome {
            Ok((messages, report, rho)) => {
                density[k] = rho;
                reports[k] = Some(report);
                warm = Some(messages);
            }
            Err(e) => errors[k] = Some(e.to_string()),
        }
    }
    let mass = trapezoid(&params.x_grid, &density);
    Ok(SpectralDensityResult {
        x: params.x_grid.clone(),
        density,
        reports,
        errors,
        mass,
    })
}

/// Trapezoid rule, skipping intervals with a non-finite endpoint.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .filter(|v| v.is_finite())
        .sum()
}

/// Kesten–McKay density of an infinite random `d`-regular graph.
pub fn kesten_mckay(d: usize, x: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("degree {d} must be at least 2")));
    }
    let d = d as f64;
    let edge = 4.0 * (d - 1.0);
    if x * x >= edge {
        return Ok(0.0);
    }
    Ok(d / (2.0 * PI) * (edge - x * x).sqrt() / (d * d - x * x))
}

/// Message value shared by every directed edge of a `d`-regular graph: the
/// root of `(d - 1) mu^2 - mu + z^-2 = 0` that behaves as `z^-2` for large
/// `z`, singled out by `Im(z mu) < 0`.
pub fn regular_message(d: usize, z: Complex64) -> Result<Complex64> {
    check_eta(z.im)?;
    let inv_z2 = (z * z).inv();
    if d == 0 {
        return Err(Error::InvalidParameter("degree 0 has no messages".into()));
    }
    if d == 1 {
        return Ok(inv_z2);
    }
    let a = (d - 1) as f64;
    let disc = (Complex64::new(1.0, 0.0) - 4.0 * a * inv_z2).sqrt();
    let roots = [(1.0 + disc) / (2.0 * a), (1.0 - disc) / (2.0 * a)];
    Ok(roots
        .into_iter()
        .find(|mu| (z * mu).im < 0.0)
        .unwrap_or(roots[1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge() -> Graph {
        Graph::new(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn single_edge_messages() {
        let z = Complex64::new(0.3, 0.01);
        let (m, report) = spectral_messages(&edge(), z, &default_spectral_config()).unwrap();
        assert!(report.converged);
        let expect = (z * z).inv();
        for e in 0..2 {
            assert!((m.complex(e) - expect).norm() < 1e-9 * expect.norm());
        }
    }

    #[test]
    fn single_edge_density() {
        let eta = 0.01;
        let config = default_spectral_config();
        let (rho0, _) = spectral_density_at(&edge(), 0.0, eta, &config).unwrap();
        let exact = eta / (PI * (1.0 + eta * eta));
        assert!((rho0 - exact).abs() < 1e-8, "{rho0}");
        let (rho1, _) = spectral_density_at(&edge(), 1.0, eta, &config).unwrap();
        assert!((rho1 - 15.9155).abs() < 0.01, "{rho1}");
        let (far, _) = spectral_density_at(&edge(), 100.0, eta, &config).unwrap();
        assert!(far < 1e-5);
    }

    #[test]
    fn empty_graph_is_lorentzian() {
        let g = Graph::empty(5);
        let eta = 0.01;
        let grid: Vec<f64> = (-2000..=2000).map(|k| k as f64 * 0.005).collect();
        let r = spectral_density_grid(
            &g,
            &SpectralParams { eta, x_grid: grid },
            &default_spectral_config(),
        )
        .unwrap();
        assert!((r.density[2000] - 1.0 / (PI * eta)).abs() < 1e-9);
        assert!((r.mass - 1.0).abs() < 0.01, "{}", r.mass);
    }

    #[test]
    fn kesten_mckay_values() {
        let v = kesten_mckay(3, 0.0).unwrap();
        assert!((v - 2f64.sqrt() / (3.0 * PI)).abs() < 1e-15);
        assert!((v - 0.150053).abs() < 1e-6);
        assert_eq!(kesten_mckay(3, 8f64.sqrt() + 1e-9).unwrap(), 0.0);
        assert!(kesten_mckay(1, 0.0).is_err());
        let edge = 8f64.sqrt();
        let n = 200_000;
        let h = 2.0 * edge / n as f64;
        let xs: Vec<f64> = (0..=n).map(|k| -edge + k as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| kesten_mckay(3, x).unwrap()).collect();
        assert!((trapezoid(&xs, &ys) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn regular_graph_matches_quadratic_root() {
        let k4 = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        for x in [-2.5, -0.7, 0.0, 1.3, 3.5] {
            let z = Complex64::new(x, 0.05);
            let (m, report) = spectral_messages(&k4, z, &default_spectral_config()).unwrap();
            assert!(report.converged);
            let root = regular_message(3, z).unwrap();
            for e in 0..m.len() {
                assert!((m.complex(e) - root).norm() < 1e-8, "x = {x}");
            }
        }
    }

    #[test]
    fn rejects_nonpositive_eta() {
        assert!(spectral_density_at(&edge(), 0.0, 0.0, &default_spectral_config()).is_err());
    }
}
