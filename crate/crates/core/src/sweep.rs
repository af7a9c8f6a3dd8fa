use indexmap::IndexMap;
use serde::Serialize;

use crate::engine::IterationReport;

/// Outputs of a one-parameter sweep, one entry per grid point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameter: String,
    pub grid: Vec<f64>,
    /// Named scalar series, each as long as `grid`.
    pub series: IndexMap<String, Vec<f64>>,
    /// Named per-node arrays, one array per grid point.
    #[serde(skip_serializing_if = "IndexMap::is_empty")]
    pub per_node: IndexMap<String, Vec<Vec<f64>>>,
    /// `None` where the point failed before iterating.
    pub reports: Vec<Option<IterationReport>>,
    /// Error message for points that failed.
    pub errors: Vec<Option<String>>,
}

impl SweepResult {
    pub fn new(parameter: &str, grid: Vec<f64>) -> SweepResult {
        let len = grid.len();
        SweepResult {
            parameter: parameter.to_string(),
            grid,
            series: IndexMap::new(),
            per_node: IndexMap::new(),
            reports: vec![None; len],
            errors: vec![None; len],
        }
    }

    /// Returns the series called `name`, creating it filled with NaN.
    pub fn series_mut(&mut self, name: &str) -> &mut Vec<f64> {
        let len = self.grid.len();
        self.series
            .entry(name.to_string())
            .or_insert_with(|| vec![f64::NAN; len])
    }

    pub fn per_node_mut(&mut self, name: &str) -> &mut Vec<Vec<f64>> {
        let len = self.grid.len();
        self.per_node
            .entry(name.to_string())
            .or_insert_with(|| vec![Vec::new(); len])
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.get(name).map(Vec::as_slice)
    }

    /// True when every point iterated without error and converged.
    pub fn all_converged(&self) -> bool {
        self.errors.iter().all(Option::is_none)
            && self
                .reports
                .iter()
                .all(|r| r.is_some_and(|r| r.converged))
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}
