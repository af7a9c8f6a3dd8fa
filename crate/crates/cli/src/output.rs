use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use netmp::{Graph, SweepResult};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize)]
pub struct GraphInfo {
    pub source: String,
    pub n: usize,
    pub m: usize,
    /// SHA-256 of the canonical edge list.
    pub sha256: String,
}

impl GraphInfo {
    pub fn new(graph: &Graph, source: &str) -> GraphInfo {
        let digest = Sha256::digest(graph.to_edge_list().as_bytes());
        GraphInfo {
            source: source.to_string(),
            n: graph.n(),
            m: graph.m(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Name of the grid variable.
    pub parameter: String,
    pub seed: u64,
    pub config: Value,
    pub graph: GraphInfo,
    /// Command-specific results that are not per grid point.
    #[serde(skip_serializing_if = "IndexMap::is_empty")]
    pub extra: IndexMap<String, Value>,
    pub errors: Vec<Option<String>>,
}

/// Everything a command emits: `{meta, grid, series, per_node?}`.
#[derive(Debug, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub grid: Vec<f64>,
    pub series: IndexMap<String, Vec<f64>>,
    #[serde(skip_serializing_if = "IndexMap::is_empty")]
    pub per_node: IndexMap<String, Vec<Vec<f64>>>,
}

impl Report {
    pub fn new(meta: Meta, parameter: &str, grid: Vec<f64>) -> Report {
        let len = grid.len();
        Report {
            meta: Meta {
                parameter: parameter.to_string(),
                errors: vec![None; len],
                ..meta
            },
            grid,
            series: IndexMap::new(),
            per_node: IndexMap::new(),
        }
    }

    /// Adopts a sweep, adding a `converged` series (1 or 0).
    pub fn from_sweep(meta: Meta, sweep: SweepResult) -> Report {
        let mut report = Report::new(meta, &sweep.parameter, sweep.grid);
        report.series = sweep.series;
        report.series.insert(
            "converged".into(),
            sweep
                .reports
                .iter()
                .map(|r| if r.is_some_and(|r| r.converged) { 1.0 } else { 0.0 })
                .collect(),
        );
        report.per_node = sweep.per_node;
        report.meta.errors = sweep.errors;
        report
    }

    /// Failed points plus points that stopped before converging.
    pub fn unconverged(&self) -> usize {
        let flagged = self
            .series
            .get("converged")
            .map_or(0, |c| c.iter().filter(|&&c| c != 1.0).count());
        flagged.max(self.meta.errors.iter().filter(|e| e.is_some()).count())
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(self)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                text.push('\n');
                Ok(text)
            }
            Format::Csv => Ok(self.csv()),
        }
    }

    fn csv(&self) -> String {
        let meta = &self.meta;
        let mut out = String::new();
        out.push_str(&format!("# {} {}\n", meta.tool, meta.version));
        out.push_str(&format!("# command: {}\n", meta.command));
        out.push_str(&format!("# seed: {}\n", meta.seed));
        out.push_str(&format!("# config: {}\n", meta.config));
        out.push_str(&format!(
            "# graph: {} n={} m={} sha256={}\n",
            meta.graph.source, meta.graph.n, meta.graph.m, meta.graph.sha256
        ));
        for (key, value) in &meta.extra {
            match value {
                Value::String(text) => out.push_str(&format!("# {key}: {text}\n")),
                other => out.push_str(&format!("# {key}: {other}\n")),
            }
        }
        for (k, e) in meta.errors.iter().enumerate() {
            if let Some(e) = e {
                out.push_str(&format!("# error at {}={}: {e}\n", self.meta.parameter, number(self.grid[k])));
            }
        }

        let mut header = vec![self.meta.parameter.clone()];
        header.extend(self.series.keys().cloned());
        for (name, rows) in &self.per_node {
            let width = rows.iter().map(Vec::len).max().unwrap_or(0);
            header.extend((0..width).map(|i| format!("{name}[{i}]")));
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for (k, &x) in self.grid.iter().enumerate() {
            let mut row = vec![number(x)];
            row.extend(self.series.values().map(|s| number(s[k])));
            for rows in self.per_node.values() {
                let width = rows.iter().map(Vec::len).max().unwrap_or(0);
                row.extend((0..width).map(|i| rows[k].get(i).map_or(String::new(), |&v| number(v))));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Integers without a fractional part, everything else in shortest
/// round-trip form.
pub fn number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout without a path.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut file = tempfile::NamedTempFile::new_in(dir)?;
            file.write_all(text.as_bytes())?;
            file.as_file().sync_all()?;
            file.persist(path).map_err(|e| CliError::Io(e.error))?;
        }
    }
    Ok(())
}
