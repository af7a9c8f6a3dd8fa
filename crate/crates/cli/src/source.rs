use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use netmp::community::SbmParams;
use netmp::graph::{
    generate_er, generate_random_tree, generate_regular, generate_sbm, generate_triangle_regular,
    read_edge_list,
};
use netmp::Graph;

use crate::CliError;

/// Generator mini-language: `er:n:p`, `regular:n:d`, `sbm:n:q:cin:cout`,
/// `tri:n:s` or `tree:n`.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSpec {
    Er { n: usize, p: f64 },
    Regular { n: usize, d: usize },
    Sbm { n: usize, q: usize, c_in: f64, c_out: f64 },
    Triangles { n: usize, single: usize },
    Tree { n: usize },
}

fn field<T: FromStr>(parts: &[&str], k: usize, name: &str) -> Result<T, String> {
    parts[k]
        .parse()
        .map_err(|_| format!("cannot parse {name} from {:?}", parts[k]))
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let arity = |k: usize| {
            if parts.len() == k + 1 {
                Ok(())
            } else {
                Err(format!("{:?} expects {k} arguments in {s:?}", parts[0]))
            }
        };
        match parts[0] {
            "er" => {
                arity(2)?;
                Ok(GraphSpec::Er { n: field(&parts, 1, "n")?, p: field(&parts, 2, "p")? })
            }
            "regular" => {
                arity(2)?;
                Ok(GraphSpec::Regular { n: field(&parts, 1, "n")?, d: field(&parts, 2, "d")? })
            }
            "sbm" => {
                arity(4)?;
                Ok(GraphSpec::Sbm {
                    n: field(&parts, 1, "n")?,
                    q: field(&parts, 2, "q")?,
                    c_in: field(&parts, 3, "cin")?,
                    c_out: field(&parts, 4, "cout")?,
                })
            }
            "tri" => {
                arity(2)?;
                Ok(GraphSpec::Triangles { n: field(&parts, 1, "n")?, single: field(&parts, 2, "s")? })
            }
            "tree" => {
                arity(1)?;
                Ok(GraphSpec::Tree { n: field(&parts, 1, "n")? })
            }
            other => Err(format!(
                "unknown generator {other:?}; expected er, regular, sbm, tri or tree"
            )),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Er { n, p } => write!(f, "er:{n}:{p}"),
            GraphSpec::Regular { n, d } => write!(f, "regular:{n}:{d}"),
            GraphSpec::Sbm { n, q, c_in, c_out } => write!(f, "sbm:{n}:{q}:{c_in}:{c_out}"),
            GraphSpec::Triangles { n, single } => write!(f, "tri:{n}:{single}"),
            GraphSpec::Tree { n } => write!(f, "tree:{n}"),
        }
    }
}

/// A graph together with planted labels when the generator has them.
pub struct Loaded {
    pub graph: Graph,
    pub labels: Option<Vec<usize>>,
    pub description: String,
}

impl GraphSpec {
    pub fn generate(&self, seed: u64) -> Result<Loaded, CliError> {
        let (graph, labels) = match *self {
            GraphSpec::Er { n, p } => (generate_er(n, p, seed)?, None),
            GraphSpec::Regular { n, d } => (generate_regular(n, d, seed)?, None),
            GraphSpec::Sbm { n, q, c_in, c_out } => {
                let params = SbmParams::planted(n, q, c_in, c_out)?;
                let planted = generate_sbm(n, &params.priors, &params.omega, seed)?;
                (planted.graph, Some(planted.labels))
            }
            GraphSpec::Triangles { n, single } => (generate_triangle_regular(n, single, seed)?, None),
            GraphSpec::Tree { n } => (generate_random_tree(n, seed)?, None),
        };
        Ok(Loaded {
            graph,
            labels,
            description: format!("{self} (seed {seed})"),
        })
    }
}

pub fn load(path: Option<&PathBuf>, spec: Option<&GraphSpec>, seed: u64) -> Result<Loaded, CliError> {
    match (path, spec) {
        (Some(path), None) => {
            let (graph, stats) = read_edge_list(path)?;
            if stats.self_loops + stats.duplicates > 0 {
                log::warn!(
                    "dropped {} self-loops and {} duplicate edges from {}",
                    stats.self_loops,
                    stats.duplicates,
                    path.display()
                );
            }
            Ok(Loaded {
                graph,
                labels: None,
                description: path.display().to_string(),
            })
        }
        (None, Some(spec)) => spec.generate(seed),
        _ => Err(CliError::Usage("give exactly one of --graph and --gen".into())),
    }
}

/// Inclusive grid `start:stop:step`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected START:STOP:STEP, found {s:?}"));
        }
        let start: f64 = field(&parts, 0, "start")?;
        let stop: f64 = field(&parts, 1, "stop")?;
        let step: f64 = field(&parts, 2, "step")?;
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(format!("grid {s:?} needs a positive step and start <= stop"));
        }
        let count = ((stop - start) / step).round() as usize + 1;
        if count > 10_000_000 {
            return Err(format!("grid {s:?} has {count} points"));
        }
        // Rounded to 12 decimals so that 0.1 * 3 prints as 0.3.
        Ok(Grid(
            (0..count)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect(),
        ))
    }
}

/// Reads one group label per line.
pub fn read_labels(path: &PathBuf) -> Result<Vec<usize>, CliError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(k, l)| {
            l.trim()
                .parse()
                .map_err(|_| CliError::Runtime(format!("{}:{}: bad label {l:?}", path.display(), k + 1)))
        })
        .collect()
}
