mod output;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use netmp::community::{overlap, sbm_bp, SbmParams};
use netmp::ising::{critical_point, sweep_magnetization};
use netmp::loopy::{LoopyMode, LoopyModel, DEFAULT_MC_SAMPLES};
use netmp::nonbacktracking::nb_leading_eigenvalue;
use netmp::oracles::percolation_sim;
use netmp::percolation::sweep_percolation;
use netmp::spectra::{spectral_density_grid, SpectralParams, DEFAULT_DAMPING, DEFAULT_ETA};
use netmp::{Execution, FixedPointConfig, Graph};
use serde_json::{json, Value};

use output::{emit, Format, GraphInfo, Meta, Report};
use source::{load, read_labels, GraphSpec, Grid, Loaded};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters; exit code 2.
    Usage(String),
    /// Failed I/O or computation; exit code 1.
    Runtime(String),
    Io(std::io::Error),
    /// An iteration that must converge did not; exit code 3.
    Unconverged(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<netmp::Error> for CliError {
    fn from(e: netmp::Error) -> Self {
        match e {
            netmp::Error::InvalidParameter(_) => CliError::Usage(e.to_string()),
            netmp::Error::NotConverged { .. } => CliError::Unconverged(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "netmp", version, about = "Message passing on sparse networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Edge-list file, one `u v` pair per line.
    #[arg(long, value_name = "PATH", required_unless_present = "gen", conflicts_with = "gen")]
    graph: Option<PathBuf>,
    /// Generated graph: er:N:P, regular:N:D, sbm:N:Q:CIN:COUT, tri:N:S or tree:N.
    #[arg(long, value_name = "SPEC")]
    gen: Option<GraphSpec>,
    #[arg(long, env = "NETMP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    /// Fraction of the old message kept on each update.
    #[arg(long)]
    damping: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file, written atomically; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PGrid {
    #[arg(long, required_unless_present = "p_grid", conflicts_with = "p_grid")]
    p: Option<f64>,
    /// Inclusive grid START:STOP:STEP.
    #[arg(long, value_name = "START:STOP:STEP")]
    p_grid: Option<Grid>,
}

impl PGrid {
    fn values(&self) -> Vec<f64> {
        match (&self.p, &self.p_grid) {
            (Some(p), _) => vec![*p],
            (None, Some(g)) => g.0.clone(),
            (None, None) => unreachable!("clap requires one of --p and --p-grid"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Giant-cluster size of bond percolation.
    Percolate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: PGrid,
        /// Also emit the per-node probability of lying outside the giant cluster.
        #[arg(long)]
        per_node: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Non-backtracking eigenvalue with the percolation and Ising thresholds.
    Threshold {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Ising magnetization over temperature.
    Ising {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, required_unless_present = "t_grid", conflicts_with = "t_grid")]
        t: Option<f64>,
        #[arg(long, value_name = "START:STOP:STEP")]
        t_grid: Option<Grid>,
        /// Also emit log Z and the free energy.
        #[arg(long)]
        free_energy: bool,
        #[arg(long)]
        per_node: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Spectral density of the adjacency matrix.
    Spectrum {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
        #[arg(long, value_name = "START:STOP:STEP", default_value = "-3:3:0.01", allow_hyphen_values = true)]
        x: Grid,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Block-model community inference.
    Communities {
        #[command(flatten)]
        source: SourceArgs,
        /// Group count; taken from an sbm generator when omitted.
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        cin: Option<f64>,
        #[arg(long)]
        cout: Option<f64>,
        /// Report the overlap with the planted labels, or with labels read
        /// from a file (one per line).
        #[arg(long, value_name = "PATH", num_args = 0..=1)]
        truth: Option<Option<PathBuf>>,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Percolation with short loops counted up to length r.
    LoopyPercolate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        r: usize,
        /// `exact`, or `mc:SAMPLES` for seeded sampling.
        #[arg(long, default_value = "exact")]
        mode: ModeArg,
        #[command(flatten)]
        grid: PGrid,
        #[arg(long)]
        per_node: bool,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Direct percolation simulation.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        grid: PGrid,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Also emit each node's frequency in the largest cluster.
        #[arg(long)]
        per_node: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Writes a generated graph as an edge list.
    Generate {
        spec: GraphSpec,
        #[arg(long, env = "NETMP_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Debug)]
struct ModeArg(Option<usize>);

impl FromStr for ModeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(ModeArg(None));
        }
        match s.strip_prefix("mc") {
            Some("") => Ok(ModeArg(Some(DEFAULT_MC_SAMPLES))),
            Some(rest) => rest
                .strip_prefix(':')
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k > 0)
                .map(|k| ModeArg(Some(k)))
                .ok_or_else(|| format!("bad sample count in {s:?}")),
            None => Err(format!("mode must be exact or mc:SAMPLES, found {s:?}")),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let (message, code) = match e {
                CliError::Usage(m) => (m, 2),
                CliError::Runtime(m) => (m, 1),
                CliError::Io(e) => (e.to_string(), 1),
                CliError::Unconverged(m) => (m, 3),
            };
            eprintln!("netmp: {message}");
            ExitCode::from(code)
        }
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(threads) = threads else {
        return Ok(());
    };
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        log::warn!("built without the parallel feature; running on one thread");
    }
    Ok(())
}

fn solver_config(solver: &SolverArgs, seed: u64, default_damping: f64) -> FixedPointConfig {
    FixedPointConfig {
        tol: solver.tol,
        max_iter: solver.max_iter,
        damping: solver.damping.unwrap_or(default_damping),
        seed,
        ..FixedPointConfig::default()
    }
}

fn config_json(config: &FixedPointConfig) -> Value {
    json!({ "tol": config.tol, "max_iter": config.max_iter, "damping": config.damping })
}

fn meta(command: &'static str, loaded: &Loaded, seed: u64, config: Value) -> Meta {
    Meta {
        tool: "netmp",
        version: env!("CARGO_PKG_VERSION"),
        command,
        parameter: String::new(),
        seed,
        config,
        graph: GraphInfo::new(&loaded.graph, &loaded.description),
        extra: IndexMap::new(),
        errors: Vec::new(),
    }
}

fn finish(report: Report, output: &OutputArgs) -> Result<ExitCode, CliError> {
    emit(&report.render(output.format)?, output.out.as_deref())?;
    let unconverged = report.unconverged();
    if unconverged > 0 {
        eprintln!("netmp: {unconverged} grid points did not converge");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn nonempty(graph: &Graph) -> Result<(), CliError> {
    if graph.n() == 0 {
        return Err(netmp::Error::EmptyGraph.into());
    }
    Ok(())
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Percolate { source, grid, per_node, solver, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            nonempty(&loaded.graph)?;
            let config = solver_config(&solver, source.seed, 0.0);
            let sweep = sweep_percolation(&loaded.graph, &grid.values(), &config, per_node)?;
            let meta = meta("percolate", &loaded, source.seed, config_json(&config));
            finish(Report::from_sweep(meta, sweep), &output)
        }
        Command::Threshold { source, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            nonempty(&loaded.graph)?;
            let lambda = if loaded.graph.m() == 0 { 0.0 } else { nb_leading_eigenvalue(&loaded.graph)? };
            let point = critical_point(lambda);
            let p_c = if lambda > 0.0 { (1.0 / lambda).min(1.0) } else { f64::NAN };
            let mut meta = meta("threshold", &loaded, source.seed, json!({}));
            let transition = if lambda == 0.0 {
                "no transition"
            } else if point.beta_c.is_none() {
                "percolation only, no finite Ising transition temperature"
            } else {
                "percolation and Ising"
            };
            meta.extra.insert("transition".into(), json!(transition));
            let mut report = Report::new(meta, "graph", vec![0.0]);
            report.series.insert("lambda".into(), vec![lambda]);
            report.series.insert("p_c".into(), vec![p_c]);
            report.series.insert("beta_c".into(), vec![point.beta_c.unwrap_or(f64::NAN)]);
            report.series.insert("T_c".into(), vec![point.t_c.unwrap_or(f64::NAN)]);
            finish(report, &output)
        }
        Command::Ising { source, t, t_grid, free_energy, per_node, solver, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            nonempty(&loaded.graph)?;
            let grid = match (t, t_grid) {
                (Some(t), _) => vec![t],
                (None, Some(g)) => g.0,
                (None, None) => unreachable!("clap requires one of --t and --t-grid"),
            };
            let config = solver_config(&solver, source.seed, 0.0);
            let mut sweep = sweep_magnetization(&loaded.graph, &grid, &config, per_node)?;
            let log_z = sweep.series.shift_remove("log_Z").unwrap_or_default();
            if free_energy {
                let n = loaded.graph.n() as f64;
                let f: Vec<f64> = grid.iter().zip(&log_z).map(|(t, z)| -t * z).collect();
                sweep.series.insert("F_per_node".into(), f.iter().map(|f| f / n).collect());
                sweep.series.insert("F".into(), f);
                sweep.series.insert("log_Z".into(), log_z);
            }
            let meta = meta("ising", &loaded, source.seed, config_json(&config));
            finish(Report::from_sweep(meta, sweep), &output)
        }
        Command::Spectrum { source, eta, x, solver, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            let config = solver_config(&solver, source.seed, DEFAULT_DAMPING);
            let params = SpectralParams { eta, x_grid: x.0 };
            let result = spectral_density_grid(&loaded.graph, &params, &config)?;
            let mut cfg = config_json(&config);
            cfg["eta"] = json!(eta);
            let mut meta = meta("spectrum", &loaded, source.seed, cfg);
            meta.extra.insert("mass".into(), json!(result.mass));
            finish(Report::from_sweep(meta, result.to_sweep()), &output)
        }
        Command::Communities { source, q, cin, cout, truth, solver, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            nonempty(&loaded.graph)?;
            let planted = match source.gen {
                Some(GraphSpec::Sbm { q, c_in, c_out, .. }) => Some((q, c_in, c_out)),
                _ => None,
            };
            let (q, c_in, c_out) = match (q, cin, cout, planted) {
                (q, Some(a), Some(b), planted) => (q.or(planted.map(|p| p.0)).unwrap_or(2), a, b),
                (q, None, None, Some((pq, a, b))) => (q.unwrap_or(pq), a, b),
                _ => {
                    return Err(CliError::Usage(
                        "--cin and --cout are required unless the graph comes from an sbm generator"
                            .into(),
                    ))
                }
            };
            let n = loaded.graph.n();
            let params = SbmParams::planted(n, q, c_in, c_out)?;
            let config = solver_config(&solver, source.seed, 0.0);
            let (_, result) = sbm_bp(&loaded.graph, &params, &config)?;
            let mut cfg = config_json(&config);
            cfg["q"] = json!(q);
            cfg["cin"] = json!(c_in);
            cfg["cout"] = json!(c_out);
            let mut meta = meta("communities", &loaded, source.seed, cfg);
            meta.extra.insert("iterations".into(), json!(result.report.iterations));
            meta.extra.insert("residual".into(), json!(result.report.residual));
            if let Some(truth) = truth {
                let labels = match truth {
                    Some(path) => read_labels(&path)?,
                    None => loaded.labels.clone().ok_or_else(|| {
                        CliError::Usage("--truth without a file needs an sbm generator".into())
                    })?,
                };
                meta.extra.insert("overlap".into(), json!(overlap(&result.hard_labels, &labels, q)?));
            }
            let mut report = Report::new(meta, "node", (0..n).map(|i| i as f64).collect());
            report
                .series
                .insert("label".into(), result.hard_labels.iter().map(|&l| l as f64).collect());
            for r in 0..q {
                report
                    .series
                    .insert(format!("marginal_{r}"), result.marginals.iter().map(|m| m[r]).collect());
            }
            let converged = result.report.converged;
            emit(&report.render(output.format)?, output.out.as_deref())?;
            if !converged {
                eprintln!("netmp: belief propagation did not converge");
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::LoopyPercolate { source, r, mode, grid, per_node, solver, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            nonempty(&loaded.graph)?;
            let config = solver_config(&solver, source.seed, 0.0);
            let mode = match mode.0 {
                None => LoopyMode::Exact,
                Some(samples) => LoopyMode::MonteCarlo { samples, seed: source.seed },
            };
            let model = LoopyModel::new(&loaded.graph, r, mode, Execution::default())?;
            let sweep = model.sweep(&grid.values(), &config, per_node)?;
            let mut cfg = config_json(&config);
            cfg["r"] = json!(r);
            cfg["mode"] = match mode {
                LoopyMode::Exact => json!("exact"),
                LoopyMode::MonteCarlo { samples, .. } => json!(format!("mc:{samples}")),
            };
            let mut meta = meta("loopy-percolate", &loaded, source.seed, cfg);
            meta.extra.insert("overlapping_neighborhoods".into(), json!(model.overlaps()));
            meta.extra.insert("max_neighborhood_edges".into(), json!(model.max_edges()));
            finish(Report::from_sweep(meta, sweep), &output)
        }
        Command::Simulate { source, grid, reps, per_node, output } => {
            set_threads(output.threads)?;
            let loaded = load(source.graph.as_ref(), source.gen.as_ref(), source.seed)?;
            let grid = grid.values();
            let meta = meta("simulate", &loaded, source.seed, json!({ "reps": reps }));
            let mut report = Report::new(meta, "p", grid.clone());
            let mut s = Vec::new();
            let mut se = Vec::new();
            let mut freq = Vec::new();
            for &p in &grid {
                let stats = percolation_sim(&loaded.graph, p, reps, source.seed)?;
                s.push(stats.mean_s);
                se.push(stats.std_error);
                freq.push(stats.frequencies);
            }
            report.series.insert("S".into(), s);
            report.series.insert("std_error".into(), se);
            if per_node {
                report.per_node.insert("frequency".into(), freq);
            }
            finish(report, &output)
        }
        Command::Generate { spec, seed, out, threads } => {
            set_threads(threads)?;
            let loaded = spec.generate(seed)?;
            let g = &loaded.graph;
            let mut text = format!("# netmp {} {spec} seed={seed} n={} m={}\n", env!("CARGO_PKG_VERSION"), g.n(), g.m());
            text.push_str(&g.to_edge_list());
            emit(&text, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
