//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process fails if any check fails.
//!
//! Run with `cargo test -p netmp-cli --test acceptance`.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use netmp::community::{overlap, sbm_bp, SbmParams};
use netmp::graph::{
    generate_er, generate_random_tree, generate_regular, generate_sbm, generate_triangle_regular,
};
use netmp::ising::{ising, sweep_magnetization, IsingParams};
use netmp::loopy::{LoopyMode, LoopyModel};
use netmp::nonbacktracking::nb_leading_eigenvalue;
use netmp::oracles::{
    brute_percolation_enumerate, dense_spectrum, histogram_density, ising_enumerate,
    percolation_sim, sbm_posterior_enumerate, tree_percolation_dp,
};
use netmp::percolation::{percolate, sweep_percolation};
use netmp::spectra::{
    default_spectral_config, kesten_mckay, spectral_density_grid, SpectralParams,
};
use netmp::{FixedPointConfig, Graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(u32, &str, Option<Duration>, Check); 13] = [
        (1, "tree exactness, percolation", Some(secs(5)), tree_percolation),
        (2, "percolation threshold", Some(secs(30)), percolation_threshold),
        (3, "K4 closed form", Some(secs(1)), k4_closed_form),
        (4, "tree exactness, Ising", Some(secs(30)), tree_ising),
        (5, "Ising transition", Some(secs(60)), ising_transition),
        (6, "Kesten-McKay agreement", Some(secs(300)), kesten_mckay_agreement),
        (7, "dense spectrum agreement", Some(secs(120)), dense_spectrum_agreement),
        (8, "block model posterior on trees", Some(secs(30)), sbm_trees),
        (9, "detectability threshold", Some(secs(300)), detectability),
        (10, "loopy reduction", Some(secs(10)), loopy_reduction),
        (11, "loopy accuracy against simulation", Some(secs(600)), loopy_accuracy),
        (12, "loopy against enumeration", Some(secs(120)), loopy_enumeration),
        (13, "CLI determinism", None, cli_determinism),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, limit, check) in checks {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|limit| elapsed <= limit);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {:<4} {name}: {} [{:.2} s{}{}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.map_or(String::new(), |l| format!(", limit {} s", l.as_secs())),
            if in_time { "" } else { ", too slow" },
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn tree_percolation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let n = rng.random_range(1..=64);
        let tree = generate_random_tree(n, seed).unwrap();
        for p in [0.2, 0.5, 0.8] {
            let mp = percolate(&tree, p, &FixedPointConfig::default()).unwrap();
            let dp = tree_percolation_dp(&tree, p).unwrap();
            worst = worst.max(max_abs_diff(&mp.node_probabilities, &dp));
        }
    }
    Outcome::new(worst < 1e-10, format!("max |diff| = {worst:.2e} over 300 cases"))
}

fn percolation_threshold() -> Outcome {
    let g = generate_regular(1000, 3, 7).unwrap();
    let lambda = nb_leading_eigenvalue(&g).unwrap();
    let p_c = 1.0 / lambda;
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.005).collect();
    let sweep = sweep_percolation(&g, &grid, &FixedPointConfig::default(), false).unwrap();
    let s = sweep.series("S").unwrap();
    match grid.iter().zip(s).find(|(_, &s)| s > 1e-3) {
        Some((&onset, _)) => Outcome::new(
            (onset - p_c).abs() <= 0.01,
            format!("onset p = {onset:.3}, 1/lambda = {p_c:.4}"),
        ),
        None => Outcome::new(false, "S never exceeds 1e-3"),
    }
}

fn k4_closed_form() -> Outcome {
    let k4 = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    let p: f64 = 0.7;
    // mu = (1 - p + p mu)^2, smaller root.
    let (a, b, c) = (p * p, 2.0 * p * (1.0 - p) - 1.0, (1.0 - p) * (1.0 - p));
    let mu = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    let s_exact = 1.0 - (1.0 - p + p * mu).powi(3);
    let config = FixedPointConfig {
        tol: 1e-13,
        ..FixedPointConfig::default()
    };
    let messages = netmp::percolation::percolation_messages(&k4, p, &config).unwrap().0;
    let r = percolate(&k4, p, &config).unwrap();
    let msg_err = messages.values().iter().map(|m| (m - mu).abs()).fold(0.0, f64::max);
    let s_err = (r.giant_cluster_fraction - s_exact).abs();
    Outcome::new(
        msg_err < 1e-8 && s_err < 1e-8 && (mu - 0.183673).abs() < 1e-6 && (s_exact - 0.921283).abs() < 1e-6,
        format!(
            "messages {mu:.6} (err {msg_err:.1e}), S {:.6} (err {s_err:.1e})",
            r.giant_cluster_fraction
        ),
    )
}

fn tree_ising() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_m, mut worst_z): (f64, f64) = (0.0, 0.0);
    for seed in 0..50 {
        let n = rng.random_range(1..=14);
        let tree = generate_random_tree(n, 1000 + seed).unwrap();
        for beta in [0.3, 0.7, 1.2] {
            let params = IsingParams::new(beta).unwrap();
            let mp = ising(&tree, params, &FixedPointConfig::default()).unwrap();
            let exact = ising_enumerate(&tree, beta).unwrap();
            for (a, b) in mp.marginals.iter().zip(&exact.marginals) {
                worst_m = worst_m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
            }
            worst_z = worst_z.max((mp.log_z - exact.log_z).abs());
        }
    }
    Outcome::new(
        worst_m < 1e-8 && worst_z < 1e-8,
        format!("max |marginal diff| = {worst_m:.2e}, max |log Z diff| = {worst_z:.2e}"),
    )
}

fn ising_transition() -> Outcome {
    let g = generate_regular(1000, 3, 11).unwrap();
    let lambda = nb_leading_eigenvalue(&g).unwrap();
    let t_c = 1.0 / (1.0 / lambda).atanh();
    let grid: Vec<f64> = (25..=150).map(|k| k as f64 * 0.02).collect();
    let sweep = sweep_magnetization(&g, &grid, &FixedPointConfig::default(), false).unwrap();
    let m = sweep.series("abs_m").unwrap();
    match grid.iter().zip(m).find(|(_, &m)| m < 1e-3) {
        Some((&t, _)) => Outcome::new(
            (t - t_c).abs() <= 0.04,
            format!("|m| < 1e-3 from T = {t:.2}, T_c = {t_c:.4}"),
        ),
        None => Outcome::new(false, "|m| never drops below 1e-3"),
    }
}

fn kesten_mckay_agreement() -> Outcome {
    let g = generate_regular(10_000, 3, 5).unwrap();
    let params = SpectralParams {
        eta: 0.01,
        x_grid: (0..=600).map(|k| -3.0 + k as f64 * 0.01).collect(),
    };
    let r = spectral_density_grid(&g, &params, &default_spectral_config()).unwrap();
    let failures = r.errors.iter().filter(|e| e.is_some()).count();
    let mean = r
        .x
        .iter()
        .zip(&r.density)
        .map(|(&x, &rho)| (rho - kesten_mckay(3, x).unwrap()).abs())
        .sum::<f64>()
        / r.x.len() as f64;
    let at_zero = r.density[300];
    Outcome::new(
        failures == 0 && mean < 0.01 && (at_zero - 0.1501).abs() < 0.01,
        format!("mean |diff| = {mean:.4}, rho(0) = {at_zero:.4}, failed points {failures}"),
    )
}

fn dense_spectrum_agreement() -> Outcome {
    let n = 1000;
    let g = generate_er(n, 5.0 / (n - 1) as f64, 3).unwrap();
    let eig = dense_spectrum(&g).unwrap();
    let width = 0.1;
    let half = (eig.iter().fold(0.0f64, |a, &x| a.max(x.abs())) + 2.0).ceil();
    let bins = (2.0 * half / width).round() as usize;
    let start = -half;
    let hist = histogram_density(&eig, start, width, bins);
    // Bin averages of the message-passing density from ten midpoints per bin.
    let sub = 10;
    let params = SpectralParams {
        eta: 0.05,
        x_grid: (0..bins * sub)
            .map(|k| start + (k as f64 + 0.5) * width / sub as f64)
            .collect(),
    };
    let r = spectral_density_grid(&g, &params, &default_spectral_config()).unwrap();
    let failures = r.errors.iter().filter(|e| e.is_some()).count();
    let l1: f64 = (0..bins)
        .map(|b| {
            let avg = r.density[b * sub..(b + 1) * sub].iter().sum::<f64>() / sub as f64;
            (avg - hist[b]).abs() * width
        })
        .sum();
    Outcome::new(
        failures == 0 && l1 < 0.05,
        format!("L1 = {l1:.4} over [{start}, {half}], failed points {failures}"),
    )
}

fn sbm_trees() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // 1 - omega = u u^T, so the absent-edge factors reduce to node fields.
    let u = [0.9, 0.6];
    let omega: Vec<Vec<f64>> = (0..2)
        .map(|r| (0..2).map(|s| 1.0 - u[r] * u[s]).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let n = rng.random_range(2..=10);
        let a: f64 = rng.random_range(0.15..0.45);
        let priors = vec![a, 1.0 - a];
        let tree = generate_random_tree(n, 2000 + seed).unwrap();
        let params = SbmParams::new(priors.clone(), omega.clone()).unwrap();
        let config = FixedPointConfig {
            tol: 1e-13,
            ..FixedPointConfig::default()
        };
        let (_, bp) = sbm_bp(&tree, &params, &config).unwrap();
        let exact = sbm_posterior_enumerate(&tree, &priors, &omega).unwrap();
        for (x, y) in bp.marginals.iter().zip(&exact) {
            worst = worst.max(max_abs_diff(x, y));
        }
    }
    Outcome::new(worst < 1e-8, format!("max |diff| = {worst:.2e} over 20 trees"))
}

fn detectability() -> Outcome {
    let n = 10_000;
    let run = |c_in: f64, c_out: f64| -> Vec<f64> {
        (0..10)
            .map(|seed| {
                let params = SbmParams::planted(n, 2, c_in, c_out).unwrap();
                let planted = generate_sbm(n, &params.priors, &params.omega, 100 + seed).unwrap();
                let config = FixedPointConfig {
                    seed,
                    ..FixedPointConfig::default()
                };
                let (_, r) = sbm_bp(&planted.graph, &params, &config).unwrap();
                overlap(&r.hard_labels, &planted.labels, 2).unwrap()
            })
            .collect()
    };
    let strong = run(7.0, 1.0);
    let weak = run(5.0, 3.0);
    let good = strong.iter().filter(|&&o| o >= 0.5).count();
    let null = weak.iter().filter(|&&o| o <= 0.05).count();
    let fmt = |v: &[f64]| v.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>().join(" ");
    Outcome::new(
        good >= 8 && null >= 8,
        format!(
            "(7,1): {good}/10 >= 0.5 [{}]; (5,3): {null}/10 <= 0.05 [{}]",
            fmt(&strong),
            fmt(&weak)
        ),
    )
}

fn petersen() -> Graph {
    let mut edges = Vec::new();
    for k in 0..5 {
        edges.push((k, (k + 1) % 5));
        edges.push((k, k + 5));
        edges.push((5 + k, 5 + (k + 2) % 5));
    }
    Graph::new(10, edges).unwrap()
}

fn loopy_reduction() -> Outcome {
    // Petersen graph (girth 5) and an 8-cycle with a pendant tree.
    let graphs = [
        petersen(),
        Graph::new(11, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 8), (8, 9), (8, 10)])
            .unwrap(),
    ];
    let config = FixedPointConfig::default();
    let mut worst: f64 = 0.0;
    for g in &graphs {
        for r in [2, 4] {
            let model = LoopyModel::new(g, r, LoopyMode::Exact, config.execution).unwrap();
            for p in [0.2, 0.4, 0.5, 0.6, 0.8, 1.0] {
                let loopy = model.percolate(p, &config).unwrap();
                let standard = percolate(g, p, &config).unwrap();
                worst = worst.max(max_abs_diff(&loopy.node_probabilities, &standard.node_probabilities));
            }
        }
    }
    Outcome::new(worst < 1e-10, format!("max |diff| = {worst:.2e}"))
}

fn loopy_accuracy() -> Outcome {
    let g = generate_triangle_regular(201, 2, 9).unwrap();
    let grid: Vec<f64> = (2..=18).map(|k| k as f64 * 0.05).collect();
    let config = FixedPointConfig::default();
    let model = LoopyModel::new(&g, 4, LoopyMode::Exact, config.execution).unwrap();
    let loopy = model.sweep(&grid, &config, false).unwrap();
    let standard = sweep_percolation(&g, &grid, &config, false).unwrap();
    let (mut worst_loopy, mut worst_standard): (f64, f64) = (0.0, 0.0);
    let mut rows = Vec::new();
    for (k, &p) in grid.iter().enumerate() {
        let sim = percolation_sim(&g, p, 5000, 40 + k as u64).unwrap();
        let (sl, ss) = (loopy.series("S").unwrap()[k], standard.series("S").unwrap()[k]);
        worst_loopy = worst_loopy.max((sl - sim.mean_s).abs());
        worst_standard = worst_standard.max((ss - sim.mean_s).abs());
        rows.push(format!("{p:.2}:{:.3}/{sl:.3}/{ss:.3}", sim.mean_s));
    }
    Outcome::new(
        worst_loopy <= worst_standard && worst_loopy <= 0.02,
        format!(
            "max |loopy - sim| = {worst_loopy:.4}, max |standard - sim| = {worst_standard:.4} \
             (p:sim/loopy/standard {})",
            rows.join(" ")
        ),
    )
}

fn loopy_enumeration() -> Outcome {
    // Triangles 0-1-2 and 2-3-4 sharing node 2, a square 4-5-6-7, a diagonal
    // 1-3, a chord 0-3 and a pendant 7-8: 13 edges. r = n covers every cycle.
    let g = Graph::new(
        9,
        [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4), (1, 3), (4, 5), (5, 6), (6, 7), (7, 4), (7, 8), (0, 3)],
    )
    .unwrap();
    let config = FixedPointConfig::default();
    let model = LoopyModel::new(&g, g.n(), LoopyMode::Exact, config.execution).unwrap();
    let mut ok = true;
    let mut rows = Vec::new();
    for p in [0.3, 0.5, 0.7] {
        let exact = brute_percolation_enumerate(&g, p).unwrap();
        let loopy = model.percolate(p, &config).unwrap();
        let standard = percolate(&g, p, &config).unwrap();
        let dev = |mu: &[f64]| {
            mu.iter()
                .zip(&exact.membership)
                .map(|(m, e)| (1.0 - m - e).abs())
                .fold(0.0, f64::max)
        };
        let (dl, ds) = (dev(&loopy.node_probabilities), dev(&standard.node_probabilities));
        ok &= dl <= 0.02 && dl <= ds;
        rows.push(format!("p={p}: loopy {dl:.4}, standard {ds:.4}"));
    }
    Outcome::new(ok, format!("max per-node deviation {}", rows.join("; ")))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["percolate", "--gen", "regular:1000:3", "--p-grid", "0:1:0.02", "--format", "csv"],
        &["percolate", "--gen", "regular:1000:3", "--p", "0", "--format", "json"],
        &["threshold", "--gen", "regular:1000:3"],
        &["ising", "--gen", "regular:1000:3", "--t-grid", "1:3:0.05", "--format", "json"],
        &["spectrum", "--gen", "regular:10000:3", "--eta", "0.01", "--x", "-3:3:0.01"],
        &["communities", "--gen", "sbm:10000:2:7:1", "--truth", "--format", "json"],
        &["loopy-percolate", "--gen", "tri:201:2", "--r", "4", "--p-grid", "0.1:0.9:0.1"],
        &["loopy-percolate", "--gen", "tri:201:2", "--r", "4", "--mode", "mc:10", "--p", "0.5"],
        &["simulate", "--gen", "tri:201:2", "--p-grid", "0.1:0.9:0.1", "--reps", "200"],
        &["generate", "regular:4:3"],
    ];
    let mut mismatches = Vec::new();
    for (k, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (rep, threads) in [(0, "1"), (1, "1"), (2, "4")] {
            let path = dir.path().join(format!("run{k}-{rep}"));
            let status = Command::new(bin())
                .args(*args)
                .args(["--seed", "1", "--threads", threads, "--out"])
                .arg(&path)
                .status()
                .unwrap();
            // Exit code 3 flags unconverged grid points, e.g. at a critical p.
            if !matches!(status.code(), Some(0 | 3)) {
                mismatches.push(format!("{} exited with {status}", args[0]));
            }
            outputs.push(std::fs::read(&path).unwrap_or_default());
        }
        if outputs.iter().any(|o| o != &outputs[0] || o.is_empty()) {
            mismatches.push(format!("{} output differs", args.join(" ")));
        }
    }
    Outcome::new(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} commands, 3 runs each, byte-identical", runs.len())
        } else {
            mismatches.join("; ")
        },
    )
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_netmp"))
}
