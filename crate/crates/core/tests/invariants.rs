mod common;

use common::max_abs_diff;
use netmp::community::{sbm_bp, SbmParams};
use netmp::percolation::{percolate, sweep_percolation};
use netmp::{FixedPointConfig, Init};
use proptest::prelude::*;

fn tight() -> FixedPointConfig {
    FixedPointConfig {
        tol: 1e-13,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn percolation_is_permutation_invariant(
        (g, perm) in common::graphs(1, 9).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), common::permutations(n))
        }),
        p in 0.0..=1.0f64,
    ) {
        let a = percolate(&g, p, &tight()).unwrap();
        let b = percolate(&g.relabel(&perm).unwrap(), p, &tight()).unwrap();
        let moved: Vec<f64> = perm.iter().map(|&k| b.node_probabilities[k]).collect();
        prop_assert!(max_abs_diff(&a.node_probabilities, &moved) < 1e-5);
        prop_assert!((a.giant_cluster_fraction - b.giant_cluster_fraction).abs() < 1e-5);
    }

    #[test]
    fn giant_cluster_grows_with_p(g in common::graphs(2, 9)) {
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let sweep = sweep_percolation(&g, &grid, &tight(), true).unwrap();
        let s = sweep.series("S").unwrap();
        prop_assert!(s.iter().all(|s| (0.0..=1.0).contains(s)));
        for w in s.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-6, "S fell from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn node_probabilities_are_probabilities(g in common::graphs(1, 9), p in 0.0..=1.0f64) {
        let r = percolate(&g, p, &FixedPointConfig::default()).unwrap();
        prop_assert!(r.node_probabilities.iter().all(|m| (0.0..=1.0).contains(m)));
    }

    #[test]
    fn sbm_messages_stay_on_the_simplex(
        g in common::graphs(2, 9),
        a in 0.05..0.95f64,
        w in proptest::collection::vec(0.05..0.95f64, 3),
        seed in any::<u64>(),
    ) {
        let params = SbmParams::new(
            vec![a, 1.0 - a],
            vec![vec![w[0], w[1]], vec![w[1], w[2]]],
        ).unwrap();
        let config = FixedPointConfig { max_iter: 300, seed, ..Default::default() };
        let (messages, result) = sbm_bp(&g, &params, &config).unwrap();
        for chunk in messages.values().chunks(2) {
            prop_assert!(chunk.iter().all(|&x| x >= 0.0));
            prop_assert!((chunk.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for m in &result.marginals {
            prop_assert!(m.iter().all(|&x| x >= 0.0));
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sbm_is_equivariant_under_group_relabeling(
        tree in common::trees(2, 10),
        raw in proptest::collection::vec(0.1..1.0f64, 3),
        w in proptest::collection::vec(0.05..0.95f64, 6),
        perm in common::permutations(3),
        seed in any::<u64>(),
    ) {
        let total: f64 = raw.iter().sum();
        let priors: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let omega = vec![
            vec![w[0], w[1], w[2]],
            vec![w[1], w[3], w[4]],
            vec![w[2], w[4], w[5]],
        ];
        // Group r is renamed perm[r].
        let mut priors2 = vec![0.0; 3];
        let mut omega2 = vec![vec![0.0; 3]; 3];
        for r in 0..3 {
            priors2[perm[r]] = priors[r];
            for s in 0..3 {
                omega2[perm[r]][perm[s]] = omega[r][s];
            }
        }
        let len = 2 * tree.m();
        let mut rng = seed;
        let init: Vec<f64> = (0..len * 3)
            .map(|_| {
                rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.1 + (rng >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        let init: Vec<f64> = init
            .chunks(3)
            .flat_map(|c| {
                let s: f64 = c.iter().sum();
                c.iter().map(move |x| x / s).collect::<Vec<_>>()
            })
            .collect();
        let mut init2 = vec![0.0; init.len()];
        for (k, c) in init.chunks(3).enumerate() {
            for r in 0..3 {
                init2[k * 3 + perm[r]] = c[r];
            }
        }
        let config = tight();
        let (_, a) = sbm_bp(
            &tree,
            &SbmParams::new(priors, omega).unwrap(),
            &config.clone().with_init(Init::Custom(init)),
        ).unwrap();
        let (_, b) = sbm_bp(
            &tree,
            &SbmParams::new(priors2, omega2).unwrap(),
            &config.with_init(Init::Custom(init2)),
        ).unwrap();
        for (x, y) in a.marginals.iter().zip(&b.marginals) {
            for r in 0..3 {
                prop_assert!((x[r] - y[perm[r]]).abs() < 1e-8);
            }
        }
    }
}
