mod common;

use netmp::nonbacktracking::{nb_apply, nb_leading_eigenvalue};
use netmp::{Execution, Graph, HalfEdgeIndex};
use proptest::prelude::*;

/// Dense non-backtracking matrix built straight from the definition:
/// `B[(u->v), (x->y)] = 1` when `v = x` and `y != u`.
fn dense_b(index: &HalfEdgeIndex) -> Vec<Vec<f64>> {
    let len = index.len();
    let mut b = vec![vec![0.0; len]; len];
    for e in 0..len {
        for f in 0..len {
            let (u, v) = (index.sender(e), index.receiver(e));
            let (x, y) = (index.sender(f), index.receiver(f));
            if v == x && y != u {
                b[e][f] = 1.0;
            }
        }
    }
    b
}

proptest! {
    #[test]
    fn apply_matches_dense_matrix(
        g in common::graphs(2, 8).prop_filter("2m <= 64", |g| 2 * g.m() <= 64),
        seed in any::<u64>(),
    ) {
        let index = HalfEdgeIndex::new(&g);
        let len = index.len();
        let v: Vec<f64> = (0..len)
            .map(|k| ((seed.wrapping_add(k as u64 * 7919)) % 1000) as f64 / 500.0 - 1.0)
            .collect();
        let b = dense_b(&index);
        // Message e is updated from the messages flowing into its sender.
        let expected: Vec<f64> = (0..len)
            .map(|e| (0..len).map(|f| b[f][e] * v[f]).sum())
            .collect();
        let got = nb_apply(&index, &v).unwrap();
        prop_assert!(common::max_abs_diff(&got, &expected) < 1e-12);
        let seq = index.apply(&v, Execution::Sequential).unwrap();
        prop_assert_eq!(got, seq);
    }

    #[test]
    fn reverse_is_an_involution(g in common::graphs(1, 9)) {
        let index = HalfEdgeIndex::new(&g);
        for e in 0..index.len() {
            prop_assert_eq!(index.reverse(index.reverse(e)), e);
            prop_assert_eq!(index.sender(index.reverse(e)), index.receiver(e));
        }
    }
}

#[test]
fn leading_eigenvalue_of_known_graphs() {
    let k4 = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    assert!((nb_leading_eigenvalue(&k4).unwrap() - 2.0).abs() < 1e-8);
    let c5 = Graph::new(5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap();
    assert!((nb_leading_eigenvalue(&c5).unwrap() - 1.0).abs() < 1e-8);
    let path = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    assert_eq!(nb_leading_eigenvalue(&path).unwrap(), 0.0);
}
