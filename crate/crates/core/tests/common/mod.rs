#![allow(dead_code)]

use netmp::Graph;
use proptest::prelude::*;

/// Simple graphs on `min_n..=max_n` nodes, each possible edge present with
/// probability one half.
pub fn graphs(min_n: usize, max_n: usize) -> impl Strategy<Value = Graph> {
    (min_n..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            let edges: Vec<_> = pairs.zip(bits).filter(|(_, b)| *b).map(|(e, _)| e).collect();
            Graph::new(n, edges).unwrap()
        })
    })
}

/// Random labeled trees from Prüfer-like parent choices.
pub fn trees(min_n: usize, max_n: usize) -> impl Strategy<Value = Graph> {
    (min_n..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<proptest::sample::Index>(), n - 1).prop_map(move |picks| {
            let edges: Vec<_> = picks
                .iter()
                .enumerate()
                .map(|(k, ix)| (ix.index(k + 1), k + 1))
                .collect();
            Graph::new(n, edges).unwrap()
        })
    })
}

pub fn permutations(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
