use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Primitive cycles through `i` of length at most `r`.
///
/// A cycle is a closed walk from `i` that uses no edge twice and meets `i`
/// only at its ends. It is primitive when at least one of its edges lies on
/// no shorter cycle through `i`. Each cycle is returned once, as the node
/// sequence starting at `i` (without repeating `i` at the end), oriented so
/// that the second node is smaller than the last. Cycles are ordered by
/// length, then lexicographically.
pub fn primitive_cycles(graph: &Graph, i: usize, r: usize) -> Result<Vec<Vec<usize>>> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "cycle length bound r = {r} must be at least 2"
        )));
    }
    if i >= graph.n() {
        return Err(Error::InvalidParameter(format!("node {i} is not in the graph")));
    }
    let mut cycles = all_cycles(graph, i, r);
    cycles.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let mut covered: HashSet<(usize, usize)> = HashSet::new();
    let mut kept = Vec::new();
    let mut start = 0;
    while start < cycles.len() {
        let len = cycles[start].len();
        let end = start + cycles[start..].iter().take_while(|c| c.len() == len).count();
        let batch = &cycles[start..end];
        for cycle in batch {
            if cycle_edges(cycle).any(|e| !covered.contains(&e)) {
                kept.push(cycle.clone());
            }
        }
        // Shorter means strictly shorter, so a length class is only added to
        // the covered set once all of its members have been judged.
        for cycle in batch {
            covered.extend(cycle_edges(cycle));
        }
        start = end;
    }
    Ok(kept)
}

/// Undirected edges `(min, max)` of a closed node sequence.
pub(crate) fn cycle_edges(cycle: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..cycle.len()).map(move |k| {
        let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
        (a.min(b), a.max(b))
    })
}

fn all_cycles(graph: &Graph, i: usize, r: usize) -> Vec<Vec<usize>> {
    let mut found = Vec::new();
    let mut path = vec![i];
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    extend(graph, i, r, &mut path, &mut used, &mut found);
    found
}

fn extend(
    graph: &Graph,
    i: usize,
    r: usize,
    path: &mut Vec<usize>,
    used: &mut HashSet<(usize, usize)>,
    found: &mut Vec<Vec<usize>>,
) {
    let here = *path.last().unwrap();
    for &next in graph.neighbors(here) {
        let edge = (here.min(next), here.max(next));
        if used.contains(&edge) {
            continue;
        }
        if next == i {
            if path[1] < here {
                found.push(path.clone());
            }
            continue;
        }
        if path.len() == r {
            continue;
        }
        used.insert(edge);
        path.push(next);
        extend(graph, i, r, path, used, found);
        path.pop();
        used.remove(&edge);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        for i in 0..3 {
            let c = primitive_cycles(&g, i, 3).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c[0].len(), 3);
        }
        assert!(primitive_cycles(&g, 0, 2).unwrap().is_empty());
        assert!(primitive_cycles(&g, 0, 1).is_err());
    }

    #[test]
    fn square() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(primitive_cycles(&g, 2, 4).unwrap(), vec![vec![2, 1, 0, 3]]);
        assert!(primitive_cycles(&g, 2, 3).unwrap().is_empty());
    }

    #[test]
    fn covered_four_cycle_is_not_primitive() {
        // Triangles 0-1-2 and 0-2-3 share the edge 0-2, so the square 0-1-2-3
        // uses only triangle edges. The square 0-4-5-6 is new.
        let g = Graph::new(
            7,
            [(0, 1), (1, 2), (0, 2), (2, 3), (0, 3), (0, 4), (4, 5), (5, 6), (6, 0)],
        )
        .unwrap();
        let c = primitive_cycles(&g, 0, 4).unwrap();
        assert_eq!(c, vec![vec![0, 1, 2], vec![0, 2, 3], vec![0, 4, 5, 6]]);
    }

    #[test]
    fn long_cycles_respect_bound() {
        let g = Graph::new(6, (0..6).map(|k| (k, (k + 1) % 6))).unwrap();
        assert!(primitive_cycles(&g, 0, 5).unwrap().is_empty());
        assert_eq!(primitive_cycles(&g, 0, 6).unwrap().len(), 1);
    }
}
