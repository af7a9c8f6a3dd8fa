use std::path::Path;

use serde::Serialize;

use super::Graph;
use crate::error::{Error, Result};

/// Counts of input lines that did not become edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Parses whitespace-separated `u v` lines with 0-based node ids.
///
/// `#` starts a comment that runs to the end of the line; blank lines are
/// ignored. The node count is the largest id plus one.
pub fn parse_edge_list(text: &str) -> Result<(Graph, LoadStats)> {
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue;
        };
        let parse = |tok: &str| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("expected a non-negative integer node id, found {tok:?}"),
            })
        };
        let u = parse(first)?;
        let v = match tokens.next() {
            Some(tok) => parse(tok)?,
            None => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected two node ids".into(),
                })
            }
        };
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("unexpected trailing token {extra:?}"),
            });
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v));
    }
    Graph::with_stats(n, edges)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<(Graph, LoadStats)> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_from_text() {
        let (g, stats) = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!((g.n(), g.m()), (3, 2));
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn duplicates_and_self_loops_collapse() {
        let (g, stats) = parse_edge_list("0 1\n1 0\n0 0").unwrap();
        assert_eq!((g.n(), g.m()), (2, 1));
        assert_eq!(stats.self_loops, 1);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn malformed_token_reports_line() {
        match parse_edge_list("0 x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_edge_list("# header\n0 1\n2") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_edge_list("0 -1").is_err());
        assert!(parse_edge_list("0 1 2").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let (g, _) = parse_edge_list("# comment\n\n  3 1 # trailing\n").unwrap();
        assert_eq!((g.n(), g.m()), (4, 1));
    }

    #[test]
    fn empty_input_is_empty_graph() {
        let (g, _) = parse_edge_list("").unwrap();
        assert_eq!(g.n(), 0);
        let (g, _) = parse_edge_list("# nothing\n").unwrap();
        assert_eq!(g.n(), 0);
    }

    #[test]
    fn export_is_canonical() {
        let (g, _) = parse_edge_list("3 0\n1 0\n2 1\n").unwrap();
        assert_eq!(g.to_edge_list(), "0 1\n0 3\n1 2\n");
        let (h, _) = parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, h);
    }
}
