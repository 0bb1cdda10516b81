//! Line-oriented graph sequence files:
//!
//! ```text
//! nodes 3        # optional; otherwise inferred from the largest index
//! round 0
//! 0 1
//! 1 2
//! 2 0
//!
//! round 1
//! ...
//! ```
//!
//! Rounds must appear in order starting at 0. Blank lines and `#` comments
//! are ignored.

use std::fmt::Write as _;

use super::{Digraph, GraphError};

pub fn parse_rounds(text: &str) -> Result<Vec<Digraph>, GraphError> {
    let mut declared_nodes: Option<usize> = None;
    let mut rounds: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut max_index = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| GraphError::Parse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap_or_default();
        match first {
            "nodes" => {
                if !rounds.is_empty() || declared_nodes.is_some() {
                    return Err(err("`nodes` must appear once, before any round".into()));
                }
                let n = parse_index(tokens.next(), line_no)?;
                declared_nodes = Some(n);
            }
            "round" => {
                let k = parse_index(tokens.next(), line_no)?;
                if k != rounds.len() {
                    return Err(err(format!("expected round {}, found round {k}", rounds.len())));
                }
                rounds.push(Vec::new());
            }
            _ => {
                let from = parse_index(Some(first), line_no)?;
                let to = parse_index(tokens.next(), line_no)?;
                let current = rounds
                    .last_mut()
                    .ok_or_else(|| err("edge before any `round` header".into()))?;
                max_index = max_index.max(from).max(to);
                current.push((from, to));
            }
        }
        if tokens.next().is_some() {
            return Err(err("trailing tokens".into()));
        }
    }

    if rounds.is_empty() {
        return Err(GraphError::EmptySequence);
    }
    let n = declared_nodes.unwrap_or(max_index + 1);
    rounds.into_iter().map(|edges| Digraph::new(n, edges)).collect()
}

fn parse_index(token: Option<&str>, line: usize) -> Result<usize, GraphError> {
    let tok = token.ok_or(GraphError::Parse { line, msg: "missing integer".into() })?;
    tok.parse()
        .map_err(|_| GraphError::Parse { line, msg: format!("`{tok}` is not a non-negative integer") })
}

pub fn write_rounds(graphs: &[Digraph]) -> String {
    let mut out = String::new();
    if let Some(g) = graphs.first() {
        let _ = writeln!(out, "nodes {}", g.node_count());
    }
    for (k, g) in graphs.iter().enumerate() {
        let _ = writeln!(out, "round {k}");
        for (j, l) in g.edges() {
            let _ = writeln!(out, "{j} {l}");
        }
    }
    out
}
