//! Edge-list files: a header line `n m` or `n m directed`, then `m` lines
//! `u v` with 0-indexed vertices.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::generators::Instance;
use crate::graph::{Digraph, UndirectedGraph};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number(tok: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("{what} {tok:?} is not a non-negative integer")))
}

/// Parses an edge list; structural errors (bad vertex, loop, duplicate)
/// are reported with the offending line.
pub fn read_edge_list(reader: impl BufRead) -> Result<Instance> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = match lines.next() {
        Some((i, l)) => (i, l?),
        None => return Err(parse_err(1, "empty input")),
    };
    let mut toks = header.split_whitespace();
    let n = number(toks.next(), hline, "vertex count")?;
    let m = number(toks.next(), hline, "edge count")?;
    let directed = match toks.next() {
        None => false,
        Some("directed") => true,
        Some(t) => return Err(parse_err(hline, format!("unexpected {t:?} in header"))),
    };
    if let Some(t) = toks.next() {
        return Err(parse_err(hline, format!("unexpected {t:?} in header")));
    }
    let mut ug = UndirectedGraph::new(if directed { 0 } else { n });
    let mut dg = Digraph::new(if directed { n } else { 0 });
    let mut seen = 0;
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if seen == m {
            return Err(parse_err(i, format!("more than {m} edge lines")));
        }
        let mut toks = line.split_whitespace();
        let u = number(toks.next(), i, "first endpoint")?;
        let v = number(toks.next(), i, "second endpoint")?;
        if let Some(t) = toks.next() {
            return Err(parse_err(i, format!("unexpected {t:?}")));
        }
        let added = if directed {
            dg.try_add_arc(u, v)
        } else {
            ug.try_add_edge(u, v)
        };
        added.map_err(|e| parse_err(i, e.to_string()))?;
        seen += 1;
    }
    if seen != m {
        return Err(parse_err(hline, format!("header promises {m} edges, found {seen}")));
    }
    Ok(if directed {
        Instance::Directed(dg)
    } else {
        Instance::Undirected(ug)
    })
}

pub fn read_edge_list_str(s: &str) -> Result<Instance> {
    read_edge_list(s.as_bytes())
}

pub fn write_edge_list(instance: &Instance, mut w: impl Write) -> Result<()> {
    match instance {
        Instance::Undirected(g) => {
            writeln!(w, "{} {}", g.n(), g.edge_count())?;
            for (u, v) in g.edges() {
                writeln!(w, "{u} {v}")?;
            }
        }
        Instance::Directed(d) => {
            writeln!(w, "{} {} directed", d.n(), d.arc_count())?;
            for (u, v) in d.arcs() {
                writeln!(w, "{u} {v}")?;
            }
        }
    }
    Ok(())
}
