//! hMetis hypergraph files, Metis graph files and partition files.
//!
//! hMetis: header `m n [fmt]`, then one line per net with 1-based pins,
//! preceded by the net weight if `fmt` is `1` or `11`, followed by `n` node
//! weight lines if `fmt` is `10` or `11`. Metis: header `n m [fmt]`, then one
//! adjacency line per vertex; every undirected edge becomes a 2-pin net.
//! Lines starting with `%` are comments.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::hypergraph::{Hypergraph, HypergraphError};
use crate::{BlockId, NodeId, Weight};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Parse { line, message: message.into() })
}

/// Non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.starts_with('%'))
}

fn numbers(line: usize, text: &str) -> Result<Vec<i64>, IoError> {
    text.split_whitespace()
        .map(|t| t.parse::<i64>().or_else(|_| parse_err(line, format!("'{t}' is not an integer"))))
        .collect()
}

/// `(has edge/net weights, has node weights)`.
fn format_flags(line: usize, fmt: Option<i64>) -> Result<(bool, bool), IoError> {
    match fmt {
        None | Some(0) => Ok((false, false)),
        Some(1) => Ok((true, false)),
        Some(10) => Ok((false, true)),
        Some(11) => Ok((true, true)),
        Some(f) => parse_err(line, format!("unsupported format code {f}")),
    }
}

pub fn parse_hmetis(text: &str) -> Result<Hypergraph, IoError> {
    let mut lines = content_lines(text);
    let Some((hl, header)) = lines.find(|(_, l)| !l.is_empty()) else {
        return parse_err(1, "missing header");
    };
    let h = numbers(hl, header)?;
    if !(2..=3).contains(&h.len()) || h[0] < 0 || h[1] < 0 {
        return parse_err(hl, "header must be 'm n [fmt]'");
    }
    let (m, n) = (h[0] as usize, h[1] as usize);
    let (net_weighted, node_weighted) = format_flags(hl, h.get(2).copied())?;
    let mut nets = Vec::with_capacity(m);
    let mut net_weights = Vec::with_capacity(m);
    let mut net_lines = Vec::with_capacity(m);
    let mut last = hl;
    for _ in 0..m {
        let Some((ln, l)) = lines.next() else {
            return parse_err(last + 1, format!("expected {m} net lines, found {}", nets.len()));
        };
        last = ln;
        net_lines.push(ln);
        let mut v = numbers(ln, l)?;
        if net_weighted {
            if v.is_empty() {
                return parse_err(ln, "missing net weight");
            }
            net_weights.push(v.remove(0));
        }
        if v.is_empty() {
            return parse_err(ln, "net has no pins");
        }
        let mut pins = Vec::with_capacity(v.len());
        for p in v {
            if p < 1 || p as usize > n {
                return parse_err(ln, format!("pin {p} out of range 1..={n}"));
            }
            pins.push((p - 1) as NodeId);
        }
        nets.push(pins);
    }
    let node_weights = if node_weighted {
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            let Some((ln, l)) = lines.next() else {
                return parse_err(last + 1, format!("expected {n} node weight lines, found {}", w.len()));
            };
            last = ln;
            match numbers(ln, l)?.as_slice() {
                [x] => w.push(*x),
                _ => return parse_err(ln, "node weight line must hold one integer"),
            }
        }
        Some(w)
    } else {
        None
    };
    if let Some((ln, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return parse_err(ln, "unexpected content after the last expected line");
    }
    let hg = Hypergraph::new(n, &nets, node_weights, net_weighted.then_some(net_weights)).map_err(|e| match e {
        HypergraphError::DuplicatePin { net, .. } | HypergraphError::EmptyNet { net } => {
            IoError::Parse { line: net_lines[net], message: e.to_string() }
        }
        other => other.into(),
    })?;
    Ok(hg)
}

pub fn parse_metis_graph(text: &str) -> Result<Hypergraph, IoError> {
    let mut lines = content_lines(text);
    let Some((hl, header)) = lines.find(|(_, l)| !l.is_empty()) else {
        return parse_err(1, "missing header");
    };
    let h = numbers(hl, header)?;
    if !(2..=4).contains(&h.len()) || h[0] < 0 || h[1] < 0 {
        return parse_err(hl, "header must be 'n m [fmt [ncon]]'");
    }
    let (n, m) = (h[0] as usize, h[1] as usize);
    let (edge_weighted, node_weighted) = format_flags(hl, h.get(2).copied())?;
    if h.get(3).is_some_and(|&c| c != 1) {
        return parse_err(hl, "only one vertex weight per vertex is supported");
    }
    let mut node_weights = Vec::with_capacity(n);
    // (u, v, w) with u < v, as seen from u; and the mirror entries.
    let mut forward: Vec<(NodeId, NodeId, Weight)> = Vec::new();
    let mut backward: Vec<(NodeId, NodeId, Weight)> = Vec::new();
    let mut last = hl;
    for u in 0..n {
        let Some((ln, l)) = lines.next() else {
            return parse_err(last + 1, format!("expected {n} vertex lines, found {u}"));
        };
        last = ln;
        let mut v = numbers(ln, l)?.into_iter();
        if node_weighted {
            node_weights.push(v.next().ok_or(()).or_else(|_| parse_err(ln, "missing vertex weight"))?);
        }
        let rest: Vec<i64> = v.collect();
        let stride = if edge_weighted { 2 } else { 1 };
        if rest.len() % stride != 0 {
            return parse_err(ln, "edge weight missing");
        }
        for c in rest.chunks(stride) {
            let x = c[0];
            if x < 1 || x as usize > n {
                return parse_err(ln, format!("neighbor {x} out of range 1..={n}"));
            }
            let x = (x - 1) as NodeId;
            if x as usize == u {
                return parse_err(ln, format!("self-loop at vertex {}", u + 1));
            }
            let w = if edge_weighted { c[1] } else { 1 };
            let u = u as NodeId;
            if u < x {
                forward.push((u, x, w));
            } else {
                backward.push((x, u, w));
            }
        }
    }
    if let Some((ln, _)) = lines.find(|(_, l)| !l.is_empty()) {
        return parse_err(ln, "unexpected content after the last vertex line");
    }
    forward.sort_unstable();
    backward.sort_unstable();
    if forward != backward {
        let bad = forward.iter().zip(&backward).find(|(a, b)| a != b).map(|(a, _)| *a).or(forward.last().copied());
        let msg = match bad {
            Some((u, v, _)) => format!("adjacency is not symmetric near edge {{{}, {}}}", u + 1, v + 1),
            None => "adjacency is not symmetric".to_string(),
        };
        return parse_err(hl, msg);
    }
    forward.dedup_by_key(|e| (e.0, e.1));
    if forward.len() != m {
        return parse_err(hl, format!("header announces {m} edges, found {}", forward.len()));
    }
    let nets: Vec<[NodeId; 2]> = forward.iter().map(|&(u, v, _)| [u, v]).collect();
    let weights = forward.iter().map(|e| e.2).collect();
    Ok(Hypergraph::new(n, &nets, node_weighted.then_some(node_weights), Some(weights))?)
}

/// hMetis text of `hg`. Weights are written only if some weight is not 1.
pub fn to_hmetis(hg: &Hypergraph) -> String {
    let net_weighted = hg.net_weights().iter().any(|&w| w != 1);
    let node_weighted = hg.node_weights().iter().any(|&w| w != 1);
    let fmt = match (net_weighted, node_weighted) {
        (false, false) => "",
        (true, false) => " 1",
        (false, true) => " 10",
        (true, true) => " 11",
    };
    let mut out = format!("{} {}{fmt}\n", hg.num_nets(), hg.num_nodes());
    for e in hg.nets() {
        let mut first = true;
        if net_weighted {
            write!(out, "{}", hg.net_weight(e)).unwrap();
            first = false;
        }
        for &p in hg.pins(e) {
            if !first {
                out.push(' ');
            }
            write!(out, "{}", p + 1).unwrap();
            first = false;
        }
        out.push('\n');
    }
    if node_weighted {
        for &w in hg.node_weights() {
            writeln!(out, "{w}").unwrap();
        }
    }
    out
}

pub fn read_hypergraph(path: impl AsRef<Path>) -> Result<Hypergraph, IoError> {
    parse_hmetis(&std::fs::read_to_string(path)?)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Hypergraph, IoError> {
    parse_metis_graph(&std::fs::read_to_string(path)?)
}

pub fn write_hypergraph(hg: &Hypergraph, path: impl AsRef<Path>) -> Result<(), IoError> {
    std::fs::write(path, to_hmetis(hg))?;
    Ok(())
}

/// One block id per line, in node order.
pub fn write_partition(parts: &[BlockId], mut w: impl Write) -> Result<(), IoError> {
    let mut out = String::with_capacity(parts.len() * 3);
    for &b in parts {
        writeln!(out, "{b}").unwrap();
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads exactly `n` block ids.
pub fn read_partition(r: impl BufRead, n: usize) -> Result<Vec<BlockId>, IoError> {
    let mut parts = Vec::with_capacity(n);
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if parts.len() == n {
            return parse_err(i + 1, format!("more than {n} block ids"));
        }
        match t.parse::<BlockId>() {
            Ok(b) => parts.push(b),
            Err(_) => return parse_err(i + 1, format!("'{t}' is not a block id")),
        }
    }
    if parts.len() != n {
        return parse_err(parts.len() + 1, format!("expected {n} block ids, found {}", parts.len()));
    }
    Ok(parts)
}

pub fn write_partition_file(parts: &[BlockId], path: impl AsRef<Path>) -> Result<(), IoError> {
    write_partition(parts, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn read_partition_file(path: impl AsRef<Path>, n: usize) -> Result<Vec<BlockId>, IoError> {
    read_partition(std::io::BufReader::new(std::fs::File::open(path)?), n)
}
