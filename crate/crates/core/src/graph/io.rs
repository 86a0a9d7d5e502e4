//! Text format for measurement graphs.
//!
//! ```text
//! snl-graph v1 d=2 N=3 K=2 r=0.5
//! anchor 4 0.1 0.2
//! anchor 5 -0.3 0.25
//! edge 1 2 0.1234
//! edge 1 4 0.2
//! truth 1 0.0 0.1
//! ```
//!
//! Ids are one-based: sensors `1..=N`, anchors `N+1..=N+K`. After the
//! header, `anchor`, `edge` and `truth` lines may appear in any order;
//! blank lines and lines starting with `#` are ignored. Every anchor must
//! be listed exactly once. `truth` lines are optional, but when present
//! they must cover every node. An edge listed in both directions is
//! stored once with the average of the two distances.

use std::fmt::Write as _;
use std::path::Path;

use super::{GraphBuilder, MeasurementGraph, Point};
use crate::error::{Result, SnlError};

const MAGIC: &str = "snl-graph";
const VERSION: &str = "v1";

fn parse_err(line: usize, msg: impl Into<String>) -> SnlError {
    SnlError::Parse { line, msg: msg.into() }
}

fn header_field<'a>(tok: Option<&'a str>, key: &str, line: usize) -> Result<&'a str> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("header is missing {key}=")))?;
    tok.strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| parse_err(line, format!("expected {key}=<value>, got {tok:?}")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {s:?}")))
}

pub fn parse_graph(text: &str) -> Result<MeasurementGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some(MAGIC) {
        return Err(parse_err(hline, format!("expected header starting with {MAGIC:?}")));
    }
    match toks.next() {
        Some(VERSION) => {}
        other => return Err(parse_err(hline, format!("unsupported version {other:?}"))),
    }
    let dim: usize = num(header_field(toks.next(), "d", hline)?, hline, "d")?;
    let n: usize = num(header_field(toks.next(), "N", hline)?, hline, "N")?;
    let k: usize = num(header_field(toks.next(), "K", hline)?, hline, "K")?;
    let r: f64 = num(header_field(toks.next(), "r", hline)?, hline, "r")?;
    if dim == 0 {
        return Err(parse_err(hline, "d must be positive"));
    }
    let total = n + k;

    let mut anchors: Vec<Option<Point>> = vec![None; k];
    let mut truth: Vec<Option<Point>> = vec![None; total];
    let mut any_truth = false;
    let mut edges = Vec::new();

    let read_id = |s: Option<&str>, line: usize| -> Result<usize> {
        let s = s.ok_or_else(|| parse_err(line, "missing node id"))?;
        let id: usize = num(s, line, "node id")?;
        if id == 0 || id > total {
            return Err(parse_err(line, format!("node id {id} outside 1..={total}")));
        }
        Ok(id - 1)
    };
    let read_point = |toks: &mut std::str::SplitWhitespace<'_>, line: usize| -> Result<Point> {
        let coords: Vec<f64> = toks
            .map(|t| num::<f64>(t, line, "coordinate"))
            .collect::<Result<_>>()?;
        if coords.len() != dim {
            return Err(parse_err(line, format!("expected {dim} coordinates, got {}", coords.len())));
        }
        if !coords.iter().all(|c| c.is_finite()) {
            return Err(parse_err(line, "non-finite coordinate"));
        }
        Ok(Point::from_vec(coords))
    };

    for (line, l) in lines {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("anchor") => {
                let id = read_id(toks.next(), line)?;
                if id < n {
                    return Err(parse_err(line, format!("node {} is a sensor, not an anchor", id + 1)));
                }
                let p = read_point(&mut toks, line)?;
                if anchors[id - n].replace(p).is_some() {
                    return Err(parse_err(line, format!("anchor {} listed twice", id + 1)));
                }
            }
            Some("edge") => {
                let i = read_id(toks.next(), line)?;
                let j = read_id(toks.next(), line)?;
                let d: f64 = num(toks.next().ok_or_else(|| parse_err(line, "missing distance"))?, line, "distance")?;
                if toks.next().is_some() {
                    return Err(parse_err(line, "trailing tokens after edge"));
                }
                edges.push((line, i, j, d));
            }
            Some("truth") => {
                let id = read_id(toks.next(), line)?;
                truth[id] = Some(read_point(&mut toks, line)?);
                any_truth = true;
            }
            Some(other) => return Err(parse_err(line, format!("unknown record {other:?}"))),
            None => unreachable!("blank lines are filtered"),
        }
    }

    let anchors: Vec<Point> = anchors
        .into_iter()
        .enumerate()
        .map(|(a, p)| p.ok_or_else(|| parse_err(hline, format!("anchor {} has no position", n + a + 1))))
        .collect::<Result<_>>()?;
    let mut b = GraphBuilder::new(dim, n, anchors, r).map_err(|e| parse_err(hline, e.to_string()))?;
    for (line, i, j, d) in edges {
        b.add_measurement(i, j, d).map_err(|e| parse_err(line, e.to_string()))?;
    }
    if any_truth {
        let truth: Vec<Point> = truth
            .into_iter()
            .enumerate()
            .map(|(v, p)| p.ok_or_else(|| parse_err(hline, format!("truth missing for node {}", v + 1))))
            .collect::<Result<_>>()?;
        b.ground_truth(truth).map_err(|e| parse_err(hline, e.to_string()))?;
    }
    Ok(b.build())
}

fn write_coords(out: &mut String, p: &Point) {
    for c in p.iter() {
        let _ = write!(out, " {c}");
    }
}

pub fn write_graph(g: &MeasurementGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{MAGIC} {VERSION} d={} N={} K={} r={}",
        g.dim(),
        g.n_sensors(),
        g.n_anchors(),
        g.radio_range()
    );
    for v in g.anchor_ids() {
        let _ = write!(out, "anchor {}", v + 1);
        write_coords(&mut out, g.anchor_position(v).expect("anchor id"));
        out.push('\n');
    }
    for (i, j, d) in g.edges() {
        let _ = writeln!(out, "edge {} {} {d}", i + 1, j + 1);
    }
    if let Some(truth) = g.ground_truth() {
        for (v, p) in truth.iter().enumerate() {
            let _ = write!(out, "truth {}", v + 1);
            write_coords(&mut out, p);
            out.push('\n');
        }
    }
    out
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<MeasurementGraph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

pub fn save_graph(g: &MeasurementGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_graph(g))?;
    Ok(())
}

/// Whitespace-separated point list, one point per line; `#` comments and
/// blank lines are skipped. All points must share a dimension.
pub fn load_points(path: impl AsRef<Path>) -> Result<Vec<Point>> {
    let text = std::fs::read_to_string(path)?;
    let mut out: Vec<Point> = Vec::new();
    for (k, l) in text.lines().enumerate() {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = l
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| num::<f64>(t, k + 1, "coordinate"))
            .collect::<Result<_>>()?;
        if let Some(first) = out.first() {
            if first.len() != coords.len() {
                return Err(parse_err(k + 1, "inconsistent point dimension"));
            }
        }
        if coords.is_empty() {
            return Err(parse_err(k + 1, "empty point"));
        }
        out.push(Point::from_vec(coords));
    }
    Ok(out)
}
