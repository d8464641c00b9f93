//! Text formats for point sets, graphs and counter reports.
//!
//! Point file: a header line `n d`, then `n` lines of `d` whitespace-separated
//! floats; a point's id is its zero-based line index.
//!
//! Graph file: `n` lines, line `i` is `i j1:d1 j2:d2 ...` with neighbors in
//! (distance, id) order and distances written with 17 significant digits so
//! they parse back bit-exactly.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::engine::EngineReport;
use crate::error::{Error, Result};
use crate::geometry::{PointId, PointSet};
use crate::graph::{KnnGraph, Neighbor};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} {tok:?}")))
}

pub fn read_points(reader: impl BufRead) -> Result<PointSet> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let head: Vec<&str> = header.split_whitespace().collect();
    let [n, d] = head[..] else {
        return Err(parse_err(1, "header must be \"n d\""));
    };
    let n: usize = parse_num(n, 1, "point count")?;
    let d: usize = parse_num(d, 1, "dimension")?;
    if d == 0 {
        return Err(parse_err(1, "dimension must be positive"));
    }
    let mut coords = Vec::with_capacity(n * d);
    for i in 0..n {
        let lineno = i + 2;
        let line = lines
            .next()
            .ok_or_else(|| parse_err(lineno, format!("expected {n} points, found {i}")))??;
        let before = coords.len();
        for tok in line.split_whitespace() {
            let x: f64 = parse_num(tok, lineno, "coordinate")?;
            if !x.is_finite() {
                return Err(parse_err(lineno, "coordinates must be finite"));
            }
            coords.push(x);
        }
        if coords.len() - before != d {
            return Err(parse_err(
                lineno,
                format!("expected {d} coordinates, found {}", coords.len() - before),
            ));
        }
    }
    for (i, line) in lines.enumerate() {
        if !line?.trim().is_empty() {
            return Err(parse_err(n + 2 + i, "trailing data after the last point"));
        }
    }
    PointSet::from_flat(d, coords)
}

pub fn write_points(mut w: impl Write, points: &PointSet) -> Result<()> {
    writeln!(w, "{} {}", points.len(), points.dim())?;
    for (_, p) in points.iter() {
        let mut first = true;
        for x in p {
            if !first {
                w.write_all(b" ")?;
            }
            write!(w, "{x:?}")?;
            first = false;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_graph(mut w: impl Write, graph: &KnnGraph) -> Result<()> {
    for (i, list) in graph.lists().iter().enumerate() {
        write!(w, "{i}")?;
        for nb in list {
            write!(w, " {}:{:.16e}", nb.id, nb.dist)?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Graph file contents as a string.
pub fn graph_to_string(graph: &KnnGraph) -> String {
    let mut buf = Vec::new();
    write_graph(&mut buf, graph).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_graph(reader: impl BufRead) -> Result<KnnGraph> {
    let mut lists = Vec::new();
    let mut k = None;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let id: usize = parse_num(toks.next().unwrap_or(""), lineno, "point id")?;
        if id != lists.len() {
            return Err(parse_err(
                lineno,
                format!("expected point {}, found {id}", lists.len()),
            ));
        }
        let mut list = Vec::new();
        for tok in toks {
            let (j, dist) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("bad neighbor {tok:?}")))?;
            list.push(Neighbor {
                id: PointId(parse_num(j, lineno, "neighbor id")?),
                dist: parse_num(dist, lineno, "distance")?,
            });
        }
        match k {
            None => k = Some(list.len()),
            Some(k) if k != list.len() => {
                return Err(parse_err(
                    lineno,
                    format!("expected {k} neighbors, found {}", list.len()),
                ))
            }
            _ => {}
        }
        lists.push(list);
    }
    KnnGraph::new(k.unwrap_or(0), lists)
}

/// Machine-readable summary of one build.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub algo: String,
    pub seed: Option<u64>,
    pub distance_evals: u64,
    pub knbr_inserts: u64,
    pub knbr_deletes: u64,
    pub truncations: u64,
    pub pops: u64,
    pub max_knbr_nonleaf: usize,
    pub max_knbr_leaf: usize,
    pub wall_ms: f64,
}

impl CounterReport {
    /// Report for an engine run; brute-force runs pass a default report.
    pub fn new(
        points: &PointSet,
        k: usize,
        algo: &str,
        seed: Option<u64>,
        run: &EngineReport,
        wall_ms: f64,
    ) -> Self {
        CounterReport {
            n: points.len(),
            d: points.dim(),
            k,
            algo: algo.to_string(),
            seed,
            distance_evals: run.distance_evals,
            knbr_inserts: run.knbr_inserts,
            knbr_deletes: run.knbr_deletes,
            truncations: run.truncations,
            pops: run.pops,
            max_knbr_nonleaf: run.max_knbr_nonleaf,
            max_knbr_leaf: run.max_knbr_leaf,
            wall_ms,
        }
    }
}
