//! Importer for the LINQS citation datasets (`<name>.content` and
//! `<name>.cites`), as distributed for Cora and Citeseer.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::tensor::Matrix;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinqsReport {
    /// Paper ids in node order.
    pub ids: Vec<String>,
    /// Class names; label `k` is `classes[k]`.
    pub classes: Vec<String>,
    /// Citation pairs naming a paper absent from the content file.
    pub unknown_cites: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Parses a content file (`id attr.. class` per line) and a cites file
/// (`cited citing` per line). Nodes keep content-file order; classes are
/// numbered in sorted name order.
pub fn parse_linqs(content: &str, cites: &str) -> Result<(DataGraph, LinqsReport)> {
    let mut ids = Vec::new();
    let mut index = HashMap::new();
    let mut raw_labels = Vec::new();
    let mut attrs = Vec::new();
    let mut width = None;
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(Error::parse(
                "content",
                i + 1,
                "expected `id attributes.. class`",
            ));
        }
        let f = toks.len() - 2;
        if *width.get_or_insert(f) != f {
            return Err(Error::parse(
                "content",
                i + 1,
                format!("{f} attributes, earlier rows have {}", width.unwrap()),
            ));
        }
        let id = toks[0];
        if index.insert(id.to_string(), ids.len()).is_some() {
            return Err(Error::parse(
                "content",
                i + 1,
                format!("duplicate paper id {id:?}"),
            ));
        }
        ids.push(id.to_string());
        for t in &toks[1..=f] {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::parse("content", i + 1, format!("bad attribute {t:?}")))?;
            attrs.push(v);
        }
        raw_labels.push(toks[f + 1].to_string());
    }
    let n = ids.len();
    if n == 0 {
        return Err(Error::parse("content", 1, "no papers"));
    }

    let classes: Vec<String> = raw_labels
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|c| classes.binary_search(c).expect("class collected above"))
        .collect();

    let mut pairs = Vec::new();
    let mut unknown = 0;
    for (i, line) in cites.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = toks[..] else {
            return Err(Error::parse("cites", i + 1, "expected `cited citing`"));
        };
        match (index.get(a), index.get(b)) {
            (Some(&u), Some(&v)) => pairs.push((u, v)),
            _ => unknown += 1,
        }
    }

    let (g, load) = DataGraph::from_edges(n, pairs)?;
    let g = g
        .with_attrs(Matrix::from_vec(n, width.unwrap_or(0), attrs)?)?
        .with_labels(labels)?;
    Ok((
        g,
        LinqsReport {
            ids,
            classes,
            unknown_cites: unknown,
            duplicates: load.duplicates,
            self_loops: load.self_loops,
        },
    ))
}

/// Reads `<dir>/<name>.content` and `<dir>/<name>.cites`.
pub fn load_linqs(dir: &Path, name: &str) -> Result<(DataGraph, LinqsReport)> {
    let read = |ext: &str| {
        let p = dir.join(format!("{name}.{ext}"));
        std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))
    };
    parse_linqs(&read("content")?, &read("cites")?)
}
