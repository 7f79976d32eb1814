//! Simple undirected graphs with optional attributes and labels.
//!
//! Text formats:
//!
//! - edge list: one `u v` pair per line (space or tab separated), node ids
//!   are non-negative integers. Blank lines and lines starting with `#` are
//!   skipped.
//! - attributes: header line `N F`, then `N` lines of `F` whitespace
//!   separated reals.
//! - labels: one non-negative integer per line, line `i` is node `i`.
//!
//! Duplicate edges (in either orientation) and self-loops are dropped and
//! counted in a [`LoadReport`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{CsrMatrix, Matrix};

/// Immutable simple undirected graph.
#[derive(Clone, Debug, PartialEq)]
pub struct DataGraph {
    n: usize,
    /// Canonical `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    attrs: Option<Matrix>,
    labels: Option<Vec<usize>>,
}

/// What the cleaning pass dropped while building a graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Columns of the dataset statistics table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphInfo {
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
    pub attributes: Option<usize>,
    pub communities: Option<usize>,
}

impl std::fmt::Display for GraphInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<usize>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        writeln!(f, "nodes\t{}", self.nodes)?;
        writeln!(f, "edges\t{}", self.edges)?;
        writeln!(f, "avg_degree\t{:.2}", self.avg_degree)?;
        writeln!(f, "attributes\t{}", opt(self.attributes))?;
        write!(f, "communities\t{}", opt(self.communities))
    }
}

/// Largest node count a graph may have. Node counts come from ids in
/// untrusted files, so this bounds the per-node allocations.
pub const MAX_NODES: usize = 1 << 24;

impl DataGraph {
    /// Builds a graph on nodes `0..n`, dropping self-loops and duplicates.
    pub fn from_edges(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<(DataGraph, LoadReport)> {
        if n > MAX_NODES {
            return Err(Error::dim(
                "from_edges",
                format!("{n} nodes exceeds the limit of {MAX_NODES}"),
            ));
        }
        let mut report = LoadReport::default();
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        for (u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::dim(
                    "from_edges",
                    format!("edge ({u},{v}) references a node outside 0..{n}"),
                ));
            }
            if u == v {
                report.self_loops += 1;
                continue;
            }
            let e = (u.min(v), u.max(v));
            if seen.insert(e) {
                edges.push(e);
            } else {
                report.duplicates += 1;
            }
        }
        edges.sort_unstable();

        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0usize; offsets[n]];
        for &(u, v) in &edges {
            targets[fill[u]] = v;
            fill[u] += 1;
            targets[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Ok((
            DataGraph {
                n,
                edges,
                offsets,
                targets,
                attrs: None,
                labels: None,
            },
            report,
        ))
    }

    pub fn with_attrs(mut self, attrs: Matrix) -> Result<Self> {
        if attrs.rows() != self.n {
            return Err(Error::dim(
                "attributes",
                format!("{} rows for {} nodes", attrs.rows(), self.n),
            ));
        }
        self.attrs = Some(attrs);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::dim(
                "labels",
                format!("{} labels for {} nodes", labels.len(), self.n),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_attrs(mut self) -> Self {
        self.attrs = None;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges `(u, v)`, `u < v`, in sorted order. Per-edge data
    /// elsewhere in the crate is indexed by position in this slice.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbors of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.degree(u)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Position of edge `{u, v}` in [`DataGraph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let e = (u.min(v), u.max(v));
        self.edges.binary_search(&e).ok()
    }

    pub fn csr_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn csr_targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn attrs(&self) -> Option<&Matrix> {
        self.attrs.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of communities, `1 + max label`.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// CSR adjacency is symmetric and degree sum is `2|E|`.
    pub fn check_symmetry(&self) -> bool {
        let sym = (0..self.n).all(|u| self.neighbors(u).iter().all(|&v| self.has_edge(v, u)));
        sym && self.targets.len() == 2 * self.edges.len()
    }

    /// 0/1 adjacency without self-loops as a sparse matrix.
    pub fn adjacency(&self) -> CsrMatrix {
        let trips = self
            .edges
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
            .collect();
        CsrMatrix::from_triplets(self.n, self.n, trips).expect("edges are in range")
    }

    /// Copy whose attribute matrix is the dense `N×N` adjacency.
    pub fn adjacency_as_attrs(&self) -> DataGraph {
        let mut attrs = Matrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            attrs.set(u, v, 1.0);
            attrs.set(v, u, 1.0);
        }
        DataGraph {
            attrs: Some(attrs),
            ..self.clone()
        }
    }

    pub fn info(&self) -> GraphInfo {
        GraphInfo {
            nodes: self.n,
            edges: self.edges.len(),
            avg_degree: if self.n == 0 {
                0.0
            } else {
                2.0 * self.edges.len() as f64 / self.n as f64
            },
            attributes: self.attrs.as_ref().map(Matrix::cols),
            communities: self.num_classes(),
        }
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_id(what: &'static str, line: usize, tok: &str) -> Result<u64> {
    tok.parse::<u64>().map_err(|_| {
        Error::parse(
            what,
            line,
            format!("expected a non-negative integer, got {tok:?}"),
        )
    })
}

/// Parses an edge list into raw pairs (self-loops and duplicates kept).
pub fn parse_edge_list(text: &str) -> Result<Vec<(u64, u64)>> {
    let mut pairs = Vec::new();
    for (ln, l) in lines(text) {
        let mut toks = l.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::parse(
                "edge list",
                ln,
                "expected exactly two node ids",
            ));
        };
        pairs.push((parse_id("edge list", ln, a)?, parse_id("edge list", ln, b)?));
    }
    Ok(pairs)
}

/// Dense relabelling of arbitrary node ids, in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdMap {
    /// `original[i]` is the input id of dense node `i`.
    pub original: Vec<u64>,
}

impl IdMap {
    pub fn dense(&self, id: u64) -> Option<usize> {
        self.original.binary_search(&id).ok()
    }
}

/// Maps arbitrary ids in `pairs` onto `0..n`.
pub fn remap_ids(pairs: &[(u64, u64)]) -> (Vec<(usize, usize)>, IdMap) {
    let mut ids: Vec<u64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let map = IdMap { original: ids };
    let dense = pairs
        .iter()
        .map(|&(a, b)| (map.dense(a).unwrap(), map.dense(b).unwrap()))
        .collect();
    (dense, map)
}

pub fn parse_attributes(text: &str) -> Result<Matrix> {
    const WHAT: &str = "attributes";
    let mut it = lines(text);
    let Some((hl, header)) = it.next() else {
        return Err(Error::parse(WHAT, 1, "missing `N F` header"));
    };
    let mut toks = header.split_whitespace();
    let (Some(n), Some(f), None) = (toks.next(), toks.next(), toks.next()) else {
        return Err(Error::parse(WHAT, hl, "header must be `N F`"));
    };
    let n = parse_id(WHAT, hl, n)? as usize;
    let f = parse_id(WHAT, hl, f)? as usize;
    let mut data = Vec::new();
    let mut rows = 0usize;
    for (ln, l) in it {
        if rows == n {
            return Err(Error::parse(WHAT, ln, format!("more than {n} rows")));
        }
        let before = data.len();
        for tok in l.split_whitespace() {
            let x: f64 = tok
                .parse()
                .map_err(|_| Error::parse(WHAT, ln, format!("bad real {tok:?}")))?;
            data.push(x);
        }
        if data.len() - before != f {
            return Err(Error::parse(
                WHAT,
                ln,
                format!("expected {f} values, got {}", data.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::dim(
            "attributes",
            format!("header says {n} rows, found {rows}"),
        ));
    }
    Matrix::from_vec(n, f, data)
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>> {
    lines(text)
        .map(|(ln, l)| {
            let id = parse_id("labels", ln, l)?;
            usize::try_from(id).map_err(|_| Error::parse("labels", ln, "label too large"))
        })
        .collect()
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Builds a graph from already-read file contents. `N` is `1 + max id`,
/// or the attribute row count when that is larger.
pub fn graph_from_text(
    edges: &str,
    attrs: Option<&str>,
    labels: Option<&str>,
) -> Result<(DataGraph, LoadReport)> {
    let pairs = parse_edge_list(edges)?;
    let attrs = attrs.map(parse_attributes).transpose()?;
    let labels = labels.map(parse_labels).transpose()?;
    let max_id = pairs.iter().map(|&(a, b)| a.max(b)).max();
    let from_edges = match max_id {
        Some(m) => usize::try_from(m)
            .ok()
            .and_then(|m| m.checked_add(1))
            .ok_or_else(|| Error::dim("edge list", "node id too large"))?,
        None => 0,
    };
    let n = from_edges.max(attrs.as_ref().map_or(0, Matrix::rows));
    if let (Some(l), None) = (&labels, &attrs) {
        if l.len() != n {
            return Err(Error::dim(
                "labels",
                format!("{} labels for {n} nodes", l.len()),
            ));
        }
    }
    let (mut g, report) =
        DataGraph::from_edges(n, pairs.into_iter().map(|(a, b)| (a as usize, b as usize)))?;
    if let Some(a) = attrs {
        g = g.with_attrs(a)?;
    }
    if let Some(l) = labels {
        g = g.with_labels(l)?;
    }
    Ok((g, report))
}

pub fn load_graph(
    edge_path: &Path,
    attr_path: Option<&Path>,
    label_path: Option<&Path>,
) -> Result<(DataGraph, LoadReport)> {
    let edges = read(edge_path)?;
    let attrs = attr_path.map(read).transpose()?;
    let labels = label_path.map(read).transpose()?;
    graph_from_text(&edges, attrs.as_deref(), labels.as_deref())
}

pub fn format_edge_list(g: &DataGraph) -> String {
    let mut s = String::with_capacity(g.n_edges() * 12);
    for &(u, v) in g.edges() {
        writeln!(s, "{u} {v}").unwrap();
    }
    s
}

/// Shortest round-tripping decimal form of every value.
pub fn format_attributes(m: &Matrix) -> String {
    let mut s = String::new();
    writeln!(s, "{} {}", m.rows(), m.cols()).unwrap();
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|x| x.to_string()).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    s
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(s, "{l}").unwrap();
    }
    s
}

/// File names used by [`save_graph`] inside a dataset directory.
pub const EDGES_FILE: &str = "edges.txt";
pub const ATTRS_FILE: &str = "attrs.txt";
pub const LABELS_FILE: &str = "labels.txt";

/// Writes `edges.txt` and, when present, `attrs.txt` / `labels.txt`.
pub fn save_graph(g: &DataGraph, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write(EDGES_FILE, format_edge_list(g))?;
    if let Some(a) = g.attrs() {
        write(ATTRS_FILE, format_attributes(a))?;
    }
    if let Some(l) = g.labels() {
        write(LABELS_FILE, format_labels(l))?;
    }
    Ok(())
}

/// Loads a directory written by [`save_graph`].
pub fn load_graph_dir(dir: &Path) -> Result<(DataGraph, LoadReport)> {
    let attrs = dir.join(ATTRS_FILE);
    let labels = dir.join(LABELS_FILE);
    load_graph(
        &dir.join(EDGES_FILE),
        attrs.exists().then_some(attrs.as_path()),
        labels.exists().then_some(labels.as_path()),
    )
}
