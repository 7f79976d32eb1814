//! Dense-substructure mining and the structure view built from it.
//!
//! For every edge of the input graph a pattern count is accumulated over a
//! [`PatternSet`]. Edges with count zero are masked out of the high-level
//! graph (nodes are kept), and the counts are normalised into the structure
//! similarity matrix `s_ij = (count_ij + 1) / (max count + 1)` on edges, with
//! a unit diagonal.

mod kcore;
mod triangles;
mod truss;

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

pub use kcore::core_numbers;
pub use triangles::edge_triangle_counts;
pub use truss::truss_numbers;

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::tensor::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    /// Number of triangles through the edge.
    Triangle,
    /// 1 if both endpoints have core number ≥ k.
    KCore(u32),
    /// 1 if the edge's truss number is ≥ k.
    KTruss(u32),
    /// Recognised but not countable; see [`count_patterns`].
    KPlex(u32),
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Triangle => write!(f, "triangle"),
            Pattern::KCore(k) => write!(f, "k-core({k})"),
            Pattern::KTruss(k) => write!(f, "k-truss({k})"),
            Pattern::KPlex(k) => write!(f, "k-plex({k})"),
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "triangle" {
            return Ok(Pattern::Triangle);
        }
        let bad = || {
            Error::Config(format!(
                "unknown pattern {s:?} (expected triangle, k-core(k), k-truss(k) or k-plex(k))"
            ))
        };
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let k: u32 = rest
            .strip_suffix(')')
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(bad)?;
        if k < 1 {
            return Err(Error::Config(format!(
                "pattern {s:?}: k must be at least 1"
            )));
        }
        match name.trim() {
            "k-core" => Ok(Pattern::KCore(k)),
            "k-truss" => Ok(Pattern::KTruss(k)),
            "k-plex" => Ok(Pattern::KPlex(k)),
            _ => Err(bad()),
        }
    }
}

/// Non-empty list of patterns. Defaults to `[triangle]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSet(Vec<Pattern>);

impl PatternSet {
    pub fn new(patterns: Vec<Pattern>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::Config("pattern set must not be empty".into()));
        }
        Ok(PatternSet(patterns))
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.0
    }
}

impl Default for PatternSet {
    fn default() -> Self {
        PatternSet(vec![Pattern::Triangle])
    }
}

impl fmt::Display for PatternSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Pattern::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for PatternSet {
    type Err = Error;

    /// Comma-separated, e.g. `triangle,k-core(3)`.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        let mut depth = 0;
        let mut start = 0;
        for (i, c) in s.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    out.push(s[start..i].parse()?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        if !s[start..].trim().is_empty() || out.is_empty() {
            out.push(s[start..].parse()?);
        }
        PatternSet::new(out)
    }
}

/// Per-edge pattern counts, indexed like [`DataGraph::edges`].
pub fn count_patterns(g: &DataGraph, patterns: &PatternSet) -> Result<Vec<u64>> {
    if let Some(p) = patterns.0.iter().find(|p| matches!(p, Pattern::KPlex(_))) {
        return Err(Error::Config(format!(
            "pattern {p} is not supported for counting"
        )));
    }
    let mut counts = vec![0u64; g.n_edges()];
    let mut triangles = None;
    let mut cores = None;
    let mut truss = None;
    for p in &patterns.0 {
        match *p {
            Pattern::Triangle => {
                let t = triangles.get_or_insert_with(|| edge_triangle_counts(g));
                for (c, &x) in counts.iter_mut().zip(t.iter()) {
                    *c += u64::from(x);
                }
            }
            Pattern::KCore(k) => {
                let core = cores.get_or_insert_with(|| core_numbers(g));
                for (c, &(u, v)) in counts.iter_mut().zip(g.edges()) {
                    *c += u64::from(core[u] >= k && core[v] >= k);
                }
            }
            Pattern::KTruss(k) => {
                let t = truss.get_or_insert_with(|| truss_numbers(g));
                for (c, &x) in counts.iter_mut().zip(t.iter()) {
                    *c += u64::from(x >= k);
                }
            }
            Pattern::KPlex(_) => unreachable!(),
        }
    }
    Ok(counts)
}

/// High-level view of a graph derived from its pattern counts.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureView {
    /// Edges of the original graph, `u < v`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Pattern count per edge.
    pub counts: Vec<u64>,
    /// The high-level graph: same nodes, only edges with a positive count.
    pub high: DataGraph,
    /// Structure similarity, symmetric, unit diagonal.
    pub sim: Arc<CsrMatrix>,
}

impl StructureView {
    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn count(&self, u: usize, v: usize) -> Option<u64> {
        let e = (u.min(v), u.max(v));
        self.edges.binary_search(&e).ok().map(|i| self.counts[i])
    }

    pub fn n_nodes(&self) -> usize {
        self.high.n_nodes()
    }

    /// Rows `u v count sim`, preceded by a `# nodes N` header.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# nodes {}", self.n_nodes()).unwrap();
        for (&(u, v), &c) in self.edges.iter().zip(&self.counts) {
            writeln!(s, "{u} {v} {c} {}", self.sim.get(u, v)).unwrap();
        }
        s
    }

    /// Inverse of [`StructureView::to_text`]. Similarities are recomputed
    /// from the counts and must agree with the stored column.
    pub fn from_text(text: &str) -> Result<Self> {
        const WHAT: &str = "structure";
        let mut n = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if n.is_none() {
                    let v = rest
                        .trim()
                        .strip_prefix("nodes")
                        .and_then(|x| x.trim().parse::<usize>().ok())
                        .ok_or_else(|| Error::parse(WHAT, ln, "expected `# nodes N` header"))?;
                    n = Some(v);
                }
                continue;
            }
            let Some(n) = n else {
                return Err(Error::parse(WHAT, ln, "missing `# nodes N` header"));
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let [u, v, c, s] = toks[..] else {
                return Err(Error::parse(WHAT, ln, "expected `u v count sim`"));
            };
            let int = |t: &str| {
                t.parse::<u64>()
                    .map_err(|_| Error::parse(WHAT, ln, format!("bad integer {t:?}")))
            };
            let (u, v, c) = (int(u)?, int(v)?, int(c)?);
            let s: f64 = s
                .parse()
                .map_err(|_| Error::parse(WHAT, ln, format!("bad real {s:?}")))?;
            if u >= v || v >= n as u64 {
                return Err(Error::parse(WHAT, ln, "need u < v < N"));
            }
            rows.push((u as usize, v as usize, c, s, ln));
        }
        let n = n.ok_or_else(|| Error::parse(WHAT, 1, "missing `# nodes N` header"))?;
        if let Some(w) = rows
            .windows(2)
            .find(|w| (w[0].0, w[0].1) >= (w[1].0, w[1].1))
        {
            return Err(Error::parse(
                WHAT,
                w[1].4,
                "rows must be sorted by (u, v) without repeats",
            ));
        }
        let (g, _) = DataGraph::from_edges(n, rows.iter().map(|r| (r.0, r.1)))?;
        let counts: Vec<u64> = rows.iter().map(|r| r.2).collect();
        let view = structure_from_counts(&g, counts)?;
        for &(u, v, _, s, ln) in &rows {
            if (view.sim.get(u, v) - s).abs() > 1e-12 {
                return Err(Error::parse(WHAT, ln, "similarity does not match counts"));
            }
        }
        Ok(view)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Structure view from explicit per-edge counts.
pub fn structure_from_counts(g: &DataGraph, counts: Vec<u64>) -> Result<StructureView> {
    if counts.len() != g.n_edges() {
        return Err(Error::dim(
            "structure_view",
            format!("{} counts for {} edges", counts.len(), g.n_edges()),
        ));
    }
    let n = g.n_nodes();
    let (high, _) = DataGraph::from_edges(
        n,
        g.edges()
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&e, _)| e),
    )?;
    let denom = counts.iter().copied().max().unwrap_or(0) as f64 + 1.0;
    let mut trips = Vec::with_capacity(n + 2 * counts.len());
    trips.extend((0..n).map(|i| (i, i, 1.0)));
    for (&(u, v), &c) in g.edges().iter().zip(&counts) {
        let s = (c as f64 + 1.0) / denom;
        trips.push((u, v, s));
        trips.push((v, u, s));
    }
    Ok(StructureView {
        edges: g.edges().to_vec(),
        counts,
        high,
        sim: Arc::new(CsrMatrix::from_triplets(n, n, trips)?),
    })
}

pub fn build_structure_view(g: &DataGraph, patterns: &PatternSet) -> Result<StructureView> {
    let counts = count_patterns(g, patterns)?;
    structure_from_counts(g, counts)
}
