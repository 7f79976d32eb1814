//! Text formats for run outputs: embeddings, predictions, loss curves and
//! evaluation reports.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::Scores;
use crate::tensor::Matrix;

/// `N L` header followed by one row of `L` values per node.
pub fn format_embeddings(z: &Matrix) -> String {
    let mut s = format!("{} {}\n", z.rows(), z.cols());
    for r in 0..z.rows() {
        let row: Vec<String> = z.row(r).iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_embeddings(text: &str) -> Result<Matrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse("embeddings", 1, "missing `N L` header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::parse("embeddings", hl + 1, format!("bad dimension {t:?}")))
    };
    if dims.len() != 2 {
        return Err(Error::parse("embeddings", hl + 1, "header must be `N L`"));
    }
    let (n, l) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let total = n
        .checked_mul(l)
        .filter(|&t| t <= text.len())
        .ok_or_else(|| Error::parse("embeddings", hl + 1, "declared size exceeds input"))?;
    let mut data = Vec::with_capacity(total);
    let mut rows = 0;
    for (i, line) in lines {
        if rows == n {
            return Err(Error::parse(
                "embeddings",
                i + 1,
                format!("more than {n} rows"),
            ));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse("embeddings", i + 1, format!("bad value {tok:?}")))?;
            data.push(v);
        }
        if data.len() - before != l {
            return Err(Error::parse(
                "embeddings",
                i + 1,
                format!("expected {l} values, got {}", data.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(
            "embeddings",
            text.lines().count(),
            format!("expected {n} rows, got {rows}"),
        ));
    }
    Matrix::from_vec(n, l, data)
}

/// One `node label` line per node.
pub fn format_predictions(pred: &[usize]) -> String {
    pred.iter()
        .enumerate()
        .map(|(i, c)| format!("{i} {c}\n"))
        .collect()
}

/// Inverse of [`format_predictions`]. Nodes must be `0..N` in order.
pub fn parse_predictions(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [node, label] = toks[..] else {
            return Err(Error::parse("predictions", i + 1, "expected `node label`"));
        };
        let node: usize = node
            .parse()
            .map_err(|_| Error::parse("predictions", i + 1, format!("bad node {node:?}")))?;
        let label: usize = label
            .parse()
            .map_err(|_| Error::parse("predictions", i + 1, format!("bad label {label:?}")))?;
        if node != out.len() {
            return Err(Error::parse(
                "predictions",
                i + 1,
                format!("expected node {}, got {node}", out.len()),
            ));
        }
        out.push(label);
    }
    Ok(out)
}

/// `epoch,loss` CSV with 1-based epochs.
pub fn format_loss_csv(losses: &[f64]) -> String {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        writeln!(s, "{},{l}", i + 1).unwrap();
    }
    s
}

/// Flat `key = value` evaluation summary.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub scores: Scores,
    pub split: String,
    pub nodes: usize,
    pub seed: u64,
    pub config_hash: u64,
    /// Epochs actually run, when known.
    pub pretrain_epochs: Option<usize>,
    pub detect_epochs: Option<usize>,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "acc = {:.4}", self.scores.acc).unwrap();
        writeln!(s, "nmi = {:.4}", self.scores.nmi).unwrap();
        writeln!(s, "mf1 = {:.4}", self.scores.mf1).unwrap();
        writeln!(s, "split = {}", self.split).unwrap();
        writeln!(s, "nodes = {}", self.nodes).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "config_hash = {:016x}", self.config_hash).unwrap();
        let na = |e: Option<usize>| e.map_or("NA".to_string(), |e| e.to_string());
        writeln!(s, "pretrain_epochs = {}", na(self.pretrain_epochs)).unwrap();
        writeln!(s, "detect_epochs = {}", na(self.detect_epochs)).unwrap();
        s
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn save_embeddings(path: &Path, z: &Matrix) -> Result<()> {
    write_text(path, &format_embeddings(z))
}

pub fn load_embeddings(path: &Path) -> Result<Matrix> {
    parse_embeddings(&read_text(path)?)
}

pub fn save_predictions(path: &Path, pred: &[usize]) -> Result<()> {
    write_text(path, &format_predictions(pred))
}

pub fn load_predictions(path: &Path) -> Result<Vec<usize>> {
    parse_predictions(&read_text(path)?)
}
