//! ACC, NMI and Macro-F1 between ground-truth and predicted labels.
//!
//! The detection head is a supervised classifier, so predictions already
//! live in the ground-truth label space and accuracy does no matching.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Denominator used to normalise mutual information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NmiNorm {
    /// `sqrt(H(U) H(V))`
    #[default]
    Geometric,
    /// `(H(U) + H(V)) / 2`
    Arithmetic,
    /// `max(H(U), H(V))`
    Max,
}

impl FromStr for NmiNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(NmiNorm::Geometric),
            "arithmetic" => Ok(NmiNorm::Arithmetic),
            "max" => Ok(NmiNorm::Max),
            _ => Err(Error::Config(format!(
                "unknown NMI normalisation {s:?} (geometric, arithmetic, max)"
            ))),
        }
    }
}

impl fmt::Display for NmiNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NmiNorm::Geometric => "geometric",
            NmiNorm::Arithmetic => "arithmetic",
            NmiNorm::Max => "max",
        })
    }
}

fn check(y_true: &[usize], y_pred: &[usize]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::dim(
            "metrics",
            format!(
                "{} true labels vs {} predictions",
                y_true.len(),
                y_pred.len()
            ),
        ));
    }
    if y_true.is_empty() {
        return Err(Error::Degenerate("metrics need at least one label".into()));
    }
    Ok(())
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check(y_true, y_pred)?;
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi(y_true: &[usize], y_pred: &[usize], norm: NmiNorm) -> Result<f64> {
    check(y_true, y_pred)?;
    let n = y_true.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut a: BTreeMap<usize, usize> = BTreeMap::new();
    let mut b: BTreeMap<usize, usize> = BTreeMap::new();
    for (&u, &v) in y_true.iter().zip(y_pred) {
        *joint.entry((u, v)).or_default() += 1;
        *a.entry(u).or_default() += 1;
        *b.entry(v).or_default() += 1;
    }
    let hu = entropy(a.values().copied(), n);
    let hv = entropy(b.values().copied(), n);
    if hu == 0.0 && hv == 0.0 {
        return Ok(1.0);
    }
    if hu == 0.0 || hv == 0.0 {
        return Ok(0.0);
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(u, v), &c)| {
            let c = c as f64;
            c / n * (n * c / (a[&u] as f64 * b[&v] as f64)).ln()
        })
        .sum();
    let denom = match norm {
        NmiNorm::Geometric => (hu * hv).sqrt(),
        NmiNorm::Arithmetic => (hu + hv) / 2.0,
        NmiNorm::Max => hu.max(hv),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Unweighted mean of per-class F1 over the classes present in `y_true`.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check(y_true, y_pred)?;
    let mut classes: Vec<usize> = y_true.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut total = 0.0;
    for &c in &classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fneg = 0usize;
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = tp as f64 / (tp + fneg) as f64;
        if precision + recall > 0.0 {
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok(total / classes.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub acc: f64,
    pub nmi: f64,
    pub mf1: f64,
}

impl Scores {
    pub fn compute(y_true: &[usize], y_pred: &[usize], norm: NmiNorm) -> Result<Scores> {
        Ok(Scores {
            acc: accuracy(y_true, y_pred)?,
            nmi: nmi(y_true, y_pred, norm)?,
            mf1: macro_f1(y_true, y_pred)?,
        })
    }
}

impl fmt::Display for Scores {
    /// Fractions with two decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ACC {:.2}  NMI {:.2}  MF1 {:.2}",
            self.acc, self.nmi, self.mf1
        )
    }
}
