//! Training configuration and its flat `key = value` file form.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::NmiNorm;
use crate::mining::PatternSet;

/// Component switches for ablation runs. All `true` is the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ablations {
    /// Feed the structure similarity matrix (otherwise the identity).
    pub use_s: bool,
    /// Trainable semantic perceptrons (otherwise fixed random projections).
    pub use_sss: bool,
    /// Train with the structure contrastive loss (otherwise no training).
    pub use_scl: bool,
}

impl Default for Ablations {
    fn default() -> Self {
        Ablations {
            use_s: true,
            use_sss: true,
            use_scl: true,
        }
    }
}

impl Ablations {
    pub fn full() -> Self {
        Self::default()
    }

    /// Turns off one component by its short name: `S`, `SSS` or `SCL`.
    pub fn disable(&mut self, name: &str) -> Result<()> {
        match name.trim() {
            "S" => self.use_s = false,
            "SSS" => self.use_sss = false,
            "SCL" => self.use_scl = false,
            other => {
                return Err(Error::Config(format!(
                    "unknown ablation {other:?} (expected S, SSS or SCL)"
                )))
            }
        }
        Ok(())
    }

    pub fn without(name: &str) -> Result<Self> {
        let mut a = Self::full();
        a.disable(name)?;
        Ok(a)
    }

    fn to_value(self) -> String {
        let off: Vec<&str> = [
            (self.use_s, "S"),
            (self.use_sss, "SSS"),
            (self.use_scl, "SCL"),
        ]
        .into_iter()
        .filter(|(on, _)| !on)
        .map(|(_, n)| n)
        .collect();
        if off.is_empty() {
            "none".into()
        } else {
            off.join(",")
        }
    }

    fn from_value(v: &str) -> Result<Self> {
        let mut a = Self::full();
        if v.trim() != "none" {
            for part in v.split(',') {
                a.disable(part)?;
            }
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub pretrain_epochs: usize,
    pub detect_epochs: usize,
    pub lr: f64,
    pub tau: f64,
    /// Semantic width `d`.
    pub d: usize,
    pub sss_hidden: usize,
    pub gcn_hidden: usize,
    /// Encoder output width.
    pub out_dim: usize,
    pub head_hidden: usize,
    pub patience: usize,
    pub seed: u64,
    pub ablations: Ablations,
    /// Use the adjacency matrix as the attribute matrix.
    pub no_attributes: bool,
    pub patterns: PatternSet,
    pub nmi_norm: NmiNorm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pretrain_epochs: 1000,
            detect_epochs: 500,
            lr: 5e-4,
            tau: 1.0,
            d: 32,
            sss_hidden: 128,
            gcn_hidden: 128,
            out_dim: 64,
            head_hidden: 64,
            patience: 50,
            seed: 0,
            ablations: Ablations::full(),
            no_attributes: false,
            patterns: PatternSet::default(),
            nmi_norm: NmiNorm::Geometric,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pretrain_epochs", self.pretrain_epochs),
            ("detect_epochs", self.detect_epochs),
            ("d", self.d),
            ("sss_hidden", self.sss_hidden),
            ("gcn_hidden", self.gcn_hidden),
            ("out_dim", self.out_dim),
            ("head_hidden", self.head_hidden),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be > 0")));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// A complete run description: dataset paths plus training settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub edges: Option<PathBuf>,
    pub attrs: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Cached mining output to reuse instead of re-mining.
    pub structure: Option<PathBuf>,
    pub train: TrainConfig,
}

pub const CONFIG_KEYS: &[&str] = &[
    "edges",
    "attrs",
    "labels",
    "structure",
    "patterns",
    "pretrain_epochs",
    "detect_epochs",
    "lr",
    "tau",
    "d",
    "sss_hidden",
    "gcn_hidden",
    "out_dim",
    "head_hidden",
    "patience",
    "seed",
    "ablate",
    "no_attributes",
    "nmi_norm",
];

impl RunConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        let t = &mut self.train;
        match key {
            "edges" => self.edges = path(value),
            "attrs" => self.attrs = path(value),
            "labels" => self.labels = path(value),
            "structure" => self.structure = path(value),
            "patterns" => t.patterns = value.parse()?,
            "pretrain_epochs" => t.pretrain_epochs = num(key, value)?,
            "detect_epochs" => t.detect_epochs = num(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "tau" => t.tau = num(key, value)?,
            "d" => t.d = num(key, value)?,
            "sss_hidden" => t.sss_hidden = num(key, value)?,
            "gcn_hidden" => t.gcn_hidden = num(key, value)?,
            "out_dim" => t.out_dim = num(key, value)?,
            "head_hidden" => t.head_hidden = num(key, value)?,
            "patience" => t.patience = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "ablate" => t.ablations = Ablations::from_value(value)?,
            "no_attributes" => t.no_attributes = num(key, value)?,
            "nmi_norm" => t.nmi_norm = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines. `#` starts a comment line; unknown and
    /// repeated keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config", i + 1, "expected `key = value`"))?;
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(Error::parse(
                    "config",
                    i + 1,
                    format!("duplicate key {k:?}"),
                ));
            }
            cfg.set(k, v.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::parse("config", i + 1, msg),
                other => other,
            })?;
        }
        cfg.train.validate()?;
        Ok(cfg)
    }

    /// Every key, in [`CONFIG_KEYS`] order.
    pub fn to_text(&self) -> String {
        let p = |o: &Option<PathBuf>| {
            o.as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        };
        let t = &self.train;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("edges", p(&self.edges));
        kv("attrs", p(&self.attrs));
        kv("labels", p(&self.labels));
        kv("structure", p(&self.structure));
        kv("patterns", t.patterns.to_string());
        kv("pretrain_epochs", t.pretrain_epochs.to_string());
        kv("detect_epochs", t.detect_epochs.to_string());
        kv("lr", t.lr.to_string());
        kv("tau", t.tau.to_string());
        kv("d", t.d.to_string());
        kv("sss_hidden", t.sss_hidden.to_string());
        kv("gcn_hidden", t.gcn_hidden.to_string());
        kv("out_dim", t.out_dim.to_string());
        kv("head_hidden", t.head_hidden.to_string());
        kv("patience", t.patience.to_string());
        kv("seed", t.seed.to_string());
        kv("ablate", t.ablations.to_value());
        kv("no_attributes", t.no_attributes.to_string());
        kv("nmi_norm", t.nmi_norm.to_string());
        s
    }

    /// FNV-1a of [`RunConfig::to_text`].
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_text().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}
