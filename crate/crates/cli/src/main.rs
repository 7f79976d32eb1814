//! `gcls`: mine, pretrain, detect and evaluate from the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gcls::encoders::Encoder;
use gcls::graph::{self, DataGraph};
use gcls::metrics::NmiNorm;
use gcls::mining::{build_structure_view, StructureView};
use gcls::pipeline::{
    self, detect, embed, finish_experiment, format_loss_csv, pretrain_with_view, EncoderInputs,
    EvalReport, RunConfig,
};
use gcls::split::{make_split, NodeRole, SplitAssignment};
use gcls::synth::PlantedPartition;
use gcls::tensor::checkpoint;

const CONFIG_FILE: &str = "config.txt";
const STRUCTURE_FILE: &str = "structure.txt";
const HIGH_EDGES_FILE: &str = "high_edges.txt";
const LOSS_FILE: &str = "loss.csv";
const ENCODER_FILE: &str = "encoder.bin";
const HEAD_FILE: &str = "head.bin";
const EMBEDDINGS_FILE: &str = "embeddings.txt";
const PREDICTIONS_FILE: &str = "predictions.txt";
const SPLIT_FILE: &str = "split.txt";
const METRICS_FILE: &str = "metrics.txt";

#[derive(Parser)]
#[command(
    name = "gcls",
    version,
    about = "Community detection with structure contrastive learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print node, edge, attribute and class counts of a dataset.
    Info(RunArgs),
    /// Count patterns per edge and write the structure view.
    Mine(OutArgs),
    /// Train the encoder and write embeddings.
    Pretrain(OutArgs),
    /// Train the detection head on saved embeddings.
    Detect(DetectArgs),
    /// Pretrain and detect in one go.
    Run(OutArgs),
    /// Score predictions against labels.
    Eval(EvalArgs),
    /// Write embeddings with labels as TSV for plotting.
    Export(ExportArgs),
    /// Generate a planted-partition dataset.
    Synth(SynthArgs),
    /// Run pretrain and detect across values of `d` or `tau`.
    Sweep(SweepArgs),
    /// Convert a LINQS dataset (`.content` + `.cites`) to the plain formats.
    ImportLinqs(ImportArgs),
}

/// Dataset and training settings. Flags override `--config` values.
#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    attrs: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Structure file from `mine`, used instead of re-mining.
    #[arg(long)]
    structure: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated patterns, e.g. `triangle,k-core(3)`.
    #[arg(long)]
    patterns: Option<String>,
    /// Use the adjacency matrix in place of attributes.
    #[arg(long)]
    no_attributes: bool,
    /// Disable a component; repeatable.
    #[arg(long, value_parser = ["S", "SSS", "SCL"])]
    ablate: Vec<String>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    detect_epochs: Option<usize>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct OutArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Embeddings file from `pretrain`.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Ground-truth labels, one per line.
    #[arg(long)]
    labels: PathBuf,
    /// Predictions file, `node label` per line.
    #[arg(long)]
    predictions: PathBuf,
    /// Split file; restricts scoring to `--role`.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Role::Test)]
    role: Role,
    #[arg(long, default_value = "geometric")]
    nmi_norm: NmiNorm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Train,
    Val,
    Test,
}

impl From<Role> for NodeRole {
    fn from(r: Role) -> Self {
        match r {
            Role::Train => NodeRole::Train,
            Role::Val => NodeRole::Val,
            Role::Test => NodeRole::Test,
        }
    }
}

#[derive(Args)]
struct ExportArgs {
    /// Directory written by `pretrain` or `run`; its encoder is re-applied.
    #[arg(long, conflicts_with = "embeddings")]
    run_dir: Option<PathBuf>,
    /// Embeddings file to export as is.
    #[arg(long, requires = "labels")]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    blocks: usize,
    #[arg(long)]
    size: usize,
    #[arg(long)]
    p_in: f64,
    #[arg(long)]
    p_out: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    D,
    Tau,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// CSV destination; printed to stdout as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportArgs {
    /// Directory holding `<name>.content` and `<name>.cites`.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    name: String,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Info(a) => info(&a),
        Command::Mine(a) => mine(&a),
        Command::Pretrain(a) => pretrain(&a),
        Command::Detect(a) => detect_cmd(&a),
        Command::Run(a) => run(&a),
        Command::Eval(a) => eval(&a),
        Command::Export(a) => export(&a),
        Command::Synth(a) => synth(&a),
        Command::Sweep(a) => sweep(&a),
        Command::ImportLinqs(a) => import_linqs(&a),
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

impl RunArgs {
    /// Config file first, then flags. Relative paths in the file are taken
    /// from the file's directory; all paths end up absolute.
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                let mut cfg = RunConfig::parse(&text)
                    .with_context(|| format!("in config {}", path.display()))?;
                let base = path.parent().unwrap_or(Path::new(""));
                for p in [
                    &mut cfg.edges,
                    &mut cfg.attrs,
                    &mut cfg.labels,
                    &mut cfg.structure,
                ]
                .into_iter()
                .flatten()
                {
                    *p = absolute(&base.join(&*p))?;
                }
                cfg
            }
            None => RunConfig::default(),
        };
        for (flag, slot) in [
            (&self.edges, &mut cfg.edges),
            (&self.attrs, &mut cfg.attrs),
            (&self.labels, &mut cfg.labels),
            (&self.structure, &mut cfg.structure),
        ] {
            if let Some(p) = flag {
                *slot = Some(absolute(p)?);
            }
        }
        let mut overrides: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        };
        push("seed", self.seed.map(|v| v.to_string()));
        push("patterns", self.patterns.clone());
        push("tau", self.tau.map(|v| v.to_string()));
        push("d", self.d.map(|v| v.to_string()));
        push(
            "pretrain_epochs",
            self.pretrain_epochs.map(|v| v.to_string()),
        );
        push("detect_epochs", self.detect_epochs.map(|v| v.to_string()));
        push("no_attributes", self.no_attributes.then(|| "true".into()));
        push(
            "ablate",
            (!self.ablate.is_empty()).then(|| self.ablate.join(",")),
        );
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        for (k, v) in overrides {
            cfg.set(&k, &v).with_context(|| format!("setting {k}"))?;
        }
        cfg.train.validate()?;
        Ok(cfg)
    }
}

fn load_graph(cfg: &RunConfig) -> Result<DataGraph> {
    let edges = cfg
        .edges
        .as_deref()
        .context("no edge list: pass --edges or set `edges` in the config")?;
    let (g, report) = graph::load_graph(edges, cfg.attrs.as_deref(), cfg.labels.as_deref())?;
    if report.duplicates > 0 || report.self_loops > 0 {
        eprintln!(
            "note: dropped {} duplicate edge(s) and {} self-loop(s)",
            report.duplicates, report.self_loops
        );
    }
    Ok(g)
}

fn structure_view(g: &DataGraph, cfg: &RunConfig) -> Result<StructureView> {
    Ok(match &cfg.structure {
        Some(p) => StructureView::load(p)?,
        None => build_structure_view(g, &cfg.train.patterns)?,
    })
}

fn out_dir(dir: &Path) -> Result<&Path> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, body: impl AsRef<[u8]>) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
}

fn info(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let g = load_graph(&cfg)?;
    println!("{}", g.info());
    Ok(())
}

fn mine(args: &OutArgs) -> Result<()> {
    let cfg = args.run.resolve()?;
    let g = load_graph(&cfg)?;
    let view = build_structure_view(&g, &cfg.train.patterns)?;
    let dir = out_dir(&args.out_dir)?;
    write(dir, CONFIG_FILE, cfg.to_text())?;
    view.save(&dir.join(STRUCTURE_FILE))?;
    write(dir, HIGH_EDGES_FILE, graph::format_edge_list(&view.high))?;
    println!(
        "{} edges, {} in the high-level graph, max count {}",
        view.edges.len(),
        view.high.n_edges(),
        view.max_count()
    );
    Ok(())
}

/// Writes pretraining artifacts and returns the output for further use.
fn pretrain_into(dir: &Path, cfg: &RunConfig, g: &DataGraph) -> Result<pipeline::PretrainOutput> {
    let view = structure_view(g, cfg)?;
    let out = pretrain_with_view(g, view, &cfg.train)?;
    write(dir, CONFIG_FILE, cfg.to_text())?;
    out.view.save(&dir.join(STRUCTURE_FILE))?;
    write(dir, LOSS_FILE, format_loss_csv(&out.losses))?;
    checkpoint::save(
        &dir.join(ENCODER_FILE),
        out.encoder
            .checkpoint_tensors()
            .iter()
            .map(|(n, m)| (n.as_str(), *m)),
    )?;
    pipeline::save_embeddings(&dir.join(EMBEDDINGS_FILE), &out.embeddings)?;
    Ok(out)
}

fn pretrain(args: &OutArgs) -> Result<()> {
    let cfg = args.run.resolve()?;
    let g = load_graph(&cfg)?;
    let dir = out_dir(&args.out_dir)?;
    let out = pretrain_into(dir, &cfg, &g)?;
    match out.losses.last() {
        Some(l) => println!("{} epochs, final loss {l:.6}", out.losses.len()),
        None => println!("contrastive training disabled; embeddings from the initial encoder"),
    }
    Ok(())
}

fn write_detection(
    dir: &Path,
    split: &SplitAssignment,
    det: &pipeline::DetectOutput,
    report: &EvalReport,
) -> Result<()> {
    write(dir, SPLIT_FILE, split.to_text())?;
    checkpoint::save(
        &dir.join(HEAD_FILE),
        det.head
            .named_params()
            .iter()
            .map(|(n, m)| (n.as_str(), *m)),
    )?;
    pipeline::save_predictions(&dir.join(PREDICTIONS_FILE), &det.predictions)?;
    write(dir, METRICS_FILE, report.to_text())
}

fn detect_cmd(args: &DetectArgs) -> Result<()> {
    let cfg = args.run.resolve()?;
    let g = load_graph(&cfg)?;
    let labels = g
        .labels()
        .context("detection needs labels: pass --labels")?
        .to_vec();
    let z = pipeline::load_embeddings(&args.embeddings)?;
    let split = make_split(&g, cfg.train.seed)?;
    let det = detect(&g, &z, &split, &cfg.train)?;
    let scores = pipeline::evaluate(
        &labels,
        &det.predictions,
        Some((&split, NodeRole::Test)),
        &cfg.train,
    )?;
    let report = EvalReport {
        scores,
        split: NodeRole::Test.as_str().into(),
        nodes: split.count(NodeRole::Test),
        seed: cfg.train.seed,
        config_hash: cfg.hash(),
        pretrain_epochs: None,
        detect_epochs: Some(det.epochs_run),
    };
    let dir = out_dir(&args.out_dir)?;
    write(dir, CONFIG_FILE, cfg.to_text())?;
    write_detection(dir, &split, &det, &report)?;
    println!("test {scores}");
    Ok(())
}

fn run(args: &OutArgs) -> Result<()> {
    let cfg = args.run.resolve()?;
    let g = load_graph(&cfg)?;
    let dir = out_dir(&args.out_dir)?;
    let pre = pretrain_into(dir, &cfg, &g)?;
    let exp = finish_experiment(&g, pre, &cfg.train)?;
    write_detection(dir, &exp.split, &exp.detect, &exp.report(&cfg))?;
    println!("test {}", exp.scores);
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.labels)
        .with_context(|| format!("reading {}", args.labels.display()))?;
    let labels = graph::parse_labels(&text)?;
    let pred = pipeline::load_predictions(&args.predictions)?;
    let split = match &args.split {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(SplitAssignment::from_text(&text, 0)?)
        }
        None => None,
    };
    let train = pipeline::TrainConfig {
        nmi_norm: args.nmi_norm,
        ..Default::default()
    };
    let scores = pipeline::evaluate(
        &labels,
        &pred,
        split.as_ref().map(|s| (s, args.role.into())),
        &train,
    )?;
    println!("{scores}");
    Ok(())
}

fn export(args: &ExportArgs) -> Result<()> {
    let (z, labels) = match (&args.run_dir, &args.embeddings) {
        (Some(dir), _) => {
            let cfg_path = dir.join(CONFIG_FILE);
            let text = std::fs::read_to_string(&cfg_path)
                .with_context(|| format!("reading {}", cfg_path.display()))?;
            let mut cfg = RunConfig::parse(&text)?;
            cfg.structure = Some(dir.join(STRUCTURE_FILE));
            let g = load_graph(&cfg)?;
            let view = structure_view(&g, &cfg)?;
            let encoder = Encoder::from_checkpoint(checkpoint::load(&dir.join(ENCODER_FILE))?)?;
            let inputs = EncoderInputs::new(&g, &view, &cfg.train)?;
            (embed(&encoder, &inputs)?, g.labels().map(<[usize]>::to_vec))
        }
        (None, Some(path)) => {
            let z = pipeline::load_embeddings(path)?;
            let l = args.labels.as_ref().expect("clap requires labels");
            let text =
                std::fs::read_to_string(l).with_context(|| format!("reading {}", l.display()))?;
            (z, Some(graph::parse_labels(&text)?))
        }
        (None, None) => bail!("pass --run-dir or --embeddings"),
    };
    if let Some(l) = &labels {
        if l.len() != z.rows() {
            bail!("{} labels for {} embedding rows", l.len(), z.rows());
        }
    }
    let mut s = String::from("node\tlabel");
    for k in 0..z.cols() {
        write!(s, "\tz{k}").unwrap();
    }
    s.push('\n');
    for i in 0..z.rows() {
        let label = labels
            .as_ref()
            .map_or("NA".to_string(), |l| l[i].to_string());
        write!(s, "{i}\t{label}").unwrap();
        for x in z.row(i) {
            write!(s, "\t{x}").unwrap();
        }
        s.push('\n');
    }
    std::fs::write(&args.out, s).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let sbm = PlantedPartition {
        blocks: args.blocks,
        block_size: args.size,
        p_in: args.p_in,
        p_out: args.p_out,
    };
    let g = sbm.generate(args.seed)?;
    graph::save_graph(&g, &args.out_dir)?;
    println!("{}", g.info());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = args.run.resolve()?;
    let g = load_graph(&base)?;
    let view = structure_view(&g, &base)?;
    let key = match args.param {
        SweepParam::D => "d",
        SweepParam::Tau => "tau",
    };
    let mut csv = String::from("value,ACC,NMI,MF1\n");
    print!("{csv}");
    for value in &args.values {
        let mut cfg = base.clone();
        cfg.set(key, value)
            .with_context(|| format!("sweep value {value:?}"))?;
        cfg.train.validate()?;
        let pre = pretrain_with_view(&g, view.clone(), &cfg.train)?;
        let s = finish_experiment(&g, pre, &cfg.train)?.scores;
        let row = format!("{value},{:.4},{:.4},{:.4}\n", s.acc, s.nmi, s.mf1);
        print!("{row}");
        csv.push_str(&row);
    }
    if let Some(out) = &args.out {
        std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn import_linqs(args: &ImportArgs) -> Result<()> {
    let (g, report) = gcls::datasets::load_linqs(&args.dir, &args.name)?;
    graph::save_graph(&g, &args.out_dir)?;
    let mut classes = String::new();
    for (k, c) in report.classes.iter().enumerate() {
        writeln!(classes, "{k} {c}").unwrap();
    }
    write(&args.out_dir, "classes.txt", classes)?;
    let ids: String = report.ids.iter().map(|id| format!("{id}\n")).collect();
    write(&args.out_dir, "ids.txt", ids)?;
    eprintln!(
        "note: {} duplicate edge(s), {} self-loop(s), {} citation(s) to unknown papers dropped",
        report.duplicates, report.self_loops, report.unknown_cites
    );
    println!("{}", g.info());
    Ok(())
}
