use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sbm")
}

fn gcls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcls"))
        .args(args)
        .output()
        .expect("spawn gcls")
}

fn ok(args: &[&str]) -> String {
    let out = gcls(args);
    assert!(
        out.status.success(),
        "gcls {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = gcls(args);
    assert!(
        !out.status.success(),
        "gcls {args:?} unexpectedly succeeded"
    );
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn config() -> PathBuf {
    fixture().join("sbm.cfg")
}

#[test]
fn pretrain_twice_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&[
            "run",
            "--config",
            s(&config()),
            "--seed",
            "7",
            "--pretrain-epochs",
            "100",
            "--out-dir",
            s(dir),
        ]);
    }
    for f in [
        "embeddings.txt",
        "predictions.txt",
        "metrics.txt",
        "loss.csv",
        "encoder.bin",
        "head.bin",
        "split.txt",
        "config.txt",
    ] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f} differs");
    }
    let cfg = String::from_utf8(read(a.join("config.txt"))).unwrap();
    assert!(cfg.contains("seed = 7"), "{cfg}");
}

#[test]
fn eval_on_identical_labels_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = std::fs::read_to_string(fixture().join("labels.txt")).unwrap();
    let pred: String = labels
        .lines()
        .enumerate()
        .map(|(i, l)| format!("{i} {l}\n"))
        .collect();
    let p = tmp.path().join("pred.txt");
    std::fs::write(&p, pred).unwrap();
    let out = ok(&[
        "eval",
        "--labels",
        s(&fixture().join("labels.txt")),
        "--predictions",
        s(&p),
    ]);
    assert_eq!(out.trim(), "ACC 1.00  NMI 1.00  MF1 1.00");
}

#[test]
fn full_chain_on_fixture() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let data = t.join("data");
    ok(&[
        "synth",
        "--blocks",
        "3",
        "--size",
        "20",
        "--p-in",
        "0.4",
        "--p-out",
        "0.02",
        "--seed",
        "5",
        "--out-dir",
        s(&data),
    ]);
    let (edges, attrs, labels) = (
        data.join("edges.txt"),
        data.join("attrs.txt"),
        data.join("labels.txt"),
    );
    let graph = [
        "--edges",
        s(&edges),
        "--attrs",
        s(&attrs),
        "--labels",
        s(&labels),
    ];

    let info = ok(&[&["info"], &graph[..]].concat());
    assert!(
        info.contains("nodes\t60") && info.contains("communities\t3"),
        "{info}"
    );

    let mined = t.join("mined");
    ok(&[&["mine"], &graph[..], &["--out-dir", s(&mined)]].concat());
    let structure = mined.join("structure.txt");
    assert!(structure.exists() && mined.join("high_edges.txt").exists());

    let pre = t.join("pre");
    ok(&[
        &["pretrain"],
        &graph[..],
        &["--structure", s(&structure), "--out-dir", s(&pre)],
    ]
    .concat());
    let loss = String::from_utf8(read(pre.join("loss.csv"))).unwrap();
    assert!(loss.starts_with("epoch,loss\n1,"));
    assert_eq!(loss.lines().count(), 1001);

    let det = t.join("det");
    let emb = pre.join("embeddings.txt");
    let printed = ok(&[
        &["detect"],
        &graph[..],
        &["--embeddings", s(&emb), "--out-dir", s(&det)],
    ]
    .concat());
    assert!(printed.starts_with("test ACC"), "{printed}");

    let scores = ok(&[
        "eval",
        "--labels",
        s(&labels),
        "--predictions",
        s(&det.join("predictions.txt")),
        "--split",
        s(&det.join("split.txt")),
    ]);
    assert_eq!(printed.trim(), format!("test {}", scores.trim()));
    let metrics = String::from_utf8(read(det.join("metrics.txt"))).unwrap();
    assert!(metrics.contains("pretrain_epochs = NA"), "{metrics}");

    let tsv = t.join("z.tsv");
    ok(&["export", "--run-dir", s(&pre), "--out", s(&tsv)]);
    let text = String::from_utf8(read(&tsv)).unwrap();
    assert!(text.starts_with("node\tlabel\tz0\t"));
    assert_eq!(text.lines().count(), 61);
    // Re-applying the saved encoder reproduces the saved embeddings exactly.
    let tsv2 = t.join("z2.tsv");
    ok(&[
        "export",
        "--embeddings",
        s(&emb),
        "--labels",
        s(&labels),
        "--out",
        s(&tsv2),
    ]);
    assert_eq!(read(&tsv), read(&tsv2));

    let took = start.elapsed();
    assert!(took < Duration::from_secs(60), "chain took {took:?}");
}

#[test]
fn synth_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&[
            "synth",
            "--blocks",
            "2",
            "--size",
            "5",
            "--p-in",
            "1",
            "--p-out",
            "0",
            "--seed",
            "3",
            "--out-dir",
            s(dir),
        ]);
    }
    let edges = String::from_utf8(read(a.join("edges.txt"))).unwrap();
    assert_eq!(edges.lines().count(), 20);
    assert!(edges.lines().all(|l| {
        let v: Vec<usize> = l.split(' ').map(|x| x.parse().unwrap()).collect();
        v[0] / 5 == v[1] / 5
    }));
    for f in ["edges.txt", "attrs.txt", "labels.txt"] {
        assert_eq!(read(a.join(f)), read(b.join(f)));
    }
    let err = fails(&[
        "synth",
        "--blocks",
        "2",
        "--size",
        "5",
        "--p-in",
        "0.1",
        "--p-out",
        "0.5",
        "--out-dir",
        s(&a),
    ]);
    assert!(err.contains("configuration error"), "{err}");
}

#[test]
fn single_value_sweep_matches_standalone_run() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let cfg = config();
    let common = ["--config", s(&cfg), "--pretrain-epochs", "150"];
    ok(&[&["run"], &common[..], &["--out-dir", s(&run_dir)]].concat());
    let csv_path = tmp.path().join("sweep.csv");
    ok(&[
        &["sweep"],
        &common[..],
        &["--param", "tau", "--values", "1", "--out", s(&csv_path)],
    ]
    .concat());
    let csv = String::from_utf8(read(&csv_path)).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "value,ACC,NMI,MF1");
    assert_eq!(rows.len(), 2);
    let metrics = String::from_utf8(read(run_dir.join("metrics.txt"))).unwrap();
    let get = |k: &str| {
        metrics
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{k} = ")))
            .unwrap()
            .to_string()
    };
    assert_eq!(
        rows[1],
        format!("1,{},{},{}", get("acc"), get("nmi"), get("mf1"))
    );
}

fn sweep_accs(param: &str, values: &str) -> Vec<f64> {
    let cfg = config();
    let out = ok(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        param,
        "--values",
        values,
    ]);
    out.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn tau_sweep_does_not_improve_with_larger_tau() {
    let acc = sweep_accs("tau", "1,10,100");
    assert_eq!(acc.len(), 3);
    assert!(acc[0] >= acc[1] && acc[1] >= acc[2], "{acc:?}");
}

#[test]
fn d_sweep_is_stable() {
    let acc = sweep_accs("d", "8,32,128");
    let spread =
        acc.iter().cloned().fold(f64::MIN, f64::max) - acc.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.05, "{acc:?}");
}

#[test]
fn errors_name_the_key_or_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "edges = e.txt\nlearning_rate = 0.1\n").unwrap();
    let err = fails(&["info", "--config", s(&cfg)]);
    assert!(err.contains("learning_rate"), "{err}");

    let missing = tmp.path().join("nope.txt");
    let err = fails(&["info", "--edges", s(&missing)]);
    assert!(err.contains("nope.txt"), "{err}");

    let err = fails(&[
        "pretrain",
        "--edges",
        s(&fixture().join("edges.txt")),
        "--out-dir",
        s(tmp.path()),
    ]);
    assert!(err.contains("no_attributes"), "{err}");

    let cfg = config();
    let err = fails(&["info", "--config", s(&cfg), "--set", "tau=-1"]);
    assert!(err.contains("tau"), "{err}");
}

#[test]
fn no_attribute_mode_and_ablation_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("r");
    ok(&[
        "run",
        "--edges",
        s(&fixture().join("edges.txt")),
        "--labels",
        s(&fixture().join("labels.txt")),
        "--no-attributes",
        "--ablate",
        "SCL",
        "--ablate",
        "S",
        "--out-dir",
        s(&dir),
    ]);
    let cfg = String::from_utf8(read(dir.join("config.txt"))).unwrap();
    assert!(
        cfg.contains("no_attributes = true") && cfg.contains("ablate = S,SCL"),
        "{cfg}"
    );
    assert_eq!(
        String::from_utf8(read(dir.join("loss.csv"))).unwrap(),
        "epoch,loss\n"
    );
}
