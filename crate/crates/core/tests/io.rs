mod common;

use gcls::graph::{
    format_attributes, format_edge_list, format_labels, graph_from_text, load_graph_dir,
    save_graph, MAX_NODES,
};
use gcls::mining::{build_structure_view, PatternSet, StructureView};
use gcls::pipeline::{
    format_embeddings, format_predictions, parse_embeddings, parse_predictions, RunConfig,
};
use gcls::split::{split_nodes, SplitAssignment};
use gcls::tensor::checkpoint;
use gcls::Error;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_text_round_trip(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r, 30);
        let n = g.n_nodes();
        let attrs = common::random_matrix(&mut r, n, 3);
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let (back, report) = graph_from_text(
            &format_edge_list(&g),
            Some(&format_attributes(&attrs)),
            Some(&format_labels(&labels)),
        ).unwrap();
        prop_assert_eq!(back.edges(), g.edges());
        prop_assert_eq!(back.n_nodes(), n);
        prop_assert_eq!(back.attrs().unwrap(), &attrs);
        prop_assert_eq!(back.labels().unwrap(), &labels[..]);
        prop_assert_eq!(report.duplicates + report.self_loops, 0);
    }

    #[test]
    fn structure_view_round_trip(seed in any::<u64>()) {
        let g = common::random_graph(&mut common::rng(seed), 25);
        let patterns: PatternSet = "triangle,k-core(2)".parse().unwrap();
        let view = build_structure_view(&g, &patterns).unwrap();
        let back = StructureView::from_text(&view.to_text()).unwrap();
        prop_assert_eq!(back, view);
    }

    #[test]
    fn embeddings_and_predictions_round_trip(seed in any::<u64>(), rows in 0usize..20, cols in 1usize..6) {
        let z = common::random_matrix(&mut common::rng(seed), rows, cols);
        prop_assert_eq!(parse_embeddings(&format_embeddings(&z)).unwrap(), z);
        let pred: Vec<usize> = (0..rows).map(|i| (i * 7 + seed as usize) % 5).collect();
        prop_assert_eq!(parse_predictions(&format_predictions(&pred)).unwrap(), pred);
    }

    #[test]
    fn split_round_trip(n in 0usize..200, seed in any::<u64>()) {
        let s = split_nodes(n, seed);
        prop_assert_eq!(SplitAssignment::from_text(&s.to_text(), seed).unwrap(), s);
    }

    #[test]
    fn checkpoint_decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..128)) {
        let _ = checkpoint::decode(&bytes);
    }
}

#[test]
fn duplicate_and_self_loop_edges_are_counted() {
    let (g, report) = graph_from_text("0 1\n1 0\n2 2\n1 2\n", None, None).unwrap();
    assert_eq!(g.n_edges(), 2);
    assert_eq!((report.duplicates, report.self_loops), (1, 1));
    assert!(g.check_symmetry());
}

#[test]
fn attribute_rows_can_extend_the_node_set() {
    let (g, _) = graph_from_text("0 1\n", Some("4 1\n0\n1\n2\n3\n"), None).unwrap();
    assert_eq!(g.n_nodes(), 4);
    assert_eq!(g.degree(3), 0);
}

#[test]
fn oversized_ids_are_rejected() {
    let big = format!("0 {MAX_NODES}\n");
    assert!(matches!(
        graph_from_text(&big, None, None),
        Err(Error::Dimension { .. })
    ));
    let text = format!("# nodes {}\n", usize::MAX / 2);
    assert!(StructureView::from_text(&text).is_err());
}

#[test]
fn parse_errors_carry_line_numbers() {
    match graph_from_text("0 1\n1 x\n", None, None) {
        Err(e) => assert!(e.to_string().contains("line 2"), "{e}"),
        Ok(_) => panic!("accepted a bad id"),
    }
    assert!(graph_from_text("0 1\n", Some("2 2\n1 2\n"), None).is_err());
    assert!(graph_from_text("0 1\n", None, Some("0\n1\n1\n")).is_err());
}

#[test]
fn tampered_structure_similarity_is_rejected() {
    let g = common::fixture12();
    let text = build_structure_view(&g, &PatternSet::default())
        .unwrap()
        .to_text();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut toks: Vec<&str> = lines[1].split(' ').collect();
    toks[3] = "0.123";
    lines[1] = toks.join(" ");
    assert!(StructureView::from_text(&lines.join("\n")).is_err());
}

#[test]
fn graph_directory_round_trip() {
    let g = common::fixture12();
    let dir = tempfile::tempdir().unwrap();
    save_graph(&g, dir.path()).unwrap();
    let (back, _) = load_graph_dir(dir.path()).unwrap();
    assert_eq!(back, g);
}

#[test]
fn config_text_round_trip() {
    let mut cfg = RunConfig::parse("edges = e.txt\nseed = 9\nablate = S\n").unwrap();
    cfg.set("tau", "0.5").unwrap();
    let back = RunConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());
}
