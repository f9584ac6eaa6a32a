use std::fs;
use std::io::BufWriter;
use std::path::Path;

use mentionnet::corpus::{format_timestamp, Format};
use mentionnet::pipeline::{
    read_manifest, run_manifest, run_pipeline, ErrorKind, RunConfig, RunSummary, Stage, ARTIFACTS,
    FAILED_MARKER,
};
use mentionnet::synthgen::{generate, generate_to, PlantedSpec, RingSpec};

fn spec(seed: u64) -> PlantedSpec {
    PlantedSpec {
        n_users: 150,
        n_tweets: 3000,
        rings: vec![RingSpec {
            size: 8,
            mentions_per_pair: 6,
        }],
        seed,
        ..Default::default()
    }
}

fn write_corpus(path: &Path, seed: u64) {
    generate_to(&spec(seed), BufWriter::new(fs::File::create(path).unwrap())).unwrap();
}

fn config(dir: &Path, input: &Path) -> RunConfig {
    RunConfig {
        label: "t".into(),
        inputs: vec![input.to_path_buf()],
        min_weight: 3,
        out: dir.join("out"),
        ..Default::default()
    }
}

#[test]
fn empty_input_fails_at_ingest_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let cfg = config(dir.path(), &input);
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.stage, Stage::Ingest);
    assert_eq!(err.kind, ErrorKind::Data);
    let marker = fs::read_to_string(cfg.out.join(FAILED_MARKER)).unwrap();
    assert!(marker.starts_with("stage: ingest\n"));
    // the config that produced the failure is kept
    assert!(cfg.out.join("config.json").is_file());

    // a later successful run clears the marker
    write_corpus(&input, 1);
    run_pipeline(&cfg).unwrap();
    assert!(!cfg.out.join(FAILED_MARKER).exists());
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &dir.path().join("nope.jsonl"));
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!((err.stage, err.kind), (Stage::Ingest, ErrorKind::Data));
}

#[test]
fn archived_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.jsonl");
    write_corpus(&input, 2);
    let cfg = config(dir.path(), &input);
    let first = run_pipeline(&cfg).unwrap();
    for a in ARTIFACTS {
        assert!(cfg.out.join(a).is_file(), "{a}");
    }
    let archived: RunConfig =
        serde_json::from_str(&fs::read_to_string(cfg.out.join("config.json")).unwrap()).unwrap();
    assert_eq!(archived, cfg);
    let again = run_pipeline(&archived).unwrap();
    assert_eq!(first, again);
    assert_eq!(first.corpus.tweet_count, 3000);
    assert_eq!(first.rings, 1);
}

#[test]
fn csv_and_jsonl_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(&spec(3)).unwrap();
    let jsonl = dir.path().join("c.jsonl");
    let csv_path = dir.path().join("c.csv");
    fs::write(
        &jsonl,
        corpus
            .records
            .iter()
            .map(|r| r.to_jsonl() + "\n")
            .collect::<String>(),
    )
    .unwrap();
    let mut w = csv::Writer::from_path(&csv_path).unwrap();
    w.write_record(["id", "user", "text", "created_at"])
        .unwrap();
    for r in &corpus.records {
        w.write_record([
            r.id.as_str(),
            &r.author,
            &r.text,
            &format_timestamp(&r.created_at),
        ])
        .unwrap();
    }
    w.flush().unwrap();

    let a = run_pipeline(&RunConfig {
        out: dir.path().join("a"),
        ..config(dir.path(), &jsonl)
    })
    .unwrap();
    let b = run_pipeline(&RunConfig {
        format: Format::Csv,
        out: dir.path().join("b"),
        ..config(dir.path(), &csv_path)
    })
    .unwrap();
    assert_eq!(a, b);
    let edges = |d: &str| fs::read(dir.path().join(d).join("edges.csv")).unwrap();
    assert_eq!(edges("a"), edges("b"));
}

#[test]
fn date_range_restricts_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.jsonl");
    write_corpus(&input, 4);
    let corpus = generate(&spec(4)).unwrap();
    let cfg = RunConfig {
        from: Some(corpus.records[1000].created_at),
        to: Some(corpus.records[1999].created_at),
        ..config(dir.path(), &input)
    };
    let s = run_pipeline(&cfg).unwrap();
    assert_eq!(s.corpus.tweet_count, 1000);
    assert_eq!(s.ingest.out_of_range, 2000);
    assert_eq!(s.corpus.date_min, cfg.from);
    assert_eq!(s.corpus.date_max, cfg.to);
}

#[test]
fn manifest_runs_each_label() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(&dir.path().join("pe.jsonl"), 5);
    write_corpus(&dir.path().join("ve.jsonl"), 6);
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let manifest_path = dir.path().join("manifest.json");
    fs::write(
        &manifest_path,
        r#"{"peru": "pe.jsonl", "venezuela": "ve.jsonl", "nowhere": "empty.jsonl"}"#,
    )
    .unwrap();
    let manifest = read_manifest(&manifest_path).unwrap();
    let base = RunConfig {
        out: dir.path().join("batch"),
        min_weight: 3,
        ..Default::default()
    };
    let results = run_manifest(&base, &manifest);
    let labels: Vec<&str> = results.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(labels, ["nowhere", "peru", "venezuela"]);
    assert!(results[0].1.is_err());
    for (label, r) in &results[1..] {
        let s: &RunSummary = r.as_ref().unwrap();
        assert_eq!(&s.label, label);
        let stats: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(base.out.join(label).join("stats.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(stats["label"], label.as_str());
    }
    assert!(base.out.join("nowhere").join(FAILED_MARKER).is_file());
}

#[test]
fn unweighted_run_notes_that_filtering_empties_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.jsonl");
    write_corpus(&input, 7);
    let mut cfg = config(dir.path(), &input);
    cfg.build.weighted = false;
    let s = run_pipeline(&cfg).unwrap();
    assert_eq!(s.graph.total_weight, s.graph.edges as u64);
    assert_eq!(s.filtered.edges, 0);
    assert!(s.notices.iter().any(|n| n.contains("unweighted")));
    let svg = fs::read_to_string(cfg.out.join("matrix.svg")).unwrap();
    assert!(svg.contains("No edges with weight above 3"));
}
