//! `mentionnet` command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chrono::{DateTime, NaiveDate, NaiveTime, Utc};
use clap::{Args, Parser, Subcommand};
use mentionnet::communities::{community_summary, detect_tag_rings, find_communities, RingParams};
use mentionnet::corpus::{parse_timestamp, Format};
use mentionnet::graphstats::{
    ccdf, degree_sequence, render_degree_plot, render_empty_matrix, render_matrix, tail_exponent,
    write_ccdf_csv, DegreeKind, TailMethod,
};
use mentionnet::netbuild::{
    build_graph, filter_edges, to_adjacency, MentionGraph, Ordering, TargetRank,
};
use mentionnet::pipeline::{
    ingest_corpus, read_manifest, run_manifest, run_pipeline, ErrorKind, PipelineError, RunConfig,
};
use mentionnet::synthgen::{generate_to, CommunitySpec, PlantedSpec, RingSpec};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "mentionnet",
    version,
    about = "Mention-network mining and analysis for tweet corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics: tweet count, unique authors, date span.
    IngestStats(IngestStatsArgs),
    /// Build the top-N1 to top-N2 mention graph and write it as an edge list.
    Build(BuildCmd),
    /// Degree distribution, tail exponent and adjacency heatmap.
    Analyze(AnalyzeArgs),
    /// Louvain communities.
    Communities(CommunitiesArgs),
    /// Groups of users tagged by a shared set of accounts.
    Rings(RingsArgs),
    /// Generate a synthetic corpus with planted structure.
    Synth(SynthArgs),
    /// Full pipeline, from a config file, flags or a batch manifest.
    Run(RunArgs),
}

#[derive(Args, Default)]
struct CorpusArgs {
    /// Input corpus file; repeat for several files.
    #[arg(long = "input", value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// jsonl or csv.
    #[arg(long)]
    format: Option<Format>,
    /// First day or instant to keep (YYYY-MM-DD or RFC 3339).
    #[arg(long, value_parser = parse_from)]
    from: Option<DateTime<Utc>>,
    /// Last day or instant to keep, inclusive.
    #[arg(long, value_parser = parse_to)]
    to: Option<DateTime<Utc>>,
    /// Treat the leading "RT @user:" of a retweet as not a mention.
    #[arg(long)]
    strip_rt: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args, Default)]
struct GraphArgs {
    /// Number of top posters used as sources.
    #[arg(long)]
    n1: Option<usize>,
    /// Number of top targets.
    #[arg(long)]
    n2: Option<usize>,
    /// Every edge gets weight 1.
    #[arg(long)]
    unweighted: bool,
    /// Rank targets by `mentions` received or by `posts` written.
    #[arg(long)]
    n2_rank: Option<TargetRank>,
    #[arg(long)]
    self_loops: bool,
}

#[derive(Args)]
struct GraphSource {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Read a previously built edge list (src,dst,weight) instead of a corpus.
    #[arg(long, value_name = "FILE", conflicts_with = "inputs")]
    edges: Option<PathBuf>,
}

#[derive(Args)]
struct IngestStatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Also write stats.json and users.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildCmd {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Also write edges_filtered.csv with edges heavier than this.
    #[arg(long)]
    min_weight: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Matrix keeps edges with weight strictly above this.
    #[arg(long, default_value_t = 200)]
    min_weight: u64,
    /// in, out or total.
    #[arg(long, default_value = "total")]
    degree: DegreeKind,
    /// Use strength (sum of weights) instead of degree.
    #[arg(long)]
    strength: bool,
    /// regression or hill.
    #[arg(long, default_value = "regression")]
    tail_method: TailMethod,
    #[arg(long)]
    tail_xmin: Option<u64>,
    /// Linear instead of log color scale for the matrix.
    #[arg(long)]
    linear: bool,
    #[arg(long, default_value_t = mentionnet::netbuild::DEFAULT_ADJACENCY_CAP)]
    adjacency_cap: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CommunitiesArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    resolution: f64,
    /// Detect on the graph filtered at this weight instead of the complete graph.
    #[arg(long)]
    min_weight: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Default)]
struct RingArgs {
    /// Minimum number of tagged users in a ring.
    #[arg(long)]
    ring_size: Option<usize>,
    /// Minimum Jaccard similarity of two targets' source sets.
    #[arg(long)]
    ring_jaccard: Option<f64>,
    /// Edges lighter than this are ignored by ring detection.
    #[arg(long)]
    ring_min_weight: Option<u64>,
    #[arg(long)]
    ring_density: Option<f64>,
    #[arg(long)]
    ring_sources: Option<usize>,
}

impl RingArgs {
    fn apply(&self, p: &mut RingParams) {
        if let Some(v) = self.ring_size {
            p.min_ring_size = v;
        }
        if let Some(v) = self.ring_jaccard {
            p.min_jaccard = v;
        }
        if let Some(v) = self.ring_min_weight {
            p.min_weight = v;
        }
        if let Some(v) = self.ring_density {
            p.min_density = v;
        }
        if let Some(v) = self.ring_sources {
            p.min_sources = v;
        }
    }
}

#[derive(Args)]
struct RingsArgs {
    #[command(flatten)]
    source: GraphSource,
    #[command(flatten)]
    rings: RingArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// JSON generator spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    tweets: Option<usize>,
    /// Zipf exponent of author activity; 0 for uniform.
    #[arg(long)]
    zipf: Option<f64>,
    /// Expected mentions per ordinary tweet.
    #[arg(long)]
    mention_rate: Option<f64>,
    /// Planted community SIZE:P where P is the in-community mention probability; repeatable.
    #[arg(long = "community", value_parser = parse_community)]
    communities: Vec<CommunitySpec>,
    /// Planted ring SIZE:K where every member tags every other K times; repeatable.
    #[arg(long = "ring", value_parser = parse_ring)]
    rings: Vec<RingSpec>,
    /// Probability that a ring mention goes to a random outsider.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON object mapping label to input file; runs each into OUT/LABEL.
    #[arg(long, conflicts_with = "inputs")]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    rings: RingArgs,
    #[arg(long)]
    min_weight: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_day(raw: &str, end: bool) -> Result<DateTime<Utc>, String> {
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        let t = if end {
            NaiveTime::from_hms_opt(23, 59, 59)
        } else {
            NaiveTime::from_hms_opt(0, 0, 0)
        };
        return Ok(d.and_time(t.expect("valid time")).and_utc());
    }
    parse_timestamp(raw).map_err(|e| format!("expected YYYY-MM-DD or RFC 3339 timestamp: {e}"))
}

fn parse_from(raw: &str) -> Result<DateTime<Utc>, String> {
    parse_day(raw, false)
}

fn parse_to(raw: &str) -> Result<DateTime<Utc>, String> {
    parse_day(raw, true)
}

fn split_pair(raw: &str) -> Result<(&str, &str), String> {
    raw.split_once(':')
        .ok_or_else(|| format!("expected SIZE:VALUE, got {raw:?}"))
}

fn parse_community(raw: &str) -> Result<CommunitySpec, String> {
    let (size, p) = split_pair(raw)?;
    Ok(CommunitySpec {
        size: size.parse().map_err(|e| format!("size: {e}"))?,
        internal_mention_prob: p.parse().map_err(|e| format!("probability: {e}"))?,
    })
}

fn parse_ring(raw: &str) -> Result<RingSpec, String> {
    let (size, k) = split_pair(raw)?;
    Ok(RingSpec {
        size: size.parse().map_err(|e| format!("size: {e}"))?,
        mentions_per_pair: k.parse().map_err(|e| format!("mentions per pair: {e}"))?,
    })
}

enum Failure {
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e.kind {
            ErrorKind::Data => Failure::Data(e.into()),
            ErrorKind::Internal => Failure::Internal(e.into()),
        }
    }
}

// Any io error while writing results is the environment's fault.
impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

fn data(e: impl Display) -> Failure {
    Failure::Data(anyhow::anyhow!("{e}"))
}

type Result<T, E = Failure> = std::result::Result<T, E>;

fn apply_corpus(args: &CorpusArgs, cfg: &mut RunConfig) {
    if !args.inputs.is_empty() {
        cfg.inputs = args.inputs.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if args.from.is_some() {
        cfg.from = args.from;
    }
    if args.to.is_some() {
        cfg.to = args.to;
    }
    if args.strip_rt {
        cfg.strip_rt = true;
    }
    if let Some(t) = args.threads {
        cfg.threads = t.max(1);
    }
    if let Some(l) = &args.label {
        cfg.label = l.clone();
    }
}

fn apply_graph(args: &GraphArgs, cfg: &mut RunConfig) {
    if let Some(n) = args.n1 {
        cfg.build.n1 = n;
    }
    if let Some(n) = args.n2 {
        cfg.build.n2 = n;
    }
    if args.unweighted {
        cfg.build.weighted = false;
    }
    if let Some(r) = args.n2_rank {
        cfg.build.target_rank = r;
    }
    if args.self_loops {
        cfg.build.include_self_loops = true;
    }
}

fn config_from(corpus: &CorpusArgs, graph: &GraphArgs) -> RunConfig {
    let mut cfg = RunConfig::default();
    apply_corpus(corpus, &mut cfg);
    apply_graph(graph, &mut cfg);
    cfg
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_with(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<()> {
    let mut w = create(dir, name)?;
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<()> {
    write_with(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    let res = serde_json::to_writer_pretty(&mut out, value)
        .map_err(io::Error::from)
        .and_then(|_| writeln!(out));
    match res {
        // reader went away (e.g. piped into head)
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn load_graph(src: &GraphSource) -> Result<MentionGraph> {
    if let Some(path) = &src.edges {
        let f = File::open(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        return MentionGraph::read_edges_csv(BufReader::new(f))
            .map_err(|e| data(format!("{}: {e}", path.display())));
    }
    let cfg = config_from(&src.corpus, &src.graph);
    let ing = ingest_corpus(&cfg)?;
    let built = build_graph(&ing.mined, &cfg.build).map_err(data)?;
    for n in &built.notices {
        eprintln!("note: {n}");
    }
    Ok(built.graph)
}

fn ingest_stats(args: IngestStatsArgs) -> Result<()> {
    let cfg = config_from(&args.corpus, &GraphArgs::default());
    let ing = ingest_corpus(&cfg)?;
    if let Some(out) = &args.out {
        write_json(out, "stats.json", &ing.stats)?;
        write_with(out, "users.csv", |w| ing.mined.table.write_csv(w))?;
    }
    print_json(&json!({
        "stats": ing.stats,
        "ingest": ing.report,
        "users": ing.mined.table.len(),
        "mention_events": ing.mined.events.len(),
        "self_mentions": ing.mined.self_mentions(),
    }))
}

fn build(args: BuildCmd) -> Result<()> {
    let cfg = config_from(&args.corpus, &args.graph);
    let ing = ingest_corpus(&cfg)?;
    let built = build_graph(&ing.mined, &cfg.build).map_err(data)?;
    for n in &built.notices {
        eprintln!("note: {n}");
    }
    let g = &built.graph;
    write_with(&args.out, "users.csv", |w| ing.mined.table.write_csv(w))?;
    write_with(&args.out, "edges.csv", |w| g.write_edges_csv(w))?;
    let mut report = json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "total_weight": g.total_weight(),
        "sources": built.sources.len(),
        "targets": built.targets.len(),
    });
    if let Some(mw) = args.min_weight {
        let f = filter_edges(g, mw);
        write_with(&args.out, "edges_filtered.csv", |w| f.write_edges_csv(w))?;
        report["filtered"] =
            json!({"min_weight": mw, "nodes": f.node_count(), "edges": f.edge_count()});
    }
    print_json(&report)
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let g = load_graph(&args.source)?;
    let out = &args.out;
    let dist = degree_sequence(&g, args.degree, args.strength);
    write_with(out, "degree.csv", |w| dist.write_csv(w))?;
    let points = ccdf(&dist).map_err(data)?;
    write_with(out, "ccdf.csv", |w| write_ccdf_csv(&points, w))?;
    let tail = tail_exponent(&dist, args.tail_xmin, args.tail_method).map_err(data)?;
    write_json(out, "tail.json", &tail)?;
    let svg = render_degree_plot(&dist, true).map_err(data)?;
    write_with(out, "degree.svg", |w| w.write_all(svg.as_bytes()))?;

    let filtered = filter_edges(&g, args.min_weight);
    write_with(out, "edges_filtered.csv", |w| filtered.write_edges_csv(w))?;
    if filtered.is_empty() {
        eprintln!(
            "note: no edges heavier than {}; matrix left empty",
            args.min_weight
        );
        write_with(out, "adjacency.csv", |w| writeln!(w))?;
        let svg = render_empty_matrix(&format!("No edges with weight above {}", args.min_weight));
        write_with(out, "matrix.svg", |w| w.write_all(svg.as_bytes()))?;
    } else {
        let adj =
            to_adjacency(&filtered, &Ordering::ByOutStrength, args.adjacency_cap).map_err(data)?;
        write_with(out, "adjacency.csv", |w| adj.write_csv(w))?;
        let svg = render_matrix(&adj, !args.linear).map_err(data)?;
        write_with(out, "matrix.svg", |w| w.write_all(svg.as_bytes()))?;
    }
    print_json(&json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "filtered_nodes": filtered.node_count(),
        "filtered_edges": filtered.edge_count(),
        "tail": tail,
    }))
}

fn communities(args: CommunitiesArgs) -> Result<()> {
    let complete = load_graph(&args.source)?;
    let g = match args.min_weight {
        Some(mw) => filter_edges(&complete, mw),
        None => complete,
    };
    let a = find_communities(&g, args.seed, args.resolution).map_err(data)?;
    write_with(&args.out, "communities.csv", |w| a.write_csv(&g, w))?;
    let summary = community_summary(&a, &g);
    write_json(&args.out, "community_summary.json", &summary)?;
    print_json(&json!({
        "nodes": g.node_count(),
        "communities": a.n_communities,
        "modularity": a.modularity,
        "seed": a.seed,
        "sizes": summary.communities.iter().map(|c| c.size).collect::<Vec<_>>(),
    }))
}

fn rings(args: RingsArgs) -> Result<()> {
    let g = load_graph(&args.source)?;
    let mut params = RingParams::default();
    args.rings.apply(&mut params);
    let found = detect_tag_rings(&g, &params);
    write_json(&args.out, "rings.json", &found)?;
    print_json(&json!({
        "params": params,
        "rings": found.len(),
        "sizes": found.iter().map(|r| r.targets.len()).collect::<Vec<_>>(),
    }))
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", p.display())))?
        }
        None => PlantedSpec::default(),
    };
    if let Some(v) = args.users {
        spec.n_users = v;
    }
    if let Some(v) = args.tweets {
        spec.n_tweets = v;
    }
    if let Some(v) = args.zipf {
        spec.activity_zipf_s = v;
    }
    if let Some(v) = args.mention_rate {
        spec.mention_rate = v;
    }
    if !args.communities.is_empty() {
        spec.communities = args.communities;
    }
    if !args.rings.is_empty() {
        spec.rings = args.rings;
    }
    if let Some(v) = args.noise {
        spec.noise_edge_prob = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    spec.validate().map_err(data)?;
    let truth =
        generate_to(&spec, create(&args.out, "synth_corpus.jsonl")?).map_err(|e| match e {
            mentionnet::synthgen::SynthError::Io(e) => Failure::Internal(e.into()),
            other => data(other),
        })?;
    write_with(&args.out, "truth.json", |w| truth.write_json(w))?;
    write_json(&args.out, "spec.json", &spec)?;
    print_json(&json!({
        "tweets": spec.n_tweets,
        "users": spec.n_users,
        "events": truth.total_events,
        "ring_events": truth.ring_events,
        "corpus": args.out.join("synth_corpus.jsonl"),
    }))
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| data(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    apply_corpus(&args.corpus, &mut cfg);
    apply_graph(&args.graph, &mut cfg);
    args.rings.apply(&mut cfg.rings);
    if let Some(v) = args.min_weight {
        cfg.min_weight = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.resolution {
        cfg.resolution = v;
    }
    if let Some(v) = args.out {
        cfg.out = v;
    }

    let Some(manifest_path) = &args.manifest else {
        let s = run_pipeline(&cfg)?;
        for n in &s.notices {
            eprintln!("note: {n}");
        }
        return print_json(&s);
    };
    let manifest = read_manifest(manifest_path)?;
    let mut worst: Option<Failure> = None;
    let mut rows = Vec::new();
    for (label, result) in run_manifest(&cfg, &manifest) {
        match result {
            Ok(s) => {
                eprintln!(
                    "{label}: {} tweets, {} nodes, {} edges, {} communities, {} rings",
                    s.corpus.tweet_count,
                    s.graph.nodes,
                    s.graph.edges,
                    s.communities.count,
                    s.rings
                );
                rows.push(json!({"label": label, "ok": true, "summary": s}));
            }
            Err(e) => {
                eprintln!("{label}: {e}");
                rows.push(
                    json!({"label": label, "ok": false, "stage": e.stage, "error": e.message}),
                );
                let f = Failure::from(e);
                if worst.as_ref().is_none_or(|w| f.code() > w.code()) {
                    worst = Some(f);
                }
            }
        }
    }
    print_json(&rows)?;
    match worst {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::IngestStats(a) => ingest_stats(a),
        Command::Build(a) => build(a),
        Command::Analyze(a) => analyze(a),
        Command::Communities(a) => communities(a),
        Command::Rings(a) => rings(a),
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Data(e) | Failure::Internal(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
