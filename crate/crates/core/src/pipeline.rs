//! End-to-end runs: ingest, mine, build, filter, degree statistics,
//! communities and rings, with every artifact written to one directory next
//! to the configuration that produced it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::communities::{community_summary, detect_tag_rings, find_communities, RingParams};
use crate::corpus::{
    ingest_with, CorpusStats, DateRange, Format, IngestOptions, IngestReport, StatsAccumulator,
};
use crate::graphstats::{
    ccdf, degree_sequence, render_degree_plot, render_empty_matrix, render_matrix, tail_exponent,
    write_ccdf_csv, DegreeKind, TailEstimate, TailMethod,
};
use crate::mention::{MineOptions, MinedCorpus, Miner};
use crate::netbuild::{
    build_graph, filter_edges, to_adjacency, BuildConfig, MentionGraph, Ordering,
    DEFAULT_ADJACENCY_CAP,
};

/// Which graph community detection runs on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphChoice {
    #[default]
    Complete,
    Filtered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub label: String,
    pub inputs: Vec<PathBuf>,
    pub format: Format,
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
    pub max_malformed_fraction: f64,
    pub strip_rt: bool,
    #[serde(flatten)]
    pub build: BuildConfig,
    /// Edges must be strictly heavier than this to survive filtering.
    pub min_weight: u64,
    pub degree_kind: DegreeKind,
    pub degree_weighted: bool,
    pub tail_method: TailMethod,
    pub tail_xmin: Option<u64>,
    pub log_scale: bool,
    pub adjacency_cap: usize,
    pub communities_on: GraphChoice,
    pub seed: u64,
    pub resolution: f64,
    pub rings: RingParams,
    pub out: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            label: "corpus".into(),
            inputs: Vec::new(),
            format: Format::Jsonl,
            from: None,
            to: None,
            max_malformed_fraction: 0.10,
            strip_rt: false,
            build: BuildConfig::default(),
            min_weight: 200,
            degree_kind: DegreeKind::Total,
            degree_weighted: false,
            tail_method: TailMethod::Regression,
            tail_xmin: None,
            log_scale: true,
            adjacency_cap: DEFAULT_ADJACENCY_CAP,
            communities_on: GraphChoice::Complete,
            seed: 42,
            resolution: 1.0,
            rings: RingParams::default(),
            out: PathBuf::from("out"),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Ingest,
    Build,
    Filter,
    Stats,
    Communities,
    Rings,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(String::from));
        f.write_str(s.as_deref().unwrap_or("unknown"))
    }
}

/// Data errors come from the inputs or configuration; internal errors from
/// the environment (e.g. an unwritable output directory).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Internal,
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    fn data(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            kind: ErrorKind::Data,
            message: e.to_string(),
        }
    }

    fn internal(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            kind: ErrorKind::Internal,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
}

impl GraphSummary {
    fn of(g: &MentionGraph) -> Self {
        GraphSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
            total_weight: g.total_weight(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityHeadline {
    pub graph: GraphChoice,
    pub count: usize,
    pub modularity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub corpus: CorpusStats,
    pub ingest: IngestReport,
    pub users: usize,
    pub mention_events: u64,
    pub self_mentions: u64,
    pub graph: GraphSummary,
    pub min_weight: u64,
    pub filtered: GraphSummary,
    pub tail: Option<TailEstimate>,
    pub communities: CommunityHeadline,
    pub rings: usize,
    pub notices: Vec<String>,
}

/// Files every successful run writes into its output directory.
pub const ARTIFACTS: [&str; 15] = [
    "config.json",
    "summary.json",
    "users.csv",
    "edges.csv",
    "edges_filtered.csv",
    "adjacency.csv",
    "degree.csv",
    "ccdf.csv",
    "tail.json",
    "degree.svg",
    "matrix.svg",
    "communities.csv",
    "community_summary.json",
    "rings.json",
    "stats.json",
];

pub const FAILED_MARKER: &str = "FAILED";

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), PipelineError> {
    let path = dir.join(name);
    let run = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()
    };
    run().map_err(|e| PipelineError::internal(Stage::Write, format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), PipelineError> {
    write_file(dir, name, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}

/// Output of the ingest and mining stages.
pub struct Ingested {
    pub stats: CorpusStats,
    pub report: IngestReport,
    pub mined: MinedCorpus,
}

/// Reads every input of `config` in order and mines mentions from the
/// accepted records. Fails when nothing is accepted.
pub fn ingest_corpus(config: &RunConfig) -> Result<Ingested, PipelineError> {
    if config.inputs.is_empty() {
        return Err(PipelineError::data(Stage::Config, "no input files given"));
    }
    let opts = IngestOptions {
        format: config.format,
        date_range: DateRange::new(config.from, config.to)
            .map_err(|e| PipelineError::data(Stage::Config, e))?,
        max_malformed_fraction: config.max_malformed_fraction,
        threads: config.threads,
    };
    let mut stats = StatsAccumulator::default();
    let mut miner = Miner::new(MineOptions {
        strip_rt: config.strip_rt,
    });
    let mut report = IngestReport::default();
    for input in &config.inputs {
        let file = File::open(input)
            .map_err(|e| PipelineError::data(Stage::Ingest, format!("{}: {e}", input.display())))?;
        let r = ingest_with(BufReader::with_capacity(1 << 20, file), &opts, |rec| {
            stats.push(&rec);
            miner.push(&rec);
        })
        .map_err(|e| PipelineError::data(Stage::Ingest, format!("{}: {e}", input.display())))?;
        report.records_seen += r.records_seen;
        report.accepted += r.accepted;
        report.out_of_range += r.out_of_range;
        report.malformed += r.malformed;
        report.errors.extend(r.errors);
    }
    if report.accepted == 0 {
        return Err(PipelineError::data(
            Stage::Ingest,
            format!(
                "no records accepted ({} seen, {} out of range)",
                report.records_seen, report.out_of_range
            ),
        ));
    }
    Ok(Ingested {
        stats: stats.finish(&config.label),
        report,
        mined: miner.finish(),
    })
}

/// Runs the full pipeline. On failure a `FAILED` file naming the stage is
/// left in the output directory alongside any artifacts already written.
pub fn run_pipeline(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    fs::create_dir_all(&config.out).map_err(|e| {
        PipelineError::internal(Stage::Config, format!("{}: {e}", config.out.display()))
    })?;
    let marker = config.out.join(FAILED_MARKER);
    let _ = fs::remove_file(&marker);
    let result = run_stages(config);
    if let Err(e) = &result {
        let _ = fs::write(
            &marker,
            format!("stage: {}\nerror: {}\n", e.stage, e.message),
        );
    }
    result
}

fn run_stages(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    let out = config.out.as_path();
    write_json(out, "config.json", config)?;

    let Ingested {
        stats: corpus,
        report,
        mined,
    } = ingest_corpus(config)?;
    write_json(out, "stats.json", &corpus)?;
    write_file(out, "users.csv", |w| mined.table.write_csv(w))?;

    // build + filter
    let built =
        build_graph(&mined, &config.build).map_err(|e| PipelineError::data(Stage::Build, e))?;
    let mut notices = built.notices.clone();
    let graph = built.graph;
    write_file(out, "edges.csv", |w| graph.write_edges_csv(w))?;
    if !config.build.weighted && config.min_weight > 0 {
        notices.push(
            "unweighted graph: every edge has weight 1, so min_weight >= 1 removes all edges"
                .into(),
        );
    }
    let filtered = filter_edges(&graph, config.min_weight);
    write_file(out, "edges_filtered.csv", |w| filtered.write_edges_csv(w))?;

    // degree statistics on the complete graph
    let dist = degree_sequence(&graph, config.degree_kind, config.degree_weighted);
    write_file(out, "degree.csv", |w| dist.write_csv(w))?;
    let points = ccdf(&dist).map_err(|e| PipelineError::data(Stage::Stats, e))?;
    write_file(out, "ccdf.csv", |w| write_ccdf_csv(&points, w))?;
    let tail = tail_exponent(&dist, config.tail_xmin, config.tail_method)
        .map_err(|e| PipelineError::data(Stage::Stats, e))?;
    if !tail.reliable {
        notices.push(format!(
            "tail exponent unreliable: only {} tail points",
            tail.n_tail
        ));
    }
    write_json(out, "tail.json", &tail)?;
    let degree_svg =
        render_degree_plot(&dist, true).map_err(|e| PipelineError::data(Stage::Stats, e))?;
    write_file(out, "degree.svg", |w| w.write_all(degree_svg.as_bytes()))?;

    // communities
    let community_graph = match config.communities_on {
        GraphChoice::Complete => &graph,
        GraphChoice::Filtered => &filtered,
    };
    let (headline, by_user) = if community_graph.is_empty() {
        notices.push("community detection skipped: graph has no nodes".into());
        write_file(out, "communities.csv", |w| writeln!(w, "handle,community"))?;
        write_json(
            out,
            "community_summary.json",
            &serde_json::json!({"n_communities": 0, "n_nodes": 0, "modularity": 0.0, "communities": []}),
        )?;
        (
            CommunityHeadline {
                graph: config.communities_on,
                count: 0,
                modularity: 0.0,
            },
            HashMap::new(),
        )
    } else {
        let assignment = find_communities(community_graph, config.seed, config.resolution)
            .map_err(|e| PipelineError::data(Stage::Communities, e))?;
        write_file(out, "communities.csv", |w| {
            assignment.write_csv(community_graph, w)
        })?;
        write_json(
            out,
            "community_summary.json",
            &community_summary(&assignment, community_graph),
        )?;
        let by_user: HashMap<u32, usize> = assignment
            .membership
            .iter()
            .enumerate()
            .map(|(node, &c)| (community_graph.user(node), c))
            .collect();
        (
            CommunityHeadline {
                graph: config.communities_on,
                count: assignment.n_communities,
                modularity: assignment.modularity,
            },
            by_user,
        )
    };

    // rings
    let rings = detect_tag_rings(&graph, &config.rings);
    write_json(out, "rings.json", &rings)?;

    // filtered adjacency matrix, grouped by community
    if filtered.is_empty() {
        notices.push(format!(
            "no edges heavier than {}; matrix left empty",
            config.min_weight
        ));
        write_file(out, "adjacency.csv", |w| writeln!(w))?;
        let svg = render_empty_matrix(&format!("No edges with weight above {}", config.min_weight));
        write_file(out, "matrix.svg", |w| w.write_all(svg.as_bytes()))?;
    } else {
        let unknown = by_user.len();
        let membership: Vec<usize> = (0..filtered.node_count())
            .map(|i| by_user.get(&filtered.user(i)).copied().unwrap_or(unknown))
            .collect();
        let adj = to_adjacency(
            &filtered,
            &Ordering::ByCommunity(membership),
            config.adjacency_cap,
        )
        .map_err(|e| PipelineError::data(Stage::Filter, e))?;
        write_file(out, "adjacency.csv", |w| adj.write_csv(w))?;
        let svg = render_matrix(&adj, config.log_scale)
            .map_err(|e| PipelineError::data(Stage::Stats, e))?;
        write_file(out, "matrix.svg", |w| w.write_all(svg.as_bytes()))?;
    }

    let summary = RunSummary {
        label: config.label.clone(),
        corpus,
        ingest: report,
        users: mined.table.len(),
        mention_events: mined.events.len() as u64,
        self_mentions: mined.self_mentions(),
        graph: GraphSummary::of(&graph),
        min_weight: config.min_weight,
        filtered: GraphSummary::of(&filtered),
        tail: Some(tail),
        communities: headline,
        rings: rings.len(),
        notices,
    };
    write_json(out, "summary.json", &summary)?;
    Ok(summary)
}

/// Batch manifest: label to input file. Each label runs into `out/<label>/`.
pub type Manifest = BTreeMap<String, PathBuf>;

pub fn read_manifest(path: &Path) -> Result<Manifest, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::data(Stage::Config, format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| PipelineError::data(Stage::Config, format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(manifest
        .into_iter()
        .map(|(label, p)| {
            let p = if p.is_relative() { base.join(p) } else { p };
            (label, p)
        })
        .collect())
}

/// Runs `base` once per manifest entry, in label order.
pub fn run_manifest(
    base: &RunConfig,
    manifest: &Manifest,
) -> Vec<(String, Result<RunSummary, PipelineError>)> {
    manifest
        .iter()
        .map(|(label, input)| {
            let cfg = RunConfig {
                label: label.clone(),
                inputs: vec![input.clone()],
                out: base.out.join(label),
                ..base.clone()
            };
            (label.clone(), run_pipeline(&cfg))
        })
        .collect()
}
