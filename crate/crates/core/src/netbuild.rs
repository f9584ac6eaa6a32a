//! Directed mention-graph construction from the top posters to the most
//! mentioned users, plus weight filtering and dense adjacency export.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mention::{author_post_counts, mention_frequencies, top_n, MinedCorpus, UserId};

/// Which ranking selects edge targets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetRank {
    #[default]
    Mentions,
    Posts,
}

impl FromStr for TargetRank {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mentions" => Ok(TargetRank::Mentions),
            "posts" => Ok(TargetRank::Posts),
            other => Err(format!(
                "unknown target rank {other:?} (expected mentions or posts)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    /// Number of top posters used as edge sources.
    pub n1: usize,
    /// Number of top-ranked users used as edge targets.
    pub n2: usize,
    pub weighted: bool,
    pub include_self_loops: bool,
    pub target_rank: TargetRank,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            n1: 2000,
            n2: 200,
            weighted: true,
            include_self_loops: false,
            target_rank: TargetRank::Mentions,
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("n1 and n2 must be at least 1")]
    ZeroSelection,
    #[error("graph has {nodes} nodes, above the dense adjacency cap of {cap}; filter edges first")]
    TooLarge { nodes: usize, cap: usize },
    #[error("edge list line {line}: {detail}")]
    EdgeList { line: u64, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Selection roles of a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Roles {
    pub source: bool,
    pub target: bool,
}

impl fmt::Display for Roles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.source, self.target) {
            (true, true) => "both",
            (true, false) => "source",
            (false, true) => "target",
            (false, false) => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: u64,
}

/// Directed weighted graph over node indices `0..n`.
///
/// Nodes are kept sorted by label and edges by `(src, dst)`, so the edge
/// list is also sorted by `(src handle, dst handle)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MentionGraph {
    labels: Vec<String>,
    users: Vec<UserId>,
    roles: Vec<Roles>,
    edges: Vec<Edge>,
}

impl MentionGraph {
    /// Builds a graph from labelled nodes and `(src, dst, weight)` triples.
    /// Duplicate pairs are merged by summing; zero weights are dropped.
    /// Roles are derived from edge endpoints and user ids are node positions.
    pub fn from_edges<S: AsRef<str>>(
        labels: &[S],
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Self {
        let n = labels.len();
        let mut merged: HashMap<(usize, usize), u64> = HashMap::new();
        for (s, d, w) in edges {
            assert!(s < n && d < n, "edge endpoint out of range");
            if w > 0 {
                *merged.entry((s, d)).or_default() += w;
            }
        }
        let mut roles = vec![Roles::default(); n];
        for &(s, d) in merged.keys() {
            roles[s].source = true;
            roles[d].target = true;
        }
        let nodes: Vec<(String, UserId, Roles)> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_ref().to_string(), i as UserId, roles[i]))
            .collect();
        Self::assemble(nodes, merged)
    }

    /// Sorts nodes by label and remaps the edges accordingly.
    fn assemble(
        mut nodes: Vec<(String, UserId, Roles)>,
        merged: HashMap<(usize, usize), u64>,
    ) -> Self {
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| {
            nodes[a]
                .0
                .cmp(&nodes[b].0)
                .then(nodes[a].1.cmp(&nodes[b].1))
        });
        let mut new_index = vec![0usize; nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let mut edges: Vec<Edge> = merged
            .into_iter()
            .map(|((s, d), weight)| Edge {
                src: new_index[s],
                dst: new_index[d],
                weight,
            })
            .collect();
        edges.sort_unstable();
        let mut slots: Vec<Option<(String, UserId, Roles)>> = nodes.drain(..).map(Some).collect();
        let (mut labels, mut users, mut roles) = (Vec::new(), Vec::new(), Vec::new());
        for &old in &order {
            let (l, u, r) = slots[old].take().expect("each node placed once");
            labels.push(l);
            users.push(u);
            roles.push(r);
        }
        MentionGraph {
            labels,
            users,
            roles,
            edges,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn user(&self, node: usize) -> UserId {
        self.users[node]
    }

    pub fn roles(&self, node: usize) -> Roles {
        self.roles[node]
    }

    pub fn node_of_label(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn out_strengths(&self) -> Vec<u64> {
        let mut s = vec![0; self.node_count()];
        for e in &self.edges {
            s[e.src] += e.weight;
        }
        s
    }

    pub fn in_strengths(&self) -> Vec<u64> {
        let mut s = vec![0; self.node_count()];
        for e in &self.edges {
            s[e.dst] += e.weight;
        }
        s
    }

    /// Edges as `(src label, dst label, weight)`.
    pub fn labelled_edges(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        self.edges
            .iter()
            .map(|e| (self.label(e.src), self.label(e.dst), e.weight))
    }

    /// `edges.csv`: `src,dst,weight` sorted by (src handle, dst handle).
    pub fn write_edges_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "src,dst,weight")?;
        for (s, d, wt) in self.labelled_edges() {
            writeln!(w, "{s},{d},{wt}")?;
        }
        Ok(())
    }

    /// Reads an `edges.csv` file. Only endpoints of listed edges become nodes.
    pub fn read_edges_csv<R: BufRead>(r: R) -> Result<Self, GraphError> {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut edges = Vec::new();
        let mut node = |name: &str| -> usize {
            if let Some(&i) = index.get(name) {
                return i;
            }
            labels.push(name.to_string());
            index.insert(name.to_string(), labels.len() - 1);
            labels.len() - 1
        };
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line_no = i as u64 + 1;
            let line = line.trim();
            if line.is_empty() || (line_no == 1 && line == "src,dst,weight") {
                continue;
            }
            let bad = |detail: &str| GraphError::EdgeList {
                line: line_no,
                detail: detail.to_string(),
            };
            let mut parts = line.split(',');
            let (Some(s), Some(d), Some(w), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad("expected src,dst,weight"));
            };
            let w: u64 = w
                .trim()
                .parse()
                .map_err(|_| bad("weight is not a positive integer"))?;
            if w == 0 {
                return Err(bad("weight must be at least 1"));
            }
            let (s, d) = (node(s.trim()), node(d.trim()));
            edges.push((s, d, w));
        }
        Ok(MentionGraph::from_edges(&labels, edges))
    }
}

/// A built graph together with the selected top sets.
#[derive(Debug, Clone)]
pub struct BuiltGraph {
    pub graph: MentionGraph,
    /// Top-N1 posters, in rank order.
    pub sources: Vec<UserId>,
    /// Top-N2 targets, in rank order.
    pub targets: Vec<UserId>,
    pub notices: Vec<String>,
}

/// Builds the mention graph: an edge `u -> v` for every top-N1 poster `u`
/// that mentioned top-N2 user `v`, weighted by the number of mentions.
pub fn build_graph(mined: &MinedCorpus, config: &BuildConfig) -> Result<BuiltGraph, GraphError> {
    if config.n1 == 0 || config.n2 == 0 {
        return Err(GraphError::ZeroSelection);
    }
    let table = &mined.table;
    let posts = author_post_counts(table);
    let target_freq = match config.target_rank {
        TargetRank::Mentions => mention_frequencies(table),
        TargetRank::Posts => posts.clone(),
    };
    let sources = top_n(&posts, config.n1, table);
    let targets = top_n(&target_freq, config.n2, table);
    let mut notices = Vec::new();
    if sources.len() < config.n1 {
        notices.push(format!(
            "n1={} exceeds the {} users with posts; using all of them",
            config.n1,
            sources.len()
        ));
    }
    if targets.len() < config.n2 {
        notices.push(format!(
            "n2={} exceeds the {} ranked target candidates; using all of them",
            config.n2,
            targets.len()
        ));
    }

    let mut roles = vec![Roles::default(); table.len()];
    for &u in &sources {
        roles[u as usize].source = true;
    }
    for &u in &targets {
        roles[u as usize].target = true;
    }
    let mut weights: HashMap<(UserId, UserId), u64> = HashMap::new();
    for ev in &mined.events {
        if roles[ev.author as usize].source
            && roles[ev.target as usize].target
            && (config.include_self_loops || !ev.is_self())
        {
            *weights.entry((ev.author, ev.target)).or_default() += 1;
        }
    }

    let mut local: HashMap<UserId, usize> = HashMap::new();
    let mut nodes = Vec::new();
    for &u in sources.iter().chain(&targets) {
        local.entry(u).or_insert_with(|| {
            nodes.push((table.handle(u).to_string(), u, roles[u as usize]));
            nodes.len() - 1
        });
    }
    let merged = weights
        .into_iter()
        .map(|((a, t), w)| ((local[&a], local[&t]), if config.weighted { w } else { 1 }))
        .collect();
    Ok(BuiltGraph {
        graph: MentionGraph::assemble(nodes, merged),
        sources,
        targets,
        notices,
    })
}

/// Keeps edges with weight strictly greater than `min_weight` and drops the
/// nodes that lose all of their edges. Nodes that were already isolated stay.
pub fn filter_edges(graph: &MentionGraph, min_weight: u64) -> MentionGraph {
    let n = graph.node_count();
    let mut had = vec![false; n];
    let mut has = vec![false; n];
    for e in &graph.edges {
        had[e.src] = true;
        had[e.dst] = true;
        if e.weight > min_weight {
            has[e.src] = true;
            has[e.dst] = true;
        }
    }
    let keep: Vec<bool> = (0..n).map(|i| has[i] || !had[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    let mut out = MentionGraph::default();
    for i in (0..n).filter(|&i| keep[i]) {
        new_index[i] = out.labels.len();
        out.labels.push(graph.labels[i].clone());
        out.users.push(graph.users[i]);
        out.roles.push(graph.roles[i]);
    }
    out.edges = graph
        .edges
        .iter()
        .filter(|e| e.weight > min_weight)
        .map(|e| Edge {
            src: new_index[e.src],
            dst: new_index[e.dst],
            weight: e.weight,
        })
        .collect();
    out
}

pub const DEFAULT_ADJACENCY_CAP: usize = 5000;

/// Row/column order for [`to_adjacency`].
#[derive(Debug, Clone, PartialEq)]
pub enum Ordering {
    /// Ascending user id.
    ById,
    /// Descending out-strength, ties by label.
    ByOutStrength,
    /// Grouped by community id (one entry per node), then descending total
    /// strength, then label.
    ByCommunity(Vec<usize>),
}

/// Dense row-major adjacency matrix with its node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    /// Graph node index of each row/column.
    pub order: Vec<usize>,
    pub labels: Vec<String>,
    pub cells: Vec<u64>,
}

impl Adjacency {
    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.cells[row * self.size() + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        let n = self.size();
        &self.cells[row * n..(row + 1) * n]
    }

    pub fn max_weight(&self) -> u64 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    /// `adjacency.csv`: a header row of handles, then one row per handle.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (i, l) in self.labels.iter().enumerate() {
            write!(w, "{l}")?;
            for v in self.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn to_adjacency(
    graph: &MentionGraph,
    ordering: &Ordering,
    cap: usize,
) -> Result<Adjacency, GraphError> {
    let n = graph.node_count();
    if n > cap {
        return Err(GraphError::TooLarge { nodes: n, cap });
    }
    let mut order: Vec<usize> = (0..n).collect();
    match ordering {
        Ordering::ById => order.sort_by_key(|&i| (graph.user(i), i)),
        Ordering::ByOutStrength => {
            let s = graph.out_strengths();
            order.sort_by(|&a, &b| s[b].cmp(&s[a]).then(graph.label(a).cmp(graph.label(b))));
        }
        Ordering::ByCommunity(membership) => {
            assert_eq!(membership.len(), n, "one community id per node");
            let out = graph.out_strengths();
            let inn = graph.in_strengths();
            order.sort_by(|&a, &b| {
                membership[a]
                    .cmp(&membership[b])
                    .then((out[b] + inn[b]).cmp(&(out[a] + inn[a])))
                    .then(graph.label(a).cmp(graph.label(b)))
            });
        }
    }
    let mut position = vec![0usize; n];
    for (p, &node) in order.iter().enumerate() {
        position[node] = p;
    }
    let mut cells = vec![0u64; n * n];
    for e in graph.edges() {
        cells[position[e.src] * n + position[e.dst]] = e.weight;
    }
    Ok(Adjacency {
        labels: order.iter().map(|&i| graph.label(i).to_string()).collect(),
        order,
        cells,
    })
}
