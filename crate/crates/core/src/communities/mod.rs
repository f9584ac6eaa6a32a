//! Community detection and tagging-ring detection on mention graphs.

mod louvain;
mod rings;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netbuild::MentionGraph;

pub use rings::{detect_tag_rings, RingParams, TagRing};

#[derive(Debug, Error, PartialEq)]
pub enum CommunityError {
    #[error("cannot detect communities on an empty graph")]
    EmptyGraph,
}

/// A partition of the graph's nodes. Community ids are dense and numbered in
/// order of first appearance over node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityAssignment {
    pub membership: Vec<usize>,
    pub modularity: f64,
    pub seed: u64,
    pub resolution: f64,
    pub n_communities: usize,
    /// Modularity after each Louvain level; the first entry is the
    /// all-singletons partition.
    pub level_modularity: Vec<f64>,
}

impl CommunityAssignment {
    /// `communities.csv`: `handle,community` in node order.
    pub fn write_csv<W: Write>(&self, graph: &MentionGraph, mut w: W) -> io::Result<()> {
        writeln!(w, "handle,community")?;
        for (node, c) in self.membership.iter().enumerate() {
            writeln!(w, "{},{}", graph.label(node), c)?;
        }
        Ok(())
    }
}

/// Louvain modularity maximization over the graph with reciprocal edges
/// merged by summing their weights. Node visit order is shuffled with `seed`.
pub fn find_communities(
    graph: &MentionGraph,
    seed: u64,
    resolution: f64,
) -> Result<CommunityAssignment, CommunityError> {
    if graph.is_empty() {
        return Err(CommunityError::EmptyGraph);
    }
    let res = louvain::louvain(graph, seed, resolution);
    let n_communities = res.membership.iter().max().map_or(0, |m| m + 1);
    Ok(CommunityAssignment {
        membership: res.membership,
        modularity: res.modularity,
        seed,
        resolution,
        n_communities,
        level_modularity: res.level_modularity,
    })
}

/// Modularity of an arbitrary partition of `graph` (symmetrized by weight sum).
pub fn modularity(graph: &MentionGraph, membership: &[usize], resolution: f64) -> f64 {
    assert_eq!(
        membership.len(),
        graph.node_count(),
        "one community per node"
    );
    louvain::Level::from_graph(graph).modularity(&louvain::renumber(membership), resolution)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberStrength {
    pub handle: String,
    pub strength: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    pub id: usize,
    pub size: usize,
    /// Up to five members with the highest total (in + out) strength.
    pub top_members: Vec<MemberStrength>,
    pub internal_weight: u64,
    /// Internal weight over all weight incident to the community.
    pub internal_weight_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySummary {
    pub n_communities: usize,
    pub n_nodes: usize,
    pub modularity: f64,
    /// Communities sorted by descending size, then id.
    pub communities: Vec<CommunityReport>,
}

pub fn community_summary(
    assignment: &CommunityAssignment,
    graph: &MentionGraph,
) -> CommunitySummary {
    let k = assignment.n_communities;
    let mem = &assignment.membership;
    let out = graph.out_strengths();
    let inn = graph.in_strengths();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (node, &c) in mem.iter().enumerate() {
        members[c].push(node);
    }
    let mut internal = vec![0u64; k];
    let mut incident = vec![0u64; k];
    for e in graph.edges() {
        let (a, b) = (mem[e.src], mem[e.dst]);
        if a == b {
            internal[a] += e.weight;
            incident[a] += e.weight;
        } else {
            incident[a] += e.weight;
            incident[b] += e.weight;
        }
    }
    let mut communities: Vec<CommunityReport> = members
        .into_iter()
        .enumerate()
        .map(|(id, mut nodes)| {
            nodes.sort_by(|&a, &b| {
                (out[b] + inn[b])
                    .cmp(&(out[a] + inn[a]))
                    .then(graph.label(a).cmp(graph.label(b)))
            });
            CommunityReport {
                id,
                size: nodes.len(),
                top_members: nodes
                    .iter()
                    .take(5)
                    .map(|&n| MemberStrength {
                        handle: graph.label(n).to_string(),
                        strength: out[n] + inn[n],
                    })
                    .collect(),
                internal_weight: internal[id],
                internal_weight_share: if incident[id] == 0 {
                    0.0
                } else {
                    internal[id] as f64 / incident[id] as f64
                },
            }
        })
        .collect();
    communities.sort_by(|a, b| b.size.cmp(&a.size).then(a.id.cmp(&b.id)));
    CommunitySummary {
        n_communities: k,
        n_nodes: graph.node_count(),
        modularity: assignment.modularity,
        communities,
    }
}
