//! Detection of groups of users that are persistently tagged by a largely
//! shared set of accounts. In an adjacency matrix these appear as repeated
//! line patterns.

use serde::{Deserialize, Serialize};

use crate::netbuild::MentionGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingParams {
    /// Minimum number of targets in a reported ring.
    pub min_ring_size: usize,
    /// Edges lighter than this are ignored.
    pub min_weight: u64,
    /// Two targets are linked when their source sets have at least this
    /// Jaccard similarity; rings are the single-linkage clusters.
    pub min_jaccard: f64,
    /// Minimum fraction of realized source-to-target edges.
    pub min_density: f64,
    pub min_sources: usize,
}

impl Default for RingParams {
    fn default() -> Self {
        RingParams {
            min_ring_size: 5,
            min_weight: 3,
            min_jaccard: 0.5,
            min_density: 0.5,
            min_sources: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRing {
    /// Tagged users, sorted.
    pub targets: Vec<String>,
    /// Every account with a retained edge into the ring, sorted.
    pub sources: Vec<String>,
    /// Realized source-to-target edges over possible non-self pairs.
    pub density: f64,
    /// Weight of the retained edges into the ring.
    pub total_weight: u64,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn detect_tag_rings(graph: &MentionGraph, params: &RingParams) -> Vec<TagRing> {
    let n = graph.node_count();
    let mut sources_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut targets_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut weight_into = vec![0u64; n];
    for e in graph
        .edges()
        .iter()
        .filter(|e| e.weight >= params.min_weight)
    {
        sources_of[e.dst].push(e.src);
        targets_of[e.src].push(e.dst);
        weight_into[e.dst] += e.weight;
    }
    // edges are sorted by (src, dst), so sources_of lists are already sorted

    let mut sets = DisjointSet::new(n);
    let mut checked = vec![usize::MAX; n];
    for t in 0..n {
        if sources_of[t].is_empty() {
            continue;
        }
        for &s in &sources_of[t] {
            for &t2 in &targets_of[s] {
                if t2 <= t || checked[t2] == t {
                    continue;
                }
                checked[t2] = t;
                if jaccard(&sources_of[t], &sources_of[t2]) >= params.min_jaccard {
                    sets.union(t, t2);
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in (0..n).filter(|&t| !sources_of[t].is_empty()) {
        let root = sets.find(t);
        groups[root].push(t);
    }

    let mut rings: Vec<TagRing> = groups
        .into_iter()
        .filter(|g| g.len() >= params.min_ring_size)
        .filter_map(|targets| {
            let mut sources: Vec<usize> = targets
                .iter()
                .flat_map(|&t| sources_of[t].iter().copied())
                .collect();
            sources.sort_unstable();
            sources.dedup();
            let overlap = targets
                .iter()
                .filter(|t| sources.binary_search(t).is_ok())
                .count();
            let possible = sources.len() * targets.len() - overlap;
            let realized: usize = targets
                .iter()
                .map(|&t| sources_of[t].iter().filter(|&&s| s != t).count())
                .sum();
            let density = if possible == 0 {
                0.0
            } else {
                realized as f64 / possible as f64
            };
            if sources.len() < params.min_sources || density < params.min_density {
                return None;
            }
            let label = |v: &[usize]| {
                v.iter()
                    .map(|&i| graph.label(i).to_string())
                    .collect::<Vec<_>>()
            };
            Some(TagRing {
                targets: label(&targets),
                sources: label(&sources),
                density,
                total_weight: targets.iter().map(|&t| weight_into[t]).sum(),
            })
        })
        .collect();
    rings.sort_by(|a, b| {
        b.total_weight
            .cmp(&a.total_weight)
            .then(a.targets.cmp(&b.targets))
    });
    rings
}
