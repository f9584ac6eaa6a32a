//! Seeded Louvain modularity maximization on the symmetrized graph.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::netbuild::MentionGraph;

/// Undirected weighted graph at one aggregation level. Self-loop weight is
/// kept apart from `adj` and counts twice towards a node's degree.
#[derive(Debug, Clone)]
pub(crate) struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    loops: Vec<f64>,
    degree: Vec<f64>,
    /// Total undirected edge weight `m`.
    total: f64,
}

impl Level {
    /// Symmetrizes `u -> v` and `v -> u` by summing their weights.
    pub(crate) fn from_graph(graph: &MentionGraph) -> Level {
        let n = graph.node_count();
        let mut pairs: HashMap<(usize, usize), f64> = HashMap::new();
        let mut loops = vec![0.0; n];
        for e in graph.edges() {
            let w = e.weight as f64;
            if e.src == e.dst {
                loops[e.src] += w;
            } else {
                *pairs
                    .entry((e.src.min(e.dst), e.src.max(e.dst)))
                    .or_default() += w;
            }
        }
        Level::from_pairs(n, pairs, loops)
    }

    fn from_pairs(n: usize, pairs: HashMap<(usize, usize), f64>, loops: Vec<f64>) -> Level {
        let mut adj = vec![Vec::new(); n];
        let mut total: f64 = loops.iter().sum();
        for ((a, b), w) in pairs {
            adj[a].push((b, w));
            adj[b].push((a, w));
            total += w;
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(v, _)| v);
        }
        let degree = (0..n)
            .map(|i| adj[i].iter().map(|x| x.1).sum::<f64>() + 2.0 * loops[i])
            .collect();
        Level {
            adj,
            loops,
            degree,
            total,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Modularity of a partition of this level's nodes.
    pub(crate) fn modularity(&self, membership: &[usize], resolution: f64) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let k = membership.iter().max().map_or(0, |m| m + 1);
        let mut internal = vec![0.0; k];
        let mut volume = vec![0.0; k];
        for i in 0..self.len() {
            let c = membership[i];
            volume[c] += self.degree[i];
            internal[c] += self.loops[i];
            for &(j, w) in &self.adj[i] {
                if j > i && membership[j] == c {
                    internal[c] += w;
                }
            }
        }
        let m2 = 2.0 * self.total;
        internal
            .iter()
            .zip(&volume)
            .map(|(l, d)| l / self.total - resolution * (d / m2).powi(2))
            .sum()
    }

    /// Local moving phase. Returns the (dense) community of each node and
    /// whether any node changed community.
    fn local_moves(&self, rng: &mut ChaCha8Rng, resolution: f64) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot: Vec<f64> = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let m2 = 2.0 * self.total;

        let mut link = vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut is_touched = vec![false; n];
        let mut any_move = false;
        const MAX_SWEEPS: usize = 1000;
        for _ in 0..MAX_SWEEPS {
            let mut moves = 0;
            for &i in &order {
                let ki = self.degree[i];
                let own = comm[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if !is_touched[c] {
                        is_touched[c] = true;
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[own] -= ki;
                let gain = |c: usize, link_c: f64| link_c - resolution * tot[c] * ki / m2;
                let mut best = own;
                let mut best_gain = gain(own, link[own]);
                for &c in &touched {
                    let g = gain(c, link[c]);
                    if g > best_gain + 1e-12 * (1.0 + best_gain.abs()) {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                if best != own {
                    comm[i] = best;
                    moves += 1;
                }
                for &c in &touched {
                    link[c] = 0.0;
                    is_touched[c] = false;
                }
                touched.clear();
            }
            if moves == 0 {
                break;
            }
            any_move = true;
        }
        (renumber(&comm), any_move)
    }

    fn aggregate(&self, comm: &[usize]) -> Level {
        let k = comm.iter().max().map_or(0, |m| m + 1);
        let mut loops = vec![0.0; k];
        let mut pairs: HashMap<(usize, usize), f64> = HashMap::new();
        for i in 0..self.len() {
            let ci = comm[i];
            loops[ci] += self.loops[i];
            for &(j, w) in &self.adj[i] {
                if j < i {
                    continue;
                }
                let cj = comm[j];
                if ci == cj {
                    loops[ci] += w;
                } else {
                    *pairs.entry((ci.min(cj), ci.max(cj))).or_default() += w;
                }
            }
        }
        Level::from_pairs(k, pairs, loops)
    }
}

/// Relabels to `0..k` in order of first appearance.
pub(crate) fn renumber(comm: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    comm.iter()
        .map(|c| {
            let next = map.len();
            *map.entry(*c).or_insert(next)
        })
        .collect()
}

pub(crate) struct LouvainResult {
    pub membership: Vec<usize>,
    pub modularity: f64,
    /// Modularity after each aggregation level, starting with the singleton
    /// partition.
    pub level_modularity: Vec<f64>,
}

pub(crate) fn louvain(graph: &MentionGraph, seed: u64, resolution: f64) -> LouvainResult {
    let base = Level::from_graph(graph);
    let n = base.len();
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level_modularity = vec![base.modularity(&membership, resolution)];
    if base.total == 0.0 {
        return LouvainResult {
            modularity: level_modularity[0],
            membership,
            level_modularity,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = base.clone();
    loop {
        let (comm, moved) = level.local_moves(&mut rng, resolution);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        level_modularity.push(base.modularity(&membership, resolution));
        let k = comm.iter().max().map_or(0, |m| m + 1);
        if k == level.len() {
            break;
        }
        level = level.aggregate(&comm);
    }
    let membership = renumber(&membership);
    LouvainResult {
        modularity: base.modularity(&membership, resolution),
        membership,
        level_modularity,
    }
}
