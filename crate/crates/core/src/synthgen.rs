//! Synthetic tweet corpora and graphs with planted ground truth.
//!
//! Corpus generation draws author activity from a Zipf law, plants
//! communities (members preferentially mention each other) and tagging rings
//! (every member repeatedly mentions every other member), and records the
//! exact multiset of emitted mention events. Everything is a function of
//! the spec's seed.

use std::collections::HashMap;
use std::io::{self, Write};

use chrono::{DateTime, Duration, Utc};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{parse_timestamp, TweetRecord};
use crate::netbuild::MentionGraph;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySpec {
    pub size: usize,
    /// Probability that a member's mention stays inside the community.
    pub internal_mention_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub size: usize,
    /// Times each member mentions each other member.
    pub mentions_per_pair: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub n_users: usize,
    /// Total tweets, ring tweets included.
    pub n_tweets: usize,
    /// Zipf exponent of author activity; 0 gives uniform activity.
    pub activity_zipf_s: f64,
    /// Expected mentions per background tweet (Poisson).
    pub mention_rate: f64,
    #[serde(default)]
    pub communities: Vec<CommunitySpec>,
    #[serde(default)]
    pub rings: Vec<RingSpec>,
    /// Probability that a planted ring mention is redirected to a random
    /// non-ring user.
    #[serde(default)]
    pub noise_edge_prob: f64,
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
    #[serde(default = "default_days")]
    pub days: u32,
}

fn default_start() -> DateTime<Utc> {
    parse_timestamp("2020-03-08T00:00:00Z").expect("valid constant")
}

fn default_days() -> u32 {
    125
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            n_users: 1000,
            n_tweets: 10_000,
            activity_zipf_s: 1.1,
            mention_rate: 1.0,
            communities: Vec::new(),
            rings: Vec::new(),
            noise_edge_prob: 0.0,
            seed: 42,
            start: default_start(),
            days: default_days(),
        }
    }
}

impl PlantedSpec {
    pub fn ring_tweets(&self) -> usize {
        self.rings
            .iter()
            .map(|r| r.size * r.mentions_per_pair as usize)
            .sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        let planted: usize = self.communities.iter().map(|c| c.size).sum::<usize>()
            + self.rings.iter().map(|r| r.size).sum::<usize>();
        if planted > self.n_users {
            return bad(format!(
                "communities and rings need {planted} users but n_users is {}",
                self.n_users
            ));
        }
        if self.n_tweets > 0 && self.n_users == 0 {
            return bad("tweets requested with no users".into());
        }
        if let Some(r) = self.rings.iter().find(|r| r.size < 2) {
            return bad(format!(
                "ring of size {} cannot tag between members",
                r.size
            ));
        }
        if self.ring_tweets() > self.n_tweets {
            return bad(format!(
                "rings need {} tweets but n_tweets is {}",
                self.ring_tweets(),
                self.n_tweets
            ));
        }
        let probs = self
            .communities
            .iter()
            .map(|c| c.internal_mention_prob)
            .chain([self.noise_edge_prob]);
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} outside [0, 1]"));
            }
        }
        if !(self.mention_rate.is_finite() && self.mention_rate >= 0.0) {
            return bad(format!(
                "mention_rate {} must be finite and >= 0",
                self.mention_rate
            ));
        }
        if !(self.activity_zipf_s.is_finite() && self.activity_zipf_s >= 0.0) {
            return bad(format!(
                "activity_zipf_s {} must be finite and >= 0",
                self.activity_zipf_s
            ));
        }
        Ok(())
    }
}

pub fn user_handle(i: usize) -> String {
    format!("u{i:07}")
}

/// Ground truth for one generated corpus. Node-level vectors are indexed by
/// the position of the user in `handles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub seed: u64,
    pub handles: Vec<String>,
    pub community: Vec<Option<usize>>,
    pub ring: Vec<Option<usize>>,
    /// Posts per user.
    pub activity: Vec<u64>,
    /// `[author, target, count]`, sorted by author then target.
    pub events: Vec<(u32, u32, u64)>,
    pub total_events: u64,
    pub ring_events: u64,
}

impl PlantedTruth {
    pub fn ring_members(&self, ring: usize) -> Vec<String> {
        self.ring
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == Some(ring))
            .map(|(i, _)| self.handles[i].clone())
            .collect()
    }

    pub fn write_json<W: Write>(&self, w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(io::Error::other)
    }
}

const FILLER: [&str; 24] = [
    "covid",
    "cuarentena",
    "salud",
    "hoy",
    "gobierno",
    "casos",
    "hospital",
    "gracias",
    "todos",
    "pais",
    "ciudad",
    "vacuna",
    "noticias",
    "mascarilla",
    "familia",
    "trabajo",
    "economia",
    "ayuda",
    "medicos",
    "calle",
    "semana",
    "datos",
    "cuidate",
    "quedate",
];

struct Sampler {
    rng: ChaCha8Rng,
    author_rank: Vec<usize>,
    zipf: Option<Zipf<f64>>,
    mentions: Option<Poisson<f64>>,
}

impl Sampler {
    fn author(&mut self, n_users: usize) -> usize {
        match &self.zipf {
            Some(z) => self.author_rank[z.sample(&mut self.rng) as usize - 1],
            None => self.rng.random_range(0..n_users),
        }
    }

    fn mention_count(&mut self) -> usize {
        self.mentions
            .as_ref()
            .map_or(0, |p| p.sample(&mut self.rng) as usize)
    }

    /// Uniform user other than `exclude`.
    fn other(&mut self, n: usize, exclude: usize) -> usize {
        let v = self.rng.random_range(0..n - 1);
        if v >= exclude {
            v + 1
        } else {
            v
        }
    }

    fn text(&mut self, handles: &[String], targets: &[usize]) -> String {
        let k = self.rng.random_range(3..=8);
        let mut text = String::new();
        for i in 0..k {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(FILLER[self.rng.random_range(0..FILLER.len())]);
        }
        for &t in targets {
            text.push_str(" @");
            text.push_str(&handles[t]);
        }
        text
    }
}

/// Streams the corpus to `sink` in tweet order and returns the truth.
pub fn generate_with(
    spec: &PlantedSpec,
    mut sink: impl FnMut(TweetRecord),
) -> Result<PlantedTruth, SynthError> {
    spec.validate()?;
    let n = spec.n_users;
    let handles: Vec<String> = (0..n).map(user_handle).collect();
    let mut community = vec![None; n];
    let mut ring = vec![None; n];
    let mut members: Vec<std::ops::Range<usize>> = Vec::new();
    let mut next = 0;
    for (c, cs) in spec.communities.iter().enumerate() {
        for slot in &mut community[next..next + cs.size] {
            *slot = Some(c);
        }
        members.push(next..next + cs.size);
        next += cs.size;
    }
    let mut ring_ranges = Vec::new();
    for (r, rs) in spec.rings.iter().enumerate() {
        for slot in &mut ring[next..next + rs.size] {
            *slot = Some(r);
        }
        ring_ranges.push(next..next + rs.size);
        next += rs.size;
    }
    let non_ring: Vec<usize> = (0..n).filter(|&i| ring[i].is_none()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut author_rank: Vec<usize> = (0..n).collect();
    author_rank.shuffle(&mut rng);
    let zipf = if spec.activity_zipf_s > 0.0 && n > 0 {
        Some(
            Zipf::new(n as f64, spec.activity_zipf_s)
                .map_err(|e| SynthError::Infeasible(e.to_string()))?,
        )
    } else {
        None
    };
    let mentions = if spec.mention_rate > 0.0 {
        Some(Poisson::new(spec.mention_rate).map_err(|e| SynthError::Infeasible(e.to_string()))?)
    } else {
        None
    };
    let mut s = Sampler {
        rng,
        author_rank,
        zipf,
        mentions,
    };

    // ring tweets: each member tags all other members once per tweet
    let mut ring_tweets: Vec<(usize, Vec<usize>)> = Vec::new();
    for (rs, range) in spec.rings.iter().zip(&ring_ranges) {
        for u in range.clone() {
            for _ in 0..rs.mentions_per_pair {
                let targets = range
                    .clone()
                    .filter(|&v| v != u)
                    .map(|v| {
                        if !non_ring.is_empty() && s.rng.random_bool(spec.noise_edge_prob) {
                            non_ring[s.rng.random_range(0..non_ring.len())]
                        } else {
                            v
                        }
                    })
                    .collect();
                ring_tweets.push((u, targets));
            }
        }
    }
    ring_tweets.shuffle(&mut s.rng);
    let mut ring_slots = index::sample(
        &mut s.rng,
        spec.n_tweets.max(1),
        ring_tweets.len().min(spec.n_tweets),
    )
    .into_vec();
    ring_slots.sort_unstable();

    let mut activity = vec![0u64; n];
    let mut events: HashMap<(u32, u32), u64> = HashMap::new();
    let mut ring_events = 0u64;
    let span = spec.days as i64 * 86_400;
    let mut ring_iter = ring_tweets.into_iter();
    let mut slot_iter = ring_slots.into_iter().peekable();
    let mut targets = Vec::new();
    for t in 0..spec.n_tweets {
        let (author, is_ring) = if slot_iter.peek() == Some(&t) {
            slot_iter.next();
            let (a, tg) = ring_iter.next().expect("one ring tweet per slot");
            targets = tg;
            (a, true)
        } else {
            let a = s.author(n);
            targets.clear();
            if n > 1 {
                for _ in 0..s.mention_count() {
                    let inside = community[a].map(|c| (c, &members[c])).filter(|(c, m)| {
                        m.len() > 1
                            && s.rng
                                .random_bool(spec.communities[*c].internal_mention_prob)
                    });
                    let v = match inside {
                        Some((_, m)) => m.start + s.other(m.len(), a - m.start),
                        None => s.other(n, a),
                    };
                    targets.push(v);
                }
            }
            (a, false)
        };
        activity[author] += 1;
        for &v in &targets {
            *events.entry((author as u32, v as u32)).or_default() += 1;
            if is_ring {
                ring_events += 1;
            }
        }
        let text = s.text(&handles, &targets);
        sink(TweetRecord {
            id: (t + 1).to_string(),
            author: handles[author].clone(),
            text,
            created_at: spec.start + Duration::seconds(t as i64 * span / spec.n_tweets as i64),
        });
    }

    let mut events: Vec<(u32, u32, u64)> =
        events.into_iter().map(|((a, t), c)| (a, t, c)).collect();
    events.sort_unstable();
    Ok(PlantedTruth {
        seed: spec.seed,
        total_events: events.iter().map(|e| e.2).sum(),
        ring_events,
        handles,
        community,
        ring,
        activity,
        events,
    })
}

pub struct SynthCorpus {
    pub records: Vec<TweetRecord>,
    pub truth: PlantedTruth,
}

pub fn generate(spec: &PlantedSpec) -> Result<SynthCorpus, SynthError> {
    let mut records = Vec::with_capacity(spec.n_tweets);
    let truth = generate_with(spec, |r| records.push(r))?;
    Ok(SynthCorpus { records, truth })
}

/// Writes the corpus as JSONL while generating it.
pub fn generate_to<W: Write>(spec: &PlantedSpec, mut w: W) -> Result<PlantedTruth, SynthError> {
    let mut err = None;
    let truth = generate_with(spec, |r| {
        if err.is_none() {
            if let Err(e) = writeln!(w, "{}", r.to_jsonl()) {
                err = Some(e);
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    w.flush()?;
    Ok(truth)
}

fn node_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i:05}")).collect()
}

/// Directed planted-partition graph: each ordered pair inside a block is an
/// edge with probability `p_in`, across blocks with `p_out`. Returns the
/// graph and each node's block.
pub fn planted_partition_graph(
    block_sizes: &[usize],
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (MentionGraph, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = blocks.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let p = if blocks[u] == blocks[v] { p_in } else { p_out };
                if rng.random_bool(p) {
                    edges.push((u, v, 1));
                }
            }
        }
    }
    (MentionGraph::from_edges(&node_labels(n), edges), blocks)
}

/// Graph in which node `i` has out-degree exactly `out_degrees[i]`, each
/// pointing at a distinct uniformly chosen other node.
pub fn fixed_out_degree_graph(out_degrees: &[usize], seed: u64) -> MentionGraph {
    let n = out_degrees.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for (u, &d) in out_degrees.iter().enumerate() {
        assert!(d < n, "out-degree {d} needs more than {n} nodes");
        for v in index::sample(&mut rng, n - 1, d) {
            edges.push((u, if v >= u { v + 1 } else { v }, 1));
        }
    }
    MentionGraph::from_edges(&node_labels(n), edges)
}

/// Random directed graph: each ordered pair is an edge with probability `p`
/// and weight uniform in `1..=max_weight`.
pub fn random_weighted_graph(n: usize, p: f64, max_weight: u64, seed: u64) -> MentionGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.random_bool(p) {
                edges.push((u, v, rng.random_range(1..=max_weight)));
            }
        }
    }
    MentionGraph::from_edges(&node_labels(n), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mention::{for_each_mention, mine, MineOptions};

    fn ring_spec() -> PlantedSpec {
        PlantedSpec {
            n_users: 20,
            n_tweets: 40,
            mention_rate: 0.0,
            rings: vec![RingSpec {
                size: 3,
                mentions_per_pair: 2,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn ring_events_counted() {
        let out = generate(&ring_spec()).unwrap();
        let mut events = 0;
        for r in &out.records {
            for_each_mention(&r.text, |_| events += 1);
        }
        // size * (size - 1) * mentions_per_pair
        assert_eq!(events, 12);
        assert_eq!(out.truth.total_events, 12);
        assert_eq!(out.truth.ring_events, 12);
        assert_eq!(out.truth.ring_members(0).len(), 3);
    }

    #[test]
    fn zero_tweets_is_empty() {
        let spec = PlantedSpec {
            n_tweets: 0,
            ..Default::default()
        };
        let out = generate(&spec).unwrap();
        assert!(out.records.is_empty());
        assert!(out.truth.events.is_empty());
        assert_eq!(out.truth.activity.iter().sum::<u64>(), 0);
    }

    #[test]
    fn byte_identical_per_seed() {
        let spec = PlantedSpec {
            n_users: 200,
            n_tweets: 2000,
            communities: vec![CommunitySpec {
                size: 30,
                internal_mention_prob: 0.8,
            }],
            rings: vec![RingSpec {
                size: 5,
                mentions_per_pair: 3,
            }],
            noise_edge_prob: 0.1,
            ..Default::default()
        };
        let run = || {
            let mut corpus = Vec::new();
            let truth = generate_to(&spec, &mut corpus).unwrap();
            let mut t = Vec::new();
            truth.write_json(&mut t).unwrap();
            (corpus, t)
        };
        assert_eq!(run(), run());
        let other = PlantedSpec {
            seed: 43,
            ..spec.clone()
        };
        let mut c2 = Vec::new();
        generate_to(&other, &mut c2).unwrap();
        assert_ne!(run().0, c2);
    }

    #[test]
    fn infeasible_specs() {
        let too_many = PlantedSpec {
            n_users: 5,
            rings: vec![RingSpec {
                size: 6,
                mentions_per_pair: 1,
            }],
            ..Default::default()
        };
        assert!(matches!(
            generate(&too_many),
            Err(SynthError::Infeasible(_))
        ));
        let bad_p = PlantedSpec {
            noise_edge_prob: 1.5,
            ..Default::default()
        };
        assert!(generate(&bad_p).is_err());
        let few_tweets = PlantedSpec {
            n_tweets: 5,
            ..ring_spec()
        };
        assert!(generate(&few_tweets).is_err());
    }

    #[test]
    fn truth_matches_recount() {
        let spec = PlantedSpec {
            n_users: 300,
            n_tweets: 3000,
            mention_rate: 1.5,
            communities: vec![
                CommunitySpec {
                    size: 40,
                    internal_mention_prob: 0.9,
                },
                CommunitySpec {
                    size: 1,
                    internal_mention_prob: 1.0,
                },
            ],
            rings: vec![RingSpec {
                size: 8,
                mentions_per_pair: 4,
            }],
            noise_edge_prob: 0.2,
            ..Default::default()
        };
        let out = generate(&spec).unwrap();
        let mined = mine(&out.records, MineOptions::default());
        let mut recount: HashMap<(String, String), u64> = HashMap::new();
        for e in &mined.events {
            *recount
                .entry((
                    mined.table.handle(e.author).into(),
                    mined.table.handle(e.target).into(),
                ))
                .or_default() += 1;
        }
        let planted: HashMap<(String, String), u64> = out
            .truth
            .events
            .iter()
            .map(|&(a, t, c)| {
                (
                    (
                        out.truth.handles[a as usize].clone(),
                        out.truth.handles[t as usize].clone(),
                    ),
                    c,
                )
            })
            .collect();
        assert_eq!(recount, planted);
        assert!(mined.events.iter().all(|e| !e.is_self()));
        // timestamps are non-decreasing
        assert!(out
            .records
            .windows(2)
            .all(|w| w[0].created_at <= w[1].created_at));
    }

    #[test]
    fn graph_generators() {
        let (g, blocks) = planted_partition_graph(&[5, 5], 1.0, 0.0, 1);
        assert_eq!(g.edge_count(), 2 * 5 * 4);
        assert_eq!(blocks, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let g = fixed_out_degree_graph(&[3, 0, 1, 2], 5);
        assert_eq!(g.out_strengths(), vec![3, 0, 1, 2]);
        let g = random_weighted_graph(10, 0.3, 7, 2);
        assert!(g
            .edges()
            .iter()
            .all(|e| (1..=7).contains(&e.weight) && e.src != e.dst));
    }
}
