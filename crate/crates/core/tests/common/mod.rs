//! Independent reference implementations used by the integration suites.
//! None of these call into the code paths they check.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use mentionnet::corpus::{parse_timestamp, TweetRecord};
use mentionnet::netbuild::MentionGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

/// Regex scan: an `@` at the start or after a non-handle character,
/// followed by a maximal handle run of at most 15 characters.
pub fn regex_mentions(text: &str) -> Vec<String> {
    thread_local! {
        static RE: Regex = Regex::new(r"(?:^|[^A-Za-z0-9_])@([A-Za-z0-9_]+)").unwrap();
    }
    RE.with(|re| {
        re.captures_iter(text)
            .map(|c| c[1].to_string())
            .filter(|h| h.len() <= 15)
            .map(|h| h.to_ascii_lowercase())
            .collect()
    })
}

pub struct Recount {
    pub posts: HashMap<String, u64>,
    pub mentions: HashMap<String, u64>,
    /// (author, target) -> occurrences
    pub pairs: HashMap<(String, String), u64>,
}

pub fn recount(records: &[TweetRecord]) -> Recount {
    let mut posts = HashMap::new();
    let mut mentions = HashMap::new();
    let mut pairs = HashMap::new();
    for r in records {
        let author = r.author.to_ascii_lowercase();
        *posts.entry(author.clone()).or_insert(0) += 1;
        for m in regex_mentions(&r.text) {
            *mentions.entry(m.clone()).or_insert(0) += 1;
            *pairs.entry((author.clone(), m)).or_insert(0) += 1;
        }
    }
    Recount {
        posts,
        mentions,
        pairs,
    }
}

/// Full sort by count descending then handle ascending, then slice.
pub fn sorted_top(counts: &HashMap<String, u64>, n: usize) -> Vec<String> {
    let mut v: Vec<(&String, &u64)> = counts.iter().filter(|(_, &c)| c > 0).collect();
    v.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    v.into_iter().take(n).map(|(h, _)| h.clone()).collect()
}

/// Brute-force edge weights of the top-N1 -> top-N2 graph.
pub fn brute_force_edges(
    records: &[TweetRecord],
    n1: usize,
    n2: usize,
    self_loops: bool,
) -> BTreeMap<(String, String), u64> {
    let rc = recount(records);
    let sources: HashSet<String> = sorted_top(&rc.posts, n1).into_iter().collect();
    let targets: HashSet<String> = sorted_top(&rc.mentions, n2).into_iter().collect();
    rc.pairs
        .into_iter()
        .filter(|((a, t), _)| sources.contains(a) && targets.contains(t) && (self_loops || a != t))
        .collect()
}

pub fn graph_edges(g: &MentionGraph) -> BTreeMap<(String, String), u64> {
    g.labelled_edges()
        .map(|(s, d, w)| ((s.to_string(), d.to_string()), w))
        .collect()
}

/// Random corpus over a small handle pool with adversarial text: mixed case,
/// e-mail addresses, over-long handles, retweet prefixes and self-mentions.
pub fn random_corpus(seed: u64, n_tweets: usize, n_users: usize) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users: Vec<String> = (0..n_users).map(|i| format!("User_{i}")).collect();
    let ts = parse_timestamp("2020-03-08T00:00:00Z").unwrap();
    (0..n_tweets)
        .map(|i| {
            // skewed activity: low indices post more
            let a = ((rng.random::<f64>().powi(3)) * n_users as f64) as usize;
            let mut text = String::new();
            if rng.random_bool(0.1) {
                text.push_str(&format!("RT @{}: ", users[rng.random_range(0..n_users)]));
            }
            for _ in 0..rng.random_range(0..6) {
                let u = &users[((rng.random::<f64>().powi(2)) * n_users as f64) as usize];
                let token = match rng.random_range(0..10) {
                    0 => format!("mail{u}@{u}.com"),
                    1 => format!("@{}", u.to_ascii_uppercase()),
                    2 => format!("@{u}_with_a_long_suffix"),
                    3 => format!("@{}", users[a]),
                    4 => format!("(@{u})!"),
                    5 => "@".to_string(),
                    _ => format!("@{u}"),
                };
                text.push_str(&token);
                text.push(' ');
                text.push_str(
                    ["hola", "covid", "¿qué?", "ñandú", "#salud"][rng.random_range(0..5)],
                );
                text.push(' ');
            }
            TweetRecord {
                id: i.to_string(),
                author: if rng.random_bool(0.2) {
                    users[a].to_ascii_lowercase()
                } else {
                    users[a].clone()
                },
                text,
                created_at: ts,
            }
        })
        .collect()
}

/// Modularity from the dense symmetrized adjacency matrix.
pub fn dense_modularity(g: &MentionGraph, membership: &[usize]) -> f64 {
    let n = g.node_count();
    let mut a = vec![vec![0.0f64; n]; n];
    for e in g.edges() {
        let w = e.weight as f64;
        if e.src == e.dst {
            a[e.src][e.src] += 2.0 * w;
        } else {
            a[e.src][e.dst] += w;
            a[e.dst][e.src] += w;
        }
    }
    let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if membership[i] == membership[j] {
                q += a[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            rec(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut prefix = vec![0];
    rec(&mut prefix, 0, n, &mut out);
    out
}

pub fn best_modularity(g: &MentionGraph) -> f64 {
    all_partitions(g.node_count())
        .iter()
        .map(|p| dense_modularity(g, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Same partition up to relabeling.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

pub fn f1(predicted: &HashSet<String>, truth: &HashSet<String>) -> f64 {
    if predicted.is_empty() && truth.is_empty() {
        return 1.0;
    }
    let tp = predicted.intersection(truth).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / predicted.len() as f64;
    let r = tp / truth.len() as f64;
    2.0 * p * r / (p + r)
}
