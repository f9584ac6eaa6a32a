mod common;

use std::collections::{BTreeMap, HashMap};

use mentionnet::corpus::{
    corpus_stats, ingest, DateRange, Format, IngestOptions, StatsAccumulator, TweetRecord,
};
use mentionnet::mention::{
    author_post_counts, extract_mentions, mention_frequencies, mine, top_n, MineOptions,
};
use mentionnet::synthgen::{generate, CommunitySpec, PlantedSpec, RingSpec};

use common::{random_corpus, regex_mentions};

fn planted(seed: u64, n_tweets: usize) -> PlantedSpec {
    PlantedSpec {
        n_users: 300,
        n_tweets,
        activity_zipf_s: 1.1,
        mention_rate: 1.5,
        communities: vec![CommunitySpec {
            size: 40,
            internal_mention_prob: 0.6,
        }],
        rings: vec![RingSpec {
            size: 7,
            mentions_per_pair: 3,
        }],
        noise_edge_prob: 0.1,
        seed,
        ..Default::default()
    }
}

#[test]
fn extraction_matches_regex_scan() {
    let mut sample = random_corpus(17, 200, 60);
    sample.extend(generate(&planted(1, 200)).unwrap().records);
    let edge_cases = [
        "@ana @ana gracias",
        "Hola @Minsa_Peru y @PCM!",
        "mail me a@b.com",
        "@@doble",
        "@abcdefghijklmnop too long",
        "@abcdefghijklmno fits",
        "ñ@ana",
        "é@ana",
        "_@ana",
        "@ana@bea",
        "RT @x: @y",
        "",
        "@",
    ];
    let mut checked = 0;
    for text in sample.iter().map(|r| r.text.as_str()).chain(edge_cases) {
        let got: Vec<String> = extract_mentions(text)
            .iter()
            .map(|h| h.as_str().to_string())
            .collect();
        assert_eq!(got, regex_mentions(text), "text {text:?}");
        assert!(got
            .iter()
            .all(|h| h.len() <= 15 && !h.chars().any(|c| c.is_uppercase())));
        checked += got.len();
    }
    assert!(checked > 200, "sample should contain plenty of mentions");
}

#[test]
fn post_counts_match_planted_activity() {
    let corpus = generate(&PlantedSpec {
        n_users: 200,
        n_tweets: 1000,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let mined = mine(&corpus.records, MineOptions::default());
    let posts = author_post_counts(&mined.table).to_map(&mined.table);
    let planted: BTreeMap<String, u64> = corpus
        .truth
        .activity
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(i, &a)| (corpus.truth.handles[i].clone(), a))
        .collect();
    assert_eq!(posts, planted);
    assert_eq!(posts.values().sum::<u64>(), 1000);
}

#[test]
fn mined_events_reproduce_planted_multiset() {
    for seed in 0..5 {
        let corpus = generate(&planted(seed, 3000)).unwrap();
        let truth = &corpus.truth;
        let mined = mine(&corpus.records, MineOptions::default());

        let mut got: HashMap<(String, String), u64> = HashMap::new();
        for e in &mined.events {
            let key = (
                mined.table.handle(e.author).to_string(),
                mined.table.handle(e.target).to_string(),
            );
            *got.entry(key).or_default() += 1;
        }
        let want: HashMap<(String, String), u64> = truth
            .events
            .iter()
            .map(|&(a, t, c)| {
                (
                    (
                        truth.handles[a as usize].clone(),
                        truth.handles[t as usize].clone(),
                    ),
                    c,
                )
            })
            .collect();
        assert_eq!(got, want);

        let freq = mention_frequencies(&mined.table).to_map(&mined.table);
        let mut planted_freq: BTreeMap<String, u64> = BTreeMap::new();
        for &(_, t, c) in &truth.events {
            *planted_freq
                .entry(truth.handles[t as usize].clone())
                .or_default() += c;
        }
        assert_eq!(freq, planted_freq);
        assert_eq!(freq.values().sum::<u64>(), mined.events.len() as u64);
        assert_eq!(truth.total_events, mined.events.len() as u64);
    }
}

#[test]
fn mining_is_repeatable() {
    let recs = random_corpus(3, 800, 50);
    let a = mine(&recs, MineOptions::default());
    let b = mine(&recs, MineOptions::default());
    let dump = |m: &mentionnet::mention::MinedCorpus| {
        let mut out = Vec::new();
        m.table.write_csv(&mut out).unwrap();
        out
    };
    assert_eq!(dump(&a), dump(&b));
    assert_eq!(a.events, b.events);
}

#[test]
fn top_n_matches_full_sort_on_mined_tables() {
    let recs = random_corpus(8, 2000, 500);
    let mined = mine(&recs, MineOptions::default());
    let rc = common::recount(&recs);
    for n in [1, 5, 50, 499, 10_000] {
        let posts: Vec<String> = top_n(&author_post_counts(&mined.table), n, &mined.table)
            .into_iter()
            .map(|id| mined.table.handle(id).to_string())
            .collect();
        assert_eq!(posts, common::sorted_top(&rc.posts, n));
        let targets: Vec<String> = top_n(&mention_frequencies(&mined.table), n, &mined.table)
            .into_iter()
            .map(|id| mined.table.handle(id).to_string())
            .collect();
        assert_eq!(targets, common::sorted_top(&rc.mentions, n));
    }
}

#[test]
fn strip_rt_removes_only_the_retweet_prefix() {
    let recs = random_corpus(21, 500, 40);
    let plain = mine(&recs, MineOptions::default());
    let stripped = mine(&recs, MineOptions { strip_rt: true });
    let retweets = recs.iter().filter(|r| r.text.starts_with("RT @")).count() as u64;
    assert!(retweets > 0);
    assert_eq!(
        plain.events.len() as u64 - stripped.events.len() as u64,
        retweets
    );
}

fn jsonl(records: &[TweetRecord]) -> String {
    records.iter().map(|r| r.to_jsonl() + "\n").collect()
}

#[test]
fn stats_are_additive_over_concatenation() {
    let corpus = generate(&planted(6, 2000)).unwrap();
    let (a, b) = corpus.records.split_at(700);
    let whole = corpus_stats(&corpus.records, "all");
    let mut left = StatsAccumulator::default();
    a.iter().for_each(|r| left.push(r));
    let mut right = StatsAccumulator::default();
    b.iter().for_each(|r| right.push(r));
    assert_eq!(left.merge(right).finish("all"), whole);
    assert_eq!(
        whole.tweet_count,
        corpus_stats(a, "").tweet_count + corpus_stats(b, "").tweet_count
    );
}

#[test]
fn date_filter_is_idempotent() {
    let corpus = generate(&planted(9, 1500)).unwrap();
    let from = corpus.records[300].created_at;
    let to = corpus.records[1100].created_at;
    let opts = IngestOptions {
        format: Format::Jsonl,
        date_range: DateRange::new(Some(from), Some(to)).unwrap(),
        ..Default::default()
    };
    let once = ingest(jsonl(&corpus.records).as_bytes(), &opts).unwrap();
    let twice = ingest(jsonl(&once.records).as_bytes(), &opts).unwrap();
    assert_eq!(once.records, twice.records);
    assert_eq!(twice.report.out_of_range, 0);
    assert!(once
        .records
        .iter()
        .all(|r| r.created_at >= from && r.created_at <= to));
    assert_eq!(once.report.accepted + once.report.out_of_range, 1500);
}

#[test]
fn jsonl_round_trip_preserves_records() {
    let corpus = generate(&planted(2, 500)).unwrap();
    let back = ingest(jsonl(&corpus.records).as_bytes(), &IngestOptions::default()).unwrap();
    assert_eq!(back.records, corpus.records);
    let threaded = ingest(
        jsonl(&corpus.records).as_bytes(),
        &IngestOptions {
            threads: 4,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(threaded.records, corpus.records);
}
