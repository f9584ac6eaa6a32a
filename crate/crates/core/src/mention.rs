//! @-mention extraction, handle normalization and per-user frequency tables.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TweetRecord;

pub const MAX_HANDLE_LEN: usize = 15;

#[inline]
pub fn is_handle_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HandleError {
    #[error("empty handle")]
    Empty,
    #[error("handle {0:?} is longer than 15 characters")]
    TooLong(String),
    #[error("handle {0:?} contains characters outside [A-Za-z0-9_]")]
    InvalidChar(String),
}

/// A normalized (lowercase) screen name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Handle(Box<str>);

impl Handle {
    /// Trims whitespace and one leading `@`, lowercases, and validates the
    /// handle grammar.
    pub fn parse(raw: &str) -> Result<Handle, HandleError> {
        let s = raw.trim();
        let s = s.strip_prefix('@').unwrap_or(s);
        if s.is_empty() {
            return Err(HandleError::Empty);
        }
        if !s.bytes().all(is_handle_byte) {
            return Err(HandleError::InvalidChar(s.to_string()));
        }
        if s.len() > MAX_HANDLE_LEN {
            return Err(HandleError::TooLong(s.to_string()));
        }
        Ok(Handle(s.to_ascii_lowercase().into_boxed_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for Handle {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Handle {
    type Error = HandleError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Handle::parse(&s)
    }
}

impl From<Handle> for String {
    fn from(h: Handle) -> String {
        h.0.into()
    }
}

/// Calls `f` with each mention in `text`, lowercased, in order of occurrence.
///
/// A mention is an `@` not preceded by a handle character, followed by a
/// maximal run of 1 to 15 handle characters. Longer runs are not mentions.
pub fn for_each_mention(text: &str, mut f: impl FnMut(&str)) {
    let bytes = text.as_bytes();
    let mut buf = [0u8; MAX_HANDLE_LEN];
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'@' || (i > 0 && is_handle_byte(bytes[i - 1])) {
            i += 1;
            continue;
        }
        let start = i + 1;
        let mut end = start;
        while end < bytes.len() && is_handle_byte(bytes[end]) {
            end += 1;
        }
        let len = end - start;
        if (1..=MAX_HANDLE_LEN).contains(&len) {
            for (dst, src) in buf.iter_mut().zip(&bytes[start..end]) {
                *dst = src.to_ascii_lowercase();
            }
            f(std::str::from_utf8(&buf[..len]).expect("ascii handle"));
        }
        i = end.max(i + 1);
    }
}

pub fn extract_mentions(text: &str) -> Vec<Handle> {
    let mut out = Vec::new();
    for_each_mention(text, |h| out.push(Handle(h.into())));
    out
}

/// Length of a leading `RT @handle:` retweet marker, if any.
fn retweet_prefix_len(text: &str) -> Option<usize> {
    let trimmed = text.trim_start();
    let offset = text.len() - trimmed.len();
    let rest = trimmed.strip_prefix("RT @")?;
    let run = rest.bytes().take_while(|b| is_handle_byte(*b)).count();
    if run == 0 {
        return None;
    }
    let mut len = offset + 4 + run;
    if text.as_bytes().get(len) == Some(&b':') {
        len += 1;
    }
    Some(len)
}

pub type UserId = u32;

/// Deduplicated global user set: a bijection between handles and dense ids,
/// with per-user post and mention counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserTable {
    handles: Vec<Handle>,
    index: HashMap<Handle, UserId>,
    posts: Vec<u64>,
    mentions: Vec<u64>,
}

impl UserTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for a normalized handle, assigning the next id on first sight.
    pub fn intern(&mut self, handle: &str) -> UserId {
        if let Some(&id) = self.index.get(handle) {
            return id;
        }
        let id = UserId::try_from(self.handles.len()).expect("more than 2^32 users");
        let h = Handle(handle.into());
        self.handles.push(h.clone());
        self.index.insert(h, id);
        self.posts.push(0);
        self.mentions.push(0);
        id
    }

    pub fn id(&self, handle: &str) -> Option<UserId> {
        self.index.get(handle).copied()
    }

    pub fn handle(&self, id: UserId) -> &str {
        self.handles[id as usize].as_str()
    }

    pub fn len(&self) -> usize {
        self.handles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handles.is_empty()
    }

    pub fn posts(&self, id: UserId) -> u64 {
        self.posts[id as usize]
    }

    pub fn mentions(&self, id: UserId) -> u64 {
        self.mentions[id as usize]
    }

    /// True when the user authored at least one post.
    pub fn is_author(&self, id: UserId) -> bool {
        self.posts(id) > 0
    }

    /// True when the user was mentioned at least once.
    pub fn is_mentioned(&self, id: UserId) -> bool {
        self.mentions(id) > 0
    }

    pub fn ids(&self) -> impl Iterator<Item = UserId> {
        0..self.handles.len() as UserId
    }

    /// `users.csv`: `handle,id,posts,mentions`, one row per id in id order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "handle,id,posts,mentions")?;
        for id in self.ids() {
            writeln!(
                w,
                "{},{},{},{}",
                self.handle(id),
                id,
                self.posts(id),
                self.mentions(id)
            )?;
        }
        Ok(())
    }
}

/// One occurrence of an author tagging a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MentionEvent {
    pub author: UserId,
    pub target: UserId,
    /// Ordinal of the source tweet in the ingested corpus.
    pub tweet: u32,
}

impl MentionEvent {
    pub fn is_self(&self) -> bool {
        self.author == self.target
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineOptions {
    /// Drop the mention in a leading `RT @user:` marker.
    pub strip_rt: bool,
}

/// Incremental miner; feed records in corpus order.
#[derive(Debug, Default)]
pub struct Miner {
    opts: MineOptions,
    table: UserTable,
    events: Vec<MentionEvent>,
    tweets: u32,
}

impl Miner {
    pub fn new(opts: MineOptions) -> Self {
        Miner {
            opts,
            ..Default::default()
        }
    }

    pub fn push(&mut self, rec: &TweetRecord) {
        let author = if rec.author.bytes().any(|b| b.is_ascii_uppercase()) {
            self.table.intern(&rec.author.to_ascii_lowercase())
        } else {
            self.table.intern(&rec.author)
        };
        self.table.posts[author as usize] += 1;
        let text = match self
            .opts
            .strip_rt
            .then(|| retweet_prefix_len(&rec.text))
            .flatten()
        {
            Some(n) => &rec.text[n..],
            None => rec.text.as_str(),
        };
        let tweet = self.tweets;
        let table = &mut self.table;
        let events = &mut self.events;
        for_each_mention(text, |h| {
            let target = table.intern(h);
            table.mentions[target as usize] += 1;
            events.push(MentionEvent {
                author,
                target,
                tweet,
            });
        });
        self.tweets += 1;
    }

    pub fn finish(self) -> MinedCorpus {
        MinedCorpus {
            table: self.table,
            events: self.events,
            tweets: self.tweets as u64,
        }
    }
}

/// User table and mention events of one corpus.
#[derive(Debug, Clone, Default)]
pub struct MinedCorpus {
    pub table: UserTable,
    pub events: Vec<MentionEvent>,
    pub tweets: u64,
}

impl MinedCorpus {
    pub fn self_mentions(&self) -> u64 {
        self.events.iter().filter(|e| e.is_self()).count() as u64
    }
}

pub fn mine(records: &[TweetRecord], opts: MineOptions) -> MinedCorpus {
    let mut miner = Miner::new(opts);
    for r in records {
        miner.push(r);
    }
    miner.finish()
}

/// Per-user counts indexed by [`UserId`]. Users with a zero count are
/// treated as absent from the table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<u64>,
}

impl FrequencyTable {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        FrequencyTable { counts }
    }

    pub fn get(&self, id: UserId) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserId, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as UserId, c))
    }

    /// Number of users with a non-zero count.
    pub fn len(&self) -> usize {
        self.iter().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_map(&self, table: &UserTable) -> BTreeMap<String, u64> {
        self.iter()
            .map(|(id, c)| (table.handle(id).to_string(), c))
            .collect()
    }
}

pub fn author_post_counts(table: &UserTable) -> FrequencyTable {
    FrequencyTable::from_counts(table.posts.clone())
}

pub fn mention_frequencies(table: &UserTable) -> FrequencyTable {
    FrequencyTable::from_counts(table.mentions.clone())
}

/// The `n` highest-count users: descending by count, ties ascending by handle.
pub fn top_n(freq: &FrequencyTable, n: usize, table: &UserTable) -> Vec<UserId> {
    assert!(n >= 1, "top_n requires n >= 1");
    let mut ids: Vec<(UserId, u64)> = freq.iter().collect();
    let cmp = |a: &(UserId, u64), b: &(UserId, u64)| {
        b.1.cmp(&a.1)
            .then_with(|| table.handle(a.0).cmp(table.handle(b.0)))
    };
    if ids.len() > n {
        ids.select_nth_unstable_by(n - 1, cmp);
        ids.truncate(n);
    }
    ids.sort_unstable_by(cmp);
    ids.into_iter().map(|(id, _)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_timestamp;
    use proptest::prelude::*;

    fn handles(v: &[Handle]) -> Vec<&str> {
        v.iter().map(Handle::as_str).collect()
    }

    fn tweet(author: &str, text: &str) -> TweetRecord {
        TweetRecord {
            id: "0".into(),
            author: author.into(),
            text: text.into(),
            created_at: parse_timestamp("2020-03-08T00:00:00Z").unwrap(),
        }
    }

    #[test]
    fn extraction_examples() {
        assert_eq!(
            handles(&extract_mentions("Hola @Minsa_Peru y @PCM!")),
            ["minsa_peru", "pcm"]
        );
        assert!(extract_mentions("mail me a@b.com").is_empty());
        assert_eq!(
            handles(&extract_mentions("@ana @ana gracias")),
            ["ana", "ana"]
        );
        assert!(extract_mentions("").is_empty());
        assert!(extract_mentions("@ alone").is_empty());
        assert_eq!(handles(&extract_mentions("@@ana")), ["ana"]);
        assert_eq!(handles(&extract_mentions("(@ana),@bea.")), ["ana", "bea"]);
        assert_eq!(handles(&extract_mentions("¡@ñandú @ana")), ["ana"]);
        assert_eq!(handles(&extract_mentions("é@ana")), ["ana"]);
    }

    #[test]
    fn length_limit() {
        assert_eq!(
            handles(&extract_mentions("@abcdefghijklmno")),
            ["abcdefghijklmno"]
        );
        assert!(extract_mentions("@abcdefghijklmnop").is_empty());
    }

    #[test]
    fn handle_parse() {
        assert_eq!(Handle::parse(" @Ana_1 ").unwrap().as_str(), "ana_1");
        assert_eq!(Handle::parse("@"), Err(HandleError::Empty));
        assert!(matches!(
            Handle::parse("a b"),
            Err(HandleError::InvalidChar(_))
        ));
        assert!(matches!(
            Handle::parse("a".repeat(16).as_str()),
            Err(HandleError::TooLong(_))
        ));
    }

    #[test]
    fn retweet_prefix() {
        assert_eq!(retweet_prefix_len("RT @ana: hola @bea"), Some(8));
        assert_eq!(retweet_prefix_len("  RT @ana hola"), Some(9));
        assert_eq!(retweet_prefix_len("RT @ hola"), None);
        assert_eq!(retweet_prefix_len("hola RT @ana"), None);

        let recs = [tweet("luis", "RT @ana: hola @bea")];
        let plain = mine(&recs, MineOptions::default());
        assert_eq!(plain.events.len(), 2);
        let stripped = mine(&recs, MineOptions { strip_rt: true });
        assert_eq!(stripped.events.len(), 1);
        assert_eq!(stripped.table.handle(stripped.events[0].target), "bea");
    }

    #[test]
    fn post_and_mention_counts() {
        let recs = [
            tweet("ana", "@ana hi"),
            tweet("Ana", "@ana @bea"),
            tweet("luis", ""),
        ];
        let mined = mine(&recs, MineOptions::default());
        let posts = author_post_counts(&mined.table).to_map(&mined.table);
        assert_eq!(
            posts,
            BTreeMap::from([("ana".into(), 2), ("luis".into(), 1)])
        );
        let ment = mention_frequencies(&mined.table).to_map(&mined.table);
        assert_eq!(ment, BTreeMap::from([("ana".into(), 2), ("bea".into(), 1)]));
        assert_eq!(mined.self_mentions(), 2);
        // ids are assigned in first-seen order
        assert_eq!(mined.table.handle(0), "ana");
        assert_eq!(mined.table.handle(1), "bea");
        assert_eq!(mined.table.handle(2), "luis");
        assert!(!mined.table.is_author(1) && mined.table.is_mentioned(1));

        let empty = mine(&[], MineOptions::default());
        assert!(author_post_counts(&empty.table).is_empty());
        assert!(mention_frequencies(&empty.table).is_empty());
    }

    #[test]
    fn users_csv() {
        let mined = mine(&[tweet("ana", "@bea")], MineOptions::default());
        let mut out = Vec::new();
        mined.table.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "handle,id,posts,mentions\nana,0,1,0\nbea,1,0,1\n"
        );
    }

    fn table_with(entries: &[(&str, u64)]) -> (UserTable, FrequencyTable) {
        let mut t = UserTable::new();
        let mut counts = Vec::new();
        for (h, c) in entries {
            t.intern(h);
            counts.push(*c);
        }
        (t, FrequencyTable::from_counts(counts))
    }

    #[test]
    fn top_n_examples() {
        let (t, f) = table_with(&[("a", 3), ("b", 5), ("c", 3)]);
        let top: Vec<_> = top_n(&f, 2, &t).into_iter().map(|i| t.handle(i)).collect();
        assert_eq!(top, ["b", "a"]);
        let (t, f) = table_with(&[("a", 1)]);
        assert_eq!(top_n(&f, 10, &t), vec![0]);
        let (t, f) = table_with(&[("a", 0), ("b", 2)]);
        assert_eq!(top_n(&f, 10, &t), vec![1]);
    }

    fn oracle_top(entries: &[(String, u64)], n: usize) -> Vec<String> {
        let mut v: Vec<_> = entries.iter().filter(|e| e.1 > 0).cloned().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().take(n).map(|e| e.0).collect()
    }

    proptest! {
        #[test]
        fn extracted_handles_are_normalized(text in "[ a-zA-Z0-9_@.!é]{0,80}") {
            for h in extract_mentions(&text) {
                prop_assert!(!h.as_str().is_empty() && h.as_str().len() <= MAX_HANDLE_LEN);
                prop_assert!(!h.as_str().bytes().any(|b| b.is_ascii_uppercase() || b == b'@'));
                prop_assert_eq!(Handle::parse(h.as_str()).unwrap(), h);
            }
        }

        #[test]
        fn top_n_matches_full_sort(counts in prop::collection::vec(0u64..20, 1..500), n in 1usize..60, seed in any::<u64>()) {
            let entries: Vec<(String, u64)> =
                counts.iter().enumerate().map(|(i, &c)| (format!("h{i}"), c)).collect();
            let expected = oracle_top(&entries, n);
            // insertion order permuted by a seeded rotation + reversal
            let mut perm = entries.clone();
            let len = perm.len();
            perm.rotate_left((seed as usize) % len);
            if seed % 2 == 0 { perm.reverse(); }
            let refs: Vec<(&str, u64)> = perm.iter().map(|(h, c)| (h.as_str(), *c)).collect();
            let (t, f) = table_with(&refs);
            let got: Vec<String> = top_n(&f, n, &t).into_iter().map(|i| t.handle(i).to_string()).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn mention_counts_conserve_events(texts in prop::collection::vec("[ a-c@]{0,30}", 0..30)) {
            let recs: Vec<_> = texts.iter().map(|t| tweet("x", t)).collect();
            let mined = mine(&recs, MineOptions::default());
            prop_assert_eq!(mention_frequencies(&mined.table).total(), mined.events.len() as u64);
            prop_assert_eq!(author_post_counts(&mined.table).total(), recs.len() as u64);
            let again = mine(&recs, MineOptions::default());
            prop_assert_eq!(&again.table, &mined.table);
        }
    }
}
