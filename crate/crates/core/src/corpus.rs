//! Tweet corpus ingestion from line-delimited JSON or CSV files.
//!
//! Records are parsed, validated and normalized into [`TweetRecord`]s.
//! Malformed lines are skipped and counted; ingestion aborts only when the
//! malformed fraction exceeds [`IngestOptions::max_malformed_fraction`].

use std::borrow::Cow;
use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mention::Handle;

/// Input file layout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!(
                "unknown input format {other:?} (expected jsonl or csv)"
            )),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

/// One authored post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    /// Author handle as written in the source, minus any leading `@`.
    pub author: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

impl TweetRecord {
    /// Serializes the record as one JSONL line (no trailing newline).
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            id: &'a str,
            user: &'a str,
            text: &'a str,
            created_at: String,
        }
        serde_json::to_string(&Row {
            id: &self.id,
            user: &self.author,
            text: &self.text,
            created_at: format_timestamp(&self.created_at),
        })
        .expect("string fields always serialize")
    }
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
    DateTime::parse_from_rfc3339(raw.trim()).map(|t| t.with_timezone(&Utc))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("line {line}: malformed {format} record: {detail}")]
    Syntax {
        line: u64,
        format: Format,
        detail: String,
    },
    #[error("line {line}: missing field \"{field}\"")]
    MissingField { line: u64, field: &'static str },
    #[error("line {line}: invalid timestamp {value:?}: {detail}")]
    Timestamp {
        line: u64,
        value: String,
        detail: String,
    },
    #[error("line {line}: invalid author handle {value:?}")]
    Author { line: u64, value: String },
}

impl RecordError {
    pub fn line(&self) -> u64 {
        match self {
            RecordError::Syntax { line, .. }
            | RecordError::MissingField { line, .. }
            | RecordError::Timestamp { line, .. }
            | RecordError::Author { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid date range: {from} is after {to}")]
    InvalidRange { from: String, to: String },
    #[error(
        "{malformed} of {lines} records are malformed (limit {limit_pct:.1}%); first error: {first}"
    )]
    TooManyMalformed {
        malformed: u64,
        lines: u64,
        limit_pct: f64,
        first: String,
    },
}

#[derive(Deserialize)]
struct JsonRow<'a> {
    #[serde(borrow, default)]
    id: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    user: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    text: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    created_at: Option<Cow<'a, str>>,
}

/// Parses one record. `line` is the 1-based source line used in error reports.
pub fn parse_record(
    line_text: &str,
    format: Format,
    line: u64,
) -> Result<TweetRecord, RecordError> {
    match format {
        Format::Jsonl => {
            let row: JsonRow<'_> =
                serde_json::from_str(line_text).map_err(|e| RecordError::Syntax {
                    line,
                    format,
                    detail: e.to_string(),
                })?;
            build_record(
                row.id.as_deref(),
                row.user.as_deref(),
                row.text.as_deref(),
                row.created_at.as_deref(),
                line,
            )
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(line_text.as_bytes());
            let mut row = csv::StringRecord::new();
            match reader.read_record(&mut row) {
                Ok(true) => parse_csv_row(&row, line),
                Ok(false) => Err(RecordError::Syntax {
                    line,
                    format,
                    detail: "empty row".into(),
                }),
                Err(e) => Err(RecordError::Syntax {
                    line,
                    format,
                    detail: e.to_string(),
                }),
            }
        }
    }
}

fn parse_csv_row(row: &csv::StringRecord, line: u64) -> Result<TweetRecord, RecordError> {
    if row.len() > 4 {
        return Err(RecordError::Syntax {
            line,
            format: Format::Csv,
            detail: format!("expected 4 columns, found {}", row.len()),
        });
    }
    build_record(row.get(0), row.get(1), row.get(2), row.get(3), line)
}

fn build_record(
    id: Option<&str>,
    user: Option<&str>,
    text: Option<&str>,
    created_at: Option<&str>,
    line: u64,
) -> Result<TweetRecord, RecordError> {
    let id = id
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or(RecordError::MissingField { line, field: "id" })?;
    let user = user
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or(RecordError::MissingField {
            line,
            field: "user",
        })?;
    let text = text.ok_or(RecordError::MissingField {
        line,
        field: "text",
    })?;
    let created_raw = created_at.ok_or(RecordError::MissingField {
        line,
        field: "created_at",
    })?;
    let created_at = parse_timestamp(created_raw).map_err(|e| RecordError::Timestamp {
        line,
        value: created_raw.to_string(),
        detail: e.to_string(),
    })?;
    let author = user.strip_prefix('@').unwrap_or(user);
    if Handle::parse(author).is_err() {
        return Err(RecordError::Author {
            line,
            value: user.to_string(),
        });
    }
    Ok(TweetRecord {
        id: id.to_string(),
        author: author.to_string(),
        text: text.to_string(),
        created_at,
    })
}

/// Closed interval `[from, to]`; either end may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
}

impl DateRange {
    pub fn new(
        from: Option<DateTime<Utc>>,
        to: Option<DateTime<Utc>>,
    ) -> Result<Self, CorpusError> {
        if let (Some(f), Some(t)) = (from, to) {
            if f > t {
                return Err(CorpusError::InvalidRange {
                    from: format_timestamp(&f),
                    to: format_timestamp(&t),
                });
            }
        }
        Ok(DateRange { from, to })
    }

    pub fn contains(&self, ts: &DateTime<Utc>) -> bool {
        self.from.is_none_or(|f| *ts >= f) && self.to.is_none_or(|t| *ts <= t)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IngestOptions {
    pub format: Format,
    pub date_range: DateRange,
    /// Abort when `malformed / records` exceeds this fraction.
    pub max_malformed_fraction: f64,
    /// Parser workers for JSONL input; 0 or 1 parses on the calling thread.
    pub threads: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            format: Format::Jsonl,
            date_range: DateRange::default(),
            max_malformed_fraction: 0.10,
            threads: 1,
        }
    }
}

const MAX_REPORTED_ERRORS: usize = 20;

/// Outcome counts for one ingestion pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Non-blank records seen (excluding a CSV header).
    pub records_seen: u64,
    pub accepted: u64,
    pub out_of_range: u64,
    pub malformed: u64,
    /// The first few malformed-record messages, in source order.
    pub errors: Vec<String>,
}

impl IngestReport {
    fn note(&mut self, err: &RecordError) {
        self.malformed += 1;
        if self.errors.len() < MAX_REPORTED_ERRORS {
            self.errors.push(err.to_string());
        }
    }

    fn check(&self, limit: f64) -> Result<(), CorpusError> {
        if self.records_seen > 0 && self.malformed as f64 > limit * self.records_seen as f64 {
            return Err(CorpusError::TooManyMalformed {
                malformed: self.malformed,
                lines: self.records_seen,
                limit_pct: limit * 100.0,
                first: self.errors.first().cloned().unwrap_or_default(),
            });
        }
        Ok(())
    }
}

/// An ingested, order-preserving record sequence.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<TweetRecord>,
    pub report: IngestReport,
}

/// Reads every record and collects those within the date range.
pub fn ingest<R: BufRead>(reader: R, opts: &IngestOptions) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let report = ingest_with(reader, opts, |r| records.push(r))?;
    Ok(Corpus { records, report })
}

/// Streaming form of [`ingest`]: each accepted record is handed to `sink`
/// in source order.
pub fn ingest_with<R, F>(
    reader: R,
    opts: &IngestOptions,
    mut sink: F,
) -> Result<IngestReport, CorpusError>
where
    R: BufRead,
    F: FnMut(TweetRecord),
{
    let mut report = IngestReport::default();
    let range = opts.date_range;
    let mut accept = |res: Result<TweetRecord, RecordError>, report: &mut IngestReport| {
        report.records_seen += 1;
        match res {
            Ok(rec) if range.contains(&rec.created_at) => {
                report.accepted += 1;
                sink(rec);
            }
            Ok(_) => report.out_of_range += 1,
            Err(e) => report.note(&e),
        }
    };

    match opts.format {
        Format::Jsonl => {
            let threads = opts.threads.max(1);
            let batch_len = 16_384 * threads;
            let mut batch: Vec<(u64, String)> = Vec::with_capacity(batch_len);
            let mut lines = reader.lines();
            let mut line_no = 0u64;
            loop {
                batch.clear();
                for line in lines.by_ref() {
                    line_no += 1;
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    batch.push((line_no, line));
                    if batch.len() == batch_len {
                        break;
                    }
                }
                if batch.is_empty() {
                    break;
                }
                for res in parse_batch(&batch, threads) {
                    accept(res, &mut report);
                }
            }
        }
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(reader);
            let mut row = csv::StringRecord::new();
            loop {
                let line = rdr.position().line() + 1;
                match rdr.read_record(&mut row) {
                    Ok(false) => break,
                    Ok(true) => {
                        if row.len() == 1 && row.get(0).is_some_and(|f| f.trim().is_empty()) {
                            continue;
                        }
                        let line = row.position().map_or(line, |p| p.line());
                        accept(parse_csv_row(&row, line), &mut report);
                    }
                    Err(e) => {
                        if let csv::ErrorKind::Io(_) = e.kind() {
                            return Err(CorpusError::Io(std::io::Error::other(e.to_string())));
                        }
                        let err = RecordError::Syntax {
                            line,
                            format: Format::Csv,
                            detail: e.to_string(),
                        };
                        accept(Err(err), &mut report);
                    }
                }
            }
        }
    }
    report.check(opts.max_malformed_fraction)?;
    Ok(report)
}

fn parse_batch(batch: &[(u64, String)], threads: usize) -> Vec<Result<TweetRecord, RecordError>> {
    let parse = |chunk: &[(u64, String)]| {
        chunk
            .iter()
            .map(|(n, l)| parse_record(l, Format::Jsonl, *n))
            .collect::<Vec<_>>()
    };
    if threads <= 1 || batch.len() < 1024 {
        return parse(batch);
    }
    let chunk_len = batch.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = batch
            .chunks(chunk_len)
            .map(|chunk| scope.spawn(move || parse(chunk)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("parser thread panicked"))
            .collect()
    })
}

/// Table-style dataset description: tweet and unique-author counts plus the
/// observed date span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub label: String,
    pub tweet_count: u64,
    pub unique_authors: u64,
    pub date_min: Option<DateTime<Utc>>,
    pub date_max: Option<DateTime<Utc>>,
}

/// Mergeable accumulator behind [`corpus_stats`]. Merging is commutative and
/// associative, so partitioned ingestion gives the same totals.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    tweets: u64,
    authors: HashSet<String>,
    date_min: Option<DateTime<Utc>>,
    date_max: Option<DateTime<Utc>>,
}

impl StatsAccumulator {
    pub fn push(&mut self, rec: &TweetRecord) {
        self.tweets += 1;
        if rec.author.bytes().any(|b| b.is_ascii_uppercase()) {
            self.authors.insert(rec.author.to_ascii_lowercase());
        } else if !self.authors.contains(rec.author.as_str()) {
            self.authors.insert(rec.author.clone());
        }
        self.date_min = Some(
            self.date_min
                .map_or(rec.created_at, |d| d.min(rec.created_at)),
        );
        self.date_max = Some(
            self.date_max
                .map_or(rec.created_at, |d| d.max(rec.created_at)),
        );
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        self.tweets += other.tweets;
        self.authors.extend(other.authors);
        self.date_min = match (self.date_min, other.date_min) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.date_max = match (self.date_max, other.date_max) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self
    }

    pub fn finish(&self, label: &str) -> CorpusStats {
        CorpusStats {
            label: label.to_string(),
            tweet_count: self.tweets,
            unique_authors: self.authors.len() as u64,
            date_min: self.date_min,
            date_max: self.date_max,
        }
    }
}

pub fn corpus_stats(records: &[TweetRecord], label: &str) -> CorpusStats {
    let mut acc = StatsAccumulator::default();
    for r in records {
        acc.push(r);
    }
    acc.finish(label)
}
