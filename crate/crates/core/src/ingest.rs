//! Tweet-archive JSON-lines parsing and quote/reply relation extraction.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsv;

/// Language filter value that admits every record.
pub const ANY_LANG: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub lang: String,
    pub reply_to: Option<String>,
    pub quoted_id: Option<String>,
    pub quoted_text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationKind {
    Quote,
    Reply,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Quote => "quote",
            RelationKind::Reply => "reply",
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A (target, response) link: the response quotes or replies to the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationEdge {
    pub kind: RelationKind,
    pub target_id: String,
    pub response_id: String,
    pub target_text: Option<String>,
    pub response_text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub lines: u64,
    pub parsed: u64,
    pub filtered: u64,
    pub malformed: u64,
    /// Deletion notices and other records without a text field.
    pub deleted: u64,
    pub retweets: u64,
    pub duplicates: u64,
}

impl ParseStats {
    pub fn merge(&mut self, other: &ParseStats) {
        self.lines += other.lines;
        self.parsed += other.parsed;
        self.filtered += other.filtered;
        self.malformed += other.malformed;
        self.deleted += other.deleted;
        self.retweets += other.retweets;
        self.duplicates += other.duplicates;
    }
}

#[derive(Deserialize)]
struct RawQuoted {
    id_str: Option<String>,
    id: Option<u64>,
    text: Option<String>,
    full_text: Option<String>,
}

#[derive(Deserialize)]
struct RawTweet {
    id_str: Option<String>,
    id: Option<u64>,
    text: Option<String>,
    full_text: Option<String>,
    lang: Option<String>,
    in_reply_to_status_id_str: Option<String>,
    quoted_status: Option<RawQuoted>,
    retweeted_status: Option<IgnoredAny>,
}

enum LineOutcome {
    Record(TweetRecord),
    Filtered,
    Deleted,
    Retweet,
    Malformed,
    Blank,
}

fn parse_line(line: &[u8], lang_filter: &str) -> LineOutcome {
    let Ok(s) = std::str::from_utf8(line) else {
        return LineOutcome::Malformed;
    };
    let s = s.trim();
    if s.is_empty() {
        return LineOutcome::Blank;
    }
    let raw: RawTweet = match serde_json::from_str(s) {
        Ok(r) => r,
        Err(_) => return LineOutcome::Malformed,
    };
    let Some(text) = raw.text.or(raw.full_text) else {
        return LineOutcome::Deleted;
    };
    let Some(id) = raw.id_str.or(raw.id.map(|i| i.to_string())) else {
        return LineOutcome::Malformed;
    };
    if id.is_empty() {
        return LineOutcome::Malformed;
    }
    if raw.retweeted_status.is_some() {
        return LineOutcome::Retweet;
    }
    let lang = raw.lang.unwrap_or_default();
    if lang_filter != ANY_LANG && lang != lang_filter {
        return LineOutcome::Filtered;
    }
    let (quoted_id, quoted_text) = match raw.quoted_status {
        Some(q) => (
            q.id_str.or(q.id.map(|i| i.to_string())),
            q.text.or(q.full_text),
        ),
        None => (None, None),
    };
    LineOutcome::Record(TweetRecord {
        id,
        text,
        lang,
        reply_to: raw.in_reply_to_status_id_str.filter(|s| !s.is_empty()),
        quoted_text: quoted_id.as_ref().and(quoted_text),
        quoted_id: quoted_id.filter(|s| !s.is_empty()),
    })
}

/// Parses one JSON-lines stream. Line-level problems are tallied in the
/// returned stats and never abort the parse.
pub fn parse_reader<R: BufRead>(
    mut reader: R,
    lang_filter: &str,
) -> std::io::Result<(Vec<TweetRecord>, ParseStats)> {
    let mut records = Vec::new();
    let mut stats = ParseStats::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        stats.lines += 1;
        match parse_line(&buf, lang_filter) {
            LineOutcome::Record(r) => {
                stats.parsed += 1;
                records.push(r);
            }
            LineOutcome::Filtered => stats.filtered += 1,
            LineOutcome::Deleted => stats.deleted += 1,
            LineOutcome::Retweet => stats.retweets += 1,
            LineOutcome::Malformed => stats.malformed += 1,
            LineOutcome::Blank => stats.lines -= 1,
        }
    }
    Ok((records, stats))
}

/// Opens a file, transparently decompressing `.gz` and `.bz2`.
pub fn open_maybe_compressed(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    let inner: Box<dyn Read + Send> = match ext.as_str() {
        "gz" | "gzip" => Box::new(flate2::read::MultiGzDecoder::new(file)),
        "bz2" => Box::new(bzip2::read::MultiBzDecoder::new(file)),
        _ => Box::new(file),
    };
    Ok(Box::new(BufReader::new(inner)))
}

pub fn parse_stream_file(path: &Path, lang_filter: &str) -> Result<(Vec<TweetRecord>, ParseStats)> {
    let reader = open_maybe_compressed(path)?;
    parse_reader(reader, lang_filter).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    pub totals: ParseStats,
    pub per_file: Vec<(String, ParseStats)>,
}

/// Parses every file (in parallel), merging in sorted path order; the first
/// occurrence of a tweet id wins.
pub fn ingest_files(
    paths: &[PathBuf],
    lang_filter: &str,
) -> Result<(Vec<TweetRecord>, IngestSummary)> {
    let mut sorted = paths.to_vec();
    sorted.sort();
    sorted.dedup();
    let parsed: Vec<Result<(Vec<TweetRecord>, ParseStats)>> = sorted
        .par_iter()
        .map(|p| parse_stream_file(p, lang_filter))
        .collect();

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    let mut summary = IngestSummary::default();
    for (path, result) in sorted.iter().zip(parsed) {
        let (recs, mut stats) = result?;
        for r in recs {
            if seen.insert(r.id.clone()) {
                records.push(r);
            } else {
                stats.duplicates += 1;
            }
        }
        summary.totals.merge(&stats);
        summary.per_file.push((path.display().to_string(), stats));
    }
    Ok((records, summary))
}

/// One Quote edge per record with a quoted id and one Reply edge per record
/// with a reply target. Self-links are never emitted.
pub fn extract_relations(records: &[TweetRecord]) -> Vec<RelationEdge> {
    let mut edges = Vec::new();
    for r in records {
        if let Some(q) = &r.quoted_id {
            if *q != r.id {
                edges.push(RelationEdge {
                    kind: RelationKind::Quote,
                    target_id: q.clone(),
                    response_id: r.id.clone(),
                    target_text: r.quoted_text.clone(),
                    response_text: r.text.clone(),
                });
            }
        }
        if let Some(t) = &r.reply_to {
            if *t != r.id {
                edges.push(RelationEdge {
                    kind: RelationKind::Reply,
                    target_id: t.clone(),
                    response_id: r.id.clone(),
                    target_text: None,
                    response_text: r.text.clone(),
                });
            }
        }
    }
    edges
}

/// Lookup of records by tweet id.
pub struct RecordIndex<'a> {
    by_id: HashMap<&'a str, &'a TweetRecord>,
}

impl<'a> RecordIndex<'a> {
    pub fn new(records: &'a [TweetRecord]) -> Self {
        let mut by_id = HashMap::with_capacity(records.len());
        for r in records {
            by_id.entry(r.id.as_str()).or_insert(r);
        }
        Self { by_id }
    }

    pub fn get(&self, id: &str) -> Option<&'a TweetRecord> {
        self.by_id.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JoinOutcome {
    pub edges: Vec<RelationEdge>,
    pub dropped_replies: usize,
}

/// Fills target text of Reply edges from the index, dropping the ones whose
/// target was never seen. Quote edges lacking embedded text are filled when
/// possible and otherwise passed through.
pub fn join_reply_targets(edges: Vec<RelationEdge>, index: &RecordIndex<'_>) -> JoinOutcome {
    let mut out = JoinOutcome::default();
    for mut e in edges {
        if e.target_text.is_none() {
            e.target_text = index.get(&e.target_id).map(|r| r.text.clone());
        }
        if e.kind == RelationKind::Reply && e.target_text.is_none() {
            out.dropped_replies += 1;
            continue;
        }
        out.edges.push(e);
    }
    out
}

pub fn write_records(path: &Path, records: &[TweetRecord]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<TweetRecord>> {
    let reader = open_maybe_compressed(path)?;
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: TweetRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_edges(path: &Path, edges: &[RelationEdge]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for e in edges {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            e.kind,
            tsv::escape(&e.target_id),
            tsv::escape(&e.response_id),
            tsv::escape(e.target_text.as_deref().unwrap_or("")),
            tsv::escape(&e.response_text)
        )
        .map_err(|err| Error::io(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn rec(id: &str, reply_to: Option<&str>, quoted: Option<(&str, &str)>) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            text: format!("text of {id}"),
            lang: "en".into(),
            reply_to: reply_to.map(Into::into),
            quoted_id: quoted.map(|q| q.0.into()),
            quoted_text: quoted.map(|q| q.1.into()),
        }
    }

    #[test]
    fn parses_plain_english_line() {
        let line = r#"{"id_str":"1","text":"hello","lang":"en"}"#;
        let (recs, stats) = parse_reader(Cursor::new(line), "en").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].text, "hello");
        assert_eq!(stats.parsed, 1);
    }

    #[test]
    fn filters_other_languages() {
        let line = r#"{"id_str":"1","text":"hola","lang":"es"}"#;
        let (recs, stats) = parse_reader(Cursor::new(line), "en").unwrap();
        assert!(recs.is_empty());
        assert_eq!(stats.filtered, 1);
    }

    #[test]
    fn tallies_malformed_and_deleted_lines() {
        let mut lines = Vec::new();
        for i in 0..8 {
            lines.push(format!(r#"{{"id_str":"{i}","text":"t{i}","lang":"en"}}"#));
        }
        lines.insert(3, "{not json".to_string());
        lines.insert(6, r#"{"id_str": 5"#.to_string());
        let input = lines.join("\n");
        let (recs, stats) = parse_reader(Cursor::new(input), "en").unwrap();
        assert_eq!(recs.len(), 8);
        assert_eq!(stats.malformed, 2);
        assert_eq!(stats.lines, 10);

        let del = r#"{"delete":{"status":{"id_str":"9"}}}"#;
        let (recs, stats) = parse_reader(Cursor::new(del), "en").unwrap();
        assert!(recs.is_empty());
        assert_eq!(stats.deleted, 1);
    }

    #[test]
    fn reads_full_text_numeric_ids_and_quotes() {
        let line = r#"{"id":42,"full_text":"long one","lang":"en","in_reply_to_status_id_str":"7","quoted_status":{"id_str":"9","text":"orig"},"extra":[1,2]}"#;
        let (recs, _) = parse_reader(Cursor::new(line), "en").unwrap();
        assert_eq!(
            recs[0],
            TweetRecord {
                id: "42".into(),
                text: "long one".into(),
                lang: "en".into(),
                reply_to: Some("7".into()),
                quoted_id: Some("9".into()),
                quoted_text: Some("orig".into()),
            }
        );
    }

    #[test]
    fn skips_retweets() {
        let line =
            r#"{"id_str":"1","text":"RT @a: x","lang":"en","retweeted_status":{"id_str":"2"}}"#;
        let (recs, stats) = parse_reader(Cursor::new(line), "en").unwrap();
        assert!(recs.is_empty());
        assert_eq!(stats.retweets, 1);
    }

    #[test]
    fn relation_extraction_cases() {
        let quote = rec("r", None, Some(("t", "target text")));
        let e = extract_relations(&[quote]);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, RelationKind::Quote);
        assert_eq!(
            (e[0].target_id.as_str(), e[0].response_id.as_str()),
            ("t", "r")
        );
        assert_eq!(e[0].target_text.as_deref(), Some("target text"));

        let reply = rec("r", Some("t"), None);
        let e = extract_relations(&[reply]);
        assert_eq!(e[0].kind, RelationKind::Reply);
        assert!(e[0].target_text.is_none());

        let both = rec("r", Some("t1"), Some(("t2", "x")));
        assert_eq!(extract_relations(&[both]).len(), 2);

        let selfish = rec("r", Some("r"), None);
        assert!(extract_relations(&[selfish]).is_empty());
        assert!(extract_relations(&[]).is_empty());
    }

    #[test]
    fn join_fills_and_drops() {
        let records = vec![
            rec("t1", None, None),
            rec("t2", None, None),
            rec("t3", None, None),
        ];
        let index = RecordIndex::new(&records);
        let mut replies = Vec::new();
        for (i, target) in ["t1", "t2", "t3", "gone1", "gone2"].iter().enumerate() {
            replies.push(rec(&format!("r{i}"), Some(target), None));
        }
        let out = join_reply_targets(extract_relations(&replies), &index);
        assert_eq!(out.edges.len(), 3);
        assert_eq!(out.dropped_replies, 2);
        assert_eq!(out.edges[0].target_text.as_deref(), Some("text of t1"));
    }
}
