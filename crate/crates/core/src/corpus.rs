//! Post corpora: loading, deduplication, language filtering and
//! partitioning.
//!
//! Input files hold one JSON object per line:
//!
//! ```text
//! {"id":"42","created_at":"2018-06-01T12:00:00Z","text":"...","user_location":"Gainesville, FL","lang":"en"}
//! ```
//!
//! `created_at` may be epoch seconds (number or digit string), RFC 3339,
//! a naive `YYYY-MM-DD[T ]HH:MM:SS` taken as UTC, or the classic Twitter
//! `Wed Oct 10 20:19:24 +0000 2018` form. An optional `source` field
//! (`search_archive` or `random_sample`) records which collection the post
//! came from.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, TimeZone, Timelike, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matchkw::KeywordMatcher;
use crate::textprep::english_stopword_hits;
use crate::{Error, Result};

/// Which collection a post was drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Keyword search over a recent window.
    #[default]
    SearchArchive,
    /// Keyword filter over a long-running random sample stream.
    RandomSample,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::SearchArchive => "search_archive",
            Source::RandomSample => "random_sample",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "search_archive" => Ok(Source::SearchArchive),
            "random_sample" => Ok(Source::RandomSample),
            other => Err(Error::InvalidInput(format!("unknown source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub author_location: Option<String>,
    pub lang: Option<String>,
    pub source: Source,
}

/// Output class of the two-stage classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupLabel {
    Irrelevant,
    Promotional,
    Laypeople,
}

impl GroupLabel {
    pub const ALL: [GroupLabel; 3] = [GroupLabel::Irrelevant, GroupLabel::Promotional, GroupLabel::Laypeople];

    pub fn as_str(self) -> &'static str {
        match self {
            GroupLabel::Irrelevant => "irrelevant",
            GroupLabel::Promotional => "promotional",
            GroupLabel::Laypeople => "laypeople",
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GroupLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "irrelevant" => Ok(GroupLabel::Irrelevant),
            "promotional" => Ok(GroupLabel::Promotional),
            "laypeople" => Ok(GroupLabel::Laypeople),
            other => Err(Error::InvalidInput(format!("unknown group label {other:?}"))),
        }
    }
}

/// Duplicate detection rule applied by [`load_corpus`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupPolicy {
    /// Same id only.
    Id,
    /// Same id, or same normalized text at the same instant.
    #[default]
    IdAndText,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub dedup: DedupPolicy,
    /// Keep only posts in this language (primary subtag compared, so `en`
    /// accepts `en-GB`). Untagged posts pass an `en` filter when they
    /// contain at least two common English function words.
    pub lang_filter: Option<String>,
    /// Fail on the first malformed record instead of skipping it.
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            dedup: DedupPolicy::default(),
            lang_filter: None,
            strict: true,
        }
    }
}

/// Per-file record counts. `read = kept + dropped_duplicate +
/// dropped_language`; malformed lines skipped in lenient mode are counted
/// separately and are not part of `read`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputProvenance {
    pub path: PathBuf,
    pub read: usize,
    pub kept: usize,
    pub dropped_duplicate: usize,
    pub dropped_language: usize,
    pub skipped_malformed: usize,
}

impl InputProvenance {
    pub fn is_balanced(&self) -> bool {
        self.read == self.kept + self.dropped_duplicate + self.dropped_language
    }
}

/// A subsetting step applied after loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub name: String,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<InputProvenance>,
    pub filters: Vec<FilterRecord>,
}

impl Provenance {
    pub fn totals(&self) -> InputProvenance {
        self.inputs.iter().fold(InputProvenance::default(), |mut acc, p| {
            acc.read += p.read;
            acc.kept += p.kept;
            acc.dropped_duplicate += p.dropped_duplicate;
            acc.dropped_language += p.dropped_language;
            acc.skipped_malformed += p.skipped_malformed;
            acc
        })
    }
}

/// Posts sorted ascending by `(created_at, id)` with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    posts: Vec<Post>,
    pub provenance: Provenance,
}

impl Corpus {
    /// Builds a corpus from in-memory posts, sorting them. Duplicate ids
    /// are rejected.
    pub fn from_posts(mut posts: Vec<Post>) -> Result<Self> {
        sort_posts(&mut posts);
        let mut seen = HashSet::with_capacity(posts.len());
        for p in &posts {
            if p.id.is_empty() {
                return Err(Error::InvalidInput("post with empty id".into()));
            }
            if !seen.insert(p.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate post id {:?}", p.id)));
            }
        }
        Ok(Corpus {
            posts,
            provenance: Provenance::default(),
        })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Post> {
        self.posts.iter()
    }

    /// Keeps posts satisfying `keep`, recording the step under `name`.
    pub fn filter(&self, name: &str, mut keep: impl FnMut(&Post) -> bool) -> Corpus {
        let posts: Vec<Post> = self.posts.iter().filter(|p| keep(p)).cloned().collect();
        let mut provenance = self.provenance.clone();
        provenance.filters.push(FilterRecord {
            name: name.to_string(),
            before: self.posts.len(),
            after: posts.len(),
        });
        Corpus { posts, provenance }
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Post;
    type IntoIter = std::slice::Iter<'a, Post>;

    fn into_iter(self) -> Self::IntoIter {
        self.posts.iter()
    }
}

fn sort_posts(posts: &mut [Post]) {
    posts.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdField {
    Text(String),
    Number(u64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TimeField {
    Epoch(i64),
    Text(String),
}

#[derive(Deserialize)]
struct RawRecord {
    id: IdField,
    created_at: TimeField,
    text: String,
    #[serde(default)]
    user_location: Option<String>,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    source: Option<Source>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    created_at: String,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    user_location: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lang: Option<&'a str>,
    source: Source,
}

fn from_epoch(secs: i64) -> std::result::Result<DateTime<Utc>, String> {
    Utc.timestamp_opt(secs, 0)
        .single()
        .ok_or_else(|| format!("epoch seconds {secs} out of range"))
}

/// Parses any accepted timestamp form, truncated to whole seconds in UTC.
pub fn parse_timestamp(raw: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = raw.trim();
    let digits = s.strip_prefix('-').unwrap_or(s);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let secs: i64 = s.parse().map_err(|e| format!("bad epoch {s:?}: {e}"))?;
        return from_epoch(secs);
    }
    let parsed = DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .or_else(|_| DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y").map(|t| t.with_timezone(&Utc)))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").map(|t| t.and_utc()))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").map(|t| t.and_utc()))
        .map_err(|_| format!("unrecognized timestamp {s:?}"))?;
    Ok(parsed.with_nanosecond(0).expect("zero nanoseconds is valid"))
}

/// Canonical UTC rendering used in output files.
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_record(line: &str) -> std::result::Result<Post, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = match raw.id {
        IdField::Text(s) => s,
        IdField::Number(n) => n.to_string(),
    };
    if id.trim().is_empty() {
        return Err("empty id".into());
    }
    let created_at = match raw.created_at {
        TimeField::Epoch(secs) => from_epoch(secs)?,
        TimeField::Text(s) => parse_timestamp(&s)?,
    };
    if raw.text.trim().is_empty() {
        return Err("empty text".into());
    }
    Ok(Post {
        id,
        created_at,
        text: raw.text,
        author_location: raw.user_location.filter(|s| !s.trim().is_empty()),
        lang: raw.lang.filter(|s| !s.trim().is_empty()),
        source: raw.source.unwrap_or_default(),
    })
}

fn primary_subtag(tag: &str) -> &str {
    tag.split(['-', '_']).next().unwrap_or(tag)
}

/// Language test used by [`load_corpus`].
pub fn passes_language_filter(post: &Post, filter: &str) -> bool {
    let want = primary_subtag(filter.trim());
    match &post.lang {
        Some(lang) => primary_subtag(lang.trim()).eq_ignore_ascii_case(want),
        None => want.eq_ignore_ascii_case("en") && english_stopword_hits(&post.text) >= 2,
    }
}

fn dedup_text_key(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

struct FileRecords {
    posts: Vec<(usize, Post)>,
    skipped: usize,
}

fn read_file(path: &Path, strict: bool) -> Result<FileRecords> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut posts = Vec::new();
    let mut skipped = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(line) {
            Ok(post) => posts.push((n + 1, post)),
            Err(reason) if strict => return Err(Error::parse(path, n + 1, reason)),
            Err(reason) => {
                log::warn!("{}:{}: skipping malformed record: {reason}", path.display(), n + 1);
                skipped += 1;
            }
        }
    }
    Ok(FileRecords { posts, skipped })
}

/// Loads, filters and deduplicates line-delimited JSON posts.
///
/// Files are parsed in parallel; the merge is a stable sort on
/// `(created_at, id, file, line)` followed by a single dedup pass, so the
/// earliest occurrence of a duplicate wins and the result does not depend
/// on thread scheduling.
pub fn load_corpus<P: AsRef<Path> + Sync>(paths: &[P], opts: &LoadOptions) -> Result<Corpus> {
    if paths.is_empty() {
        return Err(Error::InvalidInput("no input files given".into()));
    }
    let per_file: Vec<FileRecords> = paths
        .par_iter()
        .map(|p| read_file(p.as_ref(), opts.strict))
        .collect::<Result<_>>()?;

    let mut inputs: Vec<InputProvenance> = paths
        .iter()
        .zip(&per_file)
        .map(|(p, f)| InputProvenance {
            path: p.as_ref().to_path_buf(),
            read: f.posts.len(),
            skipped_malformed: f.skipped,
            ..Default::default()
        })
        .collect();

    let mut candidates: Vec<(usize, usize, Post)> = Vec::new();
    for (file, records) in per_file.into_iter().enumerate() {
        for (line, post) in records.posts {
            let keep = opts
                .lang_filter
                .as_deref()
                .is_none_or(|f| passes_language_filter(&post, f));
            if keep {
                candidates.push((file, line, post));
            } else {
                inputs[file].dropped_language += 1;
            }
        }
    }
    candidates.sort_by(|a, b| (a.2.created_at, &a.2.id, a.0, a.1).cmp(&(b.2.created_at, &b.2.id, b.0, b.1)));

    let mut seen_ids: HashSet<String> = HashSet::with_capacity(candidates.len());
    let mut seen_text: HashSet<(String, i64)> = HashSet::new();
    let mut posts = Vec::with_capacity(candidates.len());
    for (file, _, post) in candidates {
        let text_key =
            (opts.dedup == DedupPolicy::IdAndText).then(|| (dedup_text_key(&post.text), post.created_at.timestamp()));
        let dup_text = text_key.as_ref().is_some_and(|k| seen_text.contains(k));
        if seen_ids.contains(&post.id) || dup_text {
            inputs[file].dropped_duplicate += 1;
            continue;
        }
        seen_ids.insert(post.id.clone());
        seen_text.extend(text_key);
        inputs[file].kept += 1;
        posts.push(post);
    }
    // Candidates were ordered by (created_at, id, ..) and ids are now
    // unique, so `posts` is already in corpus order.
    debug_assert!(posts
        .windows(2)
        .all(|w| (w[0].created_at, &w[0].id) < (w[1].created_at, &w[1].id)));
    debug_assert!(inputs.iter().all(InputProvenance::is_balanced));

    Ok(Corpus {
        posts,
        provenance: Provenance {
            inputs,
            filters: Vec::new(),
        },
    })
}

/// Sidecar path `<path>.provenance.json`.
pub fn provenance_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".provenance.json");
    PathBuf::from(s)
}

/// Writes posts as line-delimited JSON plus the provenance sidecar.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for post in &corpus.posts {
        let rec = OutRecord {
            id: &post.id,
            created_at: format_timestamp(&post.created_at),
            text: &post.text,
            user_location: post.author_location.as_deref(),
            lang: post.lang.as_deref(),
            source: post.source,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    let side = provenance_path(path);
    let json = serde_json::to_string_pretty(&corpus.provenance)?;
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
}

/// Splits a classified corpus into its three label groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPartition {
    pub irrelevant: Corpus,
    pub promotional: Corpus,
    pub laypeople: Corpus,
}

impl LabelPartition {
    pub fn get(&self, label: GroupLabel) -> &Corpus {
        match label {
            GroupLabel::Irrelevant => &self.irrelevant,
            GroupLabel::Promotional => &self.promotional,
            GroupLabel::Laypeople => &self.laypeople,
        }
    }
}

pub fn partition_by_label(corpus: &Corpus, labels: &HashMap<String, GroupLabel>) -> Result<LabelPartition> {
    let missing: Vec<&str> = corpus
        .posts
        .iter()
        .filter(|p| !labels.contains_key(&p.id))
        .map(|p| p.id.as_str())
        .collect();
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(10).copied().collect();
        return Err(Error::InvalidInput(format!(
            "{} posts have no label, e.g. {}",
            missing.len(),
            shown.join(", ")
        )));
    }
    let part = |label: GroupLabel| corpus.filter(label.as_str(), |p| labels[&p.id] == label);
    Ok(LabelPartition {
        irrelevant: part(GroupLabel::Irrelevant),
        promotional: part(GroupLabel::Promotional),
        laypeople: part(GroupLabel::Laypeople),
    })
}

/// Keeps exactly the posts the matcher accepts.
pub fn filter_by_keywords(corpus: &Corpus, matcher: &KeywordMatcher) -> Corpus {
    corpus.filter("keywords", |p| matcher.is_match(&p.text))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_lines(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        path
    }

    fn post(id: &str, t: i64, text: &str) -> Post {
        Post {
            id: id.into(),
            created_at: Utc.timestamp_opt(t, 0).unwrap(),
            text: text.into(),
            author_location: None,
            lang: Some("en".into()),
            source: Source::SearchArchive,
        }
    }

    #[test]
    fn duplicate_id_keeps_earliest() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "a.jsonl",
            &[
                r#"{"id":"42","created_at":200,"text":"later copy"}"#,
                r#"{"id":"42","created_at":100,"text":"first copy"}"#,
            ],
        );
        let c = load_corpus(&[p], &LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.posts()[0].text, "first copy");
        assert_eq!(c.provenance.inputs[0].dropped_duplicate, 1);
    }

    #[test]
    fn language_filter_drops_tagged_spanish() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "a.jsonl",
            &[
                r#"{"id":"1","created_at":1,"text":"hola amigos","lang":"es"}"#,
                r#"{"id":"2","created_at":2,"text":"hello","lang":"en-US"}"#,
            ],
        );
        let opts = LoadOptions {
            lang_filter: Some("en".into()),
            ..Default::default()
        };
        let c = load_corpus(&[p], &opts).unwrap();
        assert_eq!(c.posts().iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["2"]);
        assert_eq!(c.provenance.inputs[0].dropped_language, 1);
    }

    #[test]
    fn untagged_posts_use_stopword_heuristic() {
        let mut p = post("1", 0, "this is the best day");
        p.lang = None;
        assert!(passes_language_filter(&p, "en"));
        p.text = "el mejor dia".into();
        assert!(!passes_language_filter(&p, "en"));
        p.text = "this is the best day".into();
        assert!(!passes_language_filter(&p, "fr"));
    }

    #[test]
    fn provenance_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "a.jsonl",
            &[
                r#"{"id":"1","created_at":1,"text":"one","lang":"en"}"#,
                r#"{"id":"2","created_at":2,"text":"two","lang":"en"}"#,
                r#"{"id":"2","created_at":3,"text":"two again","lang":"en"}"#,
                r#"{"id":"3","created_at":4,"text":"tres","lang":"es"}"#,
                r#"{"id":"4","created_at":5,"text":"four","lang":"en"}"#,
            ],
        );
        let opts = LoadOptions {
            lang_filter: Some("en".into()),
            ..Default::default()
        };
        let c = load_corpus(&[p], &opts).unwrap();
        let t = c.provenance.totals();
        assert_eq!((t.read, t.kept, t.dropped_duplicate, t.dropped_language), (5, 3, 1, 1));
        assert!(t.is_balanced());
    }

    #[test]
    fn same_text_same_instant_is_duplicate() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_lines(
            dir.path(),
            "a.jsonl",
            &[r#"{"id":"1","created_at":10,"text":"Pink  Ribbon"}"#],
        );
        let b = write_lines(
            dir.path(),
            "b.jsonl",
            &[r#"{"id":"9","created_at":"1970-01-01T00:00:10Z","text":"pink ribbon","source":"random_sample"}"#],
        );
        let c = load_corpus(&[a.clone(), b.clone()], &LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.provenance.inputs[1].dropped_duplicate, 1);

        let id_only = LoadOptions {
            dedup: DedupPolicy::Id,
            ..Default::default()
        };
        assert_eq!(load_corpus(&[a, b], &id_only).unwrap().len(), 2);
    }

    #[test]
    fn strict_mode_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_lines(
            dir.path(),
            "bad.jsonl",
            &[
                r#"{"id":"1","created_at":1,"text":"ok"}"#,
                "",
                r#"{"id":"2","text":"no time"}"#,
            ],
        );
        let err = load_corpus(std::slice::from_ref(&p), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let lenient = LoadOptions {
            strict: false,
            ..Default::default()
        };
        let c = load_corpus(&[p], &lenient).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.provenance.inputs[0].skipped_malformed, 1);
        assert_eq!(c.provenance.inputs[0].read, 1);
    }

    #[test]
    fn empty_text_is_malformed() {
        assert!(parse_record(r#"{"id":"1","created_at":1,"text":"   "}"#).is_err());
        assert!(parse_record(r#"{"id":"","created_at":1,"text":"x"}"#).is_err());
    }

    #[test]
    fn unreadable_file_names_path() {
        let err = load_corpus(&["/nonexistent/posts.jsonl"], &LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/posts.jsonl"));
    }

    #[test]
    fn timestamp_forms() {
        let want = Utc.with_ymd_and_hms(2018, 10, 10, 20, 19, 24).unwrap();
        for s in [
            "1539202764",
            "2018-10-10T20:19:24Z",
            "2018-10-10T22:19:24.731+02:00",
            "2018-10-10 20:19:24",
            "Wed Oct 10 20:19:24 +0000 2018",
        ] {
            assert_eq!(parse_timestamp(s).unwrap(), want, "{s}");
        }
        assert!(parse_timestamp("yesterday").is_err());
    }

    #[test]
    fn partition_by_label_cases() {
        let c = Corpus::from_posts((0..10).map(|i| post(&i.to_string(), i, "x")).collect()).unwrap();
        let labels: HashMap<String, GroupLabel> = (0..10).map(|i| (i.to_string(), GroupLabel::Laypeople)).collect();
        let part = partition_by_label(&c, &labels).unwrap();
        assert_eq!(
            (part.irrelevant.len(), part.promotional.len(), part.laypeople.len()),
            (0, 0, 10)
        );

        let mut short = labels.clone();
        short.remove("3");
        let err = partition_by_label(&c, &short).unwrap_err();
        assert!(err.to_string().contains('3'));

        let empty = partition_by_label(&Corpus::default(), &HashMap::new()).unwrap();
        assert!(empty.irrelevant.is_empty() && empty.promotional.is_empty() && empty.laypeople.is_empty());
    }

    #[test]
    fn from_posts_rejects_duplicate_ids() {
        assert!(Corpus::from_posts(vec![post("1", 0, "a"), post("1", 1, "b")]).is_err());
    }
}
