//! Keyword matching and snowball candidate proposal.
//!
//! Phrases match case-insensitively on whole words: `breast cancer` matches
//! `Breast Cancer!` but not `breastplate cancerous`. A hashtag entry such as
//! `#BreastCancerFighter` matches the word `breastcancerfighter` whether or
//! not it is written with `#`. Hashtag bodies count as words for phrase
//! matching too, so the phrase `exercise` matches `#exercise`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::textprep::{segments, words, Segment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordMatcher {
    phrases: Vec<String>,
    phrase_words: Vec<Vec<String>>,
    /// Stored with the leading `#`.
    hashtags: Vec<String>,
    by_first_word: HashMap<String, Vec<usize>>,
    by_hashtag_body: HashMap<String, usize>,
}

/// Outcome of [`KeywordMatcher::find`]: matched entries in list order
/// (phrases first, then hashtags), each at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchResult {
    pub matched: bool,
    pub terms: Vec<String>,
}

/// A hashtag proposed for the next snowball round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordSuggestion {
    pub term: String,
    /// Matched posts containing the term.
    pub cooccurrence_count: usize,
    pub lift: f64,
}

/// Lowercase word tokens of `text`; `None` marks a URL, mention or emoji
/// that no phrase may span.
fn match_tokens(text: &str) -> Vec<Option<String>> {
    let mut out = Vec::new();
    for seg in segments(text) {
        match seg {
            Segment::Text(t) => out.extend(words(t).map(|w| Some(w.to_lowercase()))),
            Segment::Hashtag(body) => out.push(Some(body.to_lowercase())),
            Segment::Url | Segment::Mention | Segment::Emoji => out.push(None),
        }
    }
    out
}

fn hashtag_body(entry: &str) -> Option<String> {
    let body = entry.trim().trim_start_matches('#').to_lowercase();
    let valid = !body.is_empty() && body.chars().all(|c| c.is_alphanumeric() || c == '_');
    valid.then_some(body)
}

impl KeywordMatcher {
    /// Builds a matcher. Entries are lowercased and deduplicated; hashtags
    /// may be given with or without `#`.
    pub fn compile<P, H>(phrases: &[P], hashtags: &[H]) -> Result<Self>
    where
        P: AsRef<str>,
        H: AsRef<str>,
    {
        let mut m = KeywordMatcher {
            phrases: Vec::new(),
            phrase_words: Vec::new(),
            hashtags: Vec::new(),
            by_first_word: HashMap::new(),
            by_hashtag_body: HashMap::new(),
        };
        for raw in phrases {
            let lower = raw.as_ref().to_lowercase();
            let ws: Vec<String> = words(&lower).map(str::to_string).collect();
            if ws.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "keyword phrase {:?} has no words",
                    raw.as_ref()
                )));
            }
            let canonical = ws.join(" ");
            if m.phrases.contains(&canonical) {
                continue;
            }
            m.by_first_word.entry(ws[0].clone()).or_default().push(m.phrases.len());
            m.phrases.push(canonical);
            m.phrase_words.push(ws);
        }
        for raw in hashtags {
            let body = hashtag_body(raw.as_ref())
                .ok_or_else(|| Error::InvalidInput(format!("invalid hashtag keyword {:?}", raw.as_ref())))?;
            if m.by_hashtag_body.contains_key(&body) {
                continue;
            }
            m.by_hashtag_body.insert(body.clone(), m.hashtags.len());
            m.hashtags.push(format!("#{body}"));
        }
        if m.phrases.is_empty() && m.hashtags.is_empty() {
            return Err(Error::InvalidInput("empty keyword set".into()));
        }
        Ok(m)
    }

    /// One entry per line; lines starting with `#` are hashtag entries,
    /// blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut phrases = Vec::new();
        let mut hashtags = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line.starts_with('#') {
                hashtags.push(line);
            } else {
                phrases.push(line);
            }
        }
        Self::compile(&phrases, &hashtags)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn hashtags(&self) -> &[String] {
        &self.hashtags
    }

    pub fn len(&self) -> usize {
        self.phrases.len() + self.hashtags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True if `term` (with or without `#`) is already covered by an entry.
    pub fn contains_term(&self, term: &str) -> bool {
        let lower = term.trim().to_lowercase();
        let bare = lower.trim_start_matches('#');
        self.by_hashtag_body.contains_key(bare) || self.phrases.iter().any(|p| p == bare)
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.scan(text, true).iter().any(|&hit| hit)
    }

    pub fn find(&self, text: &str) -> MatchResult {
        let hits = self.scan(text, false);
        let terms: Vec<String> = self
            .phrases
            .iter()
            .chain(&self.hashtags)
            .zip(&hits)
            .filter(|(_, &hit)| hit)
            .map(|(t, _)| t.clone())
            .collect();
        MatchResult {
            matched: !terms.is_empty(),
            terms,
        }
    }

    /// Hit flags indexed like `phrases ++ hashtags`.
    fn scan(&self, text: &str, stop_at_first: bool) -> Vec<bool> {
        let mut hits = vec![false; self.len()];
        let tokens = match_tokens(text);
        for (i, tok) in tokens.iter().enumerate() {
            let Some(tok) = tok else { continue };
            if let Some(&h) = self.by_hashtag_body.get(tok) {
                hits[self.phrases.len() + h] = true;
                if stop_at_first {
                    return hits;
                }
            }
            for &p in self.by_first_word.get(tok).into_iter().flatten() {
                let ws = &self.phrase_words[p];
                let found = tokens.len() - i >= ws.len()
                    && ws
                        .iter()
                        .zip(&tokens[i..])
                        .all(|(w, t)| t.as_deref() == Some(w.as_str()));
                if found {
                    hits[p] = true;
                    if stop_at_first {
                        return hits;
                    }
                }
            }
        }
        hits
    }
}

fn post_hashtags(text: &str) -> HashSet<String> {
    segments(text)
        .into_iter()
        .filter_map(|s| match s {
            Segment::Hashtag(body) => Some(format!("#{}", body.to_lowercase())),
            _ => None,
        })
        .collect()
}

/// Ranks hashtags that co-occur with matched posts but are not yet in the
/// keyword list.
///
/// `lift = (c_matched / M) / ((c_all + 1) / (N + 1))` where `M` is the
/// number of matched posts and `N` the corpus size; the add-one terms keep
/// the ratio defined on tiny corpora. Only terms seen in at least
/// `min_count` matched posts are returned, sorted by lift, then count
/// (both descending), then term.
pub fn suggest_keywords(corpus: &Corpus, matcher: &KeywordMatcher, min_count: usize) -> Vec<KeywordSuggestion> {
    let min_count = min_count.max(1);
    let mut all: HashMap<String, usize> = HashMap::new();
    let mut in_matched: HashMap<String, usize> = HashMap::new();
    let mut matched_posts = 0usize;

    for post in corpus {
        let tags = post_hashtags(&post.text);
        let hit = matcher.is_match(&post.text);
        matched_posts += usize::from(hit);
        for tag in tags {
            if hit {
                *in_matched.entry(tag.clone()).or_default() += 1;
            }
            *all.entry(tag).or_default() += 1;
        }
    }
    if matched_posts == 0 {
        return Vec::new();
    }

    let n = corpus.len() as f64;
    let m = matched_posts as f64;
    let mut out: Vec<KeywordSuggestion> = in_matched
        .into_iter()
        .filter(|(term, count)| *count >= min_count && !matcher.contains_term(term))
        .map(|(term, count)| {
            let p_matched = count as f64 / m;
            let p_all = (all[&term] as f64 + 1.0) / (n + 1.0);
            KeywordSuggestion {
                lift: p_matched / p_all,
                cooccurrence_count: count,
                term,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.lift
            .total_cmp(&a.lift)
            .then(b.cooccurrence_count.cmp(&a.cooccurrence_count))
            .then_with(|| a.term.cmp(&b.term))
    });
    out
}
