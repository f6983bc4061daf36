//! Task-specific text normalization.
//!
//! Three pipelines share one lexer (URLs, mentions, hashtags, emoji runs,
//! plain text) and differ in what they do with each segment:
//!
//! | segment  | classification | sentiment        | topic            |
//! |----------|----------------|------------------|------------------|
//! | URL      | `<url>`        | removed          | removed          |
//! | mention  | `<user>`       | removed          | removed          |
//! | hashtag  | `<hashtag>`    | body without `#` | body, lemmatized |
//! | emoji    | `<emojis>`     | removed          | removed          |
//!
//! A run of adjacent emoji yields a single `<emojis>` placeholder.

mod emoji;
mod lexer;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use emoji::{detect_emoji, EMOJI_RANGES};
pub(crate) use lexer::{segments, words, Segment};

use crate::{Error, Result};

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";
pub const HASHTAG_TOKEN: &str = "<hashtag>";
pub const EMOJI_TOKEN: &str = "<emojis>";

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");
const BUNDLED_LEMMAS: &str = include_str!("../../data/lemmas.tsv");

/// Which normalization produced a [`TokenStream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Classification,
    Sentiment,
    Topic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub pipeline: Normalization,
}

impl TokenStream {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }
}

/// Set of lowercase words removed by the topic pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stoplist {
    words: HashSet<String>,
}

impl Stoplist {
    /// The bundled 175-word English list.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS).expect("bundled stoplist is non-empty")
    }

    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: HashSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        if words.is_empty() {
            return Err(Error::InvalidInput("stoplist is empty".into()));
        }
        Ok(Stoplist { words })
    }

    /// One lowercase word per line.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_words(text.lines())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|_| Error::parse(path, 1, "stoplist file has no words"))
    }

    /// Adds more words, lowercased.
    pub fn with_words<I, S>(mut self, extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.words.extend(
            extra
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty()),
        );
        self
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lookup-table lemmatizer with English suffix-stripping fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lemmatizer {
    table: HashMap<String, String>,
}

impl Lemmatizer {
    /// Suffix rules only.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEMMAS, Path::new("<bundled lemmas>")).expect("bundled lemma table is well formed")
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Lemmatizer {
            table: pairs
                .into_iter()
                .map(|(k, v)| (k.into().to_lowercase(), v.into().to_lowercase()))
                .collect(),
        }
    }

    /// `inflected<TAB>lemma` per line; blank lines are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut table = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, n + 1, "expected inflected<TAB>lemma"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(Error::parse(origin, n + 1, "empty lemma field"));
            }
            table.insert(k.to_lowercase(), v.to_lowercase());
        }
        Ok(Lemmatizer { table })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Lemma of a lowercase word: table entry if present, else suffix rules.
    pub fn lemmatize(&self, word: &str) -> String {
        match self.table.get(word) {
            Some(lemma) => lemma.clone(),
            None => suffix_lemma(word),
        }
    }
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

/// `runn` -> `run`, `stopp` -> `stop`; `fall` and `miss` keep their pair.
fn undouble(stem: &str) -> String {
    let mut chars: Vec<char> = stem.chars().collect();
    if let [.., a, b] = chars[..] {
        if a == b && a.is_ascii_alphabetic() && !"aeiouylsz".contains(a) && chars.len() > 3 {
            chars.pop();
        }
    }
    chars.into_iter().collect()
}

/// English suffix rules, each applied only when the stripped form keeps at
/// least three characters.
pub fn suffix_lemma(word: &str) -> String {
    let keep = |stem: &str| char_len(stem) >= 3;

    if let Some(stem) = word.strip_suffix("ies") {
        if char_len(stem) + 1 >= 3 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        if keep(stem) && ["ss", "x", "z", "ch", "sh"].iter().any(|s| stem.ends_with(s)) {
            return stem.to_string();
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if keep(stem) && !["s", "u", "i"].iter().any(|s| stem.ends_with(s)) {
            return stem.to_string();
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if keep(stem) && has_vowel(stem) {
                return undouble(stem);
            }
        }
    }
    word.to_string()
}

/// Classification tokens: placeholders for URLs, mentions, hashtags and
/// emoji; everything else lowercased and split into words.
pub fn normalize_for_classification(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    for seg in segments(text) {
        match seg {
            Segment::Url => tokens.push(URL_TOKEN.to_string()),
            Segment::Mention => tokens.push(USER_TOKEN.to_string()),
            Segment::Hashtag(_) => tokens.push(HASHTAG_TOKEN.to_string()),
            Segment::Emoji => tokens.push(EMOJI_TOKEN.to_string()),
            Segment::Text(t) => tokens.extend(words(t).map(str::to_lowercase)),
        }
    }
    TokenStream {
        tokens,
        pipeline: Normalization::Classification,
    }
}

/// Drops URLs, mentions and emoji, unwraps hashtags, collapses whitespace.
/// Casing is preserved.
pub fn normalize_for_sentiment(text: &str) -> String {
    let mut buf = String::with_capacity(text.len());
    for seg in segments(text) {
        match seg {
            Segment::Text(t) => buf.extend(t.chars().map(|c| match c {
                '#' | '@' => ' ',
                c => c,
            })),
            Segment::Hashtag(body) => buf.push_str(body),
            Segment::Url | Segment::Mention | Segment::Emoji => buf.push(' '),
        }
    }
    buf.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Sentiment cleanup, then lowercase words mapped through the lemmatizer;
/// stopwords (surface or lemma) and tokens shorter than two characters are
/// dropped.
pub fn normalize_for_topics(text: &str, stoplist: &Stoplist, lemmas: &Lemmatizer) -> TokenStream {
    let clean = normalize_for_sentiment(text).to_lowercase();
    let tokens = words(&clean)
        .filter(|w| !stoplist.contains(w))
        .map(|w| lemmas.lemmatize(w))
        .filter(|lemma| char_len(lemma) >= 2 && !stoplist.contains(lemma))
        .collect();
    TokenStream {
        tokens,
        pipeline: Normalization::Topic,
    }
}

/// The fifty most frequent English function words, used to guess the
/// language of untagged posts.
pub const TOP_ENGLISH_STOPWORDS: [&str; 50] = [
    "the", "of", "and", "to", "a", "in", "is", "it", "you", "that", "he", "was", "for", "on", "are", "with", "as", "i",
    "his", "they", "be", "at", "my", "have", "this", "from", "or", "had", "by", "not", "but", "what", "some", "we",
    "can", "out", "other", "were", "all", "there", "when", "up", "me", "your", "how", "so", "an", "each", "she",
    "which",
];

/// Number of word tokens in `text` that are among [`TOP_ENGLISH_STOPWORDS`].
pub fn english_stopword_hits(text: &str) -> usize {
    let lower = text.to_lowercase();
    words(&lower).filter(|w| TOP_ENGLISH_STOPWORDS.contains(w)).count()
}
