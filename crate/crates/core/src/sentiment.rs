//! Lexicon-based emotion scoring.
//!
//! A [`LexiconSet`] maps each emotion category to literal words and prefix
//! stems. [`score`] reports, per category, the share of word tokens in a
//! text that hit the category, as a percentage.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::geo::StateCode;
use crate::stats::YearMonth;
use crate::{Error, Result};

pub const DEFAULT_CATEGORIES: [&str; 5] = ["positive_emotion", "negative_emotion", "anxiety", "anger", "sadness"];

const DEMO_LEXICON: &str = include_str!("../data/lexicon_demo.tsv");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Category {
    pub literals: BTreeSet<String>,
    pub prefixes: BTreeSet<String>,
}

impl Category {
    pub fn is_empty(&self) -> bool {
        self.literals.is_empty() && self.prefixes.is_empty()
    }

    /// True if `token` (already lowercase) equals a literal or starts with a prefix.
    pub fn matches(&self, token: &str) -> bool {
        if self.literals.contains(token) {
            return true;
        }
        if self.prefixes.is_empty() {
            return false;
        }
        token
            .char_indices()
            .map(|(i, c)| i + c.len_utf8())
            .any(|end| self.prefixes.contains(&token[..end]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconSet {
    names: Vec<String>,
    categories: Vec<Category>,
}

impl LexiconSet {
    /// Builds a lexicon whose categories must be exactly `names`, in that order.
    pub fn from_categories<S: AsRef<str>>(names: &[S], mut given: BTreeMap<String, Category>) -> Result<Self> {
        if given.is_empty() {
            return Err(Error::InvalidInput("lexicon: no categories".into()));
        }
        let mut categories = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            match given.remove(name) {
                Some(c) if !c.is_empty() => categories.push(c),
                Some(_) => return Err(Error::InvalidInput(format!("lexicon: category {name} is empty"))),
                None => return Err(Error::InvalidInput(format!("lexicon: category {name} is missing"))),
            }
        }
        if let Some(extra) = given.keys().next() {
            return Err(Error::InvalidInput(format!("lexicon: unknown category {extra}")));
        }
        Ok(LexiconSet {
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            categories,
        })
    }

    /// Parses the tab-separated lexicon format against the default categories.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        Self::parse_with(text, origin, &DEFAULT_CATEGORIES)
    }

    pub fn parse_with<S: AsRef<str>>(text: &str, origin: &Path, names: &[S]) -> Result<Self> {
        let known: BTreeSet<&str> = names.iter().map(|n| n.as_ref()).collect();
        let mut given: BTreeMap<String, Category> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let name = fields.next().unwrap_or_default();
            if !known.contains(name) {
                return Err(Error::parse(origin, i + 1, format!("unknown category {name:?}")));
            }
            let cat = given.entry(name.to_string()).or_default();
            for entry in fields {
                let entry = entry.to_lowercase();
                let (set, word) = match entry.strip_suffix('*') {
                    Some(stem) => (&mut cat.prefixes, stem.to_string()),
                    None => (&mut cat.literals, entry),
                };
                if word.is_empty() {
                    return Err(Error::parse(origin, i + 1, "empty lexicon entry"));
                }
                if !set.insert(word.clone()) {
                    log::warn!("{}:{}: duplicate entry {word:?} in {name}", origin.display(), i + 1);
                }
            }
        }
        if given.is_empty() {
            return Err(Error::parse(origin, 0, "no categories"));
        }
        Self::from_categories(names, given).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::parse(origin, 0, msg),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, &DEFAULT_CATEGORIES)
    }

    pub fn load_with<S: AsRef<str>>(path: &Path, names: &[S]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with(&text, path, names)
    }

    /// The small demonstration lexicon shipped with the crate.
    pub fn demo() -> Self {
        Self::parse(DEMO_LEXICON, Path::new("<demo lexicon>")).expect("bundled lexicon is valid")
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn category(&self, name: &str) -> Option<&Category> {
        self.names.iter().position(|n| n == name).map(|i| &self.categories[i])
    }

    pub fn categories(&self) -> impl Iterator<Item = (&str, &Category)> {
        self.names.iter().map(String::as_str).zip(&self.categories)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    pub token_count: usize,
    pub hits: Vec<usize>,
    pub percentages: Vec<f64>,
}

/// Lowercased word tokens: maximal runs of letters and apostrophes, with
/// apostrophes trimmed from both ends.
pub fn score_tokens(text: &str) -> Vec<String> {
    let is_word = |c: char| c.is_alphabetic() || c == '\'' || c == '\u{2019}';
    text.split(|c: char| !is_word(c))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn score(text: &str, lex: &LexiconSet) -> EmotionScores {
    let tokens = score_tokens(text);
    let mut hits = vec![0usize; lex.len()];
    for tok in &tokens {
        for (h, cat) in hits.iter_mut().zip(&lex.categories) {
            if cat.matches(tok) {
                *h += 1;
            }
        }
    }
    let n = tokens.len();
    let percentages = hits
        .iter()
        .map(|&h| if n == 0 { 0.0 } else { 100.0 * h as f64 / n as f64 })
        .collect();
    EmotionScores {
        token_count: n,
        hits,
        percentages,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Month,
    State,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmotionRow {
    pub group: String,
    pub n: usize,
    pub means: Vec<f64>,
}

/// Per-group mean emotion percentages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmotionTable {
    pub key: String,
    pub categories: Vec<String>,
    pub rows: Vec<EmotionRow>,
}

impl EmotionTable {
    /// Groups keyed by arbitrary strings; rows come out sorted by key.
    pub(crate) fn from_groups<'a>(
        key: &str,
        categories: &[String],
        items: impl IntoIterator<Item = (String, &'a EmotionScores)>,
    ) -> Result<Self> {
        let width = categories.len();
        let mut groups: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
        for (group, s) in items {
            if s.percentages.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "scores have {} categories, expected {width}",
                    s.percentages.len()
                )));
            }
            let (n, sums) = groups.entry(group).or_insert_with(|| (0, vec![0.0; width]));
            *n += 1;
            for (acc, v) in sums.iter_mut().zip(&s.percentages) {
                *acc += v;
            }
        }
        let rows = groups
            .into_iter()
            .map(|(group, (n, sums))| EmotionRow {
                group,
                n,
                means: sums.into_iter().map(|s| s / n as f64).collect(),
            })
            .collect();
        Ok(EmotionTable {
            key: key.to_string(),
            categories: categories.to_vec(),
            rows,
        })
    }

    pub fn row(&self, group: &str) -> Option<&EmotionRow> {
        self.rows.iter().find(|r| r.group == group)
    }

    /// Row with the largest mean in `category`, first by key on ties.
    pub fn argmax(&self, category: &str) -> Option<&EmotionRow> {
        let c = self.categories.iter().position(|n| n == category)?;
        self.rows.iter().fold(None, |best: Option<&EmotionRow>, r| match best {
            Some(b) if b.means[c] >= r.means[c] => Some(b),
            _ => Some(r),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| crate::stats::csv_io(path, e))?;
        let mut header = vec![self.key.clone(), "n".to_string()];
        header.extend(self.categories.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.group.clone(), r.n.to_string()];
            rec.extend(r.means.iter().map(|m| m.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Averages scores per calendar month (UTC) or per state. State grouping
/// needs `geo`, a post id to state map; posts absent from it are skipped.
pub fn aggregate_scores(
    scores: &[(&Post, &EmotionScores)],
    group_by: GroupBy,
    geo: Option<&HashMap<String, StateCode>>,
    categories: &[String],
) -> Result<EmotionTable> {
    match group_by {
        GroupBy::Month => EmotionTable::from_groups(
            "group",
            categories,
            scores
                .iter()
                .map(|(p, s)| (YearMonth::of(&p.created_at).to_string(), *s)),
        ),
        GroupBy::State => {
            let geo = geo.ok_or_else(|| Error::InvalidInput("state grouping requires a geo mapping".into()))?;
            EmotionTable::from_groups(
                "group",
                categories,
                scores
                    .iter()
                    .filter_map(|(p, s)| geo.get(&p.id).map(|st| (st.to_string(), *s))),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_timestamp, Source};
    use proptest::prelude::*;

    fn toy() -> LexiconSet {
        let text = "positive_emotion\thope\tlove*\n\
                    negative_emotion\thate\tsad\tmad\n\
                    anxiety\tworr*\tfear\n\
                    anger\tmad\tfurious\trag*\n\
                    sadness\tsad\tcry*\n";
        LexiconSet::parse(text, Path::new("toy")).unwrap()
    }

    fn post(id: &str, ts: &str) -> Post {
        Post {
            id: id.into(),
            created_at: parse_timestamp(ts).unwrap(),
            text: String::new(),
            author_location: None,
            lang: None,
            source: Source::SearchArchive,
        }
    }

    fn names() -> Vec<String> {
        DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn anger_line_parses_literals_and_prefixes() {
        let lex = toy();
        let anger = lex.category("anger").unwrap();
        assert_eq!(
            anger.literals,
            ["mad", "furious"].iter().map(|s| s.to_string()).collect()
        );
        assert_eq!(anger.prefixes, ["rag"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn empty_file_has_no_categories() {
        let err = LexiconSet::parse("", Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("no categories"), "{err}");
    }

    #[test]
    fn prefix_entries_are_lowercased() {
        let text = "positive_emotion Love*\nnegative_emotion a\nanxiety b\nanger c\nsadness d\n";
        let lex = LexiconSet::parse(text, Path::new("x")).unwrap();
        assert!(lex.category("positive_emotion").unwrap().prefixes.contains("love"));
    }

    #[test]
    fn unknown_and_missing_categories_fail() {
        let bad = "joy\tyay\n";
        assert!(LexiconSet::parse(bad, Path::new("x")).is_err());
        let partial = "anger\tmad\n";
        let err = LexiconSet::parse(partial, Path::new("x")).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
    }

    #[test]
    fn duplicates_are_kept_once() {
        let text = "positive_emotion hope hope\nnegative_emotion a\nanxiety b\nanger c\nsadness d\n";
        let lex = LexiconSet::parse(text, Path::new("x")).unwrap();
        assert_eq!(lex.category("positive_emotion").unwrap().literals.len(), 1);
    }

    #[test]
    fn empty_text_scores_zero() {
        let s = score("", &toy());
        assert_eq!(s.token_count, 0);
        assert!(s.percentages.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn hope_and_loved_ones() {
        let s = score("hope and loved ones bring hope", &toy());
        assert_eq!(s.token_count, 6);
        assert_eq!(s.hits[0], 3);
        assert_eq!(s.percentages[0], 50.0);
    }

    #[test]
    fn prefix_hits_longer_words() {
        let s = score("lovely", &toy());
        assert_eq!(s.percentages[0], 100.0);
    }

    #[test]
    fn one_token_can_hit_several_categories() {
        let s = score("so mad", &toy());
        assert_eq!(s.hits, vec![0, 1, 0, 1, 0]);
    }

    #[test]
    fn tokens_keep_inner_apostrophes() {
        assert_eq!(score_tokens("Don't 'worry' 2day!"), vec!["don't", "worry", "day"]);
    }

    #[test]
    fn month_mean_of_two() {
        let a = post("a", "2015-03-01T00:00:00Z");
        let b = post("b", "2015-03-31T23:59:59Z");
        let sa = EmotionScores {
            token_count: 10,
            hits: vec![1, 0, 0, 0, 0],
            percentages: vec![10.0, 0.0, 0.0, 0.0, 0.0],
        };
        let sb = EmotionScores {
            token_count: 10,
            hits: vec![3, 0, 0, 0, 0],
            percentages: vec![30.0, 0.0, 0.0, 0.0, 0.0],
        };
        let t = aggregate_scores(&[(&a, &sa), (&b, &sb)], GroupBy::Month, None, &names()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].group, "2015-03");
        assert_eq!(t.rows[0].n, 2);
        assert_eq!(t.rows[0].means[0], 20.0);
    }

    #[test]
    fn two_months_two_rows() {
        let a = post("a", "2015-03-31T23:59:59Z");
        let b = post("b", "2015-04-01T00:00:00Z");
        let s = score("hope", &toy());
        let t = aggregate_scores(&[(&a, &s), (&b, &s)], GroupBy::Month, None, &names()).unwrap();
        let groups: Vec<_> = t.rows.iter().map(|r| r.group.as_str()).collect();
        assert_eq!(groups, vec!["2015-03", "2015-04"]);
    }

    #[test]
    fn state_grouping_needs_geo() {
        let a = post("a", "2015-03-01T00:00:00Z");
        let s = score("hope", &toy());
        assert!(aggregate_scores(&[(&a, &s)], GroupBy::State, None, &names()).is_err());
    }

    #[test]
    fn state_table_identifies_max_anger() {
        let ms = StateCode::parse("MS").unwrap();
        let fl = StateCode::parse("FL").unwrap();
        let lex = toy();
        let posts = [post("a", "2015-01-01T00:00:00Z"), post("b", "2015-01-01T00:00:00Z")];
        let sa = score("furious and mad", &lex);
        let sb = score("hope", &lex);
        let geo: HashMap<String, StateCode> = [("a".to_string(), ms), ("b".to_string(), fl)].into_iter().collect();
        let t = aggregate_scores(
            &[(&posts[0], &sa), (&posts[1], &sb)],
            GroupBy::State,
            Some(&geo),
            &names(),
        )
        .unwrap();
        assert_eq!(t.argmax("anger").unwrap().group, "MS");
    }

    #[test]
    fn demo_lexicon_loads() {
        let lex = LexiconSet::demo();
        assert_eq!(lex.names(), names().as_slice());
    }

    fn brute_force(tokens: &[String], lex: &LexiconSet) -> Vec<usize> {
        let mut out = Vec::new();
        for (_, cat) in lex.categories() {
            let mut h = 0;
            for t in tokens {
                let mut hit = false;
                for l in &cat.literals {
                    if t == l {
                        hit = true;
                    }
                }
                for p in &cat.prefixes {
                    if t.starts_with(p.as_str()) {
                        hit = true;
                    }
                }
                if hit {
                    h += 1;
                }
            }
            out.push(h);
        }
        out
    }

    const VOCAB: &[&str] = &[
        "hope", "hopeful", "love", "lovely", "loved", "hate", "sad", "sadly", "mad", "furious", "rage", "raging",
        "worry", "worried", "fear", "cry", "crying", "and", "the", "cancer", "pink", "don't",
    ];

    proptest! {
        #[test]
        fn matches_nested_loop_oracle(idx in prop::collection::vec(0..VOCAB.len(), 0..=30)) {
            let lex = toy();
            let words: Vec<String> = idx.iter().map(|&i| VOCAB[i].to_string()).collect();
            let text = words.join(" ");
            let s = score(&text, &lex);
            prop_assert_eq!(s.token_count, words.len());
            prop_assert_eq!(&s.hits, &brute_force(&words, &lex));
            for p in &s.percentages {
                prop_assert!((0.0..=100.0).contains(p));
            }
        }

        #[test]
        fn duplicating_text_keeps_percentages(idx in prop::collection::vec(0..VOCAB.len(), 1..=30)) {
            let lex = toy();
            let text = idx.iter().map(|&i| VOCAB[i]).collect::<Vec<_>>().join(" ");
            let once = score(&text, &lex);
            let twice = score(&format!("{text} {text}"), &lex);
            prop_assert_eq!(once.percentages, twice.percentages);
        }
    }
}
