//! File-to-file orchestration of the analysis stages.
//!
//! A [`Pipeline`] is built from a TOML run configuration. Each [`Command`]
//! reads the artifacts of earlier stages from the output directory, writes
//! its own, and records counts and conservation checks in `manifest.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::btm::{self, BtmConfig, BtmModel, InferOptions, TopicAssignment, TopicMergeMap};
use crate::classify::{self, EmbeddingTable, FeatureConfig, Featurizer, LinearModel, Stage, TrainConfig};
use crate::corpus::{
    format_timestamp, load_corpus, parse_timestamp, write_corpus, Corpus, DedupPolicy, GroupLabel, LoadOptions, Source,
};
use crate::geo::{self, Gazetteer, StateAssignment, StateCode};
use crate::matchkw::{suggest_keywords, KeywordMatcher};
use crate::sentiment::{self, EmotionScores, EmotionTable, GroupBy, LexiconSet};
use crate::stats::{self, csv_io, GapPolicy, YearMonth};
use crate::textprep::{normalize_for_sentiment, normalize_for_topics, Lemmatizer, Stoplist};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

/// Artifact file names inside the output directory.
pub mod artifacts {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const KEYWORD_SUGGESTIONS: &str = "keyword_suggestions.csv";
    pub const LABELS: &str = "labels.tsv";
    pub const RELEVANCE_MODEL: &str = "models/relevance.json";
    pub const AUDIENCE_MODEL: &str = "models/audience.json";
    pub const CLASSIFIER_EVAL: &str = "classifier_eval.csv";
    pub const GEOCODE: &str = "geocode.csv";
    pub const EMOTION_SCORES: &str = "emotion_scores.csv";
    pub const EMOTION_MONTHLY: &str = "emotion_monthly.csv";
    pub const STATE_HEATMAP: &str = "state_heatmap.csv";
    pub const TOPIC_MODEL: &str = "models/topics.json";
    pub const TOP_WORDS: &str = "topic_top_words.csv";
    pub const TOPIC_ASSIGNMENTS: &str = "topic_assignments.csv";
    pub const THEME_DISTRIBUTION: &str = "theme_distribution.csv";
    pub const EMOTION_TRENDS: &str = "emotion_trend_tests.csv";
    pub const STATE_EMOTION_MONTHLY: &str = "state_emotion_monthly.csv";
    pub const STATE_TRENDS: &str = "state_emotion_trend_tests.csv";
    pub const TOPIC_VOLUME: &str = "topic_volume_monthly.csv";
    pub const CORRELATION: &str = "topic_correlation.csv";
    pub const PA_CORPUS: &str = "pa_corpus.jsonl";
    pub const PA_MODEL: &str = "models/pa_topics.json";
    pub const PA_TOP_WORDS: &str = "pa_top_words.csv";
    pub const PA_ASSIGNMENTS: &str = "pa_assignments.csv";
    pub const PA_THEMES: &str = "pa_themes.csv";
    pub const PA_VOLUME: &str = "pa_volume_monthly.csv";
    pub const REPORT_DIR: &str = "report";
    pub const REPORT_INDEX: &str = "report/index.json";
    pub const GROUP_COUNTS: &str = "report/group_counts.csv";
}

fn default_seed() -> u64 {
    42
}

fn default_true() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub paths: Vec<PathBuf>,
    #[serde(default)]
    pub lang: Option<String>,
    #[serde(default)]
    pub dedup: DedupPolicy,
    #[serde(default = "default_true")]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeywordConfig {
    pub topic: Option<PathBuf>,
    pub suggest_min_count: usize,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig {
            topic: None,
            suggest_min_count: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TextConfig {
    pub stoplist: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    /// Removed from topic tokens on top of the stoplist.
    pub extra_stopwords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub annotations: Option<PathBuf>,
    pub relevance_model: Option<PathBuf>,
    pub audience_model: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub dim: usize,
    pub bigrams: bool,
    pub train_fraction: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub threshold: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        ClassifyConfig {
            annotations: None,
            relevance_model: None,
            audience_model: None,
            embeddings: None,
            dim: classify::DEFAULT_DIM,
            bigrams: true,
            train_fraction: 0.8,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            l2: t.l2,
            threshold: classify::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SentimentConfig {
    /// Uses the bundled demonstration lexicon when absent.
    pub lexicon: Option<PathBuf>,
    pub categories: Vec<String>,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            lexicon: None,
            categories: sentiment::DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoConfig {
    pub gazetteer: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopicConfig {
    pub k: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub window: Option<usize>,
    pub merge_map: Option<PathBuf>,
    pub top_words: usize,
}

impl Default for TopicConfig {
    fn default() -> Self {
        let b = BtmConfig::default();
        TopicConfig {
            k: b.k,
            alpha: None,
            beta: b.beta,
            iterations: b.iterations,
            window: None,
            merge_map: None,
            top_words: 20,
        }
    }
}

impl TopicConfig {
    fn btm(&self, seed: u64) -> BtmConfig {
        BtmConfig {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            iterations: self.iterations,
            seed,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrendConfig {
    pub gap_policy: GapPolicy,
    /// States tested individually; when empty the `top_states` states with
    /// the most scored laypeople posts are used.
    pub states: Vec<String>,
    pub top_states: usize,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            gap_policy: GapPolicy::Exclude,
            states: Vec::new(),
            top_states: 2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelateConfig {
    /// Restricts the volume series to one collection.
    pub source: Option<Source>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalActivityConfig {
    pub keywords: Option<PathBuf>,
    #[serde(flatten)]
    pub topics: TopicConfig,
}

impl Default for PhysicalActivityConfig {
    fn default() -> Self {
        PhysicalActivityConfig {
            keywords: None,
            topics: TopicConfig {
                k: 2,
                ..TopicConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out", skip_serializing)]
    pub output_dir: PathBuf,
    pub input: InputConfig,
    #[serde(default)]
    pub keywords: KeywordConfig,
    #[serde(default)]
    pub text: TextConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub sentiment: SentimentConfig,
    #[serde(default)]
    pub geo: GeoConfig,
    #[serde(default)]
    pub topics: TopicConfig,
    #[serde(default)]
    pub trend: TrendConfig,
    #[serde(default)]
    pub correlate: CorrelateConfig,
    #[serde(default)]
    pub physical_activity: PhysicalActivityConfig,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::parse(origin, line, e.message().to_string())
        })
    }

    fn input_files_mut(&mut self) -> Vec<&mut PathBuf> {
        let mut v: Vec<&mut PathBuf> = self.input.paths.iter_mut().collect();
        v.extend(
            [
                self.keywords.topic.as_mut(),
                self.text.stoplist.as_mut(),
                self.text.lemmas.as_mut(),
                self.classify.annotations.as_mut(),
                self.classify.relevance_model.as_mut(),
                self.classify.audience_model.as_mut(),
                self.classify.embeddings.as_mut(),
                self.sentiment.lexicon.as_mut(),
                self.geo.gazetteer.as_mut(),
                self.topics.merge_map.as_mut(),
                self.physical_activity.keywords.as_mut(),
                self.physical_activity.topics.merge_map.as_mut(),
            ]
            .into_iter()
            .flatten(),
        );
        v
    }

    /// Resolves relative paths against `base` and checks every referenced
    /// input file exists.
    fn resolve(&mut self, base: &Path) -> Result<()> {
        for p in self.input_files_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.is_file() {
                return Err(Error::Config(format!("file not found: {}", p.display())));
            }
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.paths.is_empty() {
            return Err(Error::Config("input.paths is empty".into()));
        }
        FeatureConfig {
            dim: self.classify.dim,
            bigrams: self.classify.bigrams,
        }
        .validate()?;
        self.train_config().validate()?;
        let c = &self.classify;
        if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
            return Err(Error::Config("classify.train_fraction must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&c.threshold) {
            return Err(Error::Config("classify.threshold must lie in [0, 1]".into()));
        }
        if c.annotations.is_none() && (c.relevance_model.is_none() || c.audience_model.is_none()) {
            return Err(Error::Config(
                "classify needs either annotations or both relevance_model and audience_model".into(),
            ));
        }
        if self.sentiment.categories.is_empty() {
            return Err(Error::Config("sentiment.categories is empty".into()));
        }
        for t in [&self.topics, &self.physical_activity.topics] {
            t.btm(self.seed).validate()?;
            if t.top_words == 0 {
                return Err(Error::Config("top_words must be positive".into()));
            }
        }
        for s in &self.trend.states {
            StateCode::parse(s).ok_or_else(|| Error::Config(format!("trend.states: unknown state {s:?}")))?;
        }
        Ok(())
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.classify.epochs,
            learning_rate: self.classify.learning_rate,
            batch_size: self.classify.batch_size,
            l2: self.classify.l2,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Ingest,
    Classify,
    Geocode,
    Sentiment,
    TopicsFit,
    TopicsInfer,
    Trend,
    Correlate,
    PaSubset,
    Report,
}

impl Command {
    /// Every stage in dependency order.
    pub const ALL: [Command; 10] = [
        Command::Ingest,
        Command::Classify,
        Command::Geocode,
        Command::Sentiment,
        Command::TopicsFit,
        Command::TopicsInfer,
        Command::Trend,
        Command::Correlate,
        Command::PaSubset,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Classify => "classify",
            Command::Geocode => "geocode",
            Command::Sentiment => "sentiment",
            Command::TopicsFit => "topics-fit",
            Command::TopicsInfer => "topics-infer",
            Command::Trend => "trend",
            Command::Correlate => "correlate",
            Command::PaSubset => "pa-subset",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: u64,
    pub rhs: u64,
    pub ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, u64>,
    pub outputs: BTreeMap<String, u64>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub wall_clock_ms: u64,
}

impl StageRecord {
    fn input(&mut self, k: &str, v: usize) {
        self.inputs.insert(k.to_string(), v as u64);
    }

    fn output(&mut self, k: &str, v: usize) {
        self.outputs.insert(k.to_string(), v as u64);
    }

    fn check_eq(&mut self, name: &str, lhs: usize, rhs: usize) {
        self.checks.push(Check {
            name: name.to_string(),
            lhs: lhs as u64,
            rhs: rhs as u64,
            ok: lhs == rhs,
        });
    }

    fn check_le(&mut self, name: &str, lhs: usize, rhs: usize) {
        self.checks.push(Check {
            name: name.to_string(),
            lhs: lhs as u64,
            rhs: rhs as u64,
            ok: lhs <= rhs,
        });
    }

    fn note(&mut self, msg: String) {
        log::warn!("{msg}");
        self.notes.push(msg);
    }

    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    pub fn all_checks_ok(&self) -> bool {
        self.stages.values().all(StageRecord::all_ok)
    }
}

/// A validated run configuration bound to an output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    cfg: RunConfig,
    snapshot: serde_json::Value,
    config_hash: String,
    out: PathBuf,
}

impl Pipeline {
    pub fn from_file(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file not found: {}", path.display())),
            _ => Error::io(path, e),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, path, base, seed, out)
    }

    /// Parses `text`; relative paths resolve against `base`.
    pub fn from_toml(text: &str, origin: &Path, base: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let mut cfg = RunConfig::parse(text, origin)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let snapshot = serde_json::to_value(&cfg)?;
        let config_hash = format!(
            "{:016x}",
            classify::fnv1a64(format!("{}\u{0}{}", text, cfg.seed).as_bytes())
        );
        cfg.resolve(base)?;
        cfg.validate()?;
        let out = out.unwrap_or_else(|| cfg.output_dir.clone());
        Ok(Pipeline {
            cfg,
            snapshot,
            config_hash,
            out,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn need(&self, name: &str) -> Result<PathBuf> {
        let p = self.artifact(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(p))
        }
    }

    fn create(&self, name: &str) -> Result<PathBuf> {
        let p = self.artifact(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(p)
    }

    /// Runs one stage and records it in the manifest.
    pub fn run(&self, cmd: Command) -> Result<StageRecord> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        log::info!("running {}", cmd.name());
        let start = Instant::now();
        let mut rec = match cmd {
            Command::Ingest => self.cmd_ingest(),
            Command::Classify => self.cmd_classify(),
            Command::Geocode => self.cmd_geocode(),
            Command::Sentiment => self.cmd_sentiment(),
            Command::TopicsFit => self.cmd_topics_fit(),
            Command::TopicsInfer => self.cmd_topics_infer(),
            Command::Trend => self.cmd_trend(),
            Command::Correlate => self.cmd_correlate(),
            Command::PaSubset => self.cmd_pa_subset(),
            Command::Report => self.cmd_report(),
        }?;
        rec.wall_clock_ms = start.elapsed().as_millis() as u64;
        self.record(cmd, &rec)?;
        if let Some(bad) = rec.checks.iter().find(|c| !c.ok) {
            return Err(Error::Conservation(format!(
                "{}: {} ({} vs {})",
                cmd.name(),
                bad.name,
                bad.lhs,
                bad.rhs
            )));
        }
        Ok(rec)
    }

    pub fn run_all(&self) -> Result<()> {
        for cmd in Command::ALL {
            self.run(cmd)?;
        }
        Ok(())
    }

    fn record(&self, cmd: Command, rec: &StageRecord) -> Result<()> {
        let path = self.artifact(MANIFEST);
        let mut manifest = match RunManifest::load(&path) {
            Ok(m) if m.config_hash == self.config_hash => m,
            _ => RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: self.config_hash.clone(),
                seed: self.cfg.seed,
                config: self.snapshot.clone(),
                stages: BTreeMap::new(),
            },
        };
        manifest.stages.insert(cmd.name().to_string(), rec.clone());
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }

    fn read_corpus(&self, name: &str) -> Result<Corpus> {
        let path = self.need(name)?;
        let opts = LoadOptions {
            dedup: DedupPolicy::Id,
            lang_filter: None,
            strict: true,
        };
        let mut corpus = load_corpus(&[path], &opts)?;
        for inp in corpus.provenance.inputs.iter_mut() {
            if let Ok(rel) = inp.path.strip_prefix(&self.out) {
                inp.path = rel.to_path_buf();
            }
        }
        Ok(corpus)
    }

    fn read_labels(&self) -> Result<HashMap<String, GroupLabel>> {
        Ok(classify::load_annotations(&self.need(artifacts::LABELS)?)?
            .into_iter()
            .collect())
    }

    fn topic_tokens(&self) -> Result<impl Fn(&str) -> Vec<String> + Sync> {
        let t = &self.cfg.text;
        let stop = match &t.stoplist {
            Some(p) => Stoplist::load(p)?,
            None => Stoplist::bundled(),
        }
        .with_words(&t.extra_stopwords);
        let lemmas = match &t.lemmas {
            Some(p) => Lemmatizer::load(p)?,
            None => Lemmatizer::bundled(),
        };
        Ok(move |text: &str| normalize_for_topics(text, &stop, &lemmas).tokens)
    }

    fn cmd_ingest(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let c = &self.cfg.input;
        let opts = LoadOptions {
            dedup: c.dedup,
            lang_filter: c.lang.clone(),
            strict: c.strict,
        };
        let mut corpus = load_corpus(&c.paths, &opts)?;
        let totals = corpus.provenance.totals();
        rec.input("files", c.paths.len());
        rec.input("records_read", totals.read);
        rec.input("skipped_malformed", totals.skipped_malformed);
        rec.output("dropped_duplicate", totals.dropped_duplicate);
        rec.output("dropped_language", totals.dropped_language);
        for inp in &corpus.provenance.inputs {
            rec.check_eq(
                &format!("{}: read = kept + duplicate + language", inp.path.display()),
                inp.read,
                inp.kept + inp.dropped_duplicate + inp.dropped_language,
            );
        }
        rec.check_eq("corpus size = total kept", corpus.len(), totals.kept);

        let mut suggestions = Vec::new();
        if let Some(kw) = &self.cfg.keywords.topic {
            let matcher = KeywordMatcher::load(kw)?;
            suggestions = suggest_keywords(&corpus, &matcher, self.cfg.keywords.suggest_min_count);
            let before = corpus.len();
            corpus = crate::corpus::filter_by_keywords(&corpus, &matcher);
            rec.output("dropped_keyword", before - corpus.len());
            rec.check_le("keyword filter never adds posts", corpus.len(), before);
        }
        rec.output("posts", corpus.len());
        write_corpus(&corpus, &self.create(artifacts::CORPUS)?)?;

        let path = self.create(artifacts::KEYWORD_SUGGESTIONS)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        w.write_record(["term", "cooccurrence_count", "lift"])?;
        for s in &suggestions {
            w.write_record([s.term.clone(), s.cooccurrence_count.to_string(), s.lift.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        rec.output("keyword_suggestions", suggestions.len());
        Ok(rec)
    }

    fn featurizer(&self) -> Result<Featurizer> {
        let emb = self
            .cfg
            .classify
            .embeddings
            .as_deref()
            .map(EmbeddingTable::load)
            .transpose()?;
        Featurizer::new(
            FeatureConfig {
                dim: self.cfg.classify.dim,
                bigrams: self.cfg.classify.bigrams,
            },
            emb,
        )
    }

    fn cmd_classify(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        rec.input("posts", corpus.len());
        let c = &self.cfg.classify;
        let featurizer = self.featurizer()?;
        let mut gold: HashMap<String, GroupLabel> = HashMap::new();

        let (mut m1, mut m2, evals) = match &c.annotations {
            Some(path) => {
                let ann = classify::load_annotations(path)?;
                rec.input("annotations", ann.len());
                let data = classify::stage_datasets(&ann, &corpus, &featurizer)?;
                let tc = self.cfg.train_config();
                let fit = |set: &[(classify::FeatureVector, bool)], stage: Stage| -> Result<_> {
                    let (tr, te) = classify::split_train_test(set.len(), c.train_fraction, self.cfg.seed);
                    let train: Vec<_> = tr.iter().map(|&i| set[i].clone()).collect();
                    let test: Vec<_> = te.iter().map(|&i| set[i].clone()).collect();
                    let mut m = classify::train(&train, featurizer.dim(), featurizer.embed_dim(), stage, &tc)?;
                    m.threshold = c.threshold;
                    let mut report = classify::evaluate(&m, &test)?;
                    report.split_seed = Some(self.cfg.seed);
                    Ok((m, report))
                };
                let (m1, e1) = fit(&data.relevance, Stage::Relevance)?;
                let (m2, e2) = fit(&data.audience, Stage::Audience)?;
                classify::save_model(&m1, &self.create(artifacts::RELEVANCE_MODEL)?)?;
                classify::save_model(&m2, &self.create(artifacts::AUDIENCE_MODEL)?)?;
                gold.extend(ann);
                (m1, m2, vec![("relevance", e1), ("audience", e2)])
            }
            None => {
                let load = |p: &Option<PathBuf>| -> Result<LinearModel> {
                    classify::load_model(p.as_deref().expect("validated"))
                };
                (load(&c.relevance_model)?, load(&c.audience_model)?, Vec::new())
            }
        };
        m1.threshold = c.threshold;
        m2.threshold = c.threshold;
        for m in [&m1, &m2] {
            if m.dim != featurizer.dim() || m.embed_dim != featurizer.embed_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "model expects dim {}+{}, features are {}+{}",
                    m.dim,
                    m.embed_dim,
                    featurizer.dim(),
                    featurizer.embed_dim()
                )));
            }
        }

        let mut labels = classify::classify_two_stage(&corpus, &featurizer, &m1, &m2)?;
        let mut kept_gold = 0;
        for (id, label) in labels.iter_mut() {
            if let Some(g) = gold.get(id) {
                *label = *g;
                kept_gold += 1;
            }
        }
        rec.output("annotated_labels_used", kept_gold);

        let path = self.create(artifacts::LABELS)?;
        let mut body = String::new();
        for p in &corpus {
            body.push_str(&format!("{}\t{}\n", p.id, labels[&p.id]));
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;

        let path = self.create(artifacts::CLASSIFIER_EVAL)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        w.write_record([
            "stage",
            "precision",
            "recall",
            "f_score",
            "tp",
            "fp",
            "fn",
            "tn",
            "threshold",
            "split_seed",
        ])?;
        for (stage, r) in &evals {
            w.write_record([
                stage.to_string(),
                r.precision.to_string(),
                r.recall.to_string(),
                r.f_score.to_string(),
                r.tp.to_string(),
                r.fp.to_string(),
                r.fn_.to_string(),
                r.tn.to_string(),
                r.threshold.to_string(),
                r.split_seed.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let count = |g: GroupLabel| labels.values().filter(|l| **l == g).count();
        let (irr, promo, lay) = (
            count(GroupLabel::Irrelevant),
            count(GroupLabel::Promotional),
            count(GroupLabel::Laypeople),
        );
        rec.output("irrelevant", irr);
        rec.output("promotional", promo);
        rec.output("laypeople", lay);
        rec.check_eq(
            "irrelevant + promotional + laypeople = posts",
            irr + promo + lay,
            corpus.len(),
        );
        rec.check_eq("one label per post", labels.len(), corpus.len());
        Ok(rec)
    }

    fn cmd_geocode(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        let gaz = match &self.cfg.geo.gazetteer {
            Some(p) => Gazetteer::load(p)?,
            None => Gazetteer::bundled(),
        };
        let assignments: Vec<StateAssignment> = corpus
            .posts()
            .par_iter()
            .map(|p| geo::assign(&p.id, p.author_location.as_deref(), &gaz))
            .collect();
        write_geocode(&self.create(artifacts::GEOCODE)?, &assignments)?;
        let assigned = assignments.iter().filter(|a| a.state.is_some()).count();
        rec.input("posts", corpus.len());
        rec.output("assigned", assigned);
        rec.output("unassigned", assignments.len() - assigned);
        rec.check_eq("assigned + unassigned = posts", assignments.len(), corpus.len());
        Ok(rec)
    }

    fn lexicon(&self) -> Result<LexiconSet> {
        let s = &self.cfg.sentiment;
        match &s.lexicon {
            Some(p) => LexiconSet::load_with(p, &s.categories),
            None => {
                let lex = LexiconSet::demo();
                if lex.names() != s.categories.as_slice() {
                    return Err(Error::Config(
                        "custom sentiment.categories need a sentiment.lexicon file".into(),
                    ));
                }
                Ok(lex)
            }
        }
    }

    fn cmd_sentiment(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        let labels = self.read_labels()?;
        let geo_rows = read_geocode(&self.need(artifacts::GEOCODE)?)?;
        let lex = self.lexicon()?;
        let cats = lex.names().to_vec();
        let states: HashMap<&str, Option<StateCode>> = geo_rows.iter().map(|a| (a.id.as_str(), a.state)).collect();

        let scores: Vec<EmotionScores> = corpus
            .posts()
            .par_iter()
            .map(|p| sentiment::score(&normalize_for_sentiment(&p.text), &lex))
            .collect();
        rec.input("posts", corpus.len());

        let path = self.create(artifacts::EMOTION_SCORES)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        let mut header: Vec<String> = ["id", "created_at", "group", "state", "token_count"]
            .map(String::from)
            .to_vec();
        header.extend(cats.iter().cloned());
        w.write_record(&header)?;
        for (p, s) in corpus.iter().zip(&scores) {
            let label = labels
                .get(&p.id)
                .ok_or_else(|| Error::InvalidInput(format!("post {} has no label", p.id)))?;
            let state = states
                .get(p.id.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("post {} has no geocode row", p.id)))?;
            let mut row = vec![
                p.id.clone(),
                format_timestamp(&p.created_at),
                label.to_string(),
                state.map(|s| s.to_string()).unwrap_or_default(),
                s.token_count.to_string(),
            ];
            row.extend(s.percentages.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        rec.output("scored", scores.len());
        rec.check_eq("scored = posts", scores.len(), corpus.len());

        let lay: Vec<(&crate::corpus::Post, &EmotionScores)> = corpus
            .iter()
            .zip(&scores)
            .filter(|(p, _)| labels[&p.id] == GroupLabel::Laypeople)
            .collect();
        let monthly = sentiment::aggregate_scores(&lay, GroupBy::Month, None, &cats)?;
        monthly.write_csv(&self.create(artifacts::EMOTION_MONTHLY)?)?;
        rec.output("laypeople_months", monthly.rows.len());
        rec.check_eq(
            "monthly n sums to laypeople posts",
            monthly.rows.iter().map(|r| r.n).sum(),
            lay.len(),
        );

        let lay_assign: Vec<StateAssignment> = lay
            .iter()
            .map(|(p, _)| StateAssignment {
                id: p.id.clone(),
                state: states[p.id.as_str()],
                matched_on: None,
            })
            .collect();
        let lay_scores: Vec<(String, EmotionScores)> = lay.iter().map(|(p, s)| (p.id.clone(), (*s).clone())).collect();
        let heat = geo::state_table(&lay_assign, &lay_scores, &cats)?;
        heat.write_csv(&self.create(artifacts::STATE_HEATMAP)?)?;
        let located = lay_assign.iter().filter(|a| a.state.is_some()).count();
        rec.output("laypeople_states", heat.rows.len());
        rec.check_eq(
            "heatmap n sums to located laypeople posts",
            heat.rows.iter().map(|r| r.n).sum(),
            located,
        );
        Ok(rec)
    }

    fn relevant_docs(
        &self,
        corpus: &Corpus,
        labels: &HashMap<String, GroupLabel>,
    ) -> Result<Vec<(String, GroupLabel, Vec<String>)>> {
        let tokens = self.topic_tokens()?;
        Ok(corpus
            .posts()
            .par_iter()
            .filter(|p| labels[&p.id] != GroupLabel::Irrelevant)
            .map(|p| (p.id.clone(), labels[&p.id], tokens(&p.text)))
            .collect())
    }

    fn cmd_topics_fit(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        let labels = self.read_labels()?;
        let docs = self.relevant_docs(&corpus, &labels)?;
        let cfg = self.cfg.topics.btm(self.cfg.seed);
        let token_lists: Vec<&Vec<String>> = docs.iter().map(|(_, _, t)| t).collect();
        let vocab = btm::Vocab::build(token_lists.iter().copied());
        let biterms: Vec<btm::Biterm> = token_lists
            .iter()
            .flat_map(|t| btm::extract_biterms(&vocab.encode(t), cfg.window))
            .collect();
        rec.input("relevant_posts", docs.len());
        rec.output("vocabulary", vocab.len());
        rec.output("biterms", biterms.len());
        let b = biterms.len();
        let model = btm::fit(&biterms, vocab, &cfg, None)?;
        btm::save_model(&model, &self.create(artifacts::TOPIC_MODEL)?)?;
        btm::write_top_words(&model, self.cfg.topics.top_words, &self.create(artifacts::TOP_WORDS)?)?;
        rec.output("topics", model.k);
        rec.check_eq(
            "sum of topic biterm counts = biterms",
            model.total_biterms() as usize,
            b,
        );
        for (z, row) in model.n_wz.iter().enumerate() {
            let words: u64 = row.iter().sum();
            rec.check_eq(
                &format!("topic {z} word counts = 2 x biterms"),
                words as usize,
                2 * model.n_z[z] as usize,
            );
        }
        Ok(rec)
    }

    fn merge_map(&self, path: &Option<PathBuf>, k: usize) -> Result<TopicMergeMap> {
        match path {
            Some(p) => TopicMergeMap::load(p, k),
            None => Ok(TopicMergeMap::identity(k)),
        }
    }

    fn cmd_topics_infer(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        let labels = self.read_labels()?;
        let model = btm::load_model(&self.need(artifacts::TOPIC_MODEL)?)?;
        let merge = self.merge_map(&self.cfg.topics.merge_map, model.k)?;
        let docs = self.relevant_docs(&corpus, &labels)?;
        let assigned = infer_all(&model, &docs)?;
        write_assignments(&self.create(artifacts::TOPIC_ASSIGNMENTS)?, &assigned, &merge)?;

        let rows: Vec<(String, &TopicAssignment)> = assigned.iter().map(|(g, a)| (g.to_string(), a)).collect();
        let hist = btm::apply_merge(&rows, &merge)?;
        hist.write_csv(&self.create(artifacts::THEME_DISTRIBUTION)?)?;

        let no_biterms = assigned.iter().filter(|(_, a)| a.no_biterms).count();
        rec.input("relevant_posts", docs.len());
        rec.output("assigned", assigned.len());
        rec.output("no_biterm_posts", no_biterms);
        rec.output("themes", merge.themes().len());
        rec.check_eq("one topic assignment per relevant post", assigned.len(), docs.len());
        for g in [GroupLabel::Promotional, GroupLabel::Laypeople] {
            let n = docs.iter().filter(|(_, l, _)| *l == g).count();
            rec.check_eq(
                &format!("{g} theme counts = {g} posts"),
                hist.group_total(g.as_str()),
                n,
            );
        }
        Ok(rec)
    }

    fn cmd_trend(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let (cats, rows) = read_scores(&self.need(artifacts::EMOTION_SCORES)?)?;
        let lay: Vec<&ScoreRow> = rows.iter().filter(|r| r.group == GroupLabel::Laypeople).collect();
        rec.input("laypeople_posts", lay.len());
        let gaps = self.cfg.trend.gap_policy;

        let mut tests = Vec::new();
        for (c, name) in cats.iter().enumerate() {
            let pts: Vec<(DateTime<Utc>, f64)> = lay.iter().map(|r| (r.created_at, r.percentages[c])).collect();
            let series = stats::monthly_aggregate(&pts, gaps);
            tests.push((name.clone(), stats::mann_kendall(&series.values())?));
        }
        stats::write_trend_report(&self.create(artifacts::EMOTION_TRENDS)?, &tests)?;
        rec.output("emotion_series", tests.len());

        let states: Vec<StateCode> = if self.cfg.trend.states.is_empty() {
            let mut counts: BTreeMap<StateCode, usize> = BTreeMap::new();
            for r in &lay {
                if let Some(s) = r.state {
                    *counts.entry(s).or_default() += 1;
                }
            }
            let mut ranked: Vec<(StateCode, usize)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked
                .into_iter()
                .take(self.cfg.trend.top_states)
                .map(|(s, _)| s)
                .collect()
        } else {
            self.cfg
                .trend
                .states
                .iter()
                .filter_map(|s| StateCode::parse(s))
                .collect()
        };

        let mut state_tests = Vec::new();
        let mut monthly_rows = Vec::new();
        for st in &states {
            let in_state: Vec<&&ScoreRow> = lay.iter().filter(|r| r.state == Some(*st)).collect();
            let table = EmotionTable::from_groups(
                "month",
                &cats,
                in_state
                    .iter()
                    .map(|r| (YearMonth::of(&r.created_at).to_string(), &r.as_scores)),
            )?;
            for row in &table.rows {
                monthly_rows.push((st.to_string(), row.clone()));
            }
            for (c, name) in cats.iter().enumerate() {
                let pts: Vec<(DateTime<Utc>, f64)> =
                    in_state.iter().map(|r| (r.created_at, r.percentages[c])).collect();
                let series = stats::monthly_aggregate(&pts, gaps);
                state_tests.push((format!("{st}:{name}"), stats::mann_kendall(&series.values())?));
            }
        }
        stats::write_trend_report(&self.create(artifacts::STATE_TRENDS)?, &state_tests)?;

        let path = self.create(artifacts::STATE_EMOTION_MONTHLY)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        let mut header = vec!["state".to_string(), "month".to_string(), "n".to_string()];
        header.extend(cats.iter().cloned());
        w.write_record(&header)?;
        for (st, row) in &monthly_rows {
            let mut r = vec![st.clone(), row.group.clone(), row.n.to_string()];
            r.extend(row.means.iter().map(|m| m.to_string()));
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        rec.output("state_series", state_tests.len());
        Ok(rec)
    }

    fn cmd_correlate(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        let model = btm::load_model(&self.need(artifacts::TOPIC_MODEL)?)?;
        let merge = self.merge_map(&self.cfg.topics.merge_map, model.k)?;
        let assigned = read_assignments(&self.need(artifacts::TOPIC_ASSIGNMENTS)?)?;
        let posts: HashMap<&str, &crate::corpus::Post> = corpus.iter().map(|p| (p.id.as_str(), p)).collect();

        let mut kept = Vec::new();
        for a in &assigned {
            let p = posts
                .get(a.id.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("assigned post {} missing from corpus", a.id)))?;
            if self.cfg.correlate.source.is_none_or(|s| s == p.source) {
                kept.push((a, p.created_at));
            }
        }
        rec.input("assigned_posts", assigned.len());
        rec.input("posts_in_source", kept.len());

        let range = kept
            .iter()
            .map(|(_, t)| YearMonth::of(t))
            .fold(None, |acc: Option<(YearMonth, YearMonth)>, m| match acc {
                None => Some((m, m)),
                Some((lo, hi)) => Some((lo.min(m), hi.max(m))),
            });

        let vol_path = self.create(artifacts::TOPIC_VOLUME)?;
        let mut vw = csv::Writer::from_path(&vol_path).map_err(|e| csv_io(&vol_path, e))?;
        vw.write_record(["month", "theme", "promotional", "laypeople"])?;
        let mut results = Vec::new();
        let mut volume_total = 0;
        for theme in merge.themes() {
            let dates = |g: GroupLabel| -> Vec<DateTime<Utc>> {
                kept.iter()
                    .filter(|(a, _)| a.group == g && a.theme == theme)
                    .map(|(_, t)| *t)
                    .collect()
            };
            let Some(range) = range else { break };
            let promo = stats::monthly_volume(&dates(GroupLabel::Promotional), Some(range));
            let lay = stats::monthly_volume(&dates(GroupLabel::Laypeople), Some(range));
            for (p, l) in promo.points.iter().zip(&lay.points) {
                vw.write_record([p.month.to_string(), theme.to_string(), p.n.to_string(), l.n.to_string()])?;
                volume_total += p.n + l.n;
            }
            match stats::pearson(&promo.all_values(), &lay.all_values()) {
                Ok(r) => results.push((theme.to_string(), r)),
                Err(e @ (Error::DegenerateSeries(_) | Error::SeriesTooShort { .. })) => {
                    rec.note(format!("theme {theme:?} skipped: {e}"));
                }
                Err(e) => return Err(e),
            }
        }
        vw.flush().map_err(|e| Error::io(&vol_path, e))?;
        stats::write_correlation_report(&self.create(artifacts::CORRELATION)?, &results)?;
        rec.output("themes_correlated", results.len());
        rec.check_eq("volume series cover every post in source", volume_total, kept.len());
        Ok(rec)
    }

    fn cmd_pa_subset(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let pa = &self.cfg.physical_activity;
        let kw = pa
            .keywords
            .as_deref()
            .ok_or_else(|| Error::Config("physical_activity.keywords is not set".into()))?;
        let matcher = KeywordMatcher::load(kw)?;
        let corpus = self.read_corpus(artifacts::CORPUS)?;
        let labels = self.read_labels()?;
        let lay = corpus.filter("laypeople", |p| labels[&p.id] == GroupLabel::Laypeople);
        let subset = crate::corpus::filter_by_keywords(&lay, &matcher);
        write_corpus(&subset, &self.create(artifacts::PA_CORPUS)?)?;
        rec.input("laypeople_posts", lay.len());
        rec.output("pa_posts", subset.len());
        rec.check_le("subset within laypeople", subset.len(), lay.len());

        let range = corpus
            .posts()
            .first()
            .zip(corpus.posts().last())
            .map(|(a, b)| (YearMonth::of(&a.created_at), YearMonth::of(&b.created_at)));
        let dates = |c: &Corpus| c.iter().map(|p| p.created_at).collect::<Vec<_>>();
        let lay_vol = stats::monthly_volume(&dates(&lay), range);
        let pa_vol = stats::monthly_volume(&dates(&subset), range);
        let path = self.create(artifacts::PA_VOLUME)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        w.write_record(["month", "laypeople", "physical_activity"])?;
        for (l, p) in lay_vol.points.iter().zip(&pa_vol.points) {
            w.write_record([l.month.to_string(), l.n.to_string(), p.n.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let tokens = self.topic_tokens()?;
        let docs: Vec<(String, GroupLabel, Vec<String>)> = subset
            .posts()
            .par_iter()
            .map(|p| (p.id.clone(), GroupLabel::Laypeople, tokens(&p.text)))
            .collect();
        let cfg = pa.topics.btm(self.cfg.seed);
        let token_lists: Vec<&Vec<String>> = docs.iter().map(|(_, _, t)| t).collect();
        let vocab = btm::Vocab::build(token_lists.iter().copied());
        let biterms: Vec<btm::Biterm> = token_lists
            .iter()
            .flat_map(|t| btm::extract_biterms(&vocab.encode(t), cfg.window))
            .collect();

        let themes_path = self.create(artifacts::PA_THEMES)?;
        let top_path = self.create(artifacts::PA_TOP_WORDS)?;
        let assign_path = self.create(artifacts::PA_ASSIGNMENTS)?;
        if biterms.is_empty() {
            rec.note(format!(
                "physical activity subset has {} posts and no biterms; report is empty",
                subset.len()
            ));
            btm::ThemeHistogram { rows: Vec::new() }.write_csv(&themes_path)?;
            write_csv_header(&top_path, &["topic", "rank", "word", "weight"])?;
            write_csv_header(&assign_path, ASSIGNMENT_HEADER)?;
            let model_path = self.artifact(artifacts::PA_MODEL);
            if model_path.exists() {
                fs::remove_file(&model_path).map_err(|e| Error::io(&model_path, e))?;
            }
            rec.output("pa_themed_posts", 0);
            return Ok(rec);
        }
        let model = btm::fit(&biterms, vocab, &cfg, None)?;
        btm::save_model(&model, &self.create(artifacts::PA_MODEL)?)?;
        btm::write_top_words(&model, pa.topics.top_words, &top_path)?;
        let merge = self.merge_map(&pa.topics.merge_map, model.k)?;
        let assigned = infer_all(&model, &docs)?;
        write_assignments(&assign_path, &assigned, &merge)?;
        let rows: Vec<(String, &TopicAssignment)> = assigned.iter().map(|(g, a)| (g.to_string(), a)).collect();
        let hist = btm::apply_merge(&rows, &merge)?;
        hist.write_csv(&themes_path)?;
        rec.output("pa_themed_posts", hist.group_total(GroupLabel::Laypeople.as_str()));
        rec.check_eq(
            "theme counts = subset posts",
            hist.group_total(GroupLabel::Laypeople.as_str()),
            subset.len(),
        );
        Ok(rec)
    }

    fn cmd_report(&self) -> Result<StageRecord> {
        let mut rec = StageRecord::default();
        let labels = self.read_labels()?;
        let cats = &self.cfg.sentiment.categories;
        let with_cats =
            |lead: &[&str]| -> Vec<String> { lead.iter().map(|s| s.to_string()).chain(cats.iter().cloned()).collect() };
        let fixed = |cols: &[&str]| -> Vec<String> { cols.iter().map(|s| s.to_string()).collect() };
        let tables: Vec<(&str, &str, Vec<String>)> = vec![
            (
                "emotion_monthly",
                artifacts::EMOTION_MONTHLY,
                with_cats(&["group", "n"]),
            ),
            ("emotion_trend_tests", artifacts::EMOTION_TRENDS, fixed(TREND_HEADER)),
            ("state_heatmap", artifacts::STATE_HEATMAP, with_cats(&["state", "n"])),
            (
                "state_emotion_monthly",
                artifacts::STATE_EMOTION_MONTHLY,
                with_cats(&["state", "month", "n"]),
            ),
            (
                "state_emotion_trend_tests",
                artifacts::STATE_TRENDS,
                fixed(TREND_HEADER),
            ),
            (
                "topic_top_words",
                artifacts::TOP_WORDS,
                fixed(&["topic", "rank", "word", "weight"]),
            ),
            (
                "theme_distribution",
                artifacts::THEME_DISTRIBUTION,
                fixed(&["group", "theme", "count", "proportion"]),
            ),
            ("topic_correlation", artifacts::CORRELATION, fixed(CORRELATION_HEADER)),
            (
                "topic_volume_monthly",
                artifacts::TOPIC_VOLUME,
                fixed(&["month", "theme", "promotional", "laypeople"]),
            ),
            (
                "pa_themes",
                artifacts::PA_THEMES,
                fixed(&["group", "theme", "count", "proportion"]),
            ),
            (
                "pa_top_words",
                artifacts::PA_TOP_WORDS,
                fixed(&["topic", "rank", "word", "weight"]),
            ),
            (
                "pa_volume_monthly",
                artifacts::PA_VOLUME,
                fixed(&["month", "laypeople", "physical_activity"]),
            ),
            (
                "keyword_suggestions",
                artifacts::KEYWORD_SUGGESTIONS,
                fixed(&["term", "cooccurrence_count", "lift"]),
            ),
        ];
        let mut index = Vec::new();
        for (table, name, expected) in &tables {
            let src = self.need(name)?;
            let mut rdr = csv::Reader::from_path(&src).map_err(|e| csv_io(&src, e))?;
            let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
            if &header != expected {
                return Err(Error::InvalidInput(format!(
                    "{}: columns {:?}, expected {:?}",
                    src.display(),
                    header,
                    expected
                )));
            }
            let rows = rdr.records().count();
            let dest = self.create(&format!("{}/{table}.csv", artifacts::REPORT_DIR))?;
            fs::copy(&src, &dest).map_err(|e| Error::io(&dest, e))?;
            index.push(ReportTable {
                table: table.to_string(),
                file: format!("{table}.csv"),
                rows,
                columns: header,
            });
        }

        let path = self.create(artifacts::GROUP_COUNTS)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        w.write_record(["group", "n"])?;
        let mut total = 0;
        for g in GroupLabel::ALL {
            let n = labels.values().filter(|l| **l == g).count();
            total += n;
            w.write_record([g.to_string(), n.to_string()])?;
            rec.output(g.as_str(), n);
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        index.push(ReportTable {
            table: "group_counts".into(),
            file: "group_counts.csv".into(),
            rows: GroupLabel::ALL.len(),
            columns: vec!["group".into(), "n".into()],
        });
        rec.check_eq("group counts = labeled posts", total, labels.len());

        let path = self.create(artifacts::REPORT_INDEX)?;
        fs::write(&path, serde_json::to_string_pretty(&index)? + "\n").map_err(|e| Error::io(&path, e))?;
        rec.output("tables", index.len());
        Ok(rec)
    }
}

pub const TREND_HEADER: &[&str] = &["series_name", "n", "S", "var_S", "Z", "p_value", "verdict"];
pub const CORRELATION_HEADER: &[&str] = &["topic", "r", "p_value", "n"];
const ASSIGNMENT_HEADER: &[&str] = &["id", "group", "argmax_topic", "theme", "probability", "no_biterms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub table: String,
    pub file: String,
    pub rows: usize,
    pub columns: Vec<String>,
}

fn write_csv_header(path: &Path, header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn infer_all(
    model: &BtmModel,
    docs: &[(String, GroupLabel, Vec<String>)],
) -> Result<Vec<(GroupLabel, TopicAssignment)>> {
    let opts = InferOptions {
        window: model.window,
        allow_empty: true,
    };
    docs.par_iter()
        .map(|(id, g, toks)| Ok((*g, btm::infer_topics(model, id, toks, opts)?)))
        .collect()
}

fn write_assignments(path: &Path, rows: &[(GroupLabel, TopicAssignment)], merge: &TopicMergeMap) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(ASSIGNMENT_HEADER)?;
    for (g, a) in rows {
        let theme = merge
            .label(a.argmax_topic)
            .ok_or_else(|| Error::InvalidInput(format!("topic {} is not in the merge map", a.argmax_topic)))?;
        w.write_record([
            a.id.clone(),
            g.to_string(),
            a.argmax_topic.to_string(),
            theme.to_string(),
            a.distribution[a.argmax_topic].to_string(),
            a.no_biterms.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Deserialize)]
struct AssignmentRow {
    id: String,
    group: GroupLabel,
    #[allow(dead_code)]
    argmax_topic: usize,
    theme: String,
}

fn read_assignments(path: &Path) -> Result<Vec<AssignmentRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse(path, i + 2, e.to_string())))
        .collect()
}

fn write_geocode(path: &Path, rows: &[StateAssignment]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["id", "state", "matched_on"])?;
    for a in rows {
        w.write_record([
            a.id.as_str(),
            a.state.map(StateCode::as_str).unwrap_or(""),
            a.matched_on.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_geocode(path: &Path) -> Result<Vec<StateAssignment>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or_default();
        let state = match field(1) {
            "" => None,
            s => Some(StateCode::parse(s).ok_or_else(|| Error::parse(path, line, format!("unknown state {s:?}")))?),
        };
        out.push(StateAssignment {
            id: field(0).to_string(),
            state,
            matched_on: Some(field(2)).filter(|m| !m.is_empty()).map(String::from),
        });
    }
    Ok(out)
}

struct ScoreRow {
    created_at: DateTime<Utc>,
    group: GroupLabel,
    state: Option<StateCode>,
    percentages: Vec<f64>,
    as_scores: EmotionScores,
}

fn read_scores(path: &Path) -> Result<(Vec<String>, Vec<ScoreRow>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.len() < 6 {
        return Err(Error::parse(path, 1, "emotion score file has no category columns"));
    }
    let cats = header[5..].to_vec();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::parse(path, line, format!("bad {what}"));
        let created_at = parse_timestamp(&rec[1]).map_err(|_| bad("created_at"))?;
        let group: GroupLabel = rec[2].parse().map_err(|_| bad("group"))?;
        let state = match &rec[3] {
            "" => None,
            s => Some(StateCode::parse(s).ok_or_else(|| bad("state"))?),
        };
        let token_count: usize = rec[4].parse().map_err(|_| bad("token_count"))?;
        let percentages: Vec<f64> = (5..rec.len())
            .map(|k| rec[k].parse::<f64>().map_err(|_| bad("percentage")))
            .collect::<Result<_>>()?;
        out.push(ScoreRow {
            created_at,
            group,
            state,
            as_scores: EmotionScores {
                token_count,
                hits: Vec::new(),
                percentages: percentages.clone(),
            },
            percentages,
        });
    }
    Ok((cats, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
[input]
paths = ["posts.jsonl"]
[classify]
annotations = "ann.tsv"
"#;

    fn scratch() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("posts.jsonl"), "").unwrap();
        fs::write(dir.path().join("ann.tsv"), "").unwrap();
        dir
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let dir = scratch();
        let p = Pipeline::from_toml(MINIMAL, Path::new("c.toml"), dir.path(), None, None).unwrap();
        let c = p.config();
        assert_eq!(c.seed, 7);
        assert_eq!(c.topics.k, 100);
        assert_eq!(c.physical_activity.topics.k, 2);
        assert_eq!(c.classify.dim, 1 << 18);
        assert!(c.input.paths[0].is_absolute() || c.input.paths[0].starts_with(dir.path()));
        assert_eq!(p.out_dir(), dir.path().join("out"));
    }

    #[test]
    fn seed_and_out_overrides() {
        let dir = scratch();
        let out = dir.path().join("elsewhere");
        let p = Pipeline::from_toml(MINIMAL, Path::new("c.toml"), dir.path(), Some(99), Some(out.clone())).unwrap();
        assert_eq!(p.config().seed, 99);
        assert_eq!(p.out_dir(), out);
    }

    #[test]
    fn unknown_keys_and_missing_files_are_validation_errors() {
        let dir = scratch();
        let typo = format!("{MINIMAL}\n[topics]\nkk = 3\n");
        let e = Pipeline::from_toml(&typo, Path::new("c.toml"), dir.path(), None, None).unwrap_err();
        assert!(e.is_validation(), "{e}");
        let missing = MINIMAL.replace("ann.tsv", "nope.tsv");
        let e = Pipeline::from_toml(&missing, Path::new("c.toml"), dir.path(), None, None).unwrap_err();
        assert!(e.is_validation() && e.to_string().contains("nope.tsv"), "{e}");
    }

    #[test]
    fn bad_hyperparameters_rejected() {
        let dir = scratch();
        for extra in [
            "[topics]\nk = 0\n",
            "[classify]\ndim = 1000\n",
            "[trend]\nstates = [\"ZZ\"]\n",
        ] {
            let text = if extra.starts_with("[classify]") {
                MINIMAL.replace(
                    "annotations = \"ann.tsv\"",
                    &format!("annotations = \"ann.tsv\"\n{}", &extra[11..]),
                )
            } else {
                format!("{MINIMAL}{extra}")
            };
            let e = Pipeline::from_toml(&text, Path::new("c.toml"), dir.path(), None, None).unwrap_err();
            assert!(e.is_validation(), "{extra}: {e}");
        }
    }

    #[test]
    fn missing_upstream_artifact_is_named() {
        let dir = scratch();
        let p = Pipeline::from_toml(MINIMAL, Path::new("c.toml"), dir.path(), None, None).unwrap();
        let e = p.run(Command::Classify).unwrap_err();
        assert!(matches!(e, Error::MissingArtifact(_)));
        assert!(e.to_string().contains("corpus.jsonl"), "{e}");
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
    }
}
