//! Two-stage linear text classification.
//!
//! Texts become [`FeatureVector`]s of hashed unigram and bigram counts,
//! optionally extended with an averaged word embedding. A logistic
//! regression model per stage first separates relevant from irrelevant
//! posts, then promotional posts from laypeople's discussions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, GroupLabel};
use crate::textprep::{normalize_for_classification, TokenStream};
use crate::{Error, Result};

pub const DEFAULT_DIM: usize = 1 << 18;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
const MODEL_FORMAT: &str = "discourse-miner/linear";
const MODEL_VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// Bucket of a feature string in a space of `dim` buckets.
pub fn feature_index(feature: &str, dim: usize) -> u32 {
    (fnv1a64(feature.as_bytes()) % dim as u64) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub dim: usize,
    pub bigrams: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            dim: DEFAULT_DIM,
            bigrams: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dim.is_power_of_two() || self.dim > u32::MAX as usize {
            return Err(Error::Config(format!(
                "feature dim {} must be a power of two",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Pretrained word vectors, one `word v1 .. vE` line each.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let v: Vec<f64> = fields
                .map(|f| f.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::parse(origin, i + 1, "non-numeric vector component"))?;
            match dim {
                None if v.is_empty() => return Err(Error::parse(origin, i + 1, "empty vector")),
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::parse(
                        origin,
                        i + 1,
                        format!("inconsistent dimension: expected {d}, got {}", v.len()),
                    ))
                }
                Some(_) => {}
            }
            vectors.insert(word.to_lowercase(), v);
        }
        let dim = dim.ok_or_else(|| Error::parse(origin, 0, "no vectors"))?;
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub dense: Option<Vec<f64>>,
}

impl FeatureVector {
    /// Builds a vector from unsorted (index, value) pairs, summing repeats.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>, dense: Option<Vec<f64>>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc.into_iter().unzip();
        FeatureVector { indices, values, dense }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    fn check(&self, dim: usize, embed_dim: usize) -> Result<()> {
        if let Some(&last) = self.indices.last() {
            if last as usize >= dim {
                return Err(Error::DimensionMismatch(format!(
                    "feature index {last} outside model dim {dim}"
                )));
            }
        }
        let e = self.dense.as_ref().map_or(0, Vec::len);
        if e != embed_dim {
            return Err(Error::DimensionMismatch(format!(
                "dense block has {e} values, model expects {embed_dim}"
            )));
        }
        Ok(())
    }
}

pub fn featurize(tokens: &TokenStream, config: &FeatureConfig, embeddings: Option<&EmbeddingTable>) -> FeatureVector {
    let toks = &tokens.tokens;
    let unigrams = toks.iter().map(|t| (feature_index(t, config.dim), 1.0));
    let bigrams = toks
        .windows(2)
        .filter(|_| config.bigrams)
        .map(|w| (feature_index(&format!("{} {}", w[0], w[1]), config.dim), 1.0));
    let dense = embeddings.map(|table| {
        let mut sum = vec![0.0; table.dim()];
        let mut found = 0usize;
        for v in toks.iter().filter_map(|t| table.get(t)) {
            found += 1;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        if found > 0 {
            sum.iter_mut().for_each(|s| *s /= found as f64);
        }
        sum
    });
    FeatureVector::from_pairs(unigrams.chain(bigrams), dense)
}

/// Feature settings plus an optional embedding table.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub config: FeatureConfig,
    pub embeddings: Option<EmbeddingTable>,
}

impl Featurizer {
    pub fn new(config: FeatureConfig, embeddings: Option<EmbeddingTable>) -> Result<Self> {
        config.validate()?;
        Ok(Featurizer { config, embeddings })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn embed_dim(&self) -> usize {
        self.embeddings.as_ref().map_or(0, EmbeddingTable::dim)
    }

    pub fn text(&self, raw: &str) -> FeatureVector {
        featurize(
            &normalize_for_classification(raw),
            &self.config,
            self.embeddings.as_ref(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Positive class: relevant.
    Relevance,
    /// Positive class: promotional.
    Audience,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 0.1,
            batch_size: 16,
            l2: 1e-4,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(
                "learning_rate must be positive and l2 non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub dim: usize,
    pub embed_dim: usize,
    /// Hashed weights followed by the dense block weights.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub stage: Stage,
    pub threshold: f64,
    pub meta: TrainConfig,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl LinearModel {
    pub fn zeros(dim: usize, embed_dim: usize, stage: Stage) -> Self {
        LinearModel {
            dim,
            embed_dim,
            weights: vec![0.0; dim + embed_dim],
            bias: 0.0,
            stage,
            threshold: DEFAULT_THRESHOLD,
            meta: TrainConfig::default(),
        }
    }

    fn margin_unchecked(&self, fv: &FeatureVector) -> f64 {
        let mut z = self.bias;
        for (&i, &v) in fv.indices.iter().zip(&fv.values) {
            z += self.weights[i as usize] * v;
        }
        if let Some(d) = &fv.dense {
            for (w, x) in self.weights[self.dim..].iter().zip(d) {
                z += w * x;
            }
        }
        z
    }

    pub fn margin(&self, fv: &FeatureVector) -> Result<f64> {
        fv.check(self.dim, self.embed_dim)?;
        Ok(self.margin_unchecked(fv))
    }

    /// Mean log-loss plus `l2/2 * |w|^2` (bias unpenalized).
    pub fn loss(&self, data: &[(FeatureVector, bool)], l2: f64) -> Result<f64> {
        let mut total = 0.0;
        for (fv, y) in data {
            let z = self.margin(fv)?;
            total += if *y { softplus(-z) } else { softplus(z) };
        }
        let reg = 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        Ok(total / data.len().max(1) as f64 + reg)
    }

    /// Gradient of [`LinearModel::loss`] with respect to weights and bias.
    pub fn gradient(&self, data: &[(FeatureVector, bool)], l2: f64) -> Result<(Vec<f64>, f64)> {
        let n = data.len().max(1) as f64;
        let mut g: Vec<f64> = self.weights.iter().map(|w| l2 * w).collect();
        let mut gb = 0.0;
        for (fv, y) in data {
            let r = (sigmoid(self.margin(fv)?) - if *y { 1.0 } else { 0.0 }) / n;
            gb += r;
            for (&i, &v) in fv.indices.iter().zip(&fv.values) {
                g[i as usize] += r * v;
            }
            if let Some(d) = &fv.dense {
                for (gi, x) in g[self.dim..].iter_mut().zip(d) {
                    *gi += r * x;
                }
            }
        }
        Ok((g, gb))
    }

    pub fn l2_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Anything that scores feature vectors for one stage.
pub trait BinaryClassifier: Sync {
    fn probability(&self, fv: &FeatureVector) -> Result<f64>;

    fn threshold(&self) -> f64 {
        DEFAULT_THRESHOLD
    }

    fn predict_label(&self, fv: &FeatureVector) -> Result<bool> {
        Ok(self.probability(fv)? >= self.threshold())
    }
}

impl BinaryClassifier for LinearModel {
    fn probability(&self, fv: &FeatureVector) -> Result<f64> {
        predict(self, fv)
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

pub fn predict(model: &LinearModel, fv: &FeatureVector) -> Result<f64> {
    Ok(sigmoid(model.margin(fv)?))
}

/// Logistic regression by mini-batch SGD with L2 weight decay.
pub fn train(
    data: &[(FeatureVector, bool)],
    dim: usize,
    embed_dim: usize,
    stage: Stage,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 training examples, got {}",
            data.len()
        )));
    }
    let positives = data.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateLabels);
    }
    for (fv, _) in data {
        fv.check(dim, embed_dim)?;
    }

    // Weights are stored as scale * v so the decay step is O(1).
    let mut v = vec![0.0f64; dim + embed_dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0f64;
    let lr = cfg.learning_rate;
    let decay = 1.0 - lr * cfg.l2;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut residuals = Vec::with_capacity(cfg.batch_size);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            residuals.clear();
            for &k in batch {
                let (fv, y) = &data[k];
                let mut z = bias;
                for (&i, &x) in fv.indices.iter().zip(&fv.values) {
                    z += scale * v[i as usize] * x;
                }
                if let Some(d) = &fv.dense {
                    for (w, x) in v[dim..].iter().zip(d) {
                        z += scale * w * x;
                    }
                }
                residuals.push(sigmoid(z) - if *y { 1.0 } else { 0.0 });
            }
            let step = lr / batch.len() as f64;
            scale *= decay;
            for (&k, &r) in batch.iter().zip(&residuals) {
                let (fv, _) = &data[k];
                bias -= step * r;
                for (&i, &x) in fv.indices.iter().zip(&fv.values) {
                    v[i as usize] -= step * r * x / scale;
                }
                if let Some(d) = &fv.dense {
                    for (w, x) in v[dim..].iter_mut().zip(d) {
                        *w -= step * r * x / scale;
                    }
                }
            }
            if scale < 1e-6 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
    }
    let weights: Vec<f64> = v.iter().map(|w| w * scale).collect();
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::InvalidInput("training diverged; lower the learning rate".into()));
    }
    Ok(LinearModel {
        dim,
        embed_dim,
        weights,
        bias,
        stage,
        threshold: DEFAULT_THRESHOLD,
        meta: *cfg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub threshold: f64,
    pub split_seed: Option<u64>,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f_score,
            tp,
            fp,
            fn_,
            tn,
            threshold: DEFAULT_THRESHOLD,
            split_seed: None,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn evaluate(model: &dyn BinaryClassifier, test: &[(FeatureVector, bool)]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (fv, y) in test {
        match (model.predict_label(fv)?, *y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let mut report = EvalReport::from_counts(tp, fp, fn_, tn);
    report.threshold = model.threshold();
    Ok(report)
}

/// Labels every post: stage one decides relevance, stage two runs only on
/// relevant posts and separates promotional from laypeople.
pub fn classify_two_stage(
    corpus: &Corpus,
    featurizer: &Featurizer,
    stage1: &dyn BinaryClassifier,
    stage2: &dyn BinaryClassifier,
) -> Result<BTreeMap<String, GroupLabel>> {
    let labels: Vec<(String, GroupLabel)> = corpus
        .posts()
        .par_iter()
        .map(|p| {
            let fv = featurizer.text(&p.text);
            let label = if !stage1.predict_label(&fv)? {
                GroupLabel::Irrelevant
            } else if stage2.predict_label(&fv)? {
                GroupLabel::Promotional
            } else {
                GroupLabel::Laypeople
            };
            Ok((p.id.clone(), label))
        })
        .collect::<Result<_>>()?;
    Ok(labels.into_iter().collect())
}

/// Seeded shuffle of `0..n` split into train and test index sets.
pub fn split_train_test(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut cut = (n as f64 * train_fraction).round() as usize;
    if n >= 2 {
        cut = cut.clamp(1, n - 1);
    }
    let test = idx.split_off(cut.min(n));
    (idx, test)
}

/// Reads `id<TAB>label` lines.
pub fn load_annotations(path: &Path) -> Result<Vec<(String, GroupLabel)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected id<TAB>label"))?;
        let label: GroupLabel = label
            .parse()
            .map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))?;
        let id = id.trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::parse(path, i + 1, format!("duplicate id {id}")));
        }
        out.push((id, label));
    }
    Ok(out)
}

/// Stage one and stage two training sets derived from joint annotations.
pub struct StageData {
    pub relevance: Vec<(FeatureVector, bool)>,
    pub audience: Vec<(FeatureVector, bool)>,
}

pub fn stage_datasets(
    annotations: &[(String, GroupLabel)],
    corpus: &Corpus,
    featurizer: &Featurizer,
) -> Result<StageData> {
    let texts: HashMap<&str, &str> = corpus.iter().map(|p| (p.id.as_str(), p.text.as_str())).collect();
    let missing: Vec<&str> = annotations
        .iter()
        .filter(|(id, _)| !texts.contains_key(id.as_str()))
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} annotated ids not in corpus: {}",
            missing.len(),
            missing.iter().take(10).copied().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut relevance = Vec::with_capacity(annotations.len());
    let mut audience = Vec::new();
    for (id, label) in annotations {
        let fv = featurizer.text(texts[id.as_str()]);
        match label {
            GroupLabel::Irrelevant => relevance.push((fv, false)),
            GroupLabel::Promotional => {
                relevance.push((fv.clone(), true));
                audience.push((fv, true));
            }
            GroupLabel::Laypeople => {
                relevance.push((fv.clone(), true));
                audience.push((fv, false));
            }
        }
    }
    Ok(StageData { relevance, audience })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    dim: usize,
    embed_dim: usize,
    stage: Stage,
    bias: f64,
    threshold: f64,
    training: TrainConfig,
    /// Nonzero weights as (index, value).
    weights: Vec<(usize, f64)>,
}

pub fn save_model(model: &LinearModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        dim: model.dim,
        embed_dim: model.embed_dim,
        stage: model.stage,
        bias: model.bias,
        threshold: model.threshold,
        training: model.meta,
        weights: model
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| (i, *w))
            .collect(),
    };
    let json = serde_json::to_string(&file)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<LinearModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
        return Err(Error::parse(
            path,
            0,
            format!("unsupported model format {} v{}", file.format, file.version),
        ));
    }
    let mut weights = vec![0.0; file.dim + file.embed_dim];
    for (i, w) in file.weights {
        if i >= weights.len() || !w.is_finite() {
            return Err(Error::parse(path, 0, format!("bad weight entry at index {i}")));
        }
        weights[i] = w;
    }
    Ok(LinearModel {
        dim: file.dim,
        embed_dim: file.embed_dim,
        weights,
        bias: file.bias,
        stage: file.stage,
        threshold: file.threshold,
        meta: file.training,
    })
}
