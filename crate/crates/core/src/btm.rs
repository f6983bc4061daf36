//! Biterm topic model for short texts.
//!
//! Every unordered word pair co-occurring in a document window is a
//! biterm. A collapsed Gibbs sampler assigns one topic per biterm; topic
//! word distributions and topic proportions follow from the final counts.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MODEL_FORMAT: &str = "discourse-miner/btm";
const MODEL_VERSION: u32 = 1;

/// Word to dense index bijection, ordered alphabetically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn build<'a, D, T>(docs: D) -> Self
    where
        D: IntoIterator<Item = &'a T>,
        T: AsRef<[String]> + 'a + ?Sized,
    {
        let mut set = std::collections::BTreeSet::new();
        for d in docs {
            for w in d.as_ref() {
                set.insert(w.as_str());
            }
        }
        Self::from_words(set.into_iter().map(str::to_string).collect())
    }

    fn from_words(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Vocab { words, index }
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, i: u32) -> &str {
        &self.words[i as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Indices of in-vocabulary tokens; unknown tokens are dropped.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.get(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Biterm {
    pub w1: u32,
    pub w2: u32,
}

impl Biterm {
    pub fn new(a: u32, b: u32) -> Self {
        Biterm {
            w1: a.min(b),
            w2: a.max(b),
        }
    }
}

/// Unordered pairs of items less than `window` positions apart, sorted
/// within each pair. `None` means the whole document.
pub fn biterm_pairs<T: Ord + Clone>(tokens: &[T], window: Option<usize>) -> Vec<(T, T)> {
    let span = window.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        let end = tokens.len().min(i.saturating_add(span));
        for j in i + 1..end {
            let (a, b) = (&tokens[i], &tokens[j]);
            out.push(if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            });
        }
    }
    out
}

pub fn extract_biterms(doc: &[u32], window: Option<usize>) -> Vec<Biterm> {
    biterm_pairs(doc, window)
        .into_iter()
        .map(|(a, b)| Biterm::new(a, b))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BtmConfig {
    pub k: usize,
    /// Defaults to 50 / k.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Biterm window in tokens; `None` uses the whole document.
    pub window: Option<usize>,
}

impl Default for BtmConfig {
    fn default() -> Self {
        BtmConfig {
            k: 100,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            seed: 42,
            window: None,
        }
    }
}

impl BtmConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("topic count k must be at least 1".into()));
        }
        if self.iterations < 1 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        let a = self.alpha();
        if !(a > 0.0 && a.is_finite() && self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if matches!(self.window, Some(w) if w < 2) {
            return Err(Error::Config("window must be at least 2".into()));
        }
        Ok(())
    }
}

/// Count tables seen by a sweep observer. `n_wz` is word-major: the count
/// for word `w` in topic `z` sits at `w * k + z`.
#[derive(Debug)]
pub struct SweepState<'a> {
    pub sweep: usize,
    pub k: usize,
    pub v: usize,
    pub n_z: &'a [u64],
    pub n_wz: &'a [u64],
    pub assignments: &'a [usize],
}

/// Collapsed Gibbs sampler over a fixed biterm multiset.
#[derive(Debug, Clone)]
pub struct Sampler {
    biterms: Vec<Biterm>,
    z: Vec<usize>,
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    n_z: Vec<u64>,
    n_wz: Vec<u64>,
}

impl Sampler {
    /// Starts from random topic assignments drawn from `rng`.
    pub fn new(biterms: Vec<Biterm>, v: usize, cfg: &BtmConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let z = biterms.iter().map(|_| rng.gen_range(0..cfg.k.max(1))).collect();
        Self::with_assignments(biterms, z, v, cfg)
    }

    pub fn with_assignments(biterms: Vec<Biterm>, z: Vec<usize>, v: usize, cfg: &BtmConfig) -> Result<Self> {
        cfg.validate()?;
        if biterms.is_empty() {
            return Err(Error::InvalidInput("empty biterm corpus".into()));
        }
        if z.len() != biterms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} assignments for {} biterms",
                z.len(),
                biterms.len()
            )));
        }
        let k = cfg.k;
        if let Some(b) = biterms.iter().find(|b| b.w2 as usize >= v) {
            return Err(Error::DimensionMismatch(format!(
                "word {} outside vocabulary of {v}",
                b.w2
            )));
        }
        if let Some(&bad) = z.iter().find(|&&t| t >= k) {
            return Err(Error::DimensionMismatch(format!("topic {bad} outside 0..{k}")));
        }
        let mut s = Sampler {
            biterms,
            z,
            k,
            v,
            alpha: cfg.alpha(),
            beta: cfg.beta,
            n_z: vec![0; k],
            n_wz: vec![0; v * k],
        };
        for i in 0..s.biterms.len() {
            let (b, t) = (s.biterms[i], s.z[i]);
            s.add(b, t);
        }
        Ok(s)
    }

    /// Sorts biterms together with their current assignments.
    pub fn canonicalize(&mut self) {
        let mut pairs: Vec<(Biterm, usize)> = self.biterms.iter().copied().zip(self.z.iter().copied()).collect();
        pairs.sort_unstable();
        (self.biterms, self.z) = pairs.into_iter().unzip();
    }

    fn add(&mut self, b: Biterm, t: usize) {
        self.n_z[t] += 1;
        self.n_wz[b.w1 as usize * self.k + t] += 1;
        self.n_wz[b.w2 as usize * self.k + t] += 1;
    }

    fn remove(&mut self, b: Biterm, t: usize) {
        self.n_z[t] -= 1;
        self.n_wz[b.w1 as usize * self.k + t] -= 1;
        self.n_wz[b.w2 as usize * self.k + t] -= 1;
    }

    /// One pass resampling every biterm in order.
    #[allow(clippy::needless_range_loop)]
    pub fn sweep(&mut self, rng: &mut ChaCha8Rng, weights: &mut Vec<f64>) {
        let vb = self.v as f64 * self.beta;
        weights.resize(self.k, 0.0);
        for i in 0..self.biterms.len() {
            let b = self.biterms[i];
            self.remove(b, self.z[i]);
            let r1 = b.w1 as usize * self.k;
            let r2 = b.w2 as usize * self.k;
            let mut total = 0.0;
            for t in 0..self.k {
                let nz = self.n_z[t] as f64;
                let denom = (2.0 * nz + vb) * (2.0 * nz + 1.0 + vb);
                let p =
                    (nz + self.alpha) * (self.n_wz[r1 + t] as f64 + self.beta) * (self.n_wz[r2 + t] as f64 + self.beta)
                        / denom;
                total += p;
                weights[t] = total;
            }
            let u = rng.gen::<f64>() * total;
            let t = weights.iter().position(|&c| u < c).unwrap_or(self.k - 1);
            self.z[i] = t;
            self.add(b, t);
        }
    }

    pub fn state(&self, sweep: usize) -> SweepState<'_> {
        SweepState {
            sweep,
            k: self.k,
            v: self.v,
            n_z: &self.n_z,
            n_wz: &self.n_wz,
            assignments: &self.z,
        }
    }

    /// Verifies that the count tables agree with the assignments.
    pub fn check_conservation(&self) -> Result<()> {
        let total: u64 = self.n_z.iter().sum();
        if total != self.biterms.len() as u64 {
            return Err(Error::Conservation(format!(
                "sum of n_z is {total}, expected {}",
                self.biterms.len()
            )));
        }
        let mut col = vec![0u64; self.k];
        for row in self.n_wz.chunks(self.k) {
            for (c, x) in col.iter_mut().zip(row) {
                *c += x;
            }
        }
        for (t, (&words, &nz)) in col.iter().zip(&self.n_z).enumerate() {
            if words != 2 * nz {
                return Err(Error::Conservation(format!(
                    "topic {t}: word counts sum to {words}, expected {}",
                    2 * nz
                )));
            }
        }
        Ok(())
    }

    pub fn n_z(&self) -> &[u64] {
        &self.n_z
    }

    pub fn n_wz(&self) -> &[u64] {
        &self.n_wz
    }

    pub fn assignments(&self) -> &[usize] {
        &self.z
    }

    /// Runs `iterations` sweeps, checking conservation after each one.
    pub fn run(
        &mut self,
        iterations: usize,
        rng: &mut ChaCha8Rng,
        mut observer: Option<&mut dyn FnMut(&SweepState<'_>)>,
    ) -> Result<()> {
        let mut weights = Vec::with_capacity(self.k);
        for it in 0..iterations {
            self.sweep(rng, &mut weights);
            self.check_conservation()?;
            if let Some(obs) = observer.as_mut() {
                obs(&self.state(it + 1));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BtmModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub window: Option<usize>,
    pub vocab: Vocab,
    pub n_z: Vec<u64>,
    /// Topic-major counts: `n_wz[z][w]`.
    pub n_wz: Vec<Vec<u64>>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

impl BtmModel {
    fn from_counts(cfg: &BtmConfig, vocab: Vocab, n_z: Vec<u64>, n_wz_word_major: &[u64]) -> Self {
        let (k, v) = (cfg.k, vocab.len());
        let (alpha, beta) = (cfg.alpha(), cfg.beta);
        let n_wz: Vec<Vec<u64>> = (0..k)
            .map(|t| (0..v).map(|w| n_wz_word_major[w * k + t]).collect())
            .collect();
        let total: u64 = n_z.iter().sum();
        let vb = v as f64 * beta;
        let phi = n_wz
            .iter()
            .zip(&n_z)
            .map(|(row, &nz)| {
                let denom = 2.0 * nz as f64 + vb;
                row.iter().map(|&c| (c as f64 + beta) / denom).collect()
            })
            .collect();
        let theta = n_z
            .iter()
            .map(|&nz| (nz as f64 + alpha) / (total as f64 + k as f64 * alpha))
            .collect();
        BtmModel {
            k,
            alpha,
            beta,
            seed: cfg.seed,
            iterations: cfg.iterations,
            window: cfg.window,
            vocab,
            n_z,
            n_wz,
            phi,
            theta,
        }
    }

    pub fn v(&self) -> usize {
        self.vocab.len()
    }

    pub fn total_biterms(&self) -> u64 {
        self.n_z.iter().sum()
    }
}

/// Fits a model to the biterms of `docs`, each a list of topic tokens.
pub fn fit_documents<T: AsRef<[String]>>(docs: &[T], cfg: &BtmConfig) -> Result<BtmModel> {
    let vocab = Vocab::build(docs.iter());
    let biterms: Vec<Biterm> = docs
        .iter()
        .flat_map(|d| extract_biterms(&vocab.encode(d.as_ref()), cfg.window))
        .collect();
    fit(&biterms, vocab, cfg, None)
}

/// Collapsed Gibbs sampling on a biterm multiset. The observer, if any,
/// sees the count tables after every sweep.
pub fn fit(
    biterms: &[Biterm],
    vocab: Vocab,
    cfg: &BtmConfig,
    observer: Option<&mut dyn FnMut(&SweepState<'_>)>,
) -> Result<BtmModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sampler = Sampler::new(biterms.to_vec(), vocab.len(), cfg, &mut rng)?;
    sampler.run(cfg.iterations, &mut rng, observer)?;
    Ok(BtmModel::from_counts(cfg, vocab, sampler.n_z, &sampler.n_wz))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub id: String,
    pub distribution: Vec<f64>,
    pub argmax_topic: usize,
    /// True when the document produced no in-vocabulary biterm and received
    /// the global topic proportions.
    pub no_biterms: bool,
}

/// Smallest index attaining the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferOptions {
    pub window: Option<usize>,
    pub allow_empty: bool,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            window: None,
            allow_empty: true,
        }
    }
}

pub fn infer_topics(model: &BtmModel, id: &str, tokens: &[String], opts: InferOptions) -> Result<TopicAssignment> {
    let doc = model.vocab.encode(tokens);
    let biterms = extract_biterms(&doc, opts.window);
    let distribution = if biterms.is_empty() {
        if !opts.allow_empty {
            return Err(Error::InvalidInput(format!("post {id} has no in-vocabulary biterm")));
        }
        model.theta.clone()
    } else {
        let mut dist = vec![0.0; model.k];
        let mut pzb = vec![0.0; model.k];
        let share = 1.0 / biterms.len() as f64;
        for b in &biterms {
            for (z, p) in pzb.iter_mut().enumerate() {
                *p = model.theta[z] * model.phi[z][b.w1 as usize] * model.phi[z][b.w2 as usize];
            }
            let norm: f64 = pzb.iter().sum();
            for (d, p) in dist.iter_mut().zip(&pzb) {
                *d += share * p / norm;
            }
        }
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|d| *d /= total);
        dist
    };
    Ok(TopicAssignment {
        id: id.to_string(),
        argmax_topic: argmax(&distribution),
        distribution,
        no_biterms: biterms.is_empty(),
    })
}

/// The `k` most probable words of topic `z`, ties broken by word index.
pub fn top_words(model: &BtmModel, z: usize, k: usize) -> Result<Vec<(String, f64)>> {
    if z >= model.k {
        return Err(Error::InvalidInput(format!("topic {z} outside 0..{}", model.k)));
    }
    if k < 1 || k > model.v() {
        return Err(Error::InvalidInput(format!("k = {k} outside 1..={}", model.v())));
    }
    let row = &model.phi[z];
    let mut idx: Vec<usize> = (0..row.len()).collect();
    idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
    Ok(idx
        .into_iter()
        .take(k)
        .map(|w| (model.vocab.word(w as u32).to_string(), row[w]))
        .collect())
}

/// Writes `topic,rank,word,weight` for the top `k` words of every topic.
pub fn write_top_words(model: &BtmModel, k: usize, path: &Path) -> Result<()> {
    let k = k.min(model.v());
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::stats::csv_io(path, e))?;
    w.write_record(["topic", "rank", "word", "weight"])?;
    for z in 0..model.k {
        for (rank, (word, weight)) in top_words(model, z, k)?.into_iter().enumerate() {
            w.write_record([z.to_string(), (rank + 1).to_string(), word, weight.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
    window: Option<usize>,
    vocab: Vec<String>,
    n_z: Vec<u64>,
    n_wz: Vec<Vec<u64>>,
    phi: Vec<Vec<f64>>,
    theta: Vec<f64>,
}

pub fn save_model(model: &BtmModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        k: model.k,
        alpha: model.alpha,
        beta: model.beta,
        seed: model.seed,
        iterations: model.iterations,
        window: model.window,
        vocab: model.vocab.words.clone(),
        n_z: model.n_z.clone(),
        n_wz: model.n_wz.clone(),
        phi: model.phi.clone(),
        theta: model.theta.clone(),
    };
    fs::write(path, serde_json::to_string(&file)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<BtmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: ModelFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
        return Err(Error::parse(
            path,
            0,
            format!("unsupported model format {} v{}", f.format, f.version),
        ));
    }
    let v = f.vocab.len();
    let shape_ok = f.n_z.len() == f.k
        && f.theta.len() == f.k
        && f.n_wz.len() == f.k
        && f.phi.len() == f.k
        && f.n_wz.iter().all(|r| r.len() == v)
        && f.phi.iter().all(|r| r.len() == v);
    if !shape_ok {
        return Err(Error::parse(
            path,
            0,
            "count or distribution tables do not match k and vocabulary",
        ));
    }
    Ok(BtmModel {
        k: f.k,
        alpha: f.alpha,
        beta: f.beta,
        seed: f.seed,
        iterations: f.iterations,
        window: f.window,
        vocab: Vocab::from_words(f.vocab),
        n_z: f.n_z,
        n_wz: f.n_wz,
        phi: f.phi,
        theta: f.theta,
    })
}

/// Human-authored fold of raw topics into named themes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicMergeMap {
    labels: Vec<String>,
}

impl TopicMergeMap {
    pub fn identity(k: usize) -> Self {
        TopicMergeMap {
            labels: (0..k).map(|z| z.to_string()).collect(),
        }
    }

    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        if let Some(z) = labels.iter().position(|l| l.trim().is_empty()) {
            return Err(Error::InvalidInput(format!("topic {z} has an empty theme label")));
        }
        Ok(TopicMergeMap { labels })
    }

    /// Parses `topic_index<TAB>theme_label` lines; must cover `0..k`.
    pub fn parse(text: &str, origin: &Path, k: usize) -> Result<Self> {
        let mut labels: Vec<Option<String>> = vec![None; k];
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (idx, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected topic_index<TAB>theme_label"))?;
            let z: usize = idx
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad topic index {idx:?}")))?;
            let label = label.trim();
            if z >= k {
                return Err(Error::parse(origin, i + 1, format!("topic {z} outside 0..{k}")));
            }
            if label.is_empty() {
                return Err(Error::parse(origin, i + 1, "empty theme label"));
            }
            if labels[z].replace(label.to_string()).is_some() {
                return Err(Error::parse(origin, i + 1, format!("topic {z} mapped twice")));
            }
        }
        let missing: Vec<String> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(z, _)| z.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::parse(
                origin,
                0,
                format!("merge map does not cover topics {}", missing.join(", ")),
            ));
        }
        Ok(TopicMergeMap {
            labels: labels.into_iter().flatten().collect(),
        })
    }

    pub fn load(path: &Path, k: usize) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, k)
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, z: usize) -> Option<&str> {
        self.labels.get(z).map(String::as_str)
    }

    /// Distinct theme labels in order of first appearance.
    pub fn themes(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.labels
            .iter()
            .map(String::as_str)
            .filter(|l| seen.insert(*l))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemeRow {
    pub group: String,
    pub theme: String,
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThemeHistogram {
    pub rows: Vec<ThemeRow>,
}

impl ThemeHistogram {
    pub fn group_total(&self, group: &str) -> usize {
        self.rows.iter().filter(|r| r.group == group).map(|r| r.count).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| crate::stats::csv_io(path, e))?;
        w.write_record(["group", "theme", "count", "proportion"])?;
        for r in &self.rows {
            w.write_record([
                r.group.clone(),
                r.theme.clone(),
                r.count.to_string(),
                r.proportion.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Folds argmax topics through `merge` and counts themes per group.
/// Groups appear sorted; themes in merge-map order, zero counts included.
pub fn apply_merge(assignments: &[(String, &TopicAssignment)], merge: &TopicMergeMap) -> Result<ThemeHistogram> {
    let themes = merge.themes();
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (group, a) in assignments {
        let label = merge
            .label(a.argmax_topic)
            .ok_or_else(|| Error::InvalidInput(format!("topic {} is not in the merge map", a.argmax_topic)))?;
        let slot = themes.iter().position(|t| *t == label).expect("theme listed");
        counts.entry(group.as_str()).or_insert_with(|| vec![0; themes.len()])[slot] += 1;
    }
    let mut rows = Vec::new();
    for (group, c) in counts {
        let n: usize = c.iter().sum();
        for (theme, &count) in themes.iter().zip(&c) {
            rows.push(ThemeRow {
                group: group.to_string(),
                theme: theme.to_string(),
                count,
                proportion: count as f64 / n as f64,
            });
        }
    }
    Ok(ThemeHistogram { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn cfg(k: usize, iterations: usize, seed: u64) -> BtmConfig {
        BtmConfig {
            k,
            iterations,
            seed,
            ..BtmConfig::default()
        }
    }

    #[test]
    fn three_tokens_give_three_pairs() {
        let pairs = biterm_pairs(&words("screen early save"), None);
        let expect: Vec<(String, String)> = [("early", "screen"), ("save", "screen"), ("early", "save")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let mut got = pairs.clone();
        got.sort();
        let mut want = expect;
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn single_token_has_no_pairs() {
        assert!(extract_biterms(&[4], None).is_empty());
    }

    #[test]
    fn duplicates_are_retained() {
        let b = extract_biterms(&[0, 1, 0], Some(3));
        assert_eq!(b, vec![Biterm::new(0, 1), Biterm::new(0, 0), Biterm::new(0, 1)]);
    }

    #[test]
    fn window_limits_distance() {
        assert_eq!(extract_biterms(&[0, 1, 2, 3], Some(2)).len(), 3);
        assert_eq!(extract_biterms(&[0, 1, 2, 3], Some(10)).len(), 6);
    }

    #[test]
    fn k1_matches_smoothed_frequencies() {
        let vocab = Vocab::build([words("a b c")].iter());
        let biterms = vec![Biterm::new(0, 1), Biterm::new(0, 2), Biterm::new(0, 0)];
        let c = BtmConfig {
            k: 1,
            iterations: 5,
            ..BtmConfig::default()
        };
        let m = fit(&biterms, vocab, &c, None).unwrap();
        assert_eq!(m.theta, vec![1.0]);
        // a appears 4 times, b and c once, over 2B = 6 word slots.
        let denom = 6.0 + 3.0 * 0.01;
        let expect = [(4.0 + 0.01) / denom, (1.0 + 0.01) / denom, (1.0 + 0.01) / denom];
        for (p, e) in m.phi[0].iter().zip(expect) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_corpus_and_zero_k() {
        let vocab = Vocab::build([words("a b")].iter());
        assert!(fit(&[], vocab.clone(), &cfg(2, 1, 0), None).is_err());
        assert!(fit(&[Biterm::new(0, 1)], vocab, &cfg(0, 1, 0), None).is_err());
    }

    fn planted(seed: u64, posts: usize) -> (Vec<Vec<String>>, Vec<String>, Vec<String>) {
        let a: Vec<String> = (0..50).map(|i| format!("alpha{i:02}")).collect();
        let b: Vec<String> = (0..50).map(|i| format!("beta{i:02}")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs = (0..posts)
            .map(|i| {
                let src = if i % 2 == 0 { &a } else { &b };
                (0..8).map(|_| src.choose(&mut rng).unwrap().clone()).collect()
            })
            .collect();
        (docs, a, b)
    }

    #[test]
    fn conservation_after_every_sweep() {
        let (docs, _, _) = planted(1, 40);
        let vocab = Vocab::build(docs.iter());
        let biterms: Vec<Biterm> = docs
            .iter()
            .flat_map(|d| extract_biterms(&vocab.encode(d), None))
            .collect();
        let b = biterms.len() as u64;
        let mut sweeps = 0;
        let mut obs = |s: &SweepState<'_>| {
            sweeps += 1;
            assert_eq!(s.n_z.iter().sum::<u64>(), b);
            for z in 0..s.k {
                let col: u64 = (0..s.v).map(|w| s.n_wz[w * s.k + z]).sum();
                assert_eq!(col, 2 * s.n_z[z]);
            }
        };
        let m = fit(&biterms, vocab, &cfg(3, 20, 5), Some(&mut obs)).unwrap();
        assert_eq!(sweeps, 20);
        for row in &m.phi {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((m.theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let (docs, _, _) = planted(2, 30);
        let a = fit_documents(&docs, &cfg(4, 30, 9)).unwrap();
        let b = fit_documents(&docs, &cfg(4, 30, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn planted_topics_are_recovered() {
        let (docs, a, _) = planted(3, 200);
        let m = fit_documents(&docs, &cfg(2, 200, 11)).unwrap();
        let is_a = |w: &str| a.iter().any(|x| x == w);
        for z in 0..2 {
            let top = top_words(&m, z, 10).unwrap();
            let from_a = top.iter().filter(|(w, _)| is_a(w)).count();
            assert!(from_a >= 9 || from_a <= 1, "topic {z} mixed: {top:?}");
        }
    }

    fn toy_model() -> BtmModel {
        let vocab = Vocab::build([words("x y z")].iter());
        let c = BtmConfig {
            k: 2,
            alpha: Some(1.0),
            beta: 0.5,
            iterations: 1,
            seed: 0,
            window: None,
        };
        // n_wz word-major: x -> (3, 1), y -> (1, 2), z -> (0, 1).
        BtmModel::from_counts(&c, vocab, vec![2, 2], &[3, 1, 1, 2, 0, 1])
    }

    #[test]
    fn single_biterm_closed_form() {
        let m = toy_model();
        let a = infer_topics(&m, "d", &words("x y"), InferOptions::default()).unwrap();
        let raw: Vec<f64> = (0..2).map(|z| m.theta[z] * m.phi[z][0] * m.phi[z][1]).collect();
        let s: f64 = raw.iter().sum();
        for (got, r) in a.distribution.iter().zip(&raw) {
            assert!((got - r / s).abs() < 1e-15);
        }
        // phi0 = (3.5/5.5, 1.5/5.5), phi1 = (1.5/5.5, 2.5/5.5), theta = (.5, .5)
        let t0 = 3.5 * 1.5;
        let t1 = 1.5 * 2.5;
        assert!((a.distribution[0] - t0 / (t0 + t1)).abs() < 1e-12);
        assert_eq!(a.argmax_topic, 0);
    }

    #[test]
    fn empty_document_gets_theta() {
        let m = toy_model();
        let a = infer_topics(&m, "d", &words("x unknown"), InferOptions::default()).unwrap();
        assert!(a.no_biterms);
        assert_eq!(a.distribution, m.theta);
        let strict = InferOptions {
            allow_empty: false,
            ..InferOptions::default()
        };
        assert!(infer_topics(&m, "d", &words("nothing"), strict).is_err());
    }

    #[test]
    fn k1_inference_is_certain() {
        let vocab = Vocab::build([words("p q")].iter());
        let m = fit(&[Biterm::new(0, 1)], vocab, &cfg(1, 2, 0), None).unwrap();
        let a = infer_topics(&m, "d", &words("p q"), InferOptions::default()).unwrap();
        assert_eq!(a.distribution, vec![1.0]);
        assert_eq!(a.argmax_topic, 0);
    }

    #[test]
    fn argmax_takes_lowest_index() {
        assert_eq!(argmax(&[0.1, 0.1, 0.3, 0.1, 0.1, 0.3]), 2);
    }

    #[test]
    fn top_words_rankings() {
        let m = toy_model();
        let all = top_words(&m, 0, 3).unwrap();
        let mut names: Vec<_> = all.iter().map(|(w, _)| w.clone()).collect();
        assert_eq!(names[0], "x");
        names.sort();
        assert_eq!(names, words("x y z"));
        assert_eq!(top_words(&m, 1, 1).unwrap()[0].0, "y");
        assert!(top_words(&m, 2, 1).is_err());
        assert!(top_words(&m, 0, 4).is_err());
    }

    #[test]
    fn top_word_ties_by_index() {
        let vocab = Vocab::build([words("a b c")].iter());
        let c = BtmConfig {
            k: 1,
            alpha: Some(1.0),
            beta: 1.0,
            iterations: 1,
            seed: 0,
            window: None,
        };
        let m = BtmModel::from_counts(&c, vocab, vec![1], &[1, 0, 1]);
        let top: Vec<_> = top_words(&m, 0, 3).unwrap().into_iter().map(|(w, _)| w).collect();
        assert_eq!(top, words("a c b"));
    }

    #[test]
    fn model_file_round_trip() {
        let (docs, _, _) = planted(4, 20);
        let m = fit_documents(&docs, &cfg(3, 10, 1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("btm.json");
        save_model(&m, &p).unwrap();
        assert_eq!(load_model(&p).unwrap(), m);
    }

    #[test]
    fn merge_map_must_be_total() {
        let p = Path::new("m");
        assert!(TopicMergeMap::parse("0\tsupport\n", p, 2).is_err());
        assert!(TopicMergeMap::parse("0\tsupport\n2\trisk\n", p, 2).is_err());
        assert!(TopicMergeMap::parse("0\t \n1\trisk\n", p, 2).is_err());
        let m = TopicMergeMap::parse("1\trisk\n0\tsupport\n", p, 2).unwrap();
        assert_eq!(m.themes(), vec!["support", "risk"]);
    }

    fn assignment(z: usize) -> TopicAssignment {
        TopicAssignment {
            id: String::new(),
            distribution: vec![],
            argmax_topic: z,
            no_biterms: false,
        }
    }

    #[test]
    fn identity_merge_is_raw_histogram() {
        let a: Vec<TopicAssignment> = [0, 2, 2, 1].iter().map(|&z| assignment(z)).collect();
        let rows: Vec<(String, &TopicAssignment)> = a.iter().map(|x| ("laypeople".to_string(), x)).collect();
        let h = apply_merge(&rows, &TopicMergeMap::identity(3)).unwrap();
        let counts: Vec<usize> = h.rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, vec![1, 1, 2]);
    }

    #[test]
    fn collapsing_merge_gives_one_bar() {
        let a: Vec<TopicAssignment> = [0, 1, 2].iter().map(|&z| assignment(z)).collect();
        let rows: Vec<(String, &TopicAssignment)> = a.iter().map(|x| ("promotional".to_string(), x)).collect();
        let merge = TopicMergeMap::from_labels(vec!["all".into(); 3]).unwrap();
        let h = apply_merge(&rows, &merge).unwrap();
        assert_eq!(h.rows.len(), 1);
        assert_eq!(h.rows[0].proportion, 1.0);
    }

    #[test]
    fn unmapped_topic_is_an_error() {
        let a = assignment(5);
        let rows = vec![("g".to_string(), &a)];
        assert!(apply_merge(&rows, &TopicMergeMap::identity(3)).is_err());
    }

    #[test]
    fn canonical_sweep_order_ignores_input_order() {
        let (docs, _, _) = planted(6, 12);
        let vocab = Vocab::build(docs.iter());
        let biterms: Vec<Biterm> = docs
            .iter()
            .flat_map(|d| extract_biterms(&vocab.encode(d), None))
            .collect();
        let c = cfg(3, 15, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let z0: Vec<usize> = biterms.iter().map(|_| rng.gen_range(0..3)).collect();
        let mut pairs: Vec<(Biterm, usize)> = biterms.iter().copied().zip(z0.iter().copied()).collect();
        pairs.shuffle(&mut rng);
        let (pb, pz): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();

        let run = |b: Vec<Biterm>, z: Vec<usize>| {
            let mut s = Sampler::with_assignments(b, z, vocab.len(), &c).unwrap();
            s.canonicalize();
            s.run(c.iterations, &mut ChaCha8Rng::seed_from_u64(c.seed), None)
                .unwrap();
            (s.n_z().to_vec(), s.n_wz().to_vec())
        };
        assert_eq!(run(biterms.clone(), z0), run(pb, pz));
    }

    proptest! {
        #[test]
        fn proportions_sum_to_one(topics in prop::collection::vec((0usize..4, 0usize..2), 1..60)) {
            let a: Vec<TopicAssignment> = topics.iter().map(|&(z, _)| assignment(z)).collect();
            let rows: Vec<(String, &TopicAssignment)> = topics
                .iter()
                .zip(&a)
                .map(|(&(_, g), x)| (["promotional", "laypeople"][g].to_string(), x))
                .collect();
            let merge = TopicMergeMap::from_labels(vec!["s".into(), "r".into(), "s".into(), "e".into()]).unwrap();
            let h = apply_merge(&rows, &merge).unwrap();
            for g in ["promotional", "laypeople"] {
                let sum: f64 = h.rows.iter().filter(|r| r.group == g).map(|r| r.proportion).sum();
                if h.group_total(g) > 0 {
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn biterm_count_is_binomial(n in 0usize..20) {
            let doc: Vec<u32> = (0..n as u32).collect();
            prop_assert_eq!(extract_biterms(&doc, None).len(), n * n.saturating_sub(1) / 2);
        }
    }
}
