//! Trains the relevance and audience models on the fixture annotations,
//! reports held-out precision and recall, and labels the whole corpus.
//!
//! ```text
//! cargo run --release --example two_stage_classifier
//! ```

use std::path::PathBuf;

use discourse_miner::classify::{
    classify_two_stage, evaluate, load_annotations, split_train_test, stage_datasets, train, FeatureConfig, Featurizer,
    Stage, TrainConfig,
};
use discourse_miner::corpus::{load_corpus, GroupLabel, LoadOptions};

fn main() -> discourse_miner::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let corpus = load_corpus(&[fixtures.join("posts.jsonl")], &LoadOptions::default())?;
    let annotations = load_annotations(&fixtures.join("annotations.tsv"))?;
    let featurizer = Featurizer::new(
        FeatureConfig {
            dim: 1 << 16,
            bigrams: true,
        },
        None,
    )?;
    let data = stage_datasets(&annotations, &corpus, &featurizer)?;
    let cfg = TrainConfig::default();

    let mut models = Vec::new();
    for (stage, set) in [(Stage::Relevance, &data.relevance), (Stage::Audience, &data.audience)] {
        let (tr, te) = split_train_test(set.len(), 0.8, cfg.seed);
        let train_set: Vec<_> = tr.iter().map(|&i| set[i].clone()).collect();
        let test_set: Vec<_> = te.iter().map(|&i| set[i].clone()).collect();
        let model = train(&train_set, featurizer.dim(), featurizer.embed_dim(), stage, &cfg)?;
        let r = evaluate(&model, &test_set)?;
        println!(
            "{stage:?}: precision {:.3} recall {:.3} F {:.3} on {} held-out posts",
            r.precision,
            r.recall,
            r.f_score,
            r.total()
        );
        models.push(model);
    }

    let labels = classify_two_stage(&corpus, &featurizer, &models[0], &models[1])?;
    for g in GroupLabel::ALL {
        println!("{g}: {}", labels.values().filter(|l| **l == g).count());
    }
    Ok(())
}
