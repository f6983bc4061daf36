//! Fits a biterm topic model on a planted two-vocabulary corpus and prints
//! the top words per topic.
//!
//! ```text
//! cargo run --release --example biterm_topics [-- K ITERATIONS]
//! ```

use discourse_miner::btm::{fit_documents, infer_topics, top_words, BtmConfig, InferOptions};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> discourse_miner::Result<()> {
    let mut args = std::env::args().skip(1);
    let k = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);

    let walk = ["walk", "race", "marathon", "team", "miles", "finish", "relay", "cheer"];
    let gym = [
        "exercise", "workout", "yoga", "gym", "fitness", "active", "routine", "risk",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let docs: Vec<Vec<String>> = (0..200)
        .map(|i| {
            let vocab = if i % 2 == 0 { &walk } else { &gym };
            vocab.choose_multiple(&mut rng, 5).map(|w| w.to_string()).collect()
        })
        .collect();

    let cfg = BtmConfig {
        k,
        iterations,
        ..BtmConfig::default()
    };
    let model = fit_documents(&docs, &cfg)?;
    for z in 0..model.k {
        let words: Vec<String> = top_words(&model, z, 8)?
            .into_iter()
            .map(|(w, p)| format!("{w}:{p:.3}"))
            .collect();
        println!("topic {z} (theta {:.3}): {}", model.theta[z], words.join(" "));
    }

    let post = ["yoga", "routine", "gym"].map(String::from);
    let a = infer_topics(&model, "example", &post, InferOptions::default())?;
    println!("{:?} -> topic {} {:?}", post, a.argmax_topic, a.distribution);
    Ok(())
}
