//! Proposes new hashtags that co-occur with the current keyword list.
//!
//! ```text
//! cargo run --example snowball_keywords [-- MIN_COUNT]
//! ```

use std::path::PathBuf;

use discourse_miner::corpus::{load_corpus, LoadOptions};
use discourse_miner::matchkw::{suggest_keywords, KeywordMatcher};

fn main() -> discourse_miner::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let min_count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let corpus = load_corpus(&[fixtures.join("posts.jsonl")], &LoadOptions::default())?;
    let matcher = KeywordMatcher::parse("breast cancer\n#breastcancer\n")?;
    println!("{:<24} {:>6} {:>8}", "term", "count", "lift");
    for s in suggest_keywords(&corpus, &matcher, min_count) {
        println!("{:<24} {:>6} {:>8.3}", s.term, s.cooccurrence_count, s.lift);
    }
    Ok(())
}
