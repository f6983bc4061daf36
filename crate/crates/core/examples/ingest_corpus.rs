//! Loads the fixture posts with deduplication and a language filter, then
//! keeps the keyword matches.
//!
//! ```text
//! cargo run --example ingest_corpus [-- posts.jsonl keywords.txt]
//! ```

use std::path::PathBuf;

use discourse_miner::corpus::{filter_by_keywords, load_corpus, DedupPolicy, LoadOptions};
use discourse_miner::matchkw::KeywordMatcher;

fn main() -> discourse_miner::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut args = std::env::args().skip(1);
    let posts = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| fixtures.join("posts.jsonl"));
    let keywords = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| fixtures.join("keywords.txt"));

    let opts = LoadOptions {
        dedup: DedupPolicy::IdAndText,
        lang_filter: Some("en".into()),
        strict: true,
    };
    let corpus = load_corpus(&[&posts], &opts)?;
    let t = corpus.provenance.totals();
    println!(
        "read {} kept {} (duplicates {}, other language {}, malformed {})",
        t.read, t.kept, t.dropped_duplicate, t.dropped_language, t.skipped_malformed
    );

    let matcher = KeywordMatcher::load(&keywords)?;
    let on_topic = filter_by_keywords(&corpus, &matcher);
    println!("{} posts match {} keyword entries", on_topic.len(), matcher.len());
    for p in on_topic.iter().take(3) {
        println!("  {} {}  {}", p.id, p.created_at, p.text);
    }
    Ok(())
}
