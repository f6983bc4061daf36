//! The three normalizations applied to one post.
//!
//! ```text
//! cargo run --example normalize_text -- "@nbcf Wear pink! #BreastCancer https://t.co/x 💗"
//! ```

use discourse_miner::textprep::{
    normalize_for_classification, normalize_for_sentiment, normalize_for_topics, Lemmatizer, Stoplist,
};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "@nbcf Wear pink for my mom this October! #BreastCancer https://t.co/x1 💗💗".into());
    println!("input:          {text}");
    println!(
        "classification: {}",
        normalize_for_classification(&text).tokens.join(" ")
    );
    println!("sentiment:      {}", normalize_for_sentiment(&text));
    let topics = normalize_for_topics(&text, &Stoplist::bundled(), &Lemmatizer::bundled());
    println!("topics:         {}", topics.tokens.join(" "));
}
