//! Scores texts against the bundled demonstration lexicon, or a lexicon file
//! given as the first argument.
//!
//! ```text
//! cargo run --example emotion_scoring [-- lexicon.tsv]
//! ```

use std::path::Path;

use discourse_miner::sentiment::{score, LexiconSet};
use discourse_miner::textprep::normalize_for_sentiment;

fn main() -> discourse_miner::Result<()> {
    let lex = match std::env::args().nth(1) {
        Some(p) => LexiconSet::load(Path::new(&p))?,
        None => LexiconSet::demo(),
    };
    let texts = [
        "So scared and worried about my biopsy results tomorrow #breastcancer",
        "Finished my last round of chemo today, so grateful and happy!",
        "I hate that my mom lost her fight. I cry every day.",
    ];
    print!("{:<60}", "text");
    for name in lex.names() {
        print!(" {:>17}", name);
    }
    println!();
    for t in texts {
        let s = score(&normalize_for_sentiment(t), &lex);
        print!("{:<60}", t.chars().take(58).collect::<String>());
        for p in &s.percentages {
            print!(" {:>17.2}", p);
        }
        println!();
    }
    Ok(())
}
