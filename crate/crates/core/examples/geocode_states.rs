//! Resolves free-text profile locations to US states with the bundled
//! gazetteer.
//!
//! ```text
//! cargo run --example geocode_states [-- "Tampa, Florida" "Paris, France"]
//! ```

use discourse_miner::geo::{geocode_detail, Gazetteer};

fn main() {
    let gaz = Gazetteer::bundled();
    let mut locs: Vec<String> = std::env::args().skip(1).collect();
    if locs.is_empty() {
        locs = [
            "Gainesville, FL",
            "new york",
            "Washington, D.C.",
            "Austin, TX 78701",
            "Portland",
            "Portland, OR",
            "Paris, France",
            "somewhere over the rainbow",
        ]
        .map(String::from)
        .to_vec();
    }
    for loc in &locs {
        match geocode_detail(loc, &gaz) {
            Some((state, on)) => println!("{loc:<30} {state}  (matched {on:?})"),
            None => println!("{loc:<30} -"),
        }
    }
}
