//! Runs every stage on the bundled fixture and prints the manifest summary.
//!
//! ```text
//! cargo run --release --example full_pipeline [-- OUT_DIR]
//! ```

use std::path::PathBuf;

use discourse_miner::pipeline::{Pipeline, RunManifest, MANIFEST};

fn main() -> discourse_miner::Result<()> {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/config.toml");
    let out = std::env::args().nth(1).map(PathBuf::from);
    let pipeline = Pipeline::from_file(&config, None, out)?;
    pipeline.run_all()?;

    let manifest = RunManifest::load(&pipeline.artifact(MANIFEST))?;
    println!("outputs in {}", pipeline.out_dir().display());
    for (stage, rec) in &manifest.stages {
        let checks = rec.checks.iter().filter(|c| c.ok).count();
        println!(
            "{stage:<13} {:>5} ms  checks {checks}/{}  {:?}",
            rec.wall_clock_ms,
            rec.checks.len(),
            rec.outputs
        );
    }
    Ok(())
}
