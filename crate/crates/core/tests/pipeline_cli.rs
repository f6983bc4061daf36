use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use discourse_miner::pipeline::{artifacts, Command, Pipeline, RunManifest, MANIFEST};
use discourse_miner::textprep::{normalize_for_topics, Lemmatizer, Stoplist};

const BIN: &str = env!("CARGO_BIN_EXE_discourse-miner");

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Proc::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// A small corpus spanning three months, every post annotated.
fn three_month_project(dir: &Path) -> PathBuf {
    let months = ["2016-01", "2016-02", "2016-03"];
    let mut posts = String::new();
    let mut ann = String::new();
    let mut n = 0;
    for m in months {
        for (kind, text) in [
            ("irrelevant", "free iphone giveaway click #breastcancer"),
            (
                "promotional",
                "donate to the fundraiser for breast cancer research https://t.co/a",
            ),
            ("laypeople", "so scared about my mom breast cancer surgery"),
            ("laypeople", "my sister finished chemo for breast cancer, so grateful"),
        ] {
            n += 1;
            posts.push_str(&format!(
                "{{\"id\":\"t{n}\",\"created_at\":\"{m}-{n:02}T10:00:00Z\",\"text\":\"{text} {n}\",\"user_location\":\"Tampa, FL\",\"lang\":\"en\"}}\n"
            ));
            ann.push_str(&format!("t{n}\t{kind}\n"));
        }
    }
    fs::write(dir.join("posts.jsonl"), posts).unwrap();
    fs::write(dir.join("ann.tsv"), ann).unwrap();
    fs::write(dir.join("pa.txt"), "marathon\n").unwrap();
    let cfg = dir.join("config.toml");
    fs::write(
        &cfg,
        "output_dir = \"out\"\n[input]\npaths = [\"posts.jsonl\"]\n[classify]\nannotations = \"ann.tsv\"\ndim = 1024\n\
         [topics]\nk = 2\niterations = 20\n[physical_activity]\nkeywords = \"pa.txt\"\niterations = 20\n",
    )
    .unwrap();
    cfg
}

#[test]
fn missing_or_invalid_config_exits_2() {
    let (code, err) = cli(&["ingest", "--config", "/no/such/config.toml"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("not found"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = three_month_project(dir.path());
    let text = fs::read_to_string(&cfg).unwrap() + "[topics2]\nk = 3\n";
    fs::write(&cfg, text).unwrap();
    let (code, err) = cli(&["ingest", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    let (code, _) = cli(&["no-such-stage", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn missing_upstream_artifact_exits_2_and_names_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_month_project(dir.path());
    let (code, err) = cli(&["sentiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("corpus.jsonl"), "{err}");
}

#[test]
fn trend_on_three_months_fails_with_runtime_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_month_project(dir.path());
    let c = cfg.to_str().unwrap();
    for stage in ["ingest", "classify", "geocode", "sentiment"] {
        let (code, err) = cli(&[stage, "--config", c]);
        assert_eq!(code, 0, "{stage}: {err}");
    }
    let (code, err) = cli(&["trend", "--config", c]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("series too short"), "{err}");
}

#[test]
fn empty_physical_activity_subset_yields_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = three_month_project(dir.path());
    let p = Pipeline::from_file(&cfg, None, None).unwrap();
    for c in [Command::Ingest, Command::Classify] {
        p.run(c).unwrap();
    }
    let rec = p.run(Command::PaSubset).unwrap();
    assert_eq!(rec.outputs["pa_posts"], 0);
    assert_eq!(rec.outputs["pa_themed_posts"], 0);
    assert!(!rec.notes.is_empty());
    let themes = fs::read_to_string(p.artifact(artifacts::PA_THEMES)).unwrap();
    assert_eq!(themes.trim(), "group,theme,count,proportion");
    let volume = fs::read_to_string(p.artifact(artifacts::PA_VOLUME)).unwrap();
    let rows: Vec<&str> = volume.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.ends_with(",0")), "{volume}");
}

fn planted(words: &[&str]) -> BTreeSet<String> {
    let text = words.join(" ");
    normalize_for_topics(&text, &Stoplist::bundled(), &Lemmatizer::bundled())
        .tokens
        .into_iter()
        .collect()
}

#[test]
fn fixture_run_recovers_physical_activity_themes() {
    let out = tempfile::tempdir().unwrap();
    let p = Pipeline::from_file(&fixtures().join("config.toml"), None, Some(out.path().to_path_buf())).unwrap();
    p.run_all().unwrap();

    let event = planted(&[
        "walk",
        "race",
        "marathon",
        "team",
        "registered",
        "finish",
        "line",
        "miles",
        "participated",
        "cheering",
        "relay",
        "walkathon",
    ]);
    let risk = planted(&[
        "exercise",
        "workout",
        "yoga",
        "gym",
        "fitness",
        "active",
        "reduce",
        "risk",
        "routine",
        "moderate",
        "lifestyle",
        "weight",
    ]);
    let mut rdr = csv::Reader::from_path(p.artifact(artifacts::PA_TOP_WORDS)).unwrap();
    let mut top: Vec<Vec<String>> = vec![Vec::new(); 2];
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let z: usize = rec[0].parse().unwrap();
        top[z].push(rec[2].to_string());
    }
    let mut owners = BTreeSet::new();
    for words in &top {
        assert_eq!(words.len(), 10);
        let e = words.iter().filter(|w| event.contains(*w)).count();
        let r = words.iter().filter(|w| risk.contains(*w)).count();
        assert!(e.max(r) as f64 / 10.0 >= 0.9, "{words:?}");
        owners.insert(e > r);
    }
    assert_eq!(owners.len(), 2, "both topics drew from one vocabulary");

    // Per-post themes match the generator's ground truth through the merge map.
    let truth: Vec<(String, String)> = fs::read_to_string(fixtures().join("pa_truth.tsv"))
        .unwrap()
        .lines()
        .map(|l| {
            let (id, t) = l.split_once('\t').unwrap();
            (id.to_string(), t.to_string())
        })
        .collect();
    let mut rdr = csv::Reader::from_path(p.artifact(artifacts::PA_ASSIGNMENTS)).unwrap();
    let assigned: std::collections::HashMap<String, String> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[3].to_string())
        })
        .collect();
    let agree = truth
        .iter()
        .filter(|(id, t)| {
            let want = if t == "support_event" {
                "give_support"
            } else {
                "reduce_risk"
            };
            assigned.get(id).map(String::as_str) == Some(want)
        })
        .count();
    assert!(agree as f64 >= 0.9 * truth.len() as f64, "{agree}/{}", truth.len());

    let vol = fs::read_to_string(p.artifact(artifacts::PA_VOLUME)).unwrap();
    assert!(vol.starts_with("month,laypeople,physical_activity\n"));
    assert_eq!(vol.lines().count() - 1, 60);

    let m = RunManifest::load(&p.artifact(MANIFEST)).unwrap();
    assert!(m.all_checks_ok());
    assert_eq!(m.seed, 42);
    assert_eq!(m.config["topics"]["k"], 6);
}

#[test]
fn seed_override_changes_recorded_seed() {
    let out = tempfile::tempdir().unwrap();
    let (code, err) = cli(&[
        "ingest",
        "--config",
        fixtures().join("config.toml").to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let m = RunManifest::load(&out.path().join(MANIFEST)).unwrap();
    assert_eq!(m.seed, 7);
    assert!(out.path().join(artifacts::CORPUS).is_file());
}
