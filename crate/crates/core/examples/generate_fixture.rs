//! Regenerates the synthetic end-to-end corpus under `fixtures/`.
//!
//! ```text
//! cargo run --example generate_fixture [-- OUT_DIR]
//! ```
//!
//! The corpus has planted structure: five topical themes split between
//! promotional and laypeople accounts, October awareness spikes in both
//! groups, laypeople negative emotion that fades year over year, and a
//! physical-activity subset written from two disjoint vocabularies.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const AWARENESS: &[&str] = &[
    "pink",
    "ribbon",
    "october",
    "awareness",
    "month",
    "wear",
    "donate",
    "fundraiser",
    "raise",
    "money",
    "proceeds",
    "campaign",
];
const RESEARCH: &[&str] = &[
    "study",
    "researchers",
    "trial",
    "drug",
    "therapy",
    "tumor",
    "gene",
    "findings",
    "journal",
    "scientists",
    "clinical",
    "breakthrough",
];
const SCREENING: &[&str] = &[
    "mammogram",
    "screening",
    "early",
    "detection",
    "exam",
    "schedule",
    "women",
    "guidelines",
    "checkup",
    "annual",
    "dense",
    "appointment",
];
const EXPERIENCE: &[&str] = &[
    "chemo",
    "diagnosed",
    "surgery",
    "mastectomy",
    "radiation",
    "hair",
    "oncologist",
    "scan",
    "results",
    "infusion",
    "port",
    "biopsy",
];
const SUPPORT: &[&str] = &[
    "prayers", "praying", "family", "friends", "fighter", "sister", "mom", "hug", "thoughts", "aunt", "grandma",
    "cousin",
];
const PA_EVENT: &[&str] = &[
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
];
const PA_RISK: &[&str] = &[
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
];
const SPAM: &[&str] = &[
    "giveaway",
    "follow",
    "retweet",
    "iphone",
    "click",
    "free",
    "bitcoin",
    "deal",
    "shop",
    "sale",
    "discount",
    "promo",
    "code",
    "followers",
    "boost",
];
const NEGATIVE: &[&str] = &[
    "scared", "worried", "afraid", "angry", "furious", "hate", "sad", "cry", "lost", "hurt",
];
const POSITIVE: &[&str] = &["hope", "grateful", "blessed", "strong", "happy", "thankful"];
const OFF_TOPIC: &[&str] = &[
    "sunny afternoon at the park with the dog",
    "new coffee place downtown is great",
    "traffic on the freeway again this morning",
    "cannot wait for the game tonight",
    "baked cookies with the kids",
];
const SPANISH: &[&str] = &[
    "la lucha contra el cancer de mama continua #breastcancer",
    "hoy caminamos por la concientizacion del cancer de mama #breastcancer",
    "mi tia vencio el cancer de mama #breastcancer",
];
const LOCATIONS: &[(&str, u32)] = &[
    ("Los Angeles, CA", 10),
    ("San Francisco", 6),
    ("California", 6),
    ("San Diego, California", 5),
    ("Oakland CA", 4),
    ("Miami, FL", 8),
    ("Tampa, Florida", 6),
    ("Orlando", 5),
    ("Gainesville, FL", 5),
    ("Jacksonville, Florida", 4),
    ("Jackson, MS", 3),
    ("Mississippi", 2),
    ("New York, NY", 3),
    ("Brooklyn", 2),
    ("Austin, TX 78701", 3),
    ("London", 4),
    ("Paris, France", 3),
    ("Portland", 2),
    ("somewhere over the rainbow", 3),
    ("", 6),
];

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Spam,
    Promo,
    Lay,
    PaEvent,
    PaRisk,
}

struct Post {
    id: String,
    ts: i64,
    text: String,
    loc: Option<String>,
    lang: &'static str,
    kind: Option<Kind>,
}

struct Gen {
    rng: ChaCha8Rng,
    next_id: u32,
}

impl Gen {
    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("p{:04}", self.next_id)
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.rng).copied().expect("non-empty")
    }

    fn sample<'a>(&mut self, xs: &[&'a str], n: usize) -> Vec<&'a str> {
        xs.choose_multiple(&mut self.rng, n).copied().collect()
    }

    /// A timestamp in 2013..=2017; with probability `october` it falls in an October.
    fn ts(&mut self, october: f64) -> i64 {
        let year = self.rng.gen_range(2013..=2017);
        let month = if self.rng.gen_bool(october) {
            10
        } else {
            self.rng.gen_range(1..=12)
        };
        let day = self.rng.gen_range(1..=28);
        let secs = self.rng.gen_range(0..86_400);
        Utc.with_ymd_and_hms(year, month, day, 0, 0, 0).unwrap().timestamp() + secs
    }

    fn location(&mut self) -> Option<String> {
        let total: u32 = LOCATIONS.iter().map(|(_, w)| w).sum();
        let mut r = self.rng.gen_range(0..total + 4);
        if r >= total {
            return None;
        }
        for (loc, w) in LOCATIONS {
            if r < *w {
                return Some(loc.to_string());
            }
            r -= w;
        }
        unreachable!()
    }

    fn keyword(&mut self) -> &'static str {
        self.pick(&["breast cancer", "#breastcancer", "#BreastCancer", "breast cancer"])
    }

    fn spam(&mut self) -> String {
        let words = self.sample(SPAM, 6).join(" ");
        format!(
            "{} {} #breastcancer #pink #giveaway https://bit.ly/{:x}",
            words,
            self.pick(&["now", "today"]),
            self.rng.gen::<u32>()
        )
    }

    fn promo(&mut self) -> (String, i64) {
        let roll: f64 = self.rng.gen();
        let (theme, october) = if roll < 0.4 {
            (AWARENESS, 0.45)
        } else if roll < 0.75 {
            (RESEARCH, 0.0)
        } else {
            (SCREENING, 0.1)
        };
        let mut text = self.sample(theme, 7).join(" ");
        text = format!(
            "{} {} {}",
            text,
            self.keyword(),
            self.pick(&["learn more", "read more", "details"])
        );
        if theme == AWARENESS && self.rng.gen_bool(0.4) {
            text.push_str(" #pinkoctober");
        }
        if self.rng.gen_bool(0.8) {
            let _ = write!(text, " https://t.co/{:x}", self.rng.gen::<u32>());
        }
        if self.rng.gen_bool(0.3) {
            text = format!("@{} {}", self.pick(&["nbcf", "komen", "acsnews", "healthdesk"]), text);
        }
        (text, self.ts(october))
    }

    fn lay(&mut self) -> (String, i64) {
        let roll: f64 = self.rng.gen();
        let (theme, october) = if roll < 0.45 {
            (EXPERIENCE, 0.0)
        } else if roll < 0.7 {
            (SUPPORT, 0.0)
        } else if roll < 0.88 {
            (AWARENESS, 0.5)
        } else {
            (SCREENING, 0.1)
        };
        let ts = self.ts(october);
        let year = Utc.timestamp_opt(ts, 0).unwrap().format("%Y").to_string();
        let t = year.parse::<i32>().unwrap() - 2013;
        let p_neg = 0.75 - 0.15 * t as f64;
        let mut words = vec!["my"];
        words.extend(self.sample(theme, 6));
        if self.rng.gen_bool(p_neg) {
            words.push(self.pick(NEGATIVE));
            if self.rng.gen_bool(p_neg) {
                words.push(self.pick(NEGATIVE));
            }
        }
        if self.rng.gen_bool(0.35) {
            words.push(self.pick(POSITIVE));
        }
        words.shuffle(&mut self.rng);
        let mut text = format!("{} {}", words.join(" "), self.keyword());
        if self.rng.gen_bool(0.15) {
            text.push_str(" #survivor");
        }
        if self.rng.gen_bool(0.25) {
            text.push_str(" \u{1F497}");
        }
        if self.rng.gen_bool(0.2) {
            text = format!("@{} {}", self.pick(&["jess_r", "mike88", "sam_t"]), text);
        }
        (text, ts)
    }

    fn pa(&mut self, vocab: &[&str]) -> (String, i64) {
        let mut words = vec!["i", "my"];
        words.extend(self.sample(vocab, 6));
        words.shuffle(&mut self.rng);
        (format!("{} {}", words.join(" "), self.keyword()), self.ts(0.0))
    }
}

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(&out)?;
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(20130101),
        next_id: 0,
    };

    let mut posts: Vec<Post> = Vec::new();
    let plan: Vec<(Kind, usize)> = vec![
        (Kind::Spam, 90),
        (Kind::Promo, 170),
        (Kind::Lay, 155),
        (Kind::PaEvent, 25),
        (Kind::PaRisk, 25),
    ];
    for (kind, n) in plan {
        for _ in 0..n {
            let (text, ts) = match kind {
                Kind::Spam => (g.spam(), g.ts(0.0)),
                Kind::Promo => g.promo(),
                Kind::Lay => g.lay(),
                Kind::PaEvent => g.pa(PA_EVENT),
                Kind::PaRisk => g.pa(PA_RISK),
            };
            let loc = match kind {
                Kind::Promo | Kind::Spam => g.rng.gen_bool(0.5).then(|| g.location()).flatten(),
                _ => g.location(),
            };
            posts.push(Post {
                id: String::new(),
                ts,
                text,
                loc,
                lang: "en",
                kind: Some(kind),
            });
        }
    }
    for _ in 0..15 {
        let text = g.pick(OFF_TOPIC).to_string();
        let ts = g.ts(0.0);
        let loc = g.location();
        posts.push(Post {
            id: String::new(),
            ts,
            text,
            loc,
            lang: "en",
            kind: None,
        });
    }
    for _ in 0..10 {
        let text = g.pick(SPANISH).to_string();
        let ts = g.ts(0.0);
        posts.push(Post {
            id: String::new(),
            ts,
            text,
            loc: Some("Madrid".into()),
            lang: "es",
            kind: None,
        });
    }
    posts.shuffle(&mut g.rng);
    for p in posts.iter_mut() {
        p.id = g.id();
    }
    // Re-posted copies: same text and timestamp under a new id.
    let mut copies = Vec::new();
    for i in 0..10 {
        let src = &posts[i * 37];
        copies.push(Post {
            id: String::new(),
            ts: src.ts,
            text: src.text.clone(),
            loc: src.loc.clone(),
            lang: src.lang,
            kind: None,
        });
    }
    for mut c in copies {
        c.id = g.id();
        posts.push(c);
    }
    posts.sort_by(|a, b| a.ts.cmp(&b.ts).then(a.id.cmp(&b.id)));

    let mut jsonl = String::new();
    for p in &posts {
        let mut rec = json!({
            "id": p.id,
            "created_at": Utc.timestamp_opt(p.ts, 0).unwrap().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "text": p.text,
            "lang": p.lang,
            "source": if p.ts % 5 == 0 { "random_sample" } else { "search_archive" },
        });
        if let Some(loc) = &p.loc {
            rec["user_location"] = json!(loc);
        }
        jsonl.push_str(&rec.to_string());
        jsonl.push('\n');
    }
    fs::write(out.join("posts.jsonl"), jsonl)?;

    // Scripted labels for a seeded sample of the keyword-matching originals.
    let mut labeled: Vec<&Post> = posts.iter().filter(|p| p.kind.is_some()).collect();
    labeled.sort_by(|a, b| a.id.cmp(&b.id));
    labeled.shuffle(&mut g.rng);
    let mut ann: Vec<(String, &str)> = labeled
        .iter()
        .take(220)
        .map(|p| {
            let label = match p.kind.expect("filtered") {
                Kind::Spam => "irrelevant",
                Kind::Promo => "promotional",
                _ => "laypeople",
            };
            (p.id.clone(), label)
        })
        .collect();
    ann.sort();
    let mut tsv = String::new();
    for (id, label) in ann {
        let _ = writeln!(tsv, "{id}\t{label}");
    }
    fs::write(out.join("annotations.tsv"), tsv)?;

    let mut truth = String::new();
    for p in posts
        .iter()
        .filter(|p| matches!(p.kind, Some(Kind::PaEvent | Kind::PaRisk)))
    {
        let theme = if p.kind == Some(Kind::PaEvent) {
            "support_event"
        } else {
            "risk_reduction"
        };
        let _ = writeln!(truth, "{}\t{}", p.id, theme);
    }
    fs::write(out.join("pa_truth.tsv"), truth)?;
    println!("wrote {} posts to {}", posts.len(), out.display());
    Ok(())
}
