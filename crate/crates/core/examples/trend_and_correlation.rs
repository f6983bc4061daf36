//! Monthly aggregation, the Mann-Kendall trend test and Pearson correlation
//! on synthetic series.
//!
//! ```text
//! cargo run --example trend_and_correlation
//! ```

use chrono::{TimeZone, Utc};
use discourse_miner::stats::{mann_kendall, monthly_aggregate, monthly_volume, pearson, GapPolicy, YearMonth};

fn main() -> discourse_miner::Result<()> {
    for series in [vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![3.0, 1.0, 2.0, 5.0, 4.0]] {
        let t = mann_kendall(&series)?;
        println!(
            "{series:?}: S={} var_S={:.3} Z={:.3} p={:.3} {}",
            t.s, t.var_s, t.z, t.p_value, t.verdict
        );
    }

    // A score that declines over two years, observed a few times a month.
    let mut obs = Vec::new();
    for m in 0..24u32 {
        for d in [3, 14, 25] {
            let when = Utc
                .with_ymd_and_hms(2015 + (m / 12) as i32, m % 12 + 1, d, 12, 0, 0)
                .unwrap();
            obs.push((when, 10.0 - 0.2 * m as f64 + (d % 7) as f64 * 0.1));
        }
    }
    let monthly = monthly_aggregate(&obs, GapPolicy::Exclude);
    let t = mann_kendall(&monthly.values())?;
    println!(
        "monthly means over {} months: {} (p={:.2e})",
        monthly.len(),
        t.verdict,
        t.p_value
    );

    // Two volume series that both spike in October.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for m in 1..=12u32 {
        let n = if m == 10 { 12 } else { 2 + m % 3 };
        for i in 0..n {
            let when = Utc.with_ymd_and_hms(2016, m, 1 + i, 0, 0, 0).unwrap();
            a.push(when);
            if i % 2 == 0 {
                b.push(when);
            }
        }
    }
    let range = Some((YearMonth { year: 2016, month: 1 }, YearMonth { year: 2016, month: 12 }));
    let va = monthly_volume(&a, range);
    let vb = monthly_volume(&b, range);
    let c = pearson(&va.all_values(), &vb.all_values())?;
    println!("volume correlation r={:.3} p={:.2e} n={}", c.r, c.p_value, c.n);
    Ok(())
}
