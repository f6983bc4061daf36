//! Monthly aggregation, Mann-Kendall trend test and Pearson correlation.

mod special;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

pub use special::{erf, erfc, normal_cdf, normal_two_sided_p, regularized_incomplete_beta, student_t_two_sided_p};

use crate::{Error, Result};

/// Two-sided significance level for trend verdicts.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Shortest series [`mann_kendall`] accepts.
pub const MIN_TREND_LEN: usize = 4;

/// A UTC calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        YearMonth { year, month }
    }

    pub fn of(t: &DateTime<Utc>) -> Self {
        YearMonth {
            year: t.year(),
            month: t.month(),
        }
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            YearMonth::new(self.year + 1, 1)
        } else {
            YearMonth::new(self.year, self.month + 1)
        }
    }

    /// Every month from `self` through `last`, inclusive.
    pub fn through(self, last: YearMonth) -> impl Iterator<Item = YearMonth> {
        std::iter::successors(Some(self), move |m| Some(m.succ())).take_while(move |m| *m <= last)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(YearMonth { year, month })
    }
}

/// What to do with months that have no observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapPolicy {
    /// Leave the month out of the series.
    #[default]
    Exclude,
    /// Emit the month with `n = 0` and a NaN value.
    KeepAsMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonthlyPoint {
    pub month: YearMonth,
    pub value: f64,
    pub n: usize,
}

/// Per-month values in strictly increasing month order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MonthlySeries {
    pub points: Vec<MonthlyPoint>,
}

impl MonthlySeries {
    /// Values of the months that have observations.
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.n > 0).map(|p| p.value).collect()
    }

    /// Every point's value, including empty months.
    pub fn all_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Mean value per UTC calendar month.
pub fn monthly_aggregate(points: &[(DateTime<Utc>, f64)], gaps: GapPolicy) -> MonthlySeries {
    let mut sums: BTreeMap<YearMonth, (f64, usize)> = BTreeMap::new();
    for (t, v) in points {
        let e = sums.entry(YearMonth::of(t)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let (Some(&first), Some(&last)) = (sums.keys().next(), sums.keys().next_back()) else {
        return MonthlySeries::default();
    };
    let mean = |&(sum, n): &(f64, usize)| sum / n as f64;
    let points = match gaps {
        GapPolicy::Exclude => sums
            .iter()
            .map(|(&month, acc)| MonthlyPoint {
                month,
                value: mean(acc),
                n: acc.1,
            })
            .collect(),
        GapPolicy::KeepAsMissing => first
            .through(last)
            .map(|month| match sums.get(&month) {
                Some(acc) => MonthlyPoint {
                    month,
                    value: mean(acc),
                    n: acc.1,
                },
                None => MonthlyPoint {
                    month,
                    value: f64::NAN,
                    n: 0,
                },
            })
            .collect(),
    };
    MonthlySeries { points }
}

/// Post counts per month over `range` (or the span of the data), zero-filled.
/// A month without posts is a real zero volume, unlike a month without
/// scores.
pub fn monthly_volume(timestamps: &[DateTime<Utc>], range: Option<(YearMonth, YearMonth)>) -> MonthlySeries {
    let mut counts: BTreeMap<YearMonth, usize> = BTreeMap::new();
    for t in timestamps {
        *counts.entry(YearMonth::of(t)).or_default() += 1;
    }
    let span = range.or_else(|| Some((*counts.keys().next()?, *counts.keys().next_back()?)));
    let Some((first, last)) = span else {
        return MonthlySeries::default();
    };
    MonthlySeries {
        points: first
            .through(last)
            .map(|month| {
                let n = counts.get(&month).copied().unwrap_or(0);
                MonthlyPoint {
                    month,
                    value: n as f64,
                    n,
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    NotSignificant,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::NotSignificant => "not significant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendResult {
    pub n: usize,
    pub s: i64,
    pub var_s: f64,
    pub z: f64,
    pub p_value: f64,
    pub verdict: Trend,
}

fn sign(d: f64) -> i64 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Sizes of the groups of exactly equal values.
fn tie_group_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut sizes = Vec::new();
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            sizes.push(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        sizes.push(run);
    }
    sizes
}

/// Mann-Kendall trend test with tie-corrected variance and continuity
/// corrected normal approximation.
pub fn mann_kendall(series: &[f64]) -> Result<TrendResult> {
    let n = series.len();
    if n < MIN_TREND_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: MIN_TREND_LEN,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("trend series contains a non-finite value".into()));
    }

    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += sign(series[j] - series[i]);
        }
    }

    let term = |t: usize| {
        let t = t as f64;
        t * (t - 1.0) * (2.0 * t + 5.0)
    };
    let ties: f64 = tie_group_sizes(series).into_iter().filter(|&t| t > 1).map(term).sum();
    let var_s = ((term(n) - ties) / 18.0).max(0.0);

    if var_s == 0.0 {
        return Ok(TrendResult {
            n,
            s,
            var_s,
            z: 0.0,
            p_value: 1.0,
            verdict: Trend::NotSignificant,
        });
    }

    let sd = var_s.sqrt();
    let z = match s.signum() {
        1 => (s - 1) as f64 / sd,
        -1 => (s + 1) as f64 / sd,
        _ => 0.0,
    };
    let p_value = normal_two_sided_p(z);
    let verdict = if p_value < SIGNIFICANCE_LEVEL && z > 0.0 {
        Trend::Increasing
    } else if p_value < SIGNIFICANCE_LEVEL && z < 0.0 {
        Trend::Decreasing
    } else {
        Trend::NotSignificant
    };
    Ok(TrendResult {
        n,
        s,
        var_s,
        z,
        p_value,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation with a two-sided Student-t p-value on `n - 2`
/// degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::SeriesTooShort { len: n, min: 3 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "correlation input contains a non-finite value".into(),
        ));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        student_t_two_sided_p(t, df)
    };
    Ok(CorrelationResult { r, p_value, n })
}

/// Writes `series_name,n,S,var_S,Z,p_value,verdict`.
pub fn write_trend_report(path: &Path, rows: &[(String, TrendResult)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["series_name", "n", "S", "var_S", "Z", "p_value", "verdict"])?;
    for (name, t) in rows {
        w.write_record([
            name.clone(),
            t.n.to_string(),
            t.s.to_string(),
            t.var_s.to_string(),
            t.z.to_string(),
            t.p_value.to_string(),
            t.verdict.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `topic,r,p_value,n`.
pub fn write_correlation_report(path: &Path, rows: &[(String, CorrelationResult)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["topic", "r", "p_value", "n"])?;
    for (topic, c) in rows {
        w.write_record([topic.clone(), c.r.to_string(), c.p_value.to_string(), c.n.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(y: i32, m: u32, d: u32, hh: u32, mm: u32, ss: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(y, m, d, hh, mm, ss).unwrap()
    }

    #[test]
    fn monthly_mean() {
        let s = monthly_aggregate(
            &[(at(2017, 3, 2, 0, 0, 0), 4.0), (at(2017, 3, 20, 0, 0, 0), 6.0)],
            GapPolicy::Exclude,
        );
        assert_eq!(
            s.points,
            vec![MonthlyPoint {
                month: YearMonth::new(2017, 3),
                value: 5.0,
                n: 2
            }]
        );
    }

    #[test]
    fn month_boundary_and_gaps() {
        let pts = [
            (at(2017, 3, 31, 23, 59, 59), 1.0),
            (at(2017, 4, 1, 0, 0, 0), 2.0),
            (at(2017, 6, 1, 0, 0, 0), 3.0),
        ];
        let s = monthly_aggregate(&pts, GapPolicy::Exclude);
        let months: Vec<String> = s.points.iter().map(|p| p.month.to_string()).collect();
        assert_eq!(months, ["2017-03", "2017-04", "2017-06"]);

        let kept = monthly_aggregate(&pts, GapPolicy::KeepAsMissing);
        assert_eq!(kept.len(), 4);
        assert_eq!(kept.points[2].n, 0);
        assert!(kept.points[2].value.is_nan());
        assert_eq!(kept.values(), vec![1.0, 2.0, 3.0]);
        assert!(monthly_aggregate(&[], GapPolicy::Exclude).is_empty());
    }

    #[test]
    fn volume_fills_zeros_across_years() {
        let v = monthly_volume(
            &[
                at(2016, 11, 5, 0, 0, 0),
                at(2017, 2, 1, 0, 0, 0),
                at(2017, 2, 3, 0, 0, 0),
            ],
            None,
        );
        let vals: Vec<f64> = v.points.iter().map(|p| p.value).collect();
        assert_eq!(vals, vec![1.0, 0.0, 0.0, 2.0]);
        let wide = monthly_volume(&[], Some((YearMonth::new(2013, 1), YearMonth::new(2013, 3))));
        assert_eq!(wide.values(), Vec::<f64>::new());
        assert_eq!(wide.len(), 3);
    }

    #[test]
    fn year_month_parse() {
        assert_eq!("2017-03".parse::<YearMonth>().unwrap(), YearMonth::new(2017, 3));
        assert!("2017-13".parse::<YearMonth>().is_err());
    }

    #[test]
    fn mk_monotone_increasing() {
        let t = mann_kendall(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(t.s, 10);
        assert!((t.p_value - 0.0275).abs() < 1e-3);
        assert_eq!(t.verdict, Trend::Increasing);
    }

    #[test]
    fn mk_all_ties() {
        let t = mann_kendall(&[7.0; 5]).unwrap();
        assert_eq!((t.s, t.z, t.verdict), (0, 0.0, Trend::NotSignificant));
        assert_eq!(t.var_s, 0.0);
    }

    #[test]
    fn mk_mixed() {
        let t = mann_kendall(&[3.0, 1.0, 2.0, 5.0, 4.0]).unwrap();
        assert_eq!(t.s, 4);
        assert!((t.var_s - 50.0 / 3.0).abs() < 1e-12);
        assert!((t.z - 3.0 / (50.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((t.p_value - 0.462).abs() < 1e-3);
        assert_eq!(t.verdict, Trend::NotSignificant);
    }

    #[test]
    fn mk_too_short() {
        let err = mann_kendall(&[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("series too short"));
    }

    #[test]
    fn mk_decreasing_sign() {
        let t = mann_kendall(&[9.0, 8.0, 8.0, 6.0, 5.0, 3.0, 1.0]).unwrap();
        assert!(t.z < 0.0);
        assert_eq!(t.verdict, Trend::Decreasing);
    }

    #[test]
    fn pearson_fixed_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&x, &x).unwrap().r, 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &neg).unwrap().r, -1.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap().r;
        assert!((r - 9.0 / 84f64.sqrt()).abs() < 1e-12_f64);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateSeries(_))
        ));
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_p_value_against_statrs() {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let x = [1.0, 3.0, 2.0, 5.0, 4.0, 7.0, 6.0, 9.0];
        let y = [2.0, 1.0, 4.0, 3.0, 7.0, 5.0, 8.0, 6.0];
        let c = pearson(&x, &y).unwrap();
        let df = 6.0;
        let t = c.r * (df / (1.0 - c.r * c.r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).unwrap();
        let want = 2.0 * (1.0 - dist.cdf(t.abs()));
        assert!((c.p_value - want).abs() < 1e-10, "{} vs {}", c.p_value, want);
    }
}
