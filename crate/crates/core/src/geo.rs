//! Offline mapping of free-text author locations to US states.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::sentiment::{EmotionScores, EmotionTable};
use crate::{Error, Result};

const BUNDLED: &str = include_str!("../data/gazetteer.csv");

pub const STATES: [(&str, &str); 51] = [
    ("AL", "Alabama"),
    ("AK", "Alaska"),
    ("AZ", "Arizona"),
    ("AR", "Arkansas"),
    ("CA", "California"),
    ("CO", "Colorado"),
    ("CT", "Connecticut"),
    ("DE", "Delaware"),
    ("DC", "District of Columbia"),
    ("FL", "Florida"),
    ("GA", "Georgia"),
    ("HI", "Hawaii"),
    ("ID", "Idaho"),
    ("IL", "Illinois"),
    ("IN", "Indiana"),
    ("IA", "Iowa"),
    ("KS", "Kansas"),
    ("KY", "Kentucky"),
    ("LA", "Louisiana"),
    ("ME", "Maine"),
    ("MD", "Maryland"),
    ("MA", "Massachusetts"),
    ("MI", "Michigan"),
    ("MN", "Minnesota"),
    ("MS", "Mississippi"),
    ("MO", "Missouri"),
    ("MT", "Montana"),
    ("NE", "Nebraska"),
    ("NV", "Nevada"),
    ("NH", "New Hampshire"),
    ("NJ", "New Jersey"),
    ("NM", "New Mexico"),
    ("NY", "New York"),
    ("NC", "North Carolina"),
    ("ND", "North Dakota"),
    ("OH", "Ohio"),
    ("OK", "Oklahoma"),
    ("OR", "Oregon"),
    ("PA", "Pennsylvania"),
    ("RI", "Rhode Island"),
    ("SC", "South Carolina"),
    ("SD", "South Dakota"),
    ("TN", "Tennessee"),
    ("TX", "Texas"),
    ("UT", "Utah"),
    ("VT", "Vermont"),
    ("VA", "Virginia"),
    ("WA", "Washington"),
    ("WV", "West Virginia"),
    ("WI", "Wisconsin"),
    ("WY", "Wyoming"),
];

/// One of the 50 states or DC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateCode(&'static str);

impl StateCode {
    pub fn parse(code: &str) -> Option<Self> {
        STATES
            .iter()
            .find(|(c, _)| c.eq_ignore_ascii_case(code.trim()))
            .map(|(c, _)| StateCode(c))
    }

    pub fn as_str(self) -> &'static str {
        self.0
    }

    pub fn name(self) -> &'static str {
        STATES.iter().find(|(c, _)| *c == self.0).map(|(_, n)| *n).unwrap()
    }

    pub fn all() -> impl Iterator<Item = StateCode> {
        STATES.iter().map(|(c, _)| StateCode(c))
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl Serialize for StateCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.0)
    }
}

impl<'de> Deserialize<'de> for StateCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        StateCode::parse(&raw).ok_or_else(|| serde::de::Error::custom(format!("unknown state code {raw:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    StateName,
    Code,
    City,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Known(StateCode, Kind),
    Ambiguous,
}

/// Lowercase place names mapped to states. Names listed without a state are
/// kept as blockers: they consume the words they cover but never assign.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    places: HashMap<String, Place>,
    max_words: usize,
}

fn normalize_place(raw: &str) -> String {
    tokens(raw).into_iter().map(|t| t.norm).collect::<Vec<_>>().join(" ")
}

impl Gazetteer {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED, Path::new("<bundled gazetteer>")).expect("bundled gazetteer is valid")
    }

    /// Parses `place_name,state_code` rows. State names and codes are always
    /// present; an empty code marks an ambiguous name.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut places = HashMap::new();
        for (code, name) in STATES {
            let st = StateCode(code);
            places.insert(normalize_place(name), Place::Known(st, Kind::StateName));
            places.insert(code.to_ascii_lowercase(), Place::Known(st, Kind::Code));
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse(origin, line, e.to_string()))?;
            let name = rec.get(0).unwrap_or_default();
            let code = rec.get(1).unwrap_or_default().trim();
            let key = normalize_place(name);
            if key.is_empty() {
                return Err(Error::parse(origin, line, "empty place name"));
            }
            if places.contains_key(&key) {
                continue;
            }
            let place = if code.is_empty() {
                Place::Ambiguous
            } else {
                let st = StateCode::parse(code)
                    .ok_or_else(|| Error::parse(origin, line, format!("unknown state code {code:?}")))?;
                Place::Known(st, Kind::City)
            };
            places.insert(key, place);
        }
        let max_words = places.keys().map(|k| k.split(' ').count()).max().unwrap_or(1);
        Ok(Gazetteer { places, max_words })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn len(&self) -> usize {
        self.places.len()
    }

    pub fn is_empty(&self) -> bool {
        self.places.is_empty()
    }

    /// State for an exact (normalized) place name, if unambiguous.
    pub fn lookup(&self, name: &str) -> Option<StateCode> {
        match self.places.get(&normalize_place(name)) {
            Some(Place::Known(st, _)) => Some(*st),
            _ => None,
        }
    }

    /// Place names that map to a state, sorted.
    pub fn entries(&self) -> Vec<(&str, StateCode)> {
        let mut out: Vec<_> = self
            .places
            .iter()
            .filter_map(|(k, p)| match p {
                Place::Known(st, _) => Some((k.as_str(), *st)),
                Place::Ambiguous => None,
            })
            .collect();
        out.sort();
        out
    }

    pub fn ambiguous_names(&self) -> BTreeSet<&str> {
        self.places
            .iter()
            .filter(|(_, p)| **p == Place::Ambiguous)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

#[derive(Debug)]
struct Token {
    norm: String,
    bare_code: bool,
    uppercase: bool,
    segment: usize,
}

fn tokens(raw: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (segment, part) in raw.split([',', ';', '|', '/']).enumerate() {
        for word in part.split(|c: char| c.is_whitespace() || c == '(' || c == ')') {
            let had_period = word.contains('.');
            let cleaned: String = word
                .chars()
                .filter(|&c| c != '.')
                .collect::<String>()
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_string();
            if cleaned.is_empty() || cleaned.chars().all(|c| c.is_ascii_digit()) {
                continue;
            }
            let bare_code = !had_period && cleaned.len() == 2 && cleaned.chars().all(|c| c.is_ascii_alphabetic());
            out.push(Token {
                uppercase: cleaned.chars().all(|c| c.is_ascii_uppercase()),
                norm: cleaned.to_lowercase(),
                bare_code,
                segment,
            });
        }
    }
    out
}

/// A code token is trusted when it ends a later comma segment
/// ("Gainesville, fl"), stands alone ("FL"), or is written in capitals
/// at the very end ("Gainesville FL").
fn code_allowed(toks: &[Token], i: usize) -> bool {
    let t = &toks[i];
    if !t.bare_code {
        return false;
    }
    let ends_segment = toks.get(i + 1).is_none_or(|n| n.segment != t.segment);
    let is_last = i + 1 == toks.len();
    (toks.len() == 1) || (ends_segment && t.segment > 0) || (is_last && t.uppercase)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAssignment {
    pub id: String,
    pub state: Option<StateCode>,
    pub matched_on: Option<String>,
}

/// Resolves a location to a state, returning the decisive place name.
pub fn geocode_detail(location: &str, gaz: &Gazetteer) -> Option<(StateCode, String)> {
    let toks = tokens(location);
    let mut state_level: Vec<(StateCode, String)> = Vec::new();
    let mut cities: Vec<(StateCode, String)> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut matched = 0;
        let max = gaz.max_words.min(toks.len() - i);
        for len in (1..=max).rev() {
            let key = toks[i..i + len]
                .iter()
                .map(|t| t.norm.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let Some(place) = gaz.places.get(&key) else { continue };
            match *place {
                Place::Known(st, Kind::Code) => {
                    if !code_allowed(&toks, i) {
                        continue;
                    }
                    state_level.push((st, key));
                }
                Place::Known(st, Kind::StateName) => state_level.push((st, key)),
                Place::Known(st, Kind::City) => cities.push((st, key)),
                Place::Ambiguous => {}
            }
            matched = len;
            break;
        }
        i += matched.max(1);
    }
    let pick = if state_level.is_empty() { cities } else { state_level };
    let distinct: HashSet<StateCode> = pick.iter().map(|(s, _)| *s).collect();
    if distinct.len() == 1 {
        pick.into_iter().next()
    } else {
        None
    }
}

pub fn geocode(location: &str, gaz: &Gazetteer) -> Option<StateCode> {
    geocode_detail(location, gaz).map(|(s, _)| s)
}

pub fn assign(id: &str, location: Option<&str>, gaz: &Gazetteer) -> StateAssignment {
    let hit = location.and_then(|l| geocode_detail(l, gaz));
    StateAssignment {
        id: id.to_string(),
        state: hit.as_ref().map(|(s, _)| *s),
        matched_on: hit.map(|(_, m)| m),
    }
}

/// Per-state mean emotion scores for assigned posts. Every scored id must
/// have an assignment.
pub fn state_table(
    assignments: &[StateAssignment],
    scores: &[(String, EmotionScores)],
    categories: &[String],
) -> Result<EmotionTable> {
    let by_id: HashMap<&str, Option<StateCode>> = assignments.iter().map(|a| (a.id.as_str(), a.state)).collect();
    let missing: Vec<&str> = scores
        .iter()
        .filter(|(id, _)| !by_id.contains_key(id.as_str()))
        .map(|(id, _)| id.as_str())
        .collect();
    if !missing.is_empty() {
        let shown = missing.iter().take(10).copied().collect::<Vec<_>>().join(", ");
        return Err(Error::InvalidInput(format!(
            "{} scored posts have no state assignment: {shown}",
            missing.len()
        )));
    }
    EmotionTable::from_groups(
        "state",
        categories,
        scores
            .iter()
            .filter_map(|(id, s)| by_id[id.as_str()].map(|st| (st.to_string(), s))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gz() -> Gazetteer {
        Gazetteer::bundled()
    }

    fn code(s: &str) -> Option<StateCode> {
        StateCode::parse(s)
    }

    #[test]
    fn fifty_states_and_dc() {
        assert_eq!(StateCode::all().count(), 51);
        assert_eq!(code("ms").unwrap().name(), "Mississippi");
        assert!(code("XX").is_none());
    }

    #[test]
    fn explicit_code() {
        assert_eq!(geocode("Gainesville, FL", &gz()), code("FL"));
    }

    #[test]
    fn non_us() {
        assert_eq!(geocode("Paris, France", &gz()), None);
    }

    #[test]
    fn full_state_name() {
        assert_eq!(geocode("new york", &gz()), code("NY"));
        let (st, on) = geocode_detail("new york", &gz()).unwrap();
        assert_eq!((st.as_str(), on.as_str()), ("NY", "new york"));
    }

    #[test]
    fn city_inference() {
        let g = gz();
        assert_eq!(geocode("Houston", &g), code("TX"));
        assert_eq!(geocode("St. Louis", &g), code("MO"));
        assert_eq!(geocode("Salt Lake City", &g), code("UT"));
        assert_eq!(geocode("Washington, D.C.", &g), code("DC"));
        assert_eq!(geocode("somewhere in Jackson MS", &g), code("MS"));
    }

    #[test]
    fn longest_entry_wins() {
        assert_eq!(geocode("West Virginia", &gz()), code("WV"));
        assert_eq!(geocode("new york city", &gz()), code("NY"));
    }

    #[test]
    fn state_beats_city() {
        assert_eq!(geocode("Houston, MS", &gz()), code("MS"));
        assert_eq!(geocode("Miami, Ohio", &gz()), code("OH"));
    }

    #[test]
    fn ambiguous_city_abstains_without_qualifier() {
        let g = gz();
        assert_eq!(geocode("Portland", &g), None);
        assert_eq!(geocode("Portland, OR", &g), code("OR"));
        assert_eq!(geocode("Portland, Maine", &g), code("ME"));
        assert_eq!(geocode("Kansas City", &g), None);
    }

    #[test]
    fn lowercase_words_are_not_codes() {
        let g = gz();
        assert_eq!(geocode("living in the moment", &g), None);
        assert_eq!(geocode("me", &g), code("ME"));
        assert_eq!(geocode("Orlando fl", &g), code("FL"));
        assert_eq!(geocode("L.A.", &g), None);
    }

    #[test]
    fn conflicting_states_abstain() {
        assert_eq!(geocode("Texas / California", &gz()), None);
    }

    #[test]
    fn zip_codes_ignored() {
        assert_eq!(geocode("Austin, TX 78701", &gz()), code("TX"));
    }

    #[test]
    fn empty_location() {
        assert_eq!(geocode("", &gz()), None);
        let a = assign("1", None, &gz());
        assert_eq!(a.state, None);
        assert_eq!(a.matched_on, None);
    }

    #[test]
    fn bundled_values_are_valid_codes() {
        let g = gz();
        assert!(g.entries().len() > 300);
        assert!(g.ambiguous_names().contains("portland"));
    }

    #[test]
    fn csv_rejects_bad_code() {
        assert!(Gazetteer::parse("place_name,state_code\nAtlantis,ZZ\n", Path::new("x")).is_err());
    }

    fn scores(v: f64) -> EmotionScores {
        EmotionScores {
            token_count: 1,
            hits: vec![0; 5],
            percentages: vec![v, 0.0, 0.0, 2.0 * v, 0.0],
        }
    }

    fn cats() -> Vec<String> {
        crate::sentiment::DEFAULT_CATEGORIES
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn single_state_table_matches_overall_means() {
        let asg: Vec<_> = ["a", "b"]
            .iter()
            .map(|id| StateAssignment {
                id: id.to_string(),
                state: code("MS"),
                matched_on: None,
            })
            .collect();
        let sc = vec![("a".to_string(), scores(10.0)), ("b".to_string(), scores(20.0))];
        let t = state_table(&asg, &sc, &cats()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].means[0], 15.0);
        assert_eq!(t.rows[0].n, 2);
        assert_eq!(t.argmax("anger").unwrap().group, "MS");
    }

    #[test]
    fn unassigned_posts_are_omitted_and_sorted() {
        let asg = vec![
            StateAssignment {
                id: "a".into(),
                state: code("TX"),
                matched_on: None,
            },
            StateAssignment {
                id: "b".into(),
                state: None,
                matched_on: None,
            },
            StateAssignment {
                id: "c".into(),
                state: code("AL"),
                matched_on: None,
            },
        ];
        let sc: Vec<_> = ["a", "b", "c"].iter().map(|id| (id.to_string(), scores(1.0))).collect();
        let t = state_table(&asg, &sc, &cats()).unwrap();
        let keys: Vec<_> = t.rows.iter().map(|r| r.group.as_str()).collect();
        assert_eq!(keys, vec!["AL", "TX"]);
    }

    #[test]
    fn join_mismatch_lists_ids() {
        let asg = vec![StateAssignment {
            id: "a".into(),
            state: code("TX"),
            matched_on: None,
        }];
        let sc = vec![("a".to_string(), scores(1.0)), ("zz".to_string(), scores(1.0))];
        let err = state_table(&asg, &sc, &cats()).unwrap_err();
        assert!(err.to_string().contains("zz"), "{err}");
    }

    proptest! {
        #[test]
        fn code_token_is_never_overridden(city_idx in 0usize..400, st_idx in 0usize..51) {
            let g = gz();
            let entries = g.entries();
            let (city, _) = entries[city_idx % entries.len()];
            let st = StateCode(STATES[st_idx].0);
            let loc = format!("{city}, {}", st.as_str());
            let got = geocode(&loc, &g);
            prop_assert!(got.is_none() || got == Some(st), "{loc} -> {got:?}");
        }

        #[test]
        fn deterministic(s in "[A-Za-z ,.]{0,40}") {
            let g = gz();
            prop_assert_eq!(geocode(&s, &g), geocode(&s, &g));
        }
    }
}
