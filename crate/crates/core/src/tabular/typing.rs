//! Coarse and fine-grained data type identification for a list of values.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::values::{parse_boolean, parse_integer, parse_number, parse_temporal, parse_wkt};
use super::values::{Geometry, TemporalValue};

/// Distinct-value bound for the categorical flags.
pub const CATEGORICAL_MAX_DISTINCT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseType {
    Text,
    Numeric,
    Boolean,
    Temporal,
    Spatial,
}

impl CoarseType {
    pub const ALL: [CoarseType; 5] = [
        CoarseType::Text,
        CoarseType::Numeric,
        CoarseType::Boolean,
        CoarseType::Temporal,
        CoarseType::Spatial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoarseType::Text => "text",
            CoarseType::Numeric => "numeric",
            CoarseType::Boolean => "boolean",
            CoarseType::Temporal => "temporal",
            CoarseType::Spatial => "spatial",
        }
    }
}

impl fmt::Display for CoarseType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CoarseType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CoarseType::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown data type {s:?}"))
    }
}

/// The 16 leaves of the data type taxonomy, in feature-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FineType {
    TextCategorical,
    Url,
    Email,
    TextOther,
    Integer,
    Decimal,
    Sequential,
    NumericCategorical,
    NumericOther,
    Boolean,
    Date,
    Time,
    DateTime,
    Point,
    LineString,
    Polygon,
}

impl FineType {
    pub const ALL: [FineType; 16] = [
        FineType::TextCategorical,
        FineType::Url,
        FineType::Email,
        FineType::TextOther,
        FineType::Integer,
        FineType::Decimal,
        FineType::Sequential,
        FineType::NumericCategorical,
        FineType::NumericOther,
        FineType::Boolean,
        FineType::Date,
        FineType::Time,
        FineType::DateTime,
        FineType::Point,
        FineType::LineString,
        FineType::Polygon,
    ];

    /// Position of the flag in the feature vector.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn coarse(self) -> CoarseType {
        use FineType::*;
        match self {
            TextCategorical | Url | Email | TextOther => CoarseType::Text,
            Integer | Decimal | Sequential | NumericCategorical | NumericOther => {
                CoarseType::Numeric
            }
            Boolean => CoarseType::Boolean,
            Date | Time | DateTime => CoarseType::Temporal,
            Point | LineString | Polygon => CoarseType::Spatial,
        }
    }

    pub fn name(self) -> &'static str {
        use FineType::*;
        match self {
            TextCategorical => "TextCategorical",
            Url => "Url",
            Email => "Email",
            TextOther => "TextOther",
            Integer => "Integer",
            Decimal => "Decimal",
            Sequential => "Sequential",
            NumericCategorical => "NumericCategorical",
            NumericOther => "NumericOther",
            Boolean => "Boolean",
            Date => "Date",
            Time => "Time",
            DateTime => "DateTime",
            Point => "Point",
            LineString => "LineString",
            Polygon => "Polygon",
        }
    }

    pub fn from_name(name: &str) -> Option<FineType> {
        FineType::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnTyping {
    pub coarse: CoarseType,
    pub fine: BTreeSet<FineType>,
}

impl ColumnTyping {
    pub fn new(coarse: CoarseType, fine: impl IntoIterator<Item = FineType>) -> Self {
        ColumnTyping {
            coarse,
            fine: fine.into_iter().collect(),
        }
    }

    /// Fine tags are non-empty and all belong to the coarse type.
    pub fn is_consistent(&self) -> bool {
        !self.fine.is_empty() && self.fine.iter().all(|f| f.coarse() == self.coarse)
    }
}

impl fmt::Display for ColumnTyping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{{", self.coarse)?;
        for (i, t) in self.fine.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(t.name())?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypingError {
    #[error("all values are null")]
    AllNull,
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?i)(https?|ftp)://[^\s/$.?#][^\s]*$").unwrap())
}

fn email_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}$").unwrap())
}

/// Strictly more than 90% of `total`.
fn majority(hits: usize, total: usize) -> bool {
    hits * 10 > total * 9
}

/// Classifies the non-null values of a column.
///
/// The coarse type is the first of numeric, boolean, spatial and temporal whose
/// parser accepts more than 90% of the non-null values; otherwise text.
pub fn identify_types(values: &[Option<&str>]) -> Result<ColumnTyping, TypingError> {
    let present: Vec<&str> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(TypingError::AllNull);
    }
    let n = present.len();
    let distinct = present.iter().collect::<HashSet<_>>().len();

    let numbers: Vec<f64> = present.iter().filter_map(|v| parse_number(v)).collect();
    if majority(numbers.len(), n) {
        return Ok(numeric_typing(&present, &numbers, distinct));
    }
    if majority(present.iter().filter(|v| parse_boolean(v).is_some()).count(), n) {
        return Ok(ColumnTyping::new(CoarseType::Boolean, [FineType::Boolean]));
    }
    let geometries: Vec<Geometry> = present.iter().filter_map(|v| parse_wkt(v)).collect();
    if majority(geometries.len(), n) {
        let fine = geometries.iter().map(|g| match g {
            Geometry::Point(_) => FineType::Point,
            Geometry::LineString(_) => FineType::LineString,
            Geometry::Polygon(_) => FineType::Polygon,
        });
        return Ok(ColumnTyping::new(CoarseType::Spatial, fine));
    }
    let temporals: Vec<TemporalValue> = present.iter().filter_map(|v| parse_temporal(v)).collect();
    if majority(temporals.len(), n) {
        let fine = temporals.iter().map(|t| match t {
            TemporalValue::Date(_) => FineType::Date,
            TemporalValue::Time(_) => FineType::Time,
            TemporalValue::DateTime(_) => FineType::DateTime,
        });
        return Ok(ColumnTyping::new(CoarseType::Temporal, fine));
    }

    let mut fine = BTreeSet::new();
    if distinct <= CATEGORICAL_MAX_DISTINCT {
        fine.insert(FineType::TextCategorical);
    }
    if majority(present.iter().filter(|v| url_pattern().is_match(v.trim())).count(), n) {
        fine.insert(FineType::Url);
    }
    if majority(present.iter().filter(|v| email_pattern().is_match(v.trim())).count(), n) {
        fine.insert(FineType::Email);
    }
    if fine.is_empty() {
        fine.insert(FineType::TextOther);
    }
    Ok(ColumnTyping {
        coarse: CoarseType::Text,
        fine,
    })
}

fn numeric_typing(present: &[&str], numbers: &[f64], distinct: usize) -> ColumnTyping {
    let mut fine = BTreeSet::new();
    let integers: Option<Vec<i64>> = present.iter().map(|v| parse_integer(v)).collect();
    let all_integral = numbers.iter().all(|x| x.fract() == 0.0)
        && present
            .iter()
            .filter(|v| parse_number(v).is_some())
            .all(|v| parse_integer(v).is_some());
    fine.insert(if all_integral {
        FineType::Integer
    } else {
        FineType::Decimal
    });
    let sequential = integers.is_some_and(|ints| is_sequential(&ints));
    if sequential {
        fine.insert(FineType::Sequential);
    } else if distinct <= CATEGORICAL_MAX_DISTINCT {
        fine.insert(FineType::NumericCategorical);
    } else {
        fine.insert(FineType::NumericOther);
    }
    ColumnTyping {
        coarse: CoarseType::Numeric,
        fine,
    }
}

/// Pairwise distinct integers whose sorted order steps by exactly one.
fn is_sequential(values: &[i64]) -> bool {
    if values.len() < 2 {
        return false;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[1].checked_sub(w[0]) == Some(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn typing(values: &[&str]) -> ColumnTyping {
        let v: Vec<Option<&str>> = values.iter().map(|s| Some(*s)).collect();
        identify_types(&v).unwrap()
    }

    #[test]
    fn time_column() {
        assert_eq!(
            typing(&["16:30", "17:00", "16:30"]),
            ColumnTyping::new(CoarseType::Temporal, [FineType::Time])
        );
    }

    #[test]
    fn sensor_labels_are_categorical_text() {
        assert_eq!(
            typing(&["S2", "S3", "S1"]),
            ColumnTyping::new(CoarseType::Text, [FineType::TextCategorical])
        );
    }

    #[test]
    fn consecutive_integers_are_sequential() {
        // sorted distinct values 1,2,3,4 step by one
        assert_eq!(
            typing(&["1", "2", "3", "4"]),
            ColumnTyping::new(CoarseType::Numeric, [FineType::Integer, FineType::Sequential])
        );
        assert_eq!(
            typing(&["4", "2", "3", "5"]),
            ColumnTyping::new(CoarseType::Numeric, [FineType::Integer, FineType::Sequential])
        );
        // gap of two breaks the progression
        assert!(!typing(&["1", "2", "4"]).fine.contains(&FineType::Sequential));
        // repeated value violates pairwise distinctness
        assert!(!typing(&["1", "2", "2", "3"]).fine.contains(&FineType::Sequential));
    }

    #[test]
    fn constant_integers_are_categorical() {
        assert_eq!(
            typing(&["7", "7", "7"]),
            ColumnTyping::new(
                CoarseType::Numeric,
                [FineType::Integer, FineType::NumericCategorical]
            )
        );
    }

    #[test]
    fn many_decimals_are_numeric_other() {
        let vals: Vec<String> = (0..30).map(|i| format!("{}.5", i * 3)).collect();
        let refs: Vec<&str> = vals.iter().map(String::as_str).collect();
        assert_eq!(
            typing(&refs),
            ColumnTyping::new(CoarseType::Numeric, [FineType::Decimal, FineType::NumericOther])
        );
    }

    #[test]
    fn wkt_points() {
        assert_eq!(
            typing(&["POINT(1 2)", "POINT(3 4)"]),
            ColumnTyping::new(CoarseType::Spatial, [FineType::Point])
        );
    }

    #[test]
    fn urls_and_emails() {
        let t = typing(&["http://a.org/x", "https://b.org", "https://c.org/y?z=1"]);
        assert_eq!(t.coarse, CoarseType::Text);
        assert!(t.fine.contains(&FineType::Url));
        let t = typing(&["a@b.org", "c.d@e.com"]);
        assert!(t.fine.contains(&FineType::Email));
    }

    #[test]
    fn booleans() {
        assert_eq!(
            typing(&["true", "False", "yes"]),
            ColumnTyping::new(CoarseType::Boolean, [FineType::Boolean])
        );
    }

    #[test]
    fn ninety_percent_is_not_enough() {
        // 9 of 10 numeric is exactly 90%, which does not exceed the threshold
        let mut vals = vec!["1"; 9];
        vals.push("x");
        assert_eq!(typing(&vals).coarse, CoarseType::Text);
        let mut vals: Vec<&str> = (0..10).map(|_| "1").collect();
        vals.push("x");
        assert_eq!(typing(&vals).coarse, CoarseType::Numeric);
    }

    #[test]
    fn nulls_are_excluded_from_the_denominator() {
        let v = [Some("1"), None, None, None, Some("2")];
        assert_eq!(identify_types(&v).unwrap().coarse, CoarseType::Numeric);
    }

    #[test]
    fn all_null_is_an_error() {
        assert_eq!(identify_types(&[None, None]), Err(TypingError::AllNull));
        assert_eq!(identify_types(&[]), Err(TypingError::AllNull));
    }

    #[test]
    fn long_free_text_is_other() {
        let vals: Vec<String> = (0..25).map(|i| format!("Observation number {i}")).collect();
        let refs: Vec<&str> = vals.iter().map(String::as_str).collect();
        assert_eq!(
            typing(&refs),
            ColumnTyping::new(CoarseType::Text, [FineType::TextOther])
        );
    }
}
