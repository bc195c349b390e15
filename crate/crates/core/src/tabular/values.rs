//! Lexical parsers for the non-text data types.

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

/// Returns the value as a finite real when it is numeric.
pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if s.is_empty() || s.bytes().any(|b| b.is_ascii_alphabetic() && b != b'e' && b != b'E') {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_integer(raw: &str) -> Option<i64> {
    raw.trim().parse::<i64>().ok()
}

pub fn parse_boolean(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemporalValue {
    Date(NaiveDate),
    Time(NaiveTime),
    DateTime(NaiveDateTime),
}

impl TemporalValue {
    /// Seconds since the Unix epoch. Dates sit at midnight UTC, bare times on 1970-01-01.
    pub fn timestamp(&self) -> f64 {
        match self {
            TemporalValue::Date(d) => d.and_time(NaiveTime::MIN).and_utc().timestamp() as f64,
            TemporalValue::Time(t) => {
                t.num_seconds_from_midnight() as f64 + t.nanosecond() as f64 * 1e-9
            }
            TemporalValue::DateTime(dt) => {
                let utc = dt.and_utc();
                utc.timestamp() as f64 + utc.timestamp_subsec_nanos() as f64 * 1e-9
            }
        }
    }
}

const DATETIME_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%d.%m.%Y %H:%M:%S",
    "%d.%m.%Y %H:%M",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%Y %H:%M",
];

const DATE_FORMATS: &[&str] = &[
    "%Y-%m-%d", "%d.%m.%Y", "%m/%d/%Y", "%Y/%m/%d", "%d %B %Y", "%B %d, %Y", "%d %b %Y",
    "%b %d, %Y",
];

const TIME_FORMATS: &[&str] = &["%H:%M:%S%.f", "%H:%M"];

pub fn parse_temporal(raw: &str) -> Option<TemporalValue> {
    let s = raw.trim();
    // Shortest plausible temporal lexical form is "1:00".
    if s.len() < 4 || !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(TemporalValue::DateTime(dt.naive_utc()));
    }
    for f in DATETIME_FORMATS {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, f) {
            return Some(TemporalValue::DateTime(dt));
        }
    }
    for f in DATE_FORMATS {
        if let Ok(d) = NaiveDate::parse_from_str(s, f) {
            return Some(TemporalValue::Date(d));
        }
    }
    for f in TIME_FORMATS {
        if let Ok(t) = NaiveTime::parse_from_str(s, f) {
            return Some(TemporalValue::Time(t));
        }
    }
    None
}

pub type Coord = (f64, f64);

/// Well-Known Text geometry (2D only).
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coord),
    LineString(Vec<Coord>),
    Polygon(Vec<Vec<Coord>>),
}

impl Geometry {
    /// 0 for points, total length for line strings, area for polygons (holes subtracted).
    pub fn measure(&self) -> f64 {
        match self {
            Geometry::Point(_) => 0.0,
            Geometry::LineString(pts) => pts
                .windows(2)
                .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
                .sum(),
            Geometry::Polygon(rings) => {
                let mut rings = rings.iter().map(|r| shoelace(r).abs());
                let outer = rings.next().unwrap_or(0.0);
                (outer - rings.sum::<f64>()).max(0.0)
            }
        }
    }
}

fn shoelace(ring: &[Coord]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..ring.len() {
        let (x0, y0) = ring[i];
        let (x1, y1) = ring[(i + 1) % ring.len()];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

pub fn parse_wkt(raw: &str) -> Option<Geometry> {
    let s = raw.trim();
    let open = s.find('(')?;
    let keyword = s[..open].trim().to_ascii_uppercase();
    let body = s[open..].trim();
    if !body.ends_with(')') {
        return None;
    }
    let inner = &body[1..body.len() - 1];
    match keyword.as_str() {
        "POINT" => {
            let pts = parse_coords(inner)?;
            (pts.len() == 1).then(|| Geometry::Point(pts[0]))
        }
        "LINESTRING" => {
            let pts = parse_coords(inner)?;
            (pts.len() >= 2).then_some(Geometry::LineString(pts))
        }
        "POLYGON" => {
            let mut rings = Vec::new();
            let mut rest = inner.trim();
            while !rest.is_empty() {
                let rest_body = rest.strip_prefix('(')?;
                let close = rest_body.find(')')?;
                let ring = parse_coords(&rest_body[..close])?;
                if ring.len() < 3 {
                    return None;
                }
                rings.push(ring);
                rest = rest_body[close + 1..].trim_start();
                if let Some(r) = rest.strip_prefix(',') {
                    rest = r.trim_start();
                } else if !rest.is_empty() {
                    return None;
                }
            }
            (!rings.is_empty()).then_some(Geometry::Polygon(rings))
        }
        _ => None,
    }
}

fn parse_coords(list: &str) -> Option<Vec<Coord>> {
    list.split(',')
        .map(|pair| {
            let mut it = pair.split_whitespace();
            let x = parse_number(it.next()?)?;
            let y = parse_number(it.next()?)?;
            it.next().is_none().then_some((x, y))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number(" 3.5 "), Some(3.5));
        assert_eq!(parse_number("-1e3"), Some(-1000.0));
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("NaN"), None);
        assert_eq!(parse_number("S2"), None);
        assert_eq!(parse_integer("+7"), Some(7));
        assert_eq!(parse_integer("7.0"), None);
    }

    #[test]
    fn temporal_kinds() {
        assert!(matches!(parse_temporal("16:30"), Some(TemporalValue::Time(_))));
        assert!(matches!(parse_temporal("2021-03-04"), Some(TemporalValue::Date(_))));
        assert!(matches!(
            parse_temporal("2021-03-04T10:00:00Z"),
            Some(TemporalValue::DateTime(_))
        ));
        assert!(matches!(
            parse_temporal("2021-03-04 10:00"),
            Some(TemporalValue::DateTime(_))
        ));
        assert_eq!(parse_temporal("cloudy"), None);
        assert_eq!(parse_temporal("1999"), None);
    }

    #[test]
    fn timestamps() {
        assert_eq!(parse_temporal("16:30").unwrap().timestamp(), 59400.0);
        assert_eq!(parse_temporal("17:00").unwrap().timestamp(), 61200.0);
        assert_eq!(parse_temporal("1970-01-02").unwrap().timestamp(), 86400.0);
        assert_eq!(
            parse_temporal("1970-01-01T01:00:00+01:00").unwrap().timestamp(),
            0.0
        );
    }

    #[test]
    fn wkt_measures() {
        assert_eq!(parse_wkt("POINT(1 2)"), Some(Geometry::Point((1.0, 2.0))));
        assert_eq!(parse_wkt("LINESTRING(0 0, 3 4)").unwrap().measure(), 5.0);
        let square = parse_wkt("POLYGON((0 0, 2 0, 2 2, 0 2, 0 0))").unwrap();
        assert_eq!(square.measure(), 4.0);
        let holed =
            parse_wkt("POLYGON((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 2 1, 2 2, 1 2, 1 1))").unwrap();
        assert_eq!(holed.measure(), 15.0);
        assert_eq!(parse_wkt("POINT(1)"), None);
        assert_eq!(parse_wkt("CIRCLE(1 2)"), None);
        assert_eq!(parse_wkt("point (1 2)"), Some(Geometry::Point((1.0, 2.0))));
    }
}
