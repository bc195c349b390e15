//! Random knowledge graphs with a varied mix of literal kinds.

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::rdf::{vocab, RdfGraph, Term};

const WORDS: &[&str] = &[
    "amber", "basin", "cedar", "delta", "ember", "fjord", "grove", "harbor", "iris", "juniper",
    "kestrel", "lagoon", "meadow", "nectar", "orchid", "prairie", "quartz", "raven", "summit",
    "tundra", "umber", "valley", "willow", "xenon", "yarrow", "zephyr", "atlas", "bramble",
    "canyon", "dune", "estuary", "falcon",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PropertyKind {
    Label,
    Categorical,
    Integer,
    Decimal,
    Date,
    Time,
    DateTime,
    Boolean,
    Url,
    Email,
    Text,
    Point,
}

impl PropertyKind {
    pub const BASIC: [PropertyKind; 11] = [
        PropertyKind::Label,
        PropertyKind::Categorical,
        PropertyKind::Integer,
        PropertyKind::Decimal,
        PropertyKind::Date,
        PropertyKind::Time,
        PropertyKind::DateTime,
        PropertyKind::Boolean,
        PropertyKind::Url,
        PropertyKind::Email,
        PropertyKind::Text,
    ];

    fn stem(self) -> &'static str {
        match self {
            PropertyKind::Label => "label",
            PropertyKind::Categorical => "category",
            PropertyKind::Integer => "count",
            PropertyKind::Decimal => "measure",
            PropertyKind::Date => "date",
            PropertyKind::Time => "time",
            PropertyKind::DateTime => "timestamp",
            PropertyKind::Boolean => "flag",
            PropertyKind::Url => "homepage",
            PropertyKind::Email => "contact",
            PropertyKind::Text => "description",
            PropertyKind::Point => "location",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub classes: (usize, usize),
    pub instances: (usize, usize),
    pub properties: (usize, usize),
    /// Class relations beyond the spanning tree.
    pub extra_links: usize,
    pub with_points: bool,
    pub namespace: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: (3, 6),
            instances: (10, 40),
            properties: (2, 5),
            extra_links: 1,
            with_points: false,
            namespace: "http://example.org/synthetic/".to_string(),
        }
    }
}

/// Value generator of one data type relation.
#[derive(Debug, Clone)]
enum Generator {
    Label(String),
    Categorical(Vec<String>),
    Integer(i64, i64),
    Decimal(Normal<f64>),
    Date(NaiveDate, i64),
    Time(u32, u32),
    DateTime(NaiveDate, i64),
    Boolean(f64),
    Url(String),
    Email(String),
    Text(usize, usize),
    Point(f64, f64, f64),
}

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS[rng.gen_range(0..WORDS.len())]
}

impl Generator {
    fn new(kind: PropertyKind, rng: &mut ChaCha8Rng) -> Self {
        match kind {
            PropertyKind::Label => Generator::Label(word(rng).to_string()),
            PropertyKind::Categorical => {
                let n = rng.gen_range(2..8);
                let mut words: Vec<String> = WORDS.choose_multiple(rng, n).map(|w| w.to_string()).collect();
                words.sort();
                Generator::Categorical(words)
            }
            PropertyKind::Integer => {
                let scale = 10i64.pow(rng.gen_range(1..6));
                let lo = rng.gen_range(-scale / 2..scale);
                Generator::Integer(lo, lo + rng.gen_range(scale / 4..=scale).max(2))
            }
            PropertyKind::Decimal => {
                let mu = rng.gen_range(-1000.0..1000.0);
                let sigma = 10f64.powf(rng.gen_range(-1.0..3.0));
                Generator::Decimal(Normal::new(mu, sigma).expect("positive sigma"))
            }
            PropertyKind::Date => Generator::Date(
                NaiveDate::from_ymd_opt(rng.gen_range(1900..2020), 1, 1).expect("valid date"),
                rng.gen_range(30..20_000),
            ),
            PropertyKind::Time => {
                let lo = rng.gen_range(0..20);
                Generator::Time(lo, rng.gen_range(lo + 1..=23))
            }
            PropertyKind::DateTime => Generator::DateTime(
                NaiveDate::from_ymd_opt(rng.gen_range(1990..2024), 1, 1).expect("valid date"),
                rng.gen_range(1..2_000),
            ),
            PropertyKind::Boolean => Generator::Boolean(rng.gen_range(0.1..0.9)),
            PropertyKind::Url => Generator::Url(word(rng).to_string()),
            PropertyKind::Email => Generator::Email(word(rng).to_string()),
            PropertyKind::Text => {
                let lo = rng.gen_range(2..8);
                Generator::Text(lo, lo + rng.gen_range(1..10))
            }
            PropertyKind::Point => Generator::Point(
                rng.gen_range(-170.0..170.0),
                rng.gen_range(-80.0..80.0),
                rng.gen_range(0.01..5.0),
            ),
        }
    }

    fn value(&self, i: usize, rng: &mut ChaCha8Rng) -> Term {
        let typed = |v: String, dt: &str| Term::typed(v, format!("{}{dt}", vocab::XSD));
        match self {
            Generator::Label(stem) => Term::literal(format!("{stem}-{i:04}")),
            Generator::Categorical(words) => Term::literal(words.choose(rng).expect("non-empty").clone()),
            Generator::Integer(lo, hi) => Term::typed(rng.gen_range(*lo..*hi).to_string(), vocab::XSD_INTEGER),
            Generator::Decimal(d) => Term::typed(format!("{:.2}", d.sample(rng)), vocab::XSD_DECIMAL),
            Generator::Date(start, span) => {
                let d = *start + Duration::days(rng.gen_range(0..*span));
                typed(d.format("%Y-%m-%d").to_string(), "date")
            }
            Generator::Time(lo, hi) => {
                let t = NaiveTime::from_hms_opt(rng.gen_range(*lo..*hi), rng.gen_range(0..60), 0).expect("valid time");
                typed(t.format("%H:%M:%S").to_string(), "time")
            }
            Generator::DateTime(start, span) => {
                let dt = start.and_hms_opt(0, 0, 0).expect("valid time")
                    + Duration::minutes(rng.gen_range(0..*span * 1440));
                typed(dt.format("%Y-%m-%dT%H:%M:%S").to_string(), "dateTime")
            }
            Generator::Boolean(p) => Term::typed(rng.gen_bool(*p).to_string(), vocab::XSD_BOOLEAN),
            Generator::Url(site) => Term::literal(format!("http://www.{site}.org/page/{i}")),
            Generator::Email(domain) => Term::literal(format!("{}{i}@{domain}.org", word(rng))),
            Generator::Text(lo, hi) => {
                let n = rng.gen_range(*lo..*hi);
                let words: Vec<&str> = (0..n).map(|_| word(rng)).collect();
                let mut s = words.join(" ");
                s[..1].make_ascii_uppercase();
                Term::literal(s)
            }
            Generator::Point(x, y, r) => Term::literal(format!(
                "POINT({:.4} {:.4})",
                x + rng.gen_range(-r..*r),
                y + rng.gen_range(-r..*r)
            )),
        }
    }
}

/// A random knowledge graph: classes with literal properties of mixed kinds,
/// a spanning tree of class relations plus `extra_links` more, and every
/// entity linked to one random target per outgoing class relation.
pub fn random_kg(seed: u64, config: &SyntheticConfig) -> RdfGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = &config.namespace;
    let mut g = RdfGraph::new().with_prefix("ex", ns).with_prefix("xsd", vocab::XSD);
    let n_classes = rng.gen_range(config.classes.0..=config.classes.1.max(config.classes.0));
    let mut kinds: Vec<PropertyKind> = PropertyKind::BASIC.to_vec();
    if config.with_points {
        kinds.push(PropertyKind::Point);
    }

    let mut entities: Vec<Vec<Term>> = Vec::new();
    for c in 0..n_classes {
        let class = format!("{ns}Class{c}");
        let n = rng.gen_range(config.instances.0..=config.instances.1.max(config.instances.0));
        let n_props = rng.gen_range(config.properties.0..=config.properties.1.max(config.properties.0));
        let props: Vec<(String, Generator)> = kinds
            .choose_multiple(&mut rng, n_props)
            .enumerate()
            .map(|(j, k)| (format!("{ns}{}{c}_{j}", k.stem()), Generator::new(*k, &mut rng)))
            .collect();
        let members: Vec<Term> = (0..n).map(|i| Term::iri(format!("{ns}class{c}/e{i}"))).collect();
        for (i, e) in members.iter().enumerate() {
            g.add(e.clone(), vocab::RDF_TYPE, Term::iri(class.clone()));
            for (p, gen) in &props {
                g.add(e.clone(), p, gen.value(i, &mut rng));
            }
        }
        entities.push(members);
    }

    let mut links: Vec<(usize, usize)> = (1..n_classes).map(|c| (rng.gen_range(0..c), c)).collect();
    for _ in 0..config.extra_links {
        if n_classes < 2 {
            break;
        }
        let a = rng.gen_range(0..n_classes);
        let b = rng.gen_range(0..n_classes);
        if a != b && !links.contains(&(a, b)) {
            links.push((a, b));
        }
    }
    for (k, (a, b)) in links.iter().enumerate() {
        let p = format!("{ns}link{k}");
        for e in &entities[*a] {
            let target = entities[*b].choose(&mut rng).expect("non-empty class").clone();
            g.add(e.clone(), &p, target);
        }
    }
    g
}
