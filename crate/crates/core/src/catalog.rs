//! Semantic profiles: domain and table profiles as RDF dataset descriptions.
//!
//! A profile is one `dcat:Dataset` with one attribute per column or data type
//! relation. Data type flags become `rdf:type` assignments on the attribute and
//! the 37 numeric features become `seas:Evaluation` nodes; histogram, quartile
//! and decile evaluations carry a `seas:rank`.
//!
//! | feature slot | evaluation class | rank |
//! |---|---|---|
//! | 16 | `sp:ValueCount` | |
//! | 17 | `sp:NonNullCount` | |
//! | 18 | `sp:DistinctCount` | |
//! | 19 | `sp:StandardDeviation` | |
//! | 20 | `sp:Mean` | |
//! | 21 | `sp:Skewness` | |
//! | 22 | `sp:Kurtosis` | |
//! | 23 | `sp:OutlierCount` | |
//! | 24 | `sp:AverageCharacters` | |
//! | 25 | `sp:AverageDigits` | |
//! | 26 | `sp:AverageTokens` | |
//! | 27 | `sp:AverageCapitals` | |
//! | 28 | `sp:AverageSpecialCharacters` | |
//! | 29..39 | `sp:Histogram` | 1..10 |
//! | 39..44 | `sp:Quartile` | 1..5 |
//! | 44..53 | `sp:Decile` | 1..9 |

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::profiler::{layout, ColumnProfile, DomainProfile, FeatureVector, RelationProfile};
use crate::rdf::{vocab, ClassRelation, DomainOntology, RdfGraph, RelationKey, Term};
use crate::scalar::Scalar;
use crate::tabular::{CoarseType, ColumnTyping, FineType};

pub mod vocabulary {
    pub const SP: &str = "http://example.org/tabsem/profile#";
    pub const DCAT: &str = "http://www.w3.org/ns/dcat#";
    pub const SEAS: &str = "https://w3id.org/seas/";

    pub const DATASET: &str = "http://www.w3.org/ns/dcat#Dataset";
    pub const EVALUATION: &str = "https://w3id.org/seas/evaluation";
    pub const EVALUATED_VALUE: &str = "https://w3id.org/seas/evaluatedValue";
    pub const RANK: &str = "https://w3id.org/seas/rank";

    pub const ATTRIBUTE: &str = "http://example.org/tabsem/profile#Attribute";
    pub const COLUMN_ATTRIBUTE: &str = "http://example.org/tabsem/profile#ColumnAttribute";
    pub const RELATION_ATTRIBUTE: &str = "http://example.org/tabsem/profile#RelationAttribute";
    pub const HAS_ATTRIBUTE: &str = "http://example.org/tabsem/profile#hasAttribute";
    pub const COLUMN_ID: &str = "http://example.org/tabsem/profile#columnId";
    pub const COLUMN_INDEX: &str = "http://example.org/tabsem/profile#columnIndex";
    pub const CLASS: &str = "http://example.org/tabsem/profile#class";
    pub const PROPERTY: &str = "http://example.org/tabsem/profile#property";
    pub const CLASS_INSTANCES: &str = "http://example.org/tabsem/profile#classInstances";
    pub const COVERED_INSTANCES: &str = "http://example.org/tabsem/profile#coveredInstances";
    pub const IDENTIFYING: &str = "http://example.org/tabsem/profile#identifying";
    pub const ONTOLOGY_CLASS: &str = "http://example.org/tabsem/profile#ontologyClass";
    pub const CLASS_RELATION: &str = "http://example.org/tabsem/profile#classRelation";
    pub const SOURCE_CLASS: &str = "http://example.org/tabsem/profile#sourceClass";
    pub const TARGET_CLASS: &str = "http://example.org/tabsem/profile#targetClass";
}

use vocabulary as v;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("expected exactly one dcat:Dataset, found {0}")]
    DatasetCount(usize),
    #[error("attribute {attribute} lacks feature {feature}")]
    MissingFeature { attribute: String, feature: String },
    #[error("rank {rank} of {feature} outside 1..={max}")]
    RankOutOfRange {
        feature: String,
        rank: i64,
        max: usize,
    },
    #[error("malformed profile: {0}")]
    Malformed(String),
}

/// Evaluation class of a feature slot and its rank, if any.
pub fn feature_class(slot: usize) -> Option<(&'static str, Option<usize>)> {
    const SINGLE: [&str; 13] = [
        "ValueCount",
        "NonNullCount",
        "DistinctCount",
        "StandardDeviation",
        "Mean",
        "Skewness",
        "Kurtosis",
        "OutlierCount",
        "AverageCharacters",
        "AverageDigits",
        "AverageTokens",
        "AverageCapitals",
        "AverageSpecialCharacters",
    ];
    let ranked = |name, range: std::ops::Range<usize>| Some((name, Some(slot - range.start + 1)));
    match slot {
        s if (layout::VALUE_COUNT..=layout::AVG_SPECIALS).contains(&s) => {
            Some((SINGLE[s - layout::VALUE_COUNT], None))
        }
        s if layout::HISTOGRAM.contains(&s) => ranked("Histogram", layout::HISTOGRAM),
        s if layout::QUARTILES.contains(&s) => ranked("Quartile", layout::QUARTILES),
        s if layout::DECILES.contains(&s) => ranked("Decile", layout::DECILES),
        _ => None,
    }
}

fn slot_of(class: &str, rank: Option<i64>) -> Result<Option<usize>, CatalogError> {
    let block = match class {
        "Histogram" => Some(layout::HISTOGRAM),
        "Quartile" => Some(layout::QUARTILES),
        "Decile" => Some(layout::DECILES),
        _ => None,
    };
    if let Some(range) = block {
        let max = range.len();
        let rank = rank.ok_or_else(|| CatalogError::Malformed(format!("{class} without rank")))?;
        if rank < 1 || rank as usize > max {
            return Err(CatalogError::RankOutOfRange {
                feature: class.to_string(),
                rank,
                max,
            });
        }
        return Ok(Some(range.start + rank as usize - 1));
    }
    Ok((layout::VALUE_COUNT..=layout::AVG_SPECIALS)
        .find(|s| feature_class(*s).map(|(n, _)| n) == Some(class)))
}

fn coarse_class(c: CoarseType) -> String {
    let name = c.name();
    format!("{}{}{}Value", v::SP, name[..1].to_uppercase(), &name[1..])
}

fn fine_class(f: FineType) -> String {
    format!("{}{}", v::SP, f.name())
}

/// What an attribute describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeSubject {
    Column {
        id: String,
        index: usize,
    },
    Relation {
        key: RelationKey,
        class_instances: usize,
        covered_instances: usize,
        identifying: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    /// Local name of the evaluation class, e.g. `Decile`.
    pub feature: String,
    pub rank: Option<usize>,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDoc<T> {
    pub iri: String,
    pub subject: AttributeSubject,
    pub typing: ColumnTyping,
    pub evaluations: Vec<Evaluation<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticProfileDoc<T> {
    pub dataset: String,
    pub attributes: Vec<AttributeDoc<T>>,
    pub classes: BTreeSet<String>,
    pub class_relations: BTreeSet<ClassRelation>,
}

fn evaluations<T: Scalar>(vector: &FeatureVector<T>) -> Vec<Evaluation<T>> {
    (layout::VALUE_COUNT..layout::FEATURE_COUNT)
        .map(|slot| {
            let (feature, rank) = feature_class(slot).expect("numeric slot");
            Evaluation {
                feature: feature.to_string(),
                rank,
                value: vector[slot],
            }
        })
        .collect()
}

fn attribute<T: Scalar>(
    dataset: &str,
    n: usize,
    subject: AttributeSubject,
    typing: &ColumnTyping,
    vector: &FeatureVector<T>,
) -> AttributeDoc<T> {
    AttributeDoc {
        iri: format!("{dataset}/attribute{n}"),
        subject,
        typing: typing.clone(),
        evaluations: evaluations(vector),
    }
}

impl<T: Scalar> SemanticProfileDoc<T> {
    pub fn from_columns(profiles: &[ColumnProfile<T>], dataset: &str) -> Self {
        let attributes = profiles
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let subject = AttributeSubject::Column {
                    id: p.column_id.clone(),
                    index: p.column_index,
                };
                attribute(dataset, n, subject, &p.typing, &p.vector)
            })
            .collect();
        SemanticProfileDoc {
            dataset: dataset.to_string(),
            attributes,
            classes: BTreeSet::new(),
            class_relations: BTreeSet::new(),
        }
    }

    pub fn from_domain(profile: &DomainProfile<T>, dataset: &str) -> Self {
        let attributes = profile
            .relation_profiles
            .values()
            .enumerate()
            .map(|(n, p)| {
                let subject = AttributeSubject::Relation {
                    key: p.relation.clone(),
                    class_instances: p.class_instances,
                    covered_instances: p.covered_instances,
                    identifying: profile.is_identifying(&p.relation),
                };
                attribute(dataset, n, subject, &p.typing, &p.vector)
            })
            .collect();
        SemanticProfileDoc {
            dataset: dataset.to_string(),
            attributes,
            classes: profile.ontology.classes.clone(),
            class_relations: profile.ontology.class_relations.clone(),
        }
    }

    pub fn to_graph(&self) -> RdfGraph {
        let mut g = RdfGraph::new()
            .with_prefix("sp", v::SP)
            .with_prefix("dcat", v::DCAT)
            .with_prefix("seas", v::SEAS)
            .with_prefix("xsd", vocab::XSD);
        let dataset = Term::iri(&self.dataset);
        let int = |n: usize| Term::typed(n.to_string(), vocab::XSD_INTEGER);
        g.add(dataset.clone(), vocab::RDF_TYPE, Term::iri(v::DATASET));
        for c in &self.classes {
            g.add(dataset.clone(), v::ONTOLOGY_CLASS, Term::iri(c));
        }
        for (n, r) in self.class_relations.iter().enumerate() {
            let node = Term::iri(format!("{}/classRelation{n}", self.dataset));
            g.add(dataset.clone(), v::CLASS_RELATION, node.clone());
            g.add(node.clone(), v::SOURCE_CLASS, Term::iri(&r.source));
            g.add(node.clone(), v::PROPERTY, Term::iri(&r.property));
            g.add(node, v::TARGET_CLASS, Term::iri(&r.target));
        }
        for a in &self.attributes {
            let node = Term::iri(&a.iri);
            g.add(dataset.clone(), v::HAS_ATTRIBUTE, node.clone());
            g.add(node.clone(), vocab::RDF_TYPE, Term::iri(v::ATTRIBUTE));
            g.add(node.clone(), vocab::RDF_TYPE, Term::iri(coarse_class(a.typing.coarse)));
            for f in &a.typing.fine {
                g.add(node.clone(), vocab::RDF_TYPE, Term::iri(fine_class(*f)));
            }
            match &a.subject {
                AttributeSubject::Column { id, index } => {
                    g.add(node.clone(), vocab::RDF_TYPE, Term::iri(v::COLUMN_ATTRIBUTE));
                    g.add(node.clone(), v::COLUMN_ID, Term::literal(id));
                    g.add(node.clone(), v::COLUMN_INDEX, int(*index));
                }
                AttributeSubject::Relation {
                    key,
                    class_instances,
                    covered_instances,
                    identifying,
                } => {
                    g.add(node.clone(), vocab::RDF_TYPE, Term::iri(v::RELATION_ATTRIBUTE));
                    g.add(node.clone(), v::CLASS, Term::iri(&key.class));
                    g.add(node.clone(), v::PROPERTY, Term::iri(&key.property));
                    g.add(node.clone(), v::CLASS_INSTANCES, int(*class_instances));
                    g.add(node.clone(), v::COVERED_INSTANCES, int(*covered_instances));
                    g.add(
                        node.clone(),
                        v::IDENTIFYING,
                        Term::typed(identifying.to_string(), vocab::XSD_BOOLEAN),
                    );
                }
            }
            for e in &a.evaluations {
                let local = match e.rank {
                    Some(r) => format!("{}{r}", e.feature),
                    None => e.feature.clone(),
                };
                let eval = Term::iri(format!("{}/{local}", a.iri));
                g.add(node.clone(), v::EVALUATION, eval.clone());
                g.add(eval.clone(), vocab::RDF_TYPE, Term::iri(format!("{}{}", v::SP, e.feature)));
                g.add(
                    eval.clone(),
                    v::EVALUATED_VALUE,
                    Term::typed(e.value.to_exact_string(), vocab::XSD_DOUBLE),
                );
                if let Some(r) = e.rank {
                    g.add(eval, v::RANK, int(r));
                }
            }
        }
        g
    }

    pub fn from_graph(g: &RdfGraph) -> Result<Self, CatalogError> {
        let datasets: Vec<&Term> = g.instances_of(v::DATASET).collect();
        if datasets.len() != 1 {
            return Err(CatalogError::DatasetCount(datasets.len()));
        }
        let dataset = datasets[0];
        let dataset_iri = dataset
            .as_iri()
            .ok_or_else(|| CatalogError::Malformed("dataset is a blank node".into()))?
            .to_string();
        let classes = g
            .objects(dataset, v::ONTOLOGY_CLASS)
            .map(|c| iri_of(c, v::ONTOLOGY_CLASS))
            .collect::<Result<_, _>>()?;
        let mut class_relations = BTreeSet::new();
        for node in g.objects(dataset, v::CLASS_RELATION) {
            class_relations.insert(ClassRelation::new(
                required_iri(g, node, v::SOURCE_CLASS)?,
                required_iri(g, node, v::PROPERTY)?,
                required_iri(g, node, v::TARGET_CLASS)?,
            ));
        }
        let attributes = g
            .objects(dataset, v::HAS_ATTRIBUTE)
            .map(|a| read_attribute(g, a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SemanticProfileDoc {
            dataset: dataset_iri,
            attributes,
            classes,
            class_relations,
        })
    }

    pub fn to_columns(&self) -> Result<Vec<ColumnProfile<T>>, CatalogError> {
        let mut out = Vec::new();
        for a in &self.attributes {
            let AttributeSubject::Column { id, index } = &a.subject else {
                return Err(CatalogError::Malformed(format!("{} is not a column", a.iri)));
            };
            out.push(ColumnProfile {
                column_id: id.clone(),
                column_index: *index,
                typing: a.typing.clone(),
                vector: a.vector()?,
            });
        }
        out.sort_by_key(|p| p.column_index);
        Ok(out)
    }

    pub fn to_domain(&self) -> Result<DomainProfile<T>, CatalogError> {
        let mut ontology = DomainOntology {
            classes: self.classes.clone(),
            class_relations: self.class_relations.clone(),
            ..Default::default()
        };
        let mut relation_profiles = BTreeMap::new();
        let mut identifying = BTreeSet::new();
        for a in &self.attributes {
            let AttributeSubject::Relation {
                key,
                class_instances,
                covered_instances,
                identifying: is_key,
            } = &a.subject
            else {
                return Err(CatalogError::Malformed(format!("{} is not a relation", a.iri)));
            };
            ontology.datatype_relations.insert(key.clone(), a.typing.clone());
            if *is_key {
                identifying.insert(key.clone());
            }
            relation_profiles.insert(
                key.clone(),
                RelationProfile {
                    relation: key.clone(),
                    typing: a.typing.clone(),
                    vector: a.vector()?,
                    class_instances: *class_instances,
                    covered_instances: *covered_instances,
                },
            );
        }
        Ok(DomainProfile {
            ontology,
            relation_profiles,
            identifying,
        })
    }
}

impl<T: Scalar> AttributeDoc<T> {
    /// Rebuilds the feature vector; every numeric slot must be present once.
    pub fn vector(&self) -> Result<FeatureVector<T>, CatalogError> {
        let mut out = FeatureVector::zeros();
        let mut seen = BTreeSet::new();
        for f in &self.typing.fine {
            out[f.index()] = T::one();
        }
        for e in &self.evaluations {
            let slot = slot_of(&e.feature, e.rank.map(|r| r as i64))?
                .ok_or_else(|| CatalogError::Malformed(format!("unknown feature {}", e.feature)))?;
            if !seen.insert(slot) {
                return Err(CatalogError::Malformed(format!(
                    "duplicate feature {} on {}",
                    e.feature, self.iri
                )));
            }
            out[slot] = e.value;
        }
        for slot in layout::VALUE_COUNT..layout::FEATURE_COUNT {
            if !seen.contains(&slot) {
                let (name, rank) = feature_class(slot).expect("numeric slot");
                return Err(CatalogError::MissingFeature {
                    attribute: self.iri.clone(),
                    feature: match rank {
                        Some(r) => format!("{name} rank {r}"),
                        None => name.to_string(),
                    },
                });
            }
        }
        Ok(out)
    }
}

fn iri_of(t: &Term, what: &str) -> Result<String, CatalogError> {
    t.as_iri()
        .map(str::to_string)
        .ok_or_else(|| CatalogError::Malformed(format!("{what} must be an IRI, found {t}")))
}

fn required<'a>(g: &'a RdfGraph, node: &'a Term, p: &'a str) -> Result<&'a Term, CatalogError> {
    g.object(node, p)
        .ok_or_else(|| CatalogError::Malformed(format!("{node} lacks <{p}>")))
}

fn required_iri(g: &RdfGraph, node: &Term, p: &str) -> Result<String, CatalogError> {
    iri_of(required(g, node, p)?, p)
}

fn required_lexical<'a>(g: &'a RdfGraph, node: &'a Term, p: &'a str) -> Result<&'a str, CatalogError> {
    required(g, node, p)?
        .lexical()
        .ok_or_else(|| CatalogError::Malformed(format!("<{p}> of {node} must be a literal")))
}

fn parse_lexical<N: std::str::FromStr>(lex: &str, what: &str) -> Result<N, CatalogError> {
    lex.parse()
        .map_err(|_| CatalogError::Malformed(format!("bad {what} {lex:?}")))
}

fn read_attribute<T: Scalar>(g: &RdfGraph, node: &Term) -> Result<AttributeDoc<T>, CatalogError> {
    let iri = iri_of(node, "attribute")?;
    let types: BTreeSet<&str> = g.objects(node, vocab::RDF_TYPE).filter_map(Term::as_iri).collect();
    let coarse = CoarseType::ALL
        .into_iter()
        .find(|c| types.contains(coarse_class(*c).as_str()))
        .ok_or_else(|| CatalogError::Malformed(format!("{iri} has no data type")))?;
    let fine = FineType::ALL
        .into_iter()
        .filter(|f| types.contains(fine_class(*f).as_str()));
    let typing = ColumnTyping::new(coarse, fine);

    let subject = if types.contains(v::COLUMN_ATTRIBUTE) {
        AttributeSubject::Column {
            id: required_lexical(g, node, v::COLUMN_ID)?.to_string(),
            index: parse_lexical(required_lexical(g, node, v::COLUMN_INDEX)?, "column index")?,
        }
    } else if types.contains(v::RELATION_ATTRIBUTE) {
        AttributeSubject::Relation {
            key: RelationKey::new(
                required_iri(g, node, v::CLASS)?,
                required_iri(g, node, v::PROPERTY)?,
            ),
            class_instances: parse_lexical(
                required_lexical(g, node, v::CLASS_INSTANCES)?,
                "instance count",
            )?,
            covered_instances: parse_lexical(
                required_lexical(g, node, v::COVERED_INSTANCES)?,
                "instance count",
            )?,
            identifying: parse_lexical(required_lexical(g, node, v::IDENTIFYING)?, "flag")?,
        }
    } else {
        return Err(CatalogError::Malformed(format!("{iri} is neither column nor relation")));
    };

    let mut evaluations = Vec::new();
    for eval in g.objects(node, v::EVALUATION) {
        let feature = g
            .objects(eval, vocab::RDF_TYPE)
            .filter_map(Term::as_iri)
            .find_map(|t| t.strip_prefix(v::SP))
            .ok_or_else(|| CatalogError::Malformed(format!("{eval} has no feature class")))?;
        let value: T = parse_lexical(required_lexical(g, eval, v::EVALUATED_VALUE)?, "value")?;
        let rank = match g.object(eval, v::RANK) {
            None => None,
            Some(r) => {
                let lex = r
                    .lexical()
                    .ok_or_else(|| CatalogError::Malformed(format!("rank of {eval}")))?;
                let rank: i64 = parse_lexical(lex, "rank")?;
                // validates the range before the usize conversion
                slot_of(feature, Some(rank))?;
                Some(rank as usize)
            }
        };
        evaluations.push(Evaluation {
            feature: feature.to_string(),
            rank,
            value,
        });
    }
    Ok(AttributeDoc {
        iri,
        subject,
        typing,
        evaluations,
    })
}

pub fn export_table_profile<T: Scalar>(profiles: &[ColumnProfile<T>], dataset: &str) -> RdfGraph {
    SemanticProfileDoc::from_columns(profiles, dataset).to_graph()
}

pub fn export_domain_profile<T: Scalar>(profile: &DomainProfile<T>, dataset: &str) -> RdfGraph {
    SemanticProfileDoc::from_domain(profile, dataset).to_graph()
}

pub fn import_table_profile<T: Scalar>(g: &RdfGraph) -> Result<Vec<ColumnProfile<T>>, CatalogError> {
    SemanticProfileDoc::from_graph(g)?.to_columns()
}

pub fn import_domain_profile<T: Scalar>(g: &RdfGraph) -> Result<DomainProfile<T>, CatalogError> {
    SemanticProfileDoc::from_graph(g)?.to_domain()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiler::{profile_domain, profile_table};
    use crate::rdf::{parse_turtle, serialize_turtle, Triple};
    use crate::tabular::{parse_table, Dialect};

    const DS: &str = "http://example.org/data/AirData";

    fn air_data() -> Vec<ColumnProfile<f64>> {
        let t = parse_table(b"16:00\t16:30\n16:30\t17:00\n", &Dialect::tsv()).unwrap();
        profile_table(&t).0
    }

    #[test]
    fn maximum_end_time_is_an_evaluation() {
        let g = export_table_profile(&air_data(), DS);
        let eval = Term::iri(format!("{DS}/attribute1/Quartile5"));
        assert!(g.contains(&Triple::new(
            Term::iri(format!("{DS}/attribute1")),
            v::EVALUATION,
            eval.clone()
        )));
        let value = g.object(&eval, v::EVALUATED_VALUE).unwrap().lexical().unwrap();
        assert_eq!(value.parse::<f64>().unwrap(), 61200.0);
        assert_eq!(g.object(&eval, v::RANK).unwrap().lexical(), Some("5"));
    }

    #[test]
    fn evaluation_count_per_attribute() {
        let g = export_table_profile(&air_data()[..1], DS);
        let attr = Term::iri(format!("{DS}/attribute0"));
        assert_eq!(g.objects(&attr, v::EVALUATION).count(), 3 + 10 + 10 + 5 + 9);
        let ranked = g
            .objects(&attr, v::EVALUATION)
            .filter(|e| g.object(e, v::RANK).is_some())
            .count();
        assert_eq!(ranked, 24);
        assert!(g.contains(&Triple::new(attr, vocab::RDF_TYPE, Term::iri(fine_class(FineType::Time)))));
    }

    #[test]
    fn empty_profile_is_a_bare_dataset() {
        let g = export_table_profile::<f64>(&[], DS);
        assert_eq!(g.len(), 1);
        assert!(import_table_profile::<f64>(&g).unwrap().is_empty());
    }

    #[test]
    fn table_round_trip_through_turtle() {
        let p = air_data();
        let text = serialize_turtle(&export_table_profile(&p, DS));
        let back = import_table_profile::<f64>(&parse_turtle(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn domain_round_trip() {
        let kg = parse_turtle(
            br#"@prefix e: <http://e/> .
            e:s1 a e:Sensor ; e:label "S1" ; e:made e:o1 .
            e:s2 a e:Sensor ; e:label "S2" ; e:made e:o2 .
            e:o1 a e:Obs ; e:result "cloudy" . e:o2 a e:Obs ; e:result "rain" ."#,
        )
        .unwrap();
        let p = profile_domain::<f64>(&kg).unwrap();
        let g = export_domain_profile(&p, DS);
        let text = serialize_turtle(&g);
        assert_eq!(text, serialize_turtle(&export_domain_profile(&p, DS)));
        let back = import_domain_profile::<f64>(&parse_turtle(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn missing_rank_is_reported() {
        let mut g = export_table_profile(&air_data()[..1], DS);
        let eval = Term::iri(format!("{DS}/attribute0/Histogram7"));
        let attr = Term::iri(format!("{DS}/attribute0"));
        g.remove(&Triple::new(attr, v::EVALUATION, eval));
        assert_eq!(
            import_table_profile::<f64>(&g),
            Err(CatalogError::MissingFeature {
                attribute: format!("{DS}/attribute0"),
                feature: "Histogram rank 7".into()
            })
        );
    }

    #[test]
    fn rank_out_of_range() {
        let mut g = export_table_profile(&air_data()[..1], DS);
        let eval = Term::iri(format!("{DS}/attribute0/Decile9"));
        g.remove(&Triple::new(eval.clone(), v::RANK, Term::typed("9", vocab::XSD_INTEGER)));
        g.add(eval, v::RANK, Term::typed("10", vocab::XSD_INTEGER));
        assert!(matches!(
            import_table_profile::<f64>(&g),
            Err(CatalogError::RankOutOfRange { rank: 10, max: 9, .. })
        ));
    }
}
