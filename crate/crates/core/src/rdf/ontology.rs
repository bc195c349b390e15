//! Domain ontology extraction: classes, data type relations and class relations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{vocab, RdfGraph, Term};
use crate::tabular::{identify_types, ColumnTyping};

/// A data type relation `(class, data type property)`; its typing lives in the ontology.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationKey {
    pub class: String,
    pub property: String,
}

impl RelationKey {
    pub fn new(class: impl Into<String>, property: impl Into<String>) -> Self {
        RelationKey {
            class: class.into(),
            property: property.into(),
        }
    }
}

impl fmt::Display for RelationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.class, self.property)
    }
}

/// `(source class, object property, target class)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassRelation {
    pub source: String,
    pub property: String,
    pub target: String,
}

impl ClassRelation {
    pub fn new(
        source: impl Into<String>,
        property: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        ClassRelation {
            source: source.into(),
            property: property.into(),
            target: target.into(),
        }
    }

    pub fn touches(&self, class: &str) -> bool {
        self.source == class || self.target == class
    }
}

impl fmt::Display for ClassRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.source, self.property, self.target)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainOntology {
    pub classes: BTreeSet<String>,
    pub datatype_relations: BTreeMap<RelationKey, ColumnTyping>,
    pub class_relations: BTreeSet<ClassRelation>,
}

impl DomainOntology {
    /// Endpoints of every relation are declared classes and every typing is non-empty.
    pub fn is_well_formed(&self) -> bool {
        self.datatype_relations
            .iter()
            .all(|(k, t)| self.classes.contains(&k.class) && t.is_consistent())
            && self
                .class_relations
                .iter()
                .all(|r| self.classes.contains(&r.source) && self.classes.contains(&r.target))
    }

    pub fn typing(&self, key: &RelationKey) -> Option<&ColumnTyping> {
        self.datatype_relations.get(key)
    }

    /// Union of two ontologies; typings of shared relations come from `self`.
    pub fn merge(&mut self, other: &DomainOntology) {
        self.classes.extend(other.classes.iter().cloned());
        for (k, t) in &other.datatype_relations {
            self.datatype_relations
                .entry(k.clone())
                .or_insert_with(|| t.clone());
        }
        self.class_relations
            .extend(other.class_relations.iter().cloned());
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("graph contains no typed entities")]
    NoTypedEntities,
    #[error("unknown data type relation {0}")]
    UnknownRelation(RelationKey),
}

/// Lexical values observed for one data type relation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelationValues {
    /// Lexical forms, sorted.
    pub values: Vec<String>,
    /// Distinct entities carrying the relation.
    pub subjects: BTreeSet<Term>,
}

/// Per-class and per-relation occurrence data of a knowledge graph.
#[derive(Debug, Clone, Default)]
pub struct GraphIndex {
    /// Entity -> its classes.
    pub types: BTreeMap<Term, BTreeSet<String>>,
    /// Class -> its entities.
    pub instances: BTreeMap<String, BTreeSet<Term>>,
    pub literals: BTreeMap<RelationKey, RelationValues>,
    /// Class relation -> number of supporting triples.
    pub links: BTreeMap<ClassRelation, usize>,
}

impl GraphIndex {
    pub fn build(graph: &RdfGraph) -> Self {
        let mut index = GraphIndex::default();
        for t in graph.triples() {
            if t.predicate == vocab::RDF_TYPE {
                if let Term::Iri(class) = &t.object {
                    index
                        .types
                        .entry(t.subject.clone())
                        .or_default()
                        .insert(class.clone());
                    index
                        .instances
                        .entry(class.clone())
                        .or_default()
                        .insert(t.subject.clone());
                }
            }
        }
        for t in graph.triples() {
            if t.predicate == vocab::RDF_TYPE {
                continue;
            }
            let Some(classes) = index.types.get(&t.subject) else {
                continue;
            };
            match &t.object {
                Term::Literal { lexical, .. } => {
                    for c in classes {
                        let entry = index
                            .literals
                            .entry(RelationKey::new(c.clone(), t.predicate.clone()))
                            .or_default();
                        entry.values.push(lexical.clone());
                        entry.subjects.insert(t.subject.clone());
                    }
                }
                object => {
                    if let Some(targets) = index.types.get(object) {
                        for c in classes {
                            for d in targets {
                                *index
                                    .links
                                    .entry(ClassRelation::new(
                                        c.clone(),
                                        t.predicate.clone(),
                                        d.clone(),
                                    ))
                                    .or_default() += 1;
                            }
                        }
                    }
                }
            }
        }
        for v in index.literals.values_mut() {
            v.values.sort();
        }
        index
    }

    pub fn instance_count(&self, class: &str) -> usize {
        self.instances.get(class).map_or(0, BTreeSet::len)
    }

    pub fn ontology(&self) -> DomainOntology {
        let mut ontology = DomainOntology {
            classes: self.instances.keys().cloned().collect(),
            ..Default::default()
        };
        for (key, vals) in &self.literals {
            let cells: Vec<Option<&str>> = vals
                .values
                .iter()
                .map(|v| (!v.is_empty()).then_some(v.as_str()))
                .collect();
            if let Ok(typing) = identify_types(&cells) {
                ontology.datatype_relations.insert(key.clone(), typing);
            }
        }
        ontology.class_relations = self.links.keys().cloned().collect();
        ontology
    }
}

/// Extracts classes (objects of `rdf:type`), data type relations of typed entities
/// with their pooled literal typing, and class relations between typed entities.
///
/// Entities with several classes contribute to each class.
pub fn extract_ontology(graph: &RdfGraph) -> Result<DomainOntology, OntologyError> {
    let index = GraphIndex::build(graph);
    if index.types.is_empty() {
        return Err(OntologyError::NoTypedEntities);
    }
    Ok(index.ontology())
}

/// Sorted lexical forms of all literals on `relation`.
pub fn literals_of_relation(
    graph: &RdfGraph,
    relation: &RelationKey,
) -> Result<Vec<String>, OntologyError> {
    let mut values: Vec<String> = graph
        .triples()
        .filter(|t| t.predicate == relation.property)
        .filter(|t| {
            graph
                .objects(&t.subject, vocab::RDF_TYPE)
                .any(|c| c.as_iri() == Some(relation.class.as_str()))
        })
        .filter_map(|t| t.object.lexical().map(str::to_string))
        .collect();
    if values.is_empty() {
        return Err(OntologyError::UnknownRelation(relation.clone()));
    }
    values.sort();
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::parse_turtle;
    use crate::tabular::CoarseType;

    const SOSA: &str = "http://www.w3.org/ns/sosa/";

    fn running_graph() -> RdfGraph {
        parse_turtle(
            br#"
            @prefix sosa: <http://www.w3.org/ns/sosa/> .
            @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
            @prefix ex: <http://e/> .
            ex:Sensor3 a sosa:Sensor ; rdfs:label "S3" ; sosa:madeObservation ex:Observation3 .
            ex:Observation3 a sosa:Observation ; sosa:hasSimpleResult "cloudy" .
            "#,
        )
        .unwrap()
    }

    #[test]
    fn running_example_relations() {
        let o = extract_ontology(&running_graph()).unwrap();
        let label = RelationKey::new(format!("{SOSA}Sensor"), vocab::RDFS_LABEL);
        assert_eq!(o.datatype_relations[&label].coarse, CoarseType::Text);
        assert!(o.class_relations.contains(&ClassRelation::new(
            format!("{SOSA}Sensor"),
            format!("{SOSA}madeObservation"),
            format!("{SOSA}Observation")
        )));
        assert!(o.is_well_formed());
        assert_eq!(
            literals_of_relation(&running_graph(), &label).unwrap(),
            ["S3"]
        );
    }

    #[test]
    fn untyped_subjects_contribute_nothing() {
        let g = parse_turtle(
            br#"<http://e/a> a <http://e/C> ; <http://e/p> "1" .
                <http://e/b> <http://e/p> "x" ; <http://e/q> "y" ."#,
        )
        .unwrap();
        let o = extract_ontology(&g).unwrap();
        assert_eq!(o.classes.len(), 1);
        assert_eq!(o.datatype_relations.len(), 1);
        let key = RelationKey::new("http://e/C", "http://e/p");
        assert_eq!(literals_of_relation(&g, &key).unwrap(), ["1"]);
    }

    #[test]
    fn multi_typed_entities_expand_over_the_type_product() {
        // 5 triples: e typed C and D, with one literal, linked to f typed E.
        let g = parse_turtle(
            br#"<http://e/e> a <http://e/C>, <http://e/D> ; <http://e/p> "v" ; <http://e/r> <http://e/f> .
                <http://e/f> a <http://e/E> ."#,
        )
        .unwrap();
        assert_eq!(g.len(), 5);
        let o = extract_ontology(&g).unwrap();
        // brute force: every class of the subject times every class of the object
        let mut expected_dt = BTreeSet::new();
        let mut expected_cr = BTreeSet::new();
        for c in ["http://e/C", "http://e/D"] {
            expected_dt.insert(RelationKey::new(c, "http://e/p"));
            expected_cr.insert(ClassRelation::new(c, "http://e/r", "http://e/E"));
        }
        assert_eq!(
            o.datatype_relations.keys().cloned().collect::<BTreeSet<_>>(),
            expected_dt
        );
        assert_eq!(o.class_relations, expected_cr);
    }

    #[test]
    fn errors() {
        assert_eq!(
            extract_ontology(&RdfGraph::new()),
            Err(OntologyError::NoTypedEntities)
        );
        let key = RelationKey::new("http://e/X", "http://e/p");
        assert_eq!(
            literals_of_relation(&running_graph(), &key),
            Err(OntologyError::UnknownRelation(key))
        );
    }

    #[test]
    fn two_labels_enumerate_sorted() {
        let g = parse_turtle(
            br#"<http://e/s2> a <http://e/S> ; <http://e/l> "S2" .
                <http://e/s1> a <http://e/S> ; <http://e/l> "S1" ."#,
        )
        .unwrap();
        let key = RelationKey::new("http://e/S", "http://e/l");
        assert_eq!(literals_of_relation(&g, &key).unwrap(), ["S1", "S2"]);
    }
}
