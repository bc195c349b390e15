//! RML mapping documents for a data graph plan, and their materialization.
//!
//! The supported RML subset is what [`emit_rml`] writes: one CSV logical source
//! with a csvw dialect, one triples map per class with a class and URI template
//! subject map, and predicate-object maps whose object is either a column
//! reference or the URI template of another triples map. Entities are linked by
//! template equality rather than `rr:parentTriplesMap`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use crate::graphgen::DataGraphPlan;
use crate::rdf::{vocab, RdfGraph, Term};
use crate::tabular::{DataTable, Dialect, ROW_NUMBER};

pub mod ns {
    pub const RR: &str = "http://www.w3.org/ns/r2rml#";
    pub const RML: &str = "http://semweb.mmlab.be/ns/rml#";
    pub const CSVW: &str = "http://www.w3.org/ns/csvw#";
    pub const QL_CSV: &str = "http://semweb.mmlab.be/ns/ql#CSV";
    pub const EX: &str = "http://example.com/resource/";
}

fn rr(local: &str) -> String {
    format!("{}{local}", ns::RR)
}

fn rml(local: &str) -> String {
    format!("{}{local}", ns::RML)
}

fn csvw(local: &str) -> String {
    format!("{}{local}", ns::CSVW)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RmlError {
    #[error("template or reference names unknown column {0:?}")]
    UnknownColumnReference(String),
    #[error("malformed template {0:?}")]
    MalformedTemplate(String),
    #[error("unsupported mapping document: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Reference(String),
}

/// An RML string template such as `http://x/Sensor{col3}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template(pub Vec<Segment>);

impl Template {
    pub fn parse(raw: &str) -> Result<Self, RmlError> {
        let mut segments = Vec::new();
        let mut text = String::new();
        let mut chars = raw.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some(e) => text.push(e),
                    None => return Err(RmlError::MalformedTemplate(raw.to_string())),
                },
                '{' => {
                    if !text.is_empty() {
                        segments.push(Segment::Text(std::mem::take(&mut text)));
                    }
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some(c) => name.push(c),
                            None => return Err(RmlError::MalformedTemplate(raw.to_string())),
                        }
                    }
                    if name.is_empty() {
                        return Err(RmlError::MalformedTemplate(raw.to_string()));
                    }
                    segments.push(Segment::Reference(name));
                }
                '}' => return Err(RmlError::MalformedTemplate(raw.to_string())),
                c => text.push(c),
            }
        }
        if !text.is_empty() {
            segments.push(Segment::Text(text));
        }
        Ok(Template(segments))
    }

    pub fn references(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter_map(|s| match s {
            Segment::Reference(r) => Some(r.as_str()),
            Segment::Text(_) => None,
        })
    }

    /// Fills the placeholders; `None` when a referenced cell is null.
    pub fn expand(&self, table: &DataTable, row: usize) -> Option<String> {
        let mut out = String::new();
        for s in &self.0 {
            match s {
                Segment::Text(t) => out.push_str(t),
                Segment::Reference(r) => out.push_str(&percent_encode(&table.reference(row, r)??)),
            }
        }
        Some(out)
    }
}

impl std::fmt::Display for Template {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in &self.0 {
            match s {
                Segment::Text(t) => {
                    for c in t.chars() {
                        if matches!(c, '{' | '}' | '\\') {
                            f.write_char('\\')?;
                        }
                        f.write_char(c)?;
                    }
                }
                Segment::Reference(r) => write!(f, "{{{r}}}")?,
            }
        }
        Ok(())
    }
}

/// Percent-encodes everything outside the URI unreserved set.
pub fn percent_encode(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for b in value.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~') {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectMap {
    Reference(String),
    Template(Template),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateObjectMap {
    pub predicate: String,
    pub object: ObjectMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplesMap {
    pub iri: String,
    pub class: String,
    pub subject: Template,
    pub predicate_objects: Vec<PredicateObjectMap>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDescriptor {
    pub path: String,
    pub delimiter: char,
    pub has_header: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmlMapping {
    pub source: SourceDescriptor,
    pub triples_maps: Vec<TriplesMap>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmlOptions {
    /// Prefix of generated entity URIs.
    pub base_iri: String,
    /// Name of the table file as recorded in the source descriptor.
    pub source_path: String,
    pub dialect: Dialect,
    /// Extra prefixes for the emitted document.
    pub prefixes: BTreeMap<String, String>,
}

impl Default for RmlOptions {
    fn default() -> Self {
        RmlOptions {
            base_iri: ns::EX.to_string(),
            source_path: "table.tsv".to_string(),
            dialect: Dialect::default(),
            prefixes: BTreeMap::new(),
        }
    }
}

fn local_name(iri: &str) -> &str {
    let cut = iri.rfind(['/', '#']).map_or(0, |i| i + 1);
    let local = &iri[cut..];
    if local.is_empty() {
        "Entity"
    } else {
        local
    }
}

/// Builds the mapping of a plan: a source descriptor, then one triples map per
/// class in source-before-target order, with a predicate-object map per mapped
/// column and per class relation.
pub fn build_mapping(plan: &DataGraphPlan, table: &DataTable, options: &RmlOptions) -> Result<RmlMapping, RmlError> {
    let order = plan.class_order();
    let mut seen_local: BTreeMap<&str, usize> = BTreeMap::new();
    let mut subject_templates: BTreeMap<&str, Template> = BTreeMap::new();
    for class in &order {
        let local = local_name(class);
        let n = seen_local.entry(local).or_default();
        let stem = if *n == 0 {
            local.to_string()
        } else {
            format!("{local}{n}_")
        };
        *n += 1;
        let key = plan
            .identifier_sources
            .get(class)
            .map_or(ROW_NUMBER, |s| s.reference())
            .to_string();
        if key != ROW_NUMBER && table.column_index(&key).is_none() {
            return Err(RmlError::UnknownColumnReference(key));
        }
        subject_templates.insert(
            class,
            Template(vec![
                Segment::Text(format!("{}{stem}", options.base_iri)),
                Segment::Reference(key),
            ]),
        );
    }

    let mut triples_maps = Vec::new();
    for (i, class) in order.iter().enumerate() {
        let mut poms = Vec::new();
        let mut columns: Vec<(&String, &crate::graphgen::ColumnMapping)> = plan
            .column_mappings
            .iter()
            .filter(|(_, m)| &m.relation.class == class)
            .collect();
        columns.sort_by_key(|(_, m)| m.column_index);
        for (col, m) in columns {
            if table.column_index(col).is_none() {
                return Err(RmlError::UnknownColumnReference(col.clone()));
            }
            poms.push(PredicateObjectMap {
                predicate: m.relation.property.clone(),
                object: ObjectMap::Reference(col.clone()),
            });
        }
        for r in plan.class_relations.iter().filter(|r| &r.source == class) {
            poms.push(PredicateObjectMap {
                predicate: r.property.clone(),
                object: ObjectMap::Template(subject_templates[r.target.as_str()].clone()),
            });
        }
        triples_maps.push(TriplesMap {
            iri: format!("{}Mapping{i}", ns::EX),
            class: class.clone(),
            subject: subject_templates[class.as_str()].clone(),
            predicate_objects: poms,
        });
    }
    Ok(RmlMapping {
        source: SourceDescriptor {
            path: options.source_path.clone(),
            delimiter: options.dialect.delimiter,
            has_header: options.dialect.has_header,
        },
        triples_maps,
    })
}

pub fn emit_rml(plan: &DataGraphPlan, table: &DataTable, options: &RmlOptions) -> Result<RdfGraph, RmlError> {
    let mut g = build_mapping(plan, table, options)?.to_graph();
    for (p, i) in &options.prefixes {
        if !g.prefixes().contains_key(p) {
            g.add_prefix(p, i);
        }
    }
    Ok(g)
}

impl RmlMapping {
    pub fn to_graph(&self) -> RdfGraph {
        let mut g = RdfGraph::new()
            .with_prefix("rr", ns::RR)
            .with_prefix("rml", ns::RML)
            .with_prefix("csvw", ns::CSVW)
            .with_prefix("ex", ns::EX);
        let file = Term::iri(format!("{}File", ns::EX));
        let source = Term::iri(format!("{}FileSource", ns::EX));
        g.add(file.clone(), vocab::RDF_TYPE, Term::iri(rml("LogicalSource")));
        g.add(file.clone(), &rml("source"), source.clone());
        g.add(file.clone(), &rml("referenceFormulation"), Term::iri(ns::QL_CSV));
        g.add(source.clone(), vocab::RDF_TYPE, Term::iri(csvw("Table")));
        g.add(source.clone(), &csvw("url"), Term::literal(&self.source.path));
        let dialect = Term::blank("dialect");
        g.add(source, &csvw("dialect"), dialect.clone());
        g.add(dialect.clone(), vocab::RDF_TYPE, Term::iri(csvw("Dialect")));
        g.add(
            dialect.clone(),
            &csvw("delimiter"),
            Term::literal(self.source.delimiter.to_string()),
        );
        if self.source.has_header {
            g.add(dialect, &csvw("header"), Term::typed("true", vocab::XSD_BOOLEAN));
        }

        for (i, tm) in self.triples_maps.iter().enumerate() {
            let node = Term::iri(&tm.iri);
            g.add(node.clone(), vocab::RDF_TYPE, Term::iri(rr("TriplesMap")));
            g.add(node.clone(), &rml("logicalSource"), file.clone());
            let sm = Term::blank(format!("sm{i}"));
            g.add(node.clone(), &rr("subjectMap"), sm.clone());
            g.add(sm.clone(), &rr("class"), Term::iri(&tm.class));
            g.add(sm, &rr("template"), Term::literal(tm.subject.to_string()));
            for (j, pom) in tm.predicate_objects.iter().enumerate() {
                let p = Term::blank(format!("pom{i}_{j}"));
                let o = Term::blank(format!("om{i}_{j}"));
                g.add(node.clone(), &rr("predicateObjectMap"), p.clone());
                g.add(p.clone(), &rr("predicate"), Term::iri(&pom.predicate));
                g.add(p, &rr("objectMap"), o.clone());
                match &pom.object {
                    ObjectMap::Reference(c) => g.add(o, &rml("reference"), Term::literal(c)),
                    ObjectMap::Template(t) => g.add(o, &rr("template"), Term::literal(t.to_string())),
                };
            }
        }
        g
    }

    pub fn from_graph(g: &RdfGraph) -> Result<Self, RmlError> {
        let unsupported = |m: &str| RmlError::Unsupported(m.to_string());
        let one = |s: &Term, p: &str| -> Result<Term, RmlError> {
            let mut it = g.objects(s, p);
            let first = it.next().ok_or_else(|| unsupported(&format!("{s} lacks <{p}>")))?;
            if it.next().is_some() {
                return Err(unsupported(&format!("{s} has several <{p}>")));
            }
            Ok(first.clone())
        };
        let lexical = |t: Term, what: &str| -> Result<String, RmlError> {
            t.lexical()
                .map(str::to_string)
                .ok_or_else(|| unsupported(&format!("{what} must be a literal")))
        };
        let iri = |t: Term, what: &str| -> Result<String, RmlError> {
            t.as_iri()
                .map(str::to_string)
                .ok_or_else(|| unsupported(&format!("{what} must be an IRI")))
        };

        let maps: Vec<Term> = g.instances_of(&rr("TriplesMap")).cloned().collect();
        let mut sources = BTreeSet::new();
        let mut triples_maps = Vec::new();
        for m in &maps {
            sources.insert(one(m, &rml("logicalSource"))?);
            let sm = one(m, &rr("subjectMap"))?;
            let class = iri(one(&sm, &rr("class"))?, "rr:class")?;
            let subject = Template::parse(&lexical(one(&sm, &rr("template"))?, "rr:template")?)?;
            let mut predicate_objects = Vec::new();
            for pom in g.objects(m, &rr("predicateObjectMap")) {
                let predicate = iri(one(pom, &rr("predicate"))?, "rr:predicate")?;
                let om = one(pom, &rr("objectMap"))?;
                let object = if let Some(r) = g.object(&om, &rml("reference")) {
                    ObjectMap::Reference(lexical(r.clone(), "rml:reference")?)
                } else if let Some(t) = g.object(&om, &rr("template")) {
                    ObjectMap::Template(Template::parse(&lexical(t.clone(), "rr:template")?)?)
                } else {
                    return Err(unsupported("object map without reference or template"));
                };
                predicate_objects.push(PredicateObjectMap { predicate, object });
            }
            triples_maps.push(TriplesMap {
                iri: m.as_iri().unwrap_or_default().to_string(),
                class,
                subject,
                predicate_objects,
            });
        }
        if sources.len() > 1 {
            return Err(unsupported("several logical sources"));
        }
        let source = match sources.into_iter().next() {
            None => SourceDescriptor {
                path: String::new(),
                delimiter: '\t',
                has_header: false,
            },
            Some(file) => {
                let table = one(&file, &rml("source"))?;
                let path = lexical(one(&table, &csvw("url"))?, "csvw:url")?;
                let (delimiter, has_header) = match g.object(&table, &csvw("dialect")) {
                    None => (',', true),
                    Some(d) => {
                        let delimiter = match g.object(d, &csvw("delimiter")).and_then(Term::lexical) {
                            None => ',',
                            Some(s) => {
                                let mut cs = s.chars();
                                match (cs.next(), cs.next()) {
                                    (Some(c), None) => c,
                                    _ => return Err(unsupported("delimiter must be one character")),
                                }
                            }
                        };
                        let header = g
                            .object(d, &csvw("header"))
                            .and_then(Term::lexical)
                            .is_some_and(|h| h == "true" || h == "1");
                        (delimiter, header)
                    }
                };
                SourceDescriptor {
                    path,
                    delimiter,
                    has_header,
                }
            }
        };
        Ok(RmlMapping {
            source,
            triples_maps,
        })
    }

    fn check_references(&self, table: &DataTable) -> Result<(), RmlError> {
        let known = |r: &str| r == ROW_NUMBER || table.column_index(r).is_some();
        for tm in &self.triples_maps {
            let mut refs: Vec<&str> = tm.subject.references().collect();
            for pom in &tm.predicate_objects {
                match &pom.object {
                    ObjectMap::Reference(r) => refs.push(r),
                    ObjectMap::Template(t) => refs.extend(t.references()),
                }
            }
            if let Some(r) = refs.into_iter().find(|r| !known(r)) {
                return Err(RmlError::UnknownColumnReference(r.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RmlWarning {
    pub row: usize,
    pub triples_map: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Materialized {
    pub graph: RdfGraph,
    pub warnings: Vec<RmlWarning>,
}

/// Applies a mapping row by row. Rows whose subject template hits a null cell are
/// skipped for that triples map and reported; null literal cells emit nothing.
pub fn materialize(rml: &RdfGraph, table: &DataTable) -> Result<Materialized, RmlError> {
    materialize_mapping(&RmlMapping::from_graph(rml)?, table)
}

pub fn materialize_mapping(mapping: &RmlMapping, table: &DataTable) -> Result<Materialized, RmlError> {
    mapping.check_references(table)?;
    let mut graph = RdfGraph::new();
    let mut warnings = Vec::new();
    for row in 0..table.row_count() {
        for tm in &mapping.triples_maps {
            let Some(subject) = tm.subject.expand(table, row) else {
                warnings.push(RmlWarning {
                    row,
                    triples_map: tm.iri.clone(),
                    message: format!("null identifier for {}", tm.subject),
                });
                continue;
            };
            let subject = Term::iri(subject);
            graph.add(subject.clone(), vocab::RDF_TYPE, Term::iri(&tm.class));
            for pom in &tm.predicate_objects {
                let object = match &pom.object {
                    ObjectMap::Reference(r) => table.reference(row, r).flatten().map(Term::literal),
                    ObjectMap::Template(t) => t.expand(table, row).map(Term::iri),
                };
                if let Some(o) = object {
                    graph.add(subject.clone(), &pom.predicate, o);
                }
            }
        }
    }
    Ok(Materialized { graph, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{ColumnMapping, IdentifierSource};
    use crate::rdf::{parse_turtle, serialize_turtle, ClassRelation, RelationKey, Triple};
    use crate::tabular::parse_table;

    const SOSA: &str = "http://www.w3.org/ns/sosa/";
    const SSN: &str = "https://www.w3.org/TR/vocab-ssn/";

    fn sosa(l: &str) -> String {
        format!("{SOSA}{l}")
    }

    fn table() -> DataTable {
        parse_table(
            b"cloudy\t16:00\t16:30\tS2\nclear\t16:30\t17:00\tS3\nrain\t17:00\t17:30\tS3\n",
            &Dialect::tsv(),
        )
        .unwrap()
    }

    fn plan() -> DataGraphPlan {
        let label = RelationKey::new(sosa("Sensor"), vocab::RDFS_LABEL);
        DataGraphPlan {
            column_mappings: [(
                "col3".to_string(),
                ColumnMapping {
                    column_index: 3,
                    relation: label,
                    score: 0.9,
                },
            )]
            .into_iter()
            .collect(),
            class_relations: [ClassRelation::new(sosa("Sensor"), sosa("madeObservation"), sosa("Observation"))]
                .into_iter()
                .collect(),
            classes: [sosa("Sensor"), sosa("Observation")].into_iter().collect(),
            identifier_sources: [
                (sosa("Sensor"), IdentifierSource::Column("col3".into())),
                (sosa("Observation"), IdentifierSource::RowNumber),
            ]
            .into_iter()
            .collect(),
        }
    }

    fn options() -> RmlOptions {
        RmlOptions {
            base_iri: SSN.into(),
            source_path: "sky_sensors.tsv".into(),
            ..Default::default()
        }
    }

    #[test]
    fn mapping_shape() {
        let m = build_mapping(&plan(), &table(), &options()).unwrap();
        assert_eq!(m.triples_maps.len(), 2);
        assert_eq!(m.triples_maps[0].class, sosa("Sensor"));
        assert_eq!(m.triples_maps[0].subject.to_string(), format!("{SSN}Sensor{{col3}}"));
        assert_eq!(
            m.triples_maps[0].predicate_objects[1].object,
            ObjectMap::Template(Template::parse(&format!("{SSN}Observation{{rowNumber}}")).unwrap())
        );
        assert!(m.triples_maps[1].predicate_objects.is_empty());
        let g = m.to_graph();
        let text = serialize_turtle(&g);
        let back = RmlMapping::from_graph(&parse_turtle(text.as_bytes()).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn shared_sensor_deduplicates() {
        let rml = emit_rml(&plan(), &table(), &options()).unwrap();
        let out = materialize(&rml, &table()).unwrap();
        let s3 = Term::iri(format!("{SSN}SensorS3"));
        assert_eq!(out.graph.objects(&s3, &sosa("madeObservation")).count(), 2);
        assert_eq!(out.graph.instances_of(&sosa("Sensor")).count(), 2);
        assert!(out.graph.contains(&Triple::new(
            Term::iri(format!("{SSN}SensorS2")),
            sosa("madeObservation"),
            Term::iri(format!("{SSN}Observation0"))
        )));
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn unknown_and_null_references() {
        let rml = emit_rml(&plan(), &table(), &options()).unwrap();
        let narrow = parse_table(b"a\tb\n", &Dialect::tsv()).unwrap();
        assert_eq!(
            materialize(&rml, &narrow),
            Err(RmlError::UnknownColumnReference("col3".into()))
        );
        let holes = parse_table(b"x\t1\t2\t\n", &Dialect::tsv()).unwrap();
        let out = materialize(&rml, &holes).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.graph.instances_of(&sosa("Sensor")).count(), 0);
        assert_eq!(out.graph.instances_of(&sosa("Observation")).count(), 1);
    }

    #[test]
    fn templates() {
        let t = Template::parse(r"http://x/a\{b{col1}c").unwrap();
        assert_eq!(t.references().collect::<Vec<_>>(), ["col1"]);
        assert_eq!(Template::parse(&t.to_string()).unwrap(), t);
        assert!(Template::parse("x{").is_err());
        assert_eq!(percent_encode("S 1/ä"), "S%201%2F%C3%A4");
    }
}
