//! Pairwise and set-based evaluation over tables with known mappings.

use std::collections::{BTreeMap, BTreeSet};

use super::corpus::CorpusEntry;
use super::{filter_table, FilterReason};
use crate::matcher::SiameseModel;
use crate::pipeline::interpret_table;
use crate::profiler::profile_domain;
use crate::rdf::{ClassRelation, DomainOntology, GraphIndex, RdfGraph, RelationKey};
use crate::scalar::Scalar;
use crate::tabular::DataTable;

pub const MIN_GROUP_TABLES: usize = 10;
pub const MIN_GROUP_RELATIONS: usize = 5;

/// A table of an evaluation dataset with its mapping and data graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    pub name: String,
    pub table: DataTable,
    pub mapping: BTreeMap<String, RelationKey>,
    pub class_relations: BTreeSet<ClassRelation>,
    pub graph: RdfGraph,
}

impl From<CorpusEntry> for DatasetTable {
    fn from(e: CorpusEntry) -> Self {
        DatasetTable {
            name: e.name,
            table: e.table,
            mapping: e.mapping,
            class_relations: e.class_relations,
            graph: e.graph,
        }
    }
}

impl DatasetTable {
    pub fn relations(&self) -> BTreeSet<&RelationKey> {
        self.mapping.values().collect()
    }

    fn rejection(&self) -> Option<FilterReason> {
        filter_table(&self.table, &self.mapping, &self.class_relations)
    }

    /// Class most columns are mapped to, ties by IRI.
    pub fn majority_class(&self) -> Option<&str> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in self.mapping.values() {
            *counts.entry(r.class.as_str()).or_default() += 1;
        }
        let best = counts.values().copied().max()?;
        counts.into_iter().find(|(_, n)| *n == best).map(|(c, _)| c)
    }
}

/// A table to interpret against a domain graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationCase {
    pub name: String,
    pub domain: RdfGraph,
    pub table: DataTable,
    pub ground_truth: BTreeMap<String, RelationKey>,
    pub class_relations: BTreeSet<ClassRelation>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extraction {
    pub cases: Vec<EvaluationCase>,
    pub rejected: Vec<(String, FilterReason)>,
}

fn split_valid(dataset: &[DatasetTable]) -> (Vec<&DatasetTable>, Vec<(String, FilterReason)>) {
    let mut valid = Vec::new();
    let mut rejected = Vec::new();
    for t in dataset {
        match t.rejection() {
            Some(r) => rejected.push((t.name.clone(), r)),
            None => valid.push(t),
        }
    }
    (valid, rejected)
}

/// One case per ordered pair of valid tables `(a, b)` where the relations
/// mapped in `a` are a subset of those in `b`; `b`'s graph is the domain.
pub fn extract_pairwise(dataset: &[DatasetTable]) -> Extraction {
    let (valid, rejected) = split_valid(dataset);
    let mut cases = Vec::new();
    for (i, a) in valid.iter().enumerate() {
        let ra = a.relations();
        for (j, b) in valid.iter().enumerate() {
            if i != j && ra.is_subset(&b.relations()) {
                cases.push(EvaluationCase {
                    name: format!("{}>{}", a.name, b.name),
                    domain: b.graph.clone(),
                    table: a.table.clone(),
                    ground_truth: a.mapping.clone(),
                    class_relations: a.class_relations.clone(),
                });
            }
        }
    }
    Extraction { cases, rejected }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupRejection {
    TooFewTables(usize),
    TooFewRelations(usize),
}

impl GroupRejection {
    pub fn code(self) -> &'static str {
        match self {
            GroupRejection::TooFewTables(_) => "too-few-tables",
            GroupRejection::TooFewRelations(_) => "too-few-relations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetBasedGroup {
    pub class: String,
    pub members: Vec<String>,
    /// Union of the members' mappings and class relations.
    pub ontology: DomainOntology,
    /// Union of the members' data graphs.
    pub domain: RdfGraph,
    /// One case per member, matched against the union of the other members' graphs.
    pub cases: Vec<EvaluationCase>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetBasedExtraction {
    pub groups: Vec<SetBasedGroup>,
    pub dropped_groups: Vec<(String, GroupRejection)>,
    pub rejected: Vec<(String, FilterReason)>,
}

/// Groups valid tables by majority class. Groups with fewer than
/// [`MIN_GROUP_TABLES`] tables or [`MIN_GROUP_RELATIONS`] distinct data type
/// relations are dropped.
pub fn extract_setbased(dataset: &[DatasetTable]) -> SetBasedExtraction {
    let (valid, rejected) = split_valid(dataset);
    let mut groups: BTreeMap<&str, Vec<&DatasetTable>> = BTreeMap::new();
    for t in valid {
        if let Some(c) = t.majority_class() {
            groups.entry(c).or_default().push(t);
        }
    }
    let mut out = SetBasedExtraction {
        rejected,
        ..Default::default()
    };
    for (class, members) in groups {
        let relations: BTreeSet<&RelationKey> = members.iter().flat_map(|t| t.relations()).collect();
        if members.len() < MIN_GROUP_TABLES {
            out.dropped_groups
                .push((class.to_string(), GroupRejection::TooFewTables(members.len())));
            continue;
        }
        if relations.len() < MIN_GROUP_RELATIONS {
            out.dropped_groups
                .push((class.to_string(), GroupRejection::TooFewRelations(relations.len())));
            continue;
        }
        let mut domain = RdfGraph::new();
        for t in &members {
            domain.extend(&t.graph);
        }
        let mut ontology = GraphIndex::build(&domain).ontology();
        ontology.class_relations.extend(members.iter().flat_map(|t| t.class_relations.iter().cloned()));
        let cases = members
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut others = RdfGraph::new();
                for (j, o) in members.iter().enumerate() {
                    if i != j {
                        others.extend(&o.graph);
                    }
                }
                EvaluationCase {
                    name: t.name.clone(),
                    domain: others,
                    table: t.table.clone(),
                    ground_truth: t.mapping.clone(),
                    class_relations: t.class_relations.clone(),
                }
            })
            .collect();
        out.groups.push(SetBasedGroup {
            class: class.to_string(),
            members: members.iter().map(|t| t.name.clone()).collect(),
            ontology,
            domain,
            cases,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub name: String,
    pub rod_correct: usize,
    pub rod_total: usize,
    pub roc_correct: usize,
    pub roc_total: usize,
    pub error: Option<String>,
}

/// Micro-averaged accuracies. A ratio over zero items counts as 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub instances: Vec<InstanceResult>,
    pub accuracy_rod: f64,
    pub accuracy_roc: f64,
    /// Correct data type plus class relations over all of them.
    pub accuracy: f64,
}

fn ratio(correct: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        correct as f64 / total as f64
    }
}

impl EvaluationReport {
    pub fn from_results(instances: Vec<InstanceResult>) -> Self {
        let sum = |f: fn(&InstanceResult) -> usize| instances.iter().map(f).sum::<usize>();
        let (rc, rt) = (sum(|r| r.rod_correct), sum(|r| r.rod_total));
        let (cc, ct) = (sum(|r| r.roc_correct), sum(|r| r.roc_total));
        EvaluationReport {
            accuracy_rod: ratio(rc, rt),
            accuracy_roc: ratio(cc, ct),
            accuracy: ratio(rc + cc, rt + ct),
            instances,
        }
    }

    /// Per-instance diagnostics, one CSV row per instance.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance", "rod_correct", "rod_total", "roc_correct", "roc_total", "error"])
            .expect("in-memory write");
        for r in &self.instances {
            w.write_record([
                r.name.clone(),
                r.rod_correct.to_string(),
                r.rod_total.to_string(),
                r.roc_correct.to_string(),
                r.roc_total.to_string(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf-8 fields")
    }
}

/// Scores a prediction against a case's ground truth.
pub fn score_case(
    case: &EvaluationCase,
    predicted: &BTreeMap<String, RelationKey>,
    predicted_relations: &BTreeSet<ClassRelation>,
) -> InstanceResult {
    InstanceResult {
        name: case.name.clone(),
        rod_correct: case
            .ground_truth
            .iter()
            .filter(|(c, r)| predicted.get(*c) == Some(*r))
            .count(),
        rod_total: case.ground_truth.len(),
        roc_correct: case.class_relations.intersection(predicted_relations).count(),
        roc_total: case.class_relations.len(),
        error: None,
    }
}

/// Runs the interpretation pipeline on every case. Failed cases count as
/// entirely wrong and keep the error message.
pub fn evaluate<T: Scalar>(model: &SiameseModel<T>, cases: &[EvaluationCase], threshold: T) -> EvaluationReport {
    let results = cases
        .iter()
        .map(|case| {
            let outcome = profile_domain::<T>(&case.domain)
                .map_err(|e| e.to_string())
                .and_then(|d| interpret_table(&case.table, &d, model, threshold).map_err(|e| e.to_string()));
            match outcome {
                Ok(i) => {
                    let predicted = i
                        .plan
                        .column_mappings
                        .iter()
                        .map(|(c, m)| (c.clone(), m.relation.clone()))
                        .collect();
                    score_case(case, &predicted, &i.plan.class_relations)
                }
                Err(e) => InstanceResult {
                    error: Some(e),
                    ..score_case(case, &BTreeMap::new(), &BTreeSet::new())
                },
            }
        })
        .collect();
    EvaluationReport::from_results(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(rod: (usize, usize), roc: (usize, usize)) -> InstanceResult {
        InstanceResult {
            name: "t".into(),
            rod_correct: rod.0,
            rod_total: rod.1,
            roc_correct: roc.0,
            roc_total: roc.1,
            error: None,
        }
    }

    #[test]
    fn combined_accuracy_weights_by_counts() {
        let r = EvaluationReport::from_results(vec![result((3, 4), (1, 2))]);
        assert_eq!(r.accuracy_rod, 0.75);
        assert_eq!(r.accuracy_roc, 0.5);
        assert!((r.accuracy - 4.0 / 6.0).abs() < 1e-15);
        let perfect = EvaluationReport::from_results(vec![result((2, 2), (1, 1)), result((3, 3), (0, 0))]);
        assert_eq!((perfect.accuracy_rod, perfect.accuracy_roc, perfect.accuracy), (1.0, 1.0, 1.0));
        let zero = EvaluationReport::from_results(vec![result((0, 2), (0, 1))]);
        assert_eq!((zero.accuracy_rod, zero.accuracy_roc, zero.accuracy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn csv_has_one_row_per_instance() {
        let r = EvaluationReport::from_results(vec![result((1, 2), (0, 0)), result((2, 2), (1, 1))]);
        let text = r.to_csv();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("instance,rod_correct"));
    }
}
