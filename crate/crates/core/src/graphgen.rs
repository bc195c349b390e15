//! From candidate mappings to a data graph plan: greedy column assignment and the
//! smallest class relation skeleton connecting the mapped classes.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::matcher::ColumnCandidates;
use crate::rdf::{ClassRelation, DomainOntology, RelationKey};
use crate::scalar::Scalar;
use crate::tabular::ROW_NUMBER;

/// Subset checks allowed in the exact search before falling back to greedy merging.
const SEARCH_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("no data type relation left for column {0}")]
    UnmappableColumn(String),
    #[error("no column mappings to build a plan from")]
    EmptyMapping,
    #[error("mapped relation {0} is not in the ontology")]
    UnknownRelation(RelationKey),
    #[error("classes {0:?} cannot be connected through admissible class relations")]
    DisconnectedOntology(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnMapping {
    pub column_index: usize,
    pub relation: RelationKey,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum IdentifierSource {
    Column(String),
    RowNumber,
}

impl IdentifierSource {
    /// Template placeholder name.
    pub fn reference(&self) -> &str {
        match self {
            IdentifierSource::Column(c) => c,
            IdentifierSource::RowNumber => ROW_NUMBER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataGraphPlan {
    /// Column id -> relation.
    pub column_mappings: BTreeMap<String, ColumnMapping>,
    pub class_relations: BTreeSet<ClassRelation>,
    /// Mapped classes plus intermediates introduced by the skeleton.
    pub classes: BTreeSet<String>,
    pub identifier_sources: BTreeMap<String, IdentifierSource>,
}

impl DataGraphPlan {
    /// Classes carrying at least one mapped column.
    pub fn terminals(&self) -> BTreeSet<String> {
        self.column_mappings
            .values()
            .map(|m| m.relation.class.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    /// Classes ordered so that sources of class relations precede their targets,
    /// ties broken by IRI.
    pub fn class_order(&self) -> Vec<String> {
        let mut indegree: BTreeMap<&str, usize> =
            self.classes.iter().map(|c| (c.as_str(), 0)).collect();
        for r in &self.class_relations {
            *indegree.entry(r.target.as_str()).or_default() += 1;
        }
        let mut order = Vec::new();
        let mut done = BTreeSet::new();
        while order.len() < indegree.len() {
            let next = indegree
                .iter()
                .find(|(c, d)| **d == 0 && !done.contains(**c))
                .map(|(c, _)| *c)
                // only reachable with a directed cycle; take the smallest remaining
                .or_else(|| indegree.keys().find(|c| !done.contains(**c)).copied())
                .expect("classes remain");
            done.insert(next);
            order.push(next.to_string());
            for r in self.class_relations.iter().filter(|r| r.source == next) {
                if let Some(d) = indegree.get_mut(r.target.as_str()) {
                    *d = d.saturating_sub(1);
                }
            }
        }
        order
    }
}

/// Greedy assignment: repeatedly takes the best remaining (column, relation) pair,
/// ties by column index then relation, and drops everything sharing either side.
pub fn select_mappings<T: Scalar>(
    candidates: &[ColumnCandidates<T>],
) -> Result<BTreeMap<String, ColumnMapping>, GraphError> {
    let mut all: Vec<(f64, usize, &RelationKey, &str)> = candidates
        .iter()
        .flat_map(|c| {
            c.candidates
                .iter()
                .map(move |k| (k.score.as_f64(), c.column_index, &k.relation, c.column_id.as_str()))
        })
        .collect();
    all.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite scores")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(b.2))
    });
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for (score, column_index, relation, column) in all {
        if out.contains_key(column) || used.contains(relation) {
            continue;
        }
        used.insert(relation);
        out.insert(
            column.to_string(),
            ColumnMapping {
                column_index,
                relation: relation.clone(),
                score,
            },
        );
    }
    let mut ordered: Vec<&ColumnCandidates<T>> = candidates.iter().collect();
    ordered.sort_by_key(|c| c.column_index);
    if let Some(c) = ordered.iter().find(|c| !out.contains_key(&c.column_id)) {
        return Err(GraphError::UnmappableColumn(c.column_id.clone()));
    }
    Ok(out)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Class relations with at least one terminal endpoint and distinct endpoints; of
/// several relations joining the same two classes only the smallest property is kept.
pub fn admissible_edges(
    ontology: &DomainOntology,
    terminals: &BTreeSet<String>,
) -> Vec<ClassRelation> {
    let mut best: BTreeMap<(&str, &str), &ClassRelation> = BTreeMap::new();
    for r in &ontology.class_relations {
        if r.source == r.target || !(terminals.contains(&r.source) || terminals.contains(&r.target)) {
            continue;
        }
        let pair = if r.source < r.target {
            (r.source.as_str(), r.target.as_str())
        } else {
            (r.target.as_str(), r.source.as_str())
        };
        let key = |c: &ClassRelation| (c.property.clone(), c.source.clone(), c.target.clone());
        best.entry(pair)
            .and_modify(|cur| {
                if key(r) < key(cur) {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    let mut edges: Vec<ClassRelation> = best.into_values().cloned().collect();
    edges.sort();
    edges
}

/// Connects `terminals` with the fewest admissible edges. Every admissible edge
/// touches a terminal, so intermediates only bridge terminals and a tree over
/// `k` intermediates has `|terminals| + k - 1` edges: the search minimizes `k`.
pub fn connect_terminals(
    ontology: &DomainOntology,
    terminals: &BTreeSet<String>,
) -> Result<BTreeSet<ClassRelation>, GraphError> {
    let edges = admissible_edges(ontology, terminals);
    let term: Vec<&String> = terminals.iter().collect();
    let t_index: BTreeMap<&str, usize> = term.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    // components of terminals joined by direct edges
    let mut uf = UnionFind::new(term.len());
    for e in &edges {
        if let (Some(a), Some(b)) = (t_index.get(e.source.as_str()), t_index.get(e.target.as_str())) {
            uf.union(*a, *b);
        }
    }
    let comp_of: Vec<usize> = (0..term.len()).map(|i| uf.find(i)).collect();
    let mut comps: Vec<usize> = comp_of.clone();
    comps.sort();
    comps.dedup();
    let comp_idx: BTreeMap<usize, usize> = comps.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let n_comp = comps.len();

    // intermediates touching at least two components, with the components they touch
    let mut touch: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for e in &edges {
        let (other, t) = match (t_index.get(e.source.as_str()), t_index.get(e.target.as_str())) {
            (Some(_), Some(_)) => continue,
            (Some(t), None) => (e.target.as_str(), *t),
            (None, Some(t)) => (e.source.as_str(), *t),
            (None, None) => unreachable!("admissible edges touch a terminal"),
        };
        touch.entry(other).or_default().insert(comp_idx[&comp_of[t]]);
    }
    let bridges: Vec<(&str, Vec<usize>)> = touch
        .into_iter()
        .filter(|(_, c)| c.len() >= 2)
        .map(|(k, c)| (k, c.into_iter().collect()))
        .collect();

    let merges = |chosen: &[usize]| -> bool {
        let mut uf = UnionFind::new(n_comp);
        let mut joined = 0;
        for b in chosen {
            let cs = &bridges[*b].1;
            for c in &cs[1..] {
                if uf.union(cs[0], *c) {
                    joined += 1;
                }
            }
        }
        joined == n_comp - 1
    };

    let mut chosen: Option<Vec<usize>> = None;
    let mut budget = SEARCH_BUDGET;
    'sizes: for k in 0..n_comp {
        let mut combo: Vec<usize> = (0..k).collect();
        if k > bridges.len() {
            break;
        }
        loop {
            if budget == 0 {
                break 'sizes;
            }
            budget -= 1;
            if merges(&combo) {
                chosen = Some(combo);
                break 'sizes;
            }
            // next k-combination in lexicographic order
            let mut i = k;
            loop {
                if i == 0 {
                    continue 'sizes;
                }
                i -= 1;
                if combo[i] < bridges.len() - k + i {
                    break;
                }
            }
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    let chosen = match chosen {
        Some(c) => c,
        None if budget == 0 => greedy_bridges(&bridges, n_comp),
        None => Vec::new(),
    };
    let nodes: BTreeSet<&str> = term
        .iter()
        .map(|t| t.as_str())
        .chain(chosen.iter().map(|b| bridges[*b].0))
        .collect();

    // spanning tree over terminals and chosen intermediates
    let ids: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut uf = UnionFind::new(nodes.len());
    let mut out = BTreeSet::new();
    for e in &edges {
        if let (Some(a), Some(b)) = (ids.get(e.source.as_str()), ids.get(e.target.as_str())) {
            if uf.union(*a, *b) {
                out.insert(e.clone());
            }
        }
    }
    let roots: BTreeSet<usize> = (0..term.len()).map(|i| uf.find(ids[term[i].as_str()])).collect();
    if roots.len() > 1 {
        return Err(GraphError::DisconnectedOntology(
            term.iter().map(|t| t.to_string()).collect(),
        ));
    }
    Ok(out)
}

fn greedy_bridges(bridges: &[(&str, Vec<usize>)], n_comp: usize) -> Vec<usize> {
    let mut uf = UnionFind::new(n_comp);
    let mut chosen = Vec::new();
    loop {
        let gain = |uf: &mut UnionFind, cs: &[usize]| {
            let roots: BTreeSet<usize> = cs.iter().map(|c| uf.find(*c)).collect();
            roots.len() - 1
        };
        let best = (0..bridges.len())
            .map(|b| (gain(&mut uf, &bridges[b].1), b))
            .filter(|(g, _)| *g > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        match best {
            Some((_, b)) => {
                for c in &bridges[b].1[1..] {
                    uf.union(bridges[b].1[0], *c);
                }
                chosen.push(b);
            }
            None => return chosen,
        }
    }
}

/// Builds the plan for `mappings`. A class takes its URIs from the highest
/// scoring mapped column whose relation is identifying, otherwise from the row number.
pub fn build_plan(
    mappings: &BTreeMap<String, ColumnMapping>,
    ontology: &DomainOntology,
    identifying: &BTreeSet<RelationKey>,
) -> Result<DataGraphPlan, GraphError> {
    if mappings.is_empty() {
        return Err(GraphError::EmptyMapping);
    }
    if let Some(m) = mappings
        .values()
        .find(|m| !ontology.datatype_relations.contains_key(&m.relation))
    {
        return Err(GraphError::UnknownRelation(m.relation.clone()));
    }
    let terminals: BTreeSet<String> = mappings.values().map(|m| m.relation.class.clone()).collect();
    let class_relations = connect_terminals(ontology, &terminals)?;
    let mut classes = terminals;
    for r in &class_relations {
        classes.insert(r.source.clone());
        classes.insert(r.target.clone());
    }
    let mut identifier_sources = BTreeMap::new();
    for class in &classes {
        let key = mappings
            .iter()
            .filter(|(_, m)| &m.relation.class == class && identifying.contains(&m.relation))
            .max_by(|a, b| {
                a.1.score
                    .partial_cmp(&b.1.score)
                    .expect("finite scores")
                    .then(b.1.column_index.cmp(&a.1.column_index))
            })
            .map(|(c, _)| IdentifierSource::Column(c.clone()))
            .unwrap_or(IdentifierSource::RowNumber);
        identifier_sources.insert(class.clone(), key);
    }
    Ok(DataGraphPlan {
        column_mappings: mappings.clone(),
        class_relations,
        classes,
        identifier_sources,
    })
}

/// Checks the structural conditions on a plan: every column mapped (`columns`),
/// mapped classes connected, no removable class relation, and every class
/// relation touching a mapped class. Returns the first violation.
pub fn audit_plan(plan: &DataGraphPlan, columns: &[&str]) -> Result<(), String> {
    if let Some(c) = columns.iter().find(|c| !plan.column_mappings.contains_key(**c)) {
        return Err(format!("column {c} is not mapped"));
    }
    let terminals = plan.terminals();
    if let Some(r) = plan
        .class_relations
        .iter()
        .find(|r| !terminals.contains(&r.source) && !terminals.contains(&r.target))
    {
        return Err(format!("{r} touches no mapped class"));
    }
    let connected = |skip: Option<&ClassRelation>| {
        let nodes: Vec<&String> = plan.classes.iter().collect();
        let ids: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut uf = UnionFind::new(nodes.len());
        for r in &plan.class_relations {
            if Some(r) != skip {
                uf.union(ids[r.source.as_str()], ids[r.target.as_str()]);
            }
        }
        let roots: BTreeSet<usize> = terminals.iter().map(|t| uf.find(ids[t.as_str()])).collect();
        roots.len() <= 1
    };
    if !connected(None) {
        return Err("mapped classes are not connected".into());
    }
    for r in &plan.class_relations {
        if connected(Some(r)) {
            return Err(format!("{r} can be removed"));
        }
    }
    Ok(())
}
