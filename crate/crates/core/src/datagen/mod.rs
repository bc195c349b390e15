//! Training corpora from knowledge graphs and the evaluation protocols.
//!
//! A knowledge graph is split into a domain side `G1` and a table side `G2`.
//! Tables are extracted from `G2` by instantiating small class templates; the
//! column ground truth points at data type relations that `G1` also has.

pub mod corpus;
pub mod evaluate;
pub mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graphgen::{ColumnMapping, DataGraphPlan, IdentifierSource};
use crate::matcher::TrainingPair;
use crate::profiler::{profile_domain, profile_table, ProfileError};
use crate::rdf::{vocab, ClassRelation, GraphIndex, RdfGraph, RelationKey, Term};
use crate::rml::{build_mapping, materialize_mapping, RmlOptions};
use crate::scalar::Scalar;
use crate::tabular::{DataTable, Dialect};

pub use evaluate::{
    evaluate, extract_pairwise, extract_setbased, DatasetTable, EvaluationCase, EvaluationReport,
    Extraction, GroupRejection, InstanceResult, SetBasedExtraction, SetBasedGroup,
};

/// Base IRI of entities in ground-truth data graphs.
pub const DATA_BASE: &str = "http://example.org/data/";

/// Entity base of the table called `name`.
pub fn entity_base(name: &str) -> String {
    format!("{DATA_BASE}{}/", crate::rml::percent_encode(name))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Maximum number of template nodes.
    pub k: usize,
    /// An extra data type relation is added while a uniform draw exceeds `delta`.
    pub delta: f64,
    pub ratio_bounds: (f64, f64),
    pub seed: u64,
    pub max_rows: usize,
    /// Template instantiations attempted per knowledge graph.
    pub tables_per_kg: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            k: 3,
            delta: 0.2,
            ratio_bounds: (0.25, 0.75),
            seed: 42,
            max_rows: 10_000,
            tables_per_kg: 10,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let (lo, hi) = self.ratio_bounds;
        if self.k == 0 {
            return Err(GenError::InvalidConfig("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(GenError::InvalidConfig("delta must lie in [0, 1]".into()));
        }
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(GenError::InvalidConfig("ratio bounds must lie in (0, 1)".into()));
        }
        if self.max_rows == 0 {
            return Err(GenError::InvalidConfig("max rows must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("graph has {0} typed entities; at least 2 are needed")]
    TooSmall(usize),
    #[error("no template could be instantiated")]
    NoInstantiableTemplate,
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
}

/// Reasons for dropping a table from a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FilterReason {
    Unparseable,
    Cyclic,
    IdenticalColumns,
    TooFewMappedColumns,
}

impl FilterReason {
    pub fn code(self) -> &'static str {
        match self {
            FilterReason::Unparseable => "unparseable",
            FilterReason::Cyclic => "cyclic",
            FilterReason::IdenticalColumns => "identical-columns",
            FilterReason::TooFewMappedColumns => "too-few-mapped-columns",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        [
            FilterReason::Unparseable,
            FilterReason::Cyclic,
            FilterReason::IdenticalColumns,
            FilterReason::TooFewMappedColumns,
        ]
        .into_iter()
        .find(|r| r.code() == code)
    }
}

impl std::fmt::Display for FilterReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// Table constraints: no class instantiated twice in a row, no two columns
/// with identical values, at least two mapped columns.
///
/// A class is instantiated twice when a relation is mapped twice or when the
/// class relations are not a forest of out-trees (self-loops, two incoming
/// relations, cycles).
pub fn check_table(
    table: &DataTable,
    mapping: &BTreeMap<String, RelationKey>,
    class_relations: &BTreeSet<ClassRelation>,
) -> Option<FilterReason> {
    let distinct: BTreeSet<&RelationKey> = mapping.values().collect();
    if distinct.len() < mapping.len() || !is_out_forest(class_relations) {
        return Some(FilterReason::Cyclic);
    }
    let columns: Vec<Vec<Option<&str>>> = (0..table.column_count()).map(|n| table.column_values(n)).collect();
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            if columns[i] == columns[j] {
                return Some(FilterReason::IdenticalColumns);
            }
        }
    }
    let mapped = mapping.keys().filter(|c| table.column_index(c).is_some()).count();
    if mapped < 2 {
        return Some(FilterReason::TooFewMappedColumns);
    }
    None
}

fn is_out_forest(relations: &BTreeSet<ClassRelation>) -> bool {
    let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
    for r in relations {
        if r.source == r.target || parent.insert(&r.target, &r.source).is_some() {
            return false;
        }
    }
    // with one parent each, a cycle shows up as a walk that never reaches a root
    parent.keys().all(|start| {
        let mut at = *start;
        for _ in 0..=parent.len() {
            match parent.get(at) {
                Some(p) => at = p,
                None => return true,
            }
        }
        false
    })
}

/// Template tree shapes with up to `k` nodes, as edge lists over node indices
/// (node 0 is the root).
pub fn template_shapes(k: usize) -> Vec<Vec<(usize, usize)>> {
    let mut shapes = vec![vec![]];
    if k >= 2 {
        shapes.push(vec![(0, 1)]);
    }
    if k >= 3 {
        shapes.push(vec![(0, 1), (1, 2)]);
        shapes.push(vec![(0, 1), (0, 2)]);
    }
    shapes
}

fn typed_entities(index: &GraphIndex) -> Vec<Term> {
    index.types.keys().cloned().collect()
}

/// Splits entities at `ratio`: a seeded shuffle puts the first `round(ratio * n)`
/// entities into `G1`. Every triple follows its subject; triples of untyped
/// subjects are dropped.
pub fn split_kg_at(g: &RdfGraph, ratio: f64, seed: u64) -> Result<(RdfGraph, RdfGraph), GenError> {
    let index = GraphIndex::build(g);
    let mut entities = typed_entities(&index);
    if entities.len() < 2 {
        return Err(GenError::TooSmall(entities.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    entities.shuffle(&mut rng);
    let cut = ((entities.len() as f64 * ratio).round() as usize).clamp(1, entities.len() - 1);
    let first: BTreeSet<&Term> = entities[..cut].iter().collect();
    let mut g1 = RdfGraph::new();
    let mut g2 = RdfGraph::new();
    for (p, i) in g.prefixes() {
        g1.add_prefix(p, i);
        g2.add_prefix(p, i);
    }
    for t in g.triples() {
        if !index.types.contains_key(&t.subject) {
            continue;
        }
        if first.contains(&t.subject) {
            g1.insert(t.clone());
        } else {
            g2.insert(t.clone());
        }
    }
    Ok((g1, g2))
}

/// Splits at a seeded ratio drawn uniformly from `config.ratio_bounds`.
pub fn split_kg(g: &RdfGraph, config: &GenConfig) -> Result<(RdfGraph, RdfGraph), GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.ratio_bounds;
    let ratio = if lo == hi { lo } else { rng.gen_range(lo..hi) };
    split_kg_at(g, ratio, rng.gen())
}

/// A table extracted from a template instantiation.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTable {
    pub table: DataTable,
    /// Column id -> data type relation.
    pub ground_truth: BTreeMap<String, RelationKey>,
    pub class_relations: BTreeSet<ClassRelation>,
    /// Classes whose entity URIs come from a key column.
    pub keys: BTreeMap<String, String>,
}

impl GeneratedTable {
    pub fn ground_truth_plan(&self) -> DataGraphPlan {
        ground_truth_plan(&self.table, &self.ground_truth, &self.class_relations, &self.keys)
    }

    /// The data graph of the table under its ground-truth mapping, entities under `base`.
    pub fn data_graph(&self, base: &str) -> RdfGraph {
        ground_truth_graph(&self.table, &self.ground_truth_plan(), base)
    }
}

/// Plan reproducing the entities behind a table whose mapping is known.
/// `keys` maps classes to the column their entity URIs come from; every other
/// class is identified by row number.
pub fn ground_truth_plan(
    table: &DataTable,
    mapping: &BTreeMap<String, RelationKey>,
    class_relations: &BTreeSet<ClassRelation>,
    keys: &BTreeMap<String, String>,
) -> DataGraphPlan {
    let column_mappings = mapping
        .iter()
        .filter_map(|(c, r)| {
            let column_index = table.column_index(c)?;
            Some((
                c.clone(),
                ColumnMapping {
                    column_index,
                    relation: r.clone(),
                    score: 1.0,
                },
            ))
        })
        .collect();
    let mut classes: BTreeSet<String> = mapping.values().map(|r| r.class.clone()).collect();
    for r in class_relations {
        classes.insert(r.source.clone());
        classes.insert(r.target.clone());
    }
    let identifier_sources = classes
        .iter()
        .map(|c| {
            let src = keys
                .get(c)
                .map_or(IdentifierSource::RowNumber, |k| IdentifierSource::Column(k.clone()));
            (c.clone(), src)
        })
        .collect();
    DataGraphPlan {
        column_mappings,
        class_relations: class_relations.clone(),
        classes,
        identifier_sources,
    }
}

/// Materializes `plan` over `table` with entities under `base`.
pub fn ground_truth_graph(table: &DataTable, plan: &DataGraphPlan, base: &str) -> RdfGraph {
    let options = RmlOptions {
        base_iri: base.to_string(),
        source_path: "table.csv".to_string(),
        dialect: Dialect::csv_with_header(),
        ..Default::default()
    };
    let mapping = build_mapping(plan, table, &options).expect("plan references table columns");
    materialize_mapping(&mapping, table).expect("plan references table columns").graph
}

struct Node {
    class: String,
    relations: Vec<RelationKey>,
}

fn weighted<'a, T>(rng: &mut ChaCha8Rng, items: &'a [(T, usize)]) -> Option<&'a T> {
    let dist = WeightedIndex::new(items.iter().map(|(_, w)| *w)).ok()?;
    Some(&items[dist.sample(rng)].0)
}

/// Keys of `index` whose values are unique and present exactly once per entity.
fn identifying_relations(index: &GraphIndex) -> BTreeSet<RelationKey> {
    index
        .literals
        .iter()
        .filter(|(k, v)| {
            let n = index.instance_count(&k.class);
            let distinct: BTreeSet<&String> = v.values.iter().collect();
            v.values.len() == n && distinct.len() == n && v.subjects.len() == n
        })
        .map(|(k, _)| k.clone())
        .collect()
}

/// Extracts tables from `g2` by instantiating random templates.
///
/// Classes are sampled by instance count and class relations by triple count,
/// data type relations by triple count restricted to `allowed` when given. Every
/// leaf gets one data type relation; further ones are added to each node while a
/// uniform draw exceeds `delta`. Rows are the entity tuples matching the
/// template (inner join along its edges), capped at `max_rows`.
pub fn generate_tables(
    g2: &RdfGraph,
    config: &GenConfig,
    allowed: Option<&BTreeSet<RelationKey>>,
) -> Result<Vec<GeneratedTable>, GenError> {
    config.validate()?;
    let index = GraphIndex::build(g2);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shapes = template_shapes(config.k);
    let identifying = identifying_relations(&index);

    let class_weights: Vec<(String, usize)> = index
        .instances
        .iter()
        .map(|(c, e)| (c.clone(), e.len()))
        .collect();
    let mut out = Vec::new();
    for _ in 0..config.tables_per_kg.max(1) {
        let shape = &shapes[rng.gen_range(0..shapes.len())];
        if let Some(t) = instantiate(g2, &index, shape, &class_weights, &identifying, allowed, config, &mut rng) {
            if !out.iter().any(|o: &GeneratedTable| o.ground_truth == t.ground_truth && o.table == t.table) {
                out.push(t);
            }
        }
    }
    if out.is_empty() {
        return Err(GenError::NoInstantiableTemplate);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn instantiate(
    g: &RdfGraph,
    index: &GraphIndex,
    shape: &[(usize, usize)],
    class_weights: &[(String, usize)],
    identifying: &BTreeSet<RelationKey>,
    allowed: Option<&BTreeSet<RelationKey>>,
    config: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Option<GeneratedTable> {
    let n_nodes = shape.len() + 1;
    // the root needs as many distinct link targets as it has children
    let children = shape.iter().filter(|(u, _)| *u == 0).count();
    let roots: Vec<(String, usize)> = class_weights
        .iter()
        .filter(|(c, _)| {
            let targets: BTreeSet<&str> = index
                .links
                .keys()
                .filter(|r| &r.source == c && &r.target != c)
                .map(|r| r.target.as_str())
                .collect();
            targets.len() >= children
        })
        .cloned()
        .collect();
    let root = weighted(rng, &roots)?.clone();
    let mut nodes = vec![Node {
        class: root,
        relations: Vec::new(),
    }];
    let mut edges: Vec<(usize, String, usize)> = Vec::new();
    for (u, v) in shape {
        debug_assert_eq!(*v, nodes.len());
        let used: BTreeSet<&str> = nodes.iter().map(|n| n.class.as_str()).collect();
        let options: Vec<(&ClassRelation, usize)> = index
            .links
            .iter()
            .filter(|(r, _)| r.source == nodes[*u].class && !used.contains(r.target.as_str()))
            .map(|(r, n)| (r, *n))
            .collect();
        let rel = (*weighted(rng, &options)?).clone();
        edges.push((*u, rel.property.clone(), *v));
        nodes.push(Node {
            class: rel.target,
            relations: Vec::new(),
        });
    }
    debug_assert_eq!(nodes.len(), n_nodes);

    let is_leaf = |i: usize| !edges.iter().any(|(u, _, _)| *u == i);
    for (i, node) in nodes.iter_mut().enumerate() {
        let mut options: Vec<(RelationKey, usize)> = index
            .literals
            .iter()
            .filter(|(k, _)| k.class == node.class && allowed.is_none_or(|a| a.contains(*k)))
            .map(|(k, v)| (k.clone(), v.values.len()))
            .collect();
        let required = usize::from(is_leaf(i));
        if options.len() < required {
            return None;
        }
        let mut take = |options: &mut Vec<(RelationKey, usize)>, rng: &mut ChaCha8Rng| {
            let dist = WeightedIndex::new(options.iter().map(|(_, w)| *w)).expect("non-empty");
            let (k, _) = options.remove(dist.sample(rng));
            node.relations.push(k);
        };
        for _ in 0..required {
            take(&mut options, rng);
        }
        while !options.is_empty() && rng.gen::<f64>() > config.delta {
            take(&mut options, rng);
        }
    }

    // drop column-less leaves until every leaf carries a column
    let mut alive: Vec<bool> = vec![true; nodes.len()];
    loop {
        let degree = |i: usize, alive: &[bool]| {
            edges
                .iter()
                .filter(|(u, _, v)| alive[*u] && alive[*v] && (*u == i || *v == i))
                .count()
        };
        let alive_count = alive.iter().filter(|a| **a).count();
        let removable = (0..nodes.len()).find(|i| {
            alive[*i] && nodes[*i].relations.is_empty() && (alive_count == 1 || degree(*i, &alive) <= 1)
        });
        match removable {
            Some(i) => alive[i] = false,
            None => break,
        }
    }
    if !alive.iter().any(|a| *a) {
        return None;
    }
    let edges: Vec<(usize, String, usize)> = edges.into_iter().filter(|(u, _, v)| alive[*u] && alive[*v]).collect();
    let root = (0..nodes.len())
        .find(|i| alive[*i] && !edges.iter().any(|(_, _, v)| v == i))
        .expect("a tree has a root");

    let rows = extract_rows(g, index, &nodes, &edges, root, config.max_rows);
    if rows.is_empty() {
        return None;
    }

    let mut ground_truth = BTreeMap::new();
    let mut keys = BTreeMap::new();
    let mut columns = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if !alive[i] {
            continue;
        }
        for r in &node.relations {
            let id = format!("col{}", columns.len());
            if identifying.contains(r) && !keys.contains_key(&node.class) {
                keys.insert(node.class.clone(), id.clone());
            }
            ground_truth.insert(id, r.clone());
            columns.push((i, r.property.clone()));
        }
    }
    let cells: Vec<Vec<Option<String>>> = rows
        .iter()
        .map(|tuple| {
            columns
                .iter()
                .map(|(i, p)| first_literal(g, &tuple[*i], p))
                .collect()
        })
        .collect();
    let table = DataTable::new(None, cells).ok()?;
    let class_relations = edges
        .iter()
        .map(|(u, p, v)| ClassRelation::new(nodes[*u].class.clone(), p.clone(), nodes[*v].class.clone()))
        .collect();
    Some(GeneratedTable {
        table,
        ground_truth,
        class_relations,
        keys,
    })
}

/// Smallest literal of `(entity, property)`.
fn first_literal(g: &RdfGraph, entity: &Term, property: &str) -> Option<String> {
    g.objects(entity, property)
        .filter_map(Term::lexical)
        .min()
        .map(str::to_string)
}

/// Entity tuples (indexed by node) of the live template rooted at `root`.
fn extract_rows(
    g: &RdfGraph,
    index: &GraphIndex,
    nodes: &[Node],
    edges: &[(usize, String, usize)],
    root: usize,
    max_rows: usize,
) -> Vec<Vec<Term>> {
    let placeholder = Term::blank("unbound");
    let mut rows = Vec::new();
    let Some(roots) = index.instances.get(&nodes[root].class) else {
        return rows;
    };
    let mut order = vec![root];
    let mut k = 0;
    while k < order.len() {
        let u = order[k];
        order.extend(edges.iter().filter(|(s, _, _)| *s == u).map(|(_, _, v)| *v));
        k += 1;
    }
    let parent: BTreeMap<usize, (usize, &str)> = edges.iter().map(|(u, p, v)| (*v, (*u, p.as_str()))).collect();

    #[allow(clippy::too_many_arguments)]
    fn bind(
        g: &RdfGraph,
        index: &GraphIndex,
        nodes: &[Node],
        order: &[usize],
        parent: &BTreeMap<usize, (usize, &str)>,
        depth: usize,
        tuple: &mut Vec<Term>,
        rows: &mut Vec<Vec<Term>>,
        max_rows: usize,
    ) {
        if rows.len() >= max_rows {
            return;
        }
        if depth == order.len() {
            rows.push(tuple.clone());
            return;
        }
        let v = order[depth];
        let (u, p) = parent[&v];
        let subject = tuple[u].clone();
        let class = &nodes[v].class;
        let targets: Vec<Term> = g
            .objects(&subject, p)
            .filter(|o| index.types.get(*o).is_some_and(|c| c.contains(class)))
            .cloned()
            .collect();
        for t in targets {
            tuple[v] = t;
            bind(g, index, nodes, order, parent, depth + 1, tuple, rows, max_rows);
            if rows.len() >= max_rows {
                return;
            }
        }
    }

    let mut tuple = vec![placeholder; nodes.len()];
    for r in roots {
        tuple[root] = r.clone();
        bind(g, index, nodes, &order, &parent, 1, &mut tuple, &mut rows, max_rows);
        if rows.len() >= max_rows {
            break;
        }
    }
    rows
}

/// A table, the domain graph it should be matched against and its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    pub name: String,
    pub domain: RdfGraph,
    pub table: DataTable,
    pub ground_truth: BTreeMap<String, RelationKey>,
    pub class_relations: BTreeSet<ClassRelation>,
    /// Ground-truth data graph of the table.
    pub data_graph: RdfGraph,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratedCorpus {
    pub instances: Vec<TrainingInstance>,
    /// Dropped tables with the reason each was dropped.
    pub rejected: Vec<(String, FilterReason)>,
}

/// Checks the table constraints plus profiling of every column.
pub fn filter_table(
    table: &DataTable,
    mapping: &BTreeMap<String, RelationKey>,
    class_relations: &BTreeSet<ClassRelation>,
) -> Option<FilterReason> {
    let (_, warnings) = profile_table::<f64>(table);
    if !warnings.is_empty() {
        return Some(FilterReason::Unparseable);
    }
    check_table(table, mapping, class_relations)
}

/// Splits `kg`, extracts tables from the table side and keeps those that pass
/// [`filter_table`]. Every instance carries the domain side as its domain graph.
pub fn generate_corpus(kg: &RdfGraph, name: &str, config: &GenConfig) -> Result<GeneratedCorpus, GenError> {
    let (g1, g2) = split_kg(kg, config)?;
    let domain_index = GraphIndex::build(&g1);
    let allowed: BTreeSet<RelationKey> = domain_index.literals.keys().cloned().collect();
    let tables = generate_tables(&g2, config, Some(&allowed))?;
    let mut corpus = GeneratedCorpus::default();
    for (i, t) in tables.into_iter().enumerate() {
        let table_name = format!("{name}-{i}");
        if let Some(reason) = filter_table(&t.table, &t.ground_truth, &t.class_relations) {
            corpus.rejected.push((table_name, reason));
            continue;
        }
        let data_graph = t.data_graph(&entity_base(&table_name));
        corpus.instances.push(TrainingInstance {
            name: table_name,
            domain: g1.clone(),
            table: t.table,
            ground_truth: t.ground_truth,
            class_relations: t.class_relations,
            data_graph,
        });
    }
    Ok(corpus)
}

/// Column/relation feature pairs: per instance, ground-truth pairs are
/// positive and every other combination of a mapped column with a domain
/// relation is negative. With `balance` set, each instance's negatives are
/// subsampled (seeded) down to its number of positives.
pub fn make_training_pairs<T: Scalar>(
    instances: &[TrainingInstance],
    balance: Option<u64>,
) -> Result<Vec<TrainingPair<T>>, ProfileError> {
    let mut pairs = Vec::new();
    for (n, instance) in instances.iter().enumerate() {
        let domain = profile_domain::<T>(&instance.domain)?;
        let (columns, _) = profile_table::<T>(&instance.table);
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for col in &columns {
            let Some(truth) = instance.ground_truth.get(&col.column_id) else {
                continue;
            };
            for (key, rel) in &domain.relation_profiles {
                let positive = key == truth;
                let pair = TrainingPair {
                    a: col.vector.clone(),
                    b: rel.vector.clone(),
                    label: if positive { T::one() } else { T::zero() },
                };
                if positive {
                    positives.push(pair);
                } else {
                    negatives.push(pair);
                }
            }
        }
        if let Some(seed) = balance {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
            negatives.shuffle(&mut rng);
            negatives.truncate(positives.len());
        }
        pairs.extend(positives);
        pairs.extend(negatives);
    }
    Ok(pairs)
}

/// The type triple of an entity, for graphs built by hand.
pub fn type_triple(entity: &Term, class: &str) -> crate::rdf::Triple {
    crate::rdf::Triple::new(entity.clone(), vocab::RDF_TYPE, Term::iri(class))
}
