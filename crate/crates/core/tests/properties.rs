use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use tabsem::datagen::synthetic::{random_kg, SyntheticConfig};
use tabsem::datagen::{filter_table, generate_corpus, make_training_pairs, GenConfig};
use tabsem::graphgen::{build_plan, select_mappings, ColumnMapping};
use tabsem::matcher::{train, Candidate, ColumnCandidates, TrainConfig};
use tabsem::profiler::{compute_feature_vector, profile_domain, profile_table, stats};
use tabsem::rdf::{extract_ontology, parse_turtle, serialize_turtle, vocab, DomainOntology, RdfGraph, RelationKey, Term, Triple};
use tabsem::rml::{materialize_mapping, build_mapping, RmlOptions};
use tabsem::tabular::{identify_types, parse_table, serialize_table, CoarseType, ColumnTyping, DataTable, Dialect, FineType};
use tabsem::SiameseModel;

fn cell() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        1 => Just(None),
        4 => "[a-zA-Z0-9 ,;\"'.\\-]{1,8}".prop_map(Some),
        2 => (-1000i64..1000).prop_map(|n| Some(n.to_string())),
    ]
}

fn table() -> impl Strategy<Value = DataTable> {
    (1..5usize, 1..8usize).prop_flat_map(|(w, h)| {
        proptest::collection::vec(proptest::collection::vec(cell(), w), h)
            .prop_map(|rows| DataTable::new(None, rows).unwrap())
    })
}

fn column() -> impl Strategy<Value = Vec<String>> {
    let values = prop_oneof![
        proptest::collection::vec((-500i64..500).prop_map(|n| n.to_string()), 1..30),
        proptest::collection::vec((-50.0..50.0f64).prop_map(|x| format!("{x:.3}")), 1..30),
        proptest::collection::vec("[a-z]{2,9}( [a-z]{2,6})?", 1..30),
        proptest::collection::vec(
            (2000..2024i32, 1..13u32, 1..29u32).prop_map(|(y, m, d)| format!("{y:04}-{m:02}-{d:02}")),
            1..30
        ),
        proptest::collection::vec(proptest::bool::ANY.prop_map(|b| b.to_string()), 1..30),
    ];
    values
}

// tabular

proptest! {
    #[test]
    fn parse_serialize_is_idempotent(t in table(), delimiter in prop::sample::select(vec![',', '\t', ';'])) {
        let dialect = Dialect { delimiter, ..Dialect::tsv() };
        let text = serialize_table(&t, &dialect).unwrap();
        let back = parse_table(text.as_bytes(), &dialect).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(serialize_table(&back, &dialect).unwrap(), text);
    }

    #[test]
    fn typing_ignores_order_and_nulls(values in column(), seed in any::<u64>(), nulls in 0..5usize) {
        let refs: Vec<Option<&str>> = values.iter().map(|v| Some(v.as_str())).collect();
        let base = identify_types(&refs).unwrap();
        let mut shuffled = refs.clone();
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        shuffled.extend(std::iter::repeat_n(None, nulls));
        if seed % 2 == 0 {
            shuffled.reverse();
        }
        prop_assert_eq!(identify_types(&shuffled).unwrap(), base.clone());
        prop_assert!(base.is_consistent());
    }

    #[test]
    fn constant_integers_are_not_sequential(n in 2..40usize, value in -1000i64..1000) {
        let text = value.to_string();
        let refs: Vec<Option<&str>> = (0..n).map(|_| Some(text.as_str())).collect();
        let typing = identify_types(&refs).unwrap();
        prop_assert!(!typing.fine.contains(&FineType::Sequential));
    }
}

// rdf

fn small_kg() -> impl Strategy<Value = RdfGraph> {
    let triple = (0..6usize, 0..4usize, 0..3usize, 0..6usize, "[a-z0-9]{1,4}").prop_map(|(s, c, p, o, lit)| {
        let subject = Term::iri(format!("http://ex.org/e{s}"));
        match p {
            0 => Triple::new(subject, vocab::RDF_TYPE, Term::iri(format!("http://ex.org/C{c}"))),
            1 => Triple::new(subject, format!("http://ex.org/link{c}"), Term::iri(format!("http://ex.org/e{o}"))),
            _ => Triple::new(subject, format!("http://ex.org/value{c}"), Term::literal(lit)),
        }
    });
    proptest::collection::vec(triple, 0..30).prop_map(|ts| ts.into_iter().collect())
}

fn contained(small: &DomainOntology, big: &DomainOntology) -> bool {
    small.classes.is_subset(&big.classes)
        && small.class_relations.is_subset(&big.class_relations)
        && small.datatype_relations.keys().all(|k| big.datatype_relations.contains_key(k))
}

proptest! {
    #[test]
    fn ontology_grows_with_the_graph(g in small_kg(), extra in small_kg()) {
        let mut bigger = g.clone();
        bigger.extend(&extra);
        let Ok(a) = extract_ontology(&g) else { return Ok(()) };
        let b = extract_ontology(&bigger).unwrap();
        prop_assert!(contained(&a, &b));
    }

    #[test]
    fn turtle_output_is_deterministic(g in small_kg()) {
        let mut reversed: Vec<Triple> = g.triples().cloned().collect();
        reversed.reverse();
        let rebuilt: RdfGraph = reversed.into_iter().collect();
        prop_assert_eq!(serialize_turtle(&rebuilt), serialize_turtle(&g));
        let back = parse_turtle(serialize_turtle(&g).as_bytes()).unwrap();
        prop_assert_eq!(back.triple_set(), g.triple_set());
    }
}

// profiler

fn typing_of(values: &[Option<&str>]) -> ColumnTyping {
    identify_types(values).unwrap()
}

proptest! {
    #[test]
    fn features_ignore_row_order(values in column(), k in 0..30usize) {
        let refs: Vec<Option<&str>> = values.iter().map(|v| Some(v.as_str())).collect();
        let typing = typing_of(&refs);
        let a = compute_feature_vector::<f64>(&refs, &typing).unwrap();
        let mut permuted = refs.clone();
        permuted.rotate_right(k % refs.len());
        permuted.reverse();
        let b = compute_feature_vector::<f64>(&permuted, &typing).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn quantiles_are_monotone(nums in proptest::collection::vec(-1e6..1e6f64, 1..60)) {
        let q = stats::quantiles(&nums).unwrap();
        // slots: 0, 25, 50, 75, 100 then the deciles 10..90
        for w in [q[0], q[1], q[2], q[3], q[4]].windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for w in q[5..].windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!(q[0] <= q[5] && q[13] <= q[4]);
    }

    #[test]
    fn histogram_holds_every_value(nums in proptest::collection::vec(-1e3..1e3f64, 1..60), buckets in 1..20usize) {
        let h = stats::histogram(&nums, buckets).unwrap();
        prop_assert_eq!(h.len(), buckets);
        prop_assert_eq!(h.iter().sum::<usize>(), nums.len());
    }

    #[test]
    fn outliers_partition_the_input(nums in proptest::collection::vec(-1e3..1e3f64, 1..60)) {
        let (out, kept) = stats::iqr_outliers(&nums);
        prop_assert_eq!(out.len() + kept.len(), nums.len());
    }
}

// matcher

fn vector() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..100.0f64, 6)
}

proptest! {
    #[test]
    fn score_is_symmetric_and_scale_free(a in vector(), b in vector(), c in 0.01..100.0f64, seed in any::<u64>()) {
        let model = SiameseModel::new(6, 5, seed);
        let ab = model.score_pair(&a, &b).unwrap();
        let ba = model.score_pair(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        let sa: Vec<f64> = a.iter().map(|x| x * c).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * c).collect();
        let scaled = model.score_pair(&sa, &sb).unwrap();
        prop_assert!((scaled - ab).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&ab));
    }
}

fn candidates() -> impl Strategy<Value = Vec<ColumnCandidates<f64>>> {
    proptest::collection::vec(proptest::collection::btree_map(0..6usize, 0.01..1.0f64, 1..6), 1..5).prop_map(|cols| {
        cols.into_iter()
            .enumerate()
            .map(|(i, scores)| {
                let mut candidates: Vec<Candidate<f64>> = scores
                    .into_iter()
                    .map(|(r, score)| Candidate {
                        relation: RelationKey::new("http://ex.org/C", format!("http://ex.org/p{r}")),
                        score,
                    })
                    .collect();
                candidates.sort_by(|x, y| y.score.total_cmp(&x.score).then_with(|| x.relation.cmp(&y.relation)));
                ColumnCandidates {
                    column_id: format!("col{i}"),
                    column_index: i,
                    candidates,
                }
            })
            .collect()
    })
}

fn selection(r: &Result<BTreeMap<String, ColumnMapping>, tabsem::graphgen::GraphError>) -> Option<BTreeMap<String, RelationKey>> {
    r.as_ref().ok().map(|m| m.iter().map(|(c, m)| (c.clone(), m.relation.clone())).collect())
}

proptest! {
    #[test]
    fn selection_depends_only_on_score_order(cands in candidates()) {
        let warped: Vec<ColumnCandidates<f64>> = cands
            .iter()
            .map(|c| ColumnCandidates {
                candidates: c
                    .candidates
                    .iter()
                    .map(|k| Candidate { relation: k.relation.clone(), score: k.score.powi(3) / 2.0 + 0.1 })
                    .collect(),
                ..c.clone()
            })
            .collect();
        let a = select_mappings(&cands);
        let b = select_mappings(&warped);
        prop_assert_eq!(selection(&a), selection(&b));
        if let Ok(m) = a {
            let used: BTreeSet<&RelationKey> = m.values().map(|m| &m.relation).collect();
            prop_assert_eq!(used.len(), m.len());
        }
    }
}

// rml

proptest! {
    #[test]
    fn one_triple_per_cell_plus_types(rows in proptest::collection::vec(proptest::collection::vec(cell(), 3), 1..10)) {
        let t = DataTable::new(None, rows).unwrap();
        let mut ontology = DomainOntology::default();
        ontology.classes.insert("http://ex.org/C".into());
        let mut mappings = BTreeMap::new();
        for n in 0..3 {
            let key = RelationKey::new("http://ex.org/C", format!("http://ex.org/p{n}"));
            ontology.datatype_relations.insert(key.clone(), ColumnTyping::new(CoarseType::Text, [FineType::TextOther]));
            mappings.insert(format!("col{n}"), ColumnMapping { column_index: n, relation: key, score: 1.0 });
        }
        let plan = build_plan(&mappings, &ontology, &BTreeSet::new()).unwrap();
        let mapping = build_mapping(&plan, &t, &RmlOptions::default()).unwrap();
        let out = materialize_mapping(&mapping, &t).unwrap();
        let cells = t.rows().iter().flatten().filter(|c| c.is_some()).count();
        prop_assert_eq!(out.graph.len(), t.row_count() + cells);
    }
}

// training and generation

fn tiny_pairs(seed: u64) -> Vec<tabsem::TrainingPair> {
    let kg = random_kg(seed, &SyntheticConfig::default());
    let cfg = GenConfig { seed, tables_per_kg: 2, ..Default::default() };
    match generate_corpus(&kg, "kg", &cfg) {
        Ok(corpus) => make_training_pairs(&corpus.instances, None).unwrap(),
        Err(_) => tiny_pairs(seed + 1),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn training_is_deterministic(seed in 0..1000u64) {
        let pairs = tiny_pairs(seed % 5);
        let cfg = TrainConfig { epochs: 3, hidden_dim: 8, seed, ..Default::default() };
        let (a, ha) = train(&pairs, &cfg).unwrap();
        let (b, hb) = train(&pairs, &cfg).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ha, hb);
    }

    #[test]
    fn generated_tables_pass_the_filters(seed in 0..1000u64) {
        let kg = random_kg(seed, &SyntheticConfig::default());
        let cfg = GenConfig { seed, ..Default::default() };
        let Ok(corpus) = generate_corpus(&kg, "kg", &cfg) else { return Ok(()) };
        prop_assert!(!corpus.instances.is_empty());
        for i in &corpus.instances {
            prop_assert_eq!(filter_table(&i.table, &i.ground_truth, &i.class_relations), None);
            prop_assert!(i.ground_truth.len() >= 2);
        }
    }

    #[test]
    fn pair_counts_follow_the_ground_truth(seed in 0..1000u64, balance in any::<bool>()) {
        let kg = random_kg(seed, &SyntheticConfig::default());
        let cfg = GenConfig { seed, tables_per_kg: 3, ..Default::default() };
        let Ok(corpus) = generate_corpus(&kg, "kg", &cfg) else { return Ok(()) };
        let pairs = make_training_pairs::<f64>(&corpus.instances, balance.then_some(seed)).unwrap();
        let (mut pos, mut neg) = (0, 0);
        for i in &corpus.instances {
            let relations = profile_domain::<f64>(&i.domain).unwrap().relation_profiles.len();
            let (columns, _) = profile_table::<f64>(&i.table);
            let mapped = columns.iter().filter(|c| i.ground_truth.contains_key(&c.column_id)).count();
            pos += mapped;
            let all_neg = mapped * (relations - 1);
            neg += if balance { all_neg.min(mapped) } else { all_neg };
        }
        let got_pos = pairs.iter().filter(|p| p.label == 1.0).count();
        prop_assert_eq!(got_pos, pos);
        prop_assert_eq!(pairs.len() - got_pos, neg);
    }
}
