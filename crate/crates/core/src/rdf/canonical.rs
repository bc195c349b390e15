//! Canonical blank node labeling by color refinement with individualization.

use std::collections::{BTreeMap, BTreeSet};

use super::{RdfGraph, Term, Triple};

fn signature(term: &Term, colors: &BTreeMap<&str, usize>) -> String {
    match term {
        Term::Blank(l) => format!("_:{}", colors[l.as_str()]),
        other => other.to_string(),
    }
}

/// Refines `colors` until the partition is stable. Colors are ranks of sorted signatures.
fn refine<'a>(graph: &'a RdfGraph, mut colors: BTreeMap<&'a str, usize>) -> BTreeMap<&'a str, usize> {
    loop {
        let classes_before = colors.values().collect::<BTreeSet<_>>().len();
        let mut sigs: BTreeMap<&str, Vec<String>> = colors
            .iter()
            .map(|(b, c)| (*b, vec![format!("#{c}")]))
            .collect();
        for t in graph.triples() {
            if let Term::Blank(s) = &t.subject {
                let entry = format!("o {} {}", t.predicate, signature(&t.object, &colors));
                sigs.get_mut(s.as_str()).unwrap().push(entry);
            }
            if let Term::Blank(o) = &t.object {
                let entry = format!("i {} {}", t.predicate, signature(&t.subject, &colors));
                sigs.get_mut(o.as_str()).unwrap().push(entry);
            }
        }
        for v in sigs.values_mut() {
            v[1..].sort();
        }
        let ranks: BTreeMap<&Vec<String>, usize> = sigs
            .values()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        let next: BTreeMap<&str, usize> = sigs.iter().map(|(b, s)| (*b, ranks[s])).collect();
        let classes_after = next.values().collect::<BTreeSet<_>>().len();
        colors = next;
        if classes_after == classes_before {
            return colors;
        }
    }
}

pub(super) fn canonicalize(graph: &RdfGraph) -> RdfGraph {
    let blanks: BTreeSet<&str> = graph
        .triples()
        .flat_map(|t| [&t.subject, &t.object])
        .filter_map(|term| match term {
            Term::Blank(l) => Some(l.as_str()),
            _ => None,
        })
        .collect();
    let mut colors = refine(graph, blanks.iter().map(|b| (*b, 0)).collect());
    loop {
        let mut by_color: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (b, c) in &colors {
            by_color.entry(*c).or_default().push(b);
        }
        let Some(tied) = by_color.values().find(|members| members.len() > 1) else {
            break;
        };
        // Split off one member into its own class and refine again.
        let chosen = tied[0];
        let fresh = colors.len();
        colors.insert(chosen, fresh);
        colors = refine(graph, colors);
    }
    let mut order: Vec<(&str, usize)> = colors.into_iter().collect();
    order.sort_by_key(|(_, c)| *c);
    let labels: BTreeMap<&str, String> = order
        .into_iter()
        .enumerate()
        .map(|(i, (b, _))| (b, format!("b{i}")))
        .collect();
    let relabel = |t: &Term| match t {
        Term::Blank(l) => Term::Blank(labels[l.as_str()].clone()),
        other => other.clone(),
    };
    let mut out = RdfGraph::new();
    for (p, i) in graph.prefixes() {
        out.add_prefix(p, i);
    }
    for t in graph.triples() {
        out.insert(Triple::new(
            relabel(&t.subject),
            t.predicate.clone(),
            relabel(&t.object),
        ));
    }
    out
}
