//! Deterministic Turtle serialization.
//!
//! Subjects are sorted, predicates grouped (`rdf:type` first, written `a`) and
//! objects sorted. Blank nodes referenced exactly once are nested as `[ ... ]`;
//! the remaining ones get canonical `_:bN` labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::{vocab, RdfGraph, Term};

struct Writer<'a> {
    graph: &'a RdfGraph,
    /// prefix IRI -> prefix name, longest namespace first
    namespaces: Vec<(&'a str, &'a str)>,
    by_subject: BTreeMap<&'a Term, Vec<(&'a str, &'a Term)>>,
    inline: BTreeSet<&'a Term>,
}

fn is_simple_local(local: &str) -> bool {
    let mut chars = local.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        }
        _ => false,
    }
}

fn escape_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn escape_iri(iri: &str) -> String {
    let mut out = String::with_capacity(iri.len() + 2);
    out.push('<');
    for c in iri.chars() {
        match c {
            '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c if (c as u32) <= 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('>');
    out
}

impl<'a> Writer<'a> {
    fn new(graph: &'a RdfGraph) -> Self {
        let mut namespaces: Vec<(&str, &str)> = graph
            .prefixes()
            .iter()
            .map(|(p, i)| (i.as_str(), p.as_str()))
            .collect();
        namespaces.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.cmp(b)));

        let mut by_subject: BTreeMap<&Term, Vec<(&str, &Term)>> = BTreeMap::new();
        let mut references: BTreeMap<&Term, usize> = BTreeMap::new();
        for t in graph.triples() {
            by_subject
                .entry(&t.subject)
                .or_default()
                .push((t.predicate.as_str(), &t.object));
            if t.object.is_blank() {
                *references.entry(&t.object).or_default() += 1;
            }
        }
        for entries in by_subject.values_mut() {
            entries.sort_by(|a, b| {
                let ta = a.0 != vocab::RDF_TYPE;
                let tb = b.0 != vocab::RDF_TYPE;
                ta.cmp(&tb).then(a.cmp(b))
            });
        }
        let candidates: BTreeSet<&Term> = references
            .into_iter()
            .filter(|(_, n)| *n == 1)
            .map(|(t, _)| t)
            .collect();
        let mut w = Writer {
            graph,
            namespaces,
            by_subject,
            inline: candidates,
        };
        w.break_cycles();
        w
    }

    /// Inline candidates unreachable from a top-level subject sit on a cycle;
    /// promote one at a time to top level until everything is reachable.
    fn break_cycles(&mut self) {
        loop {
            let mut seen: BTreeSet<&Term> = BTreeSet::new();
            let roots: Vec<&Term> = self
                .by_subject
                .keys()
                .copied()
                .filter(|s| !self.inline.contains(s))
                .collect();
            let mut stack = roots;
            while let Some(s) = stack.pop() {
                if let Some(entries) = self.by_subject.get(s) {
                    for (_, o) in entries {
                        if self.inline.contains(o) && seen.insert(o) {
                            stack.push(o);
                        }
                    }
                }
            }
            let orphan = self.inline.iter().copied().find(|b| !seen.contains(b));
            match orphan {
                Some(b) => {
                    self.inline.remove(b);
                }
                None => return,
            }
        }
    }

    fn iri(&self, iri: &str) -> String {
        for (ns, prefix) in &self.namespaces {
            if let Some(local) = iri.strip_prefix(ns) {
                if is_simple_local(local) {
                    return format!("{prefix}:{local}");
                }
            }
        }
        escape_iri(iri)
    }

    fn term(&self, term: &Term, out: &mut String, indent: usize) {
        match term {
            Term::Iri(i) => out.push_str(&self.iri(i)),
            Term::Blank(_) if self.inline.contains(term) => self.nested(term, out, indent),
            Term::Blank(l) => {
                out.push_str("_:");
                out.push_str(l);
            }
            Term::Literal {
                lexical,
                datatype,
                language,
            } => {
                out.push_str(&escape_string(lexical));
                if let Some(l) = language {
                    out.push('@');
                    out.push_str(l);
                } else if let Some(dt) = datatype {
                    out.push_str("^^");
                    out.push_str(&self.iri(dt));
                }
            }
        }
    }

    fn nested(&self, node: &Term, out: &mut String, indent: usize) {
        match self.by_subject.get(node) {
            None => out.push_str("[]"),
            Some(entries) => {
                out.push_str("[\n");
                self.predicate_objects(entries, out, indent + 1);
                out.push('\n');
                out.push_str(&" ".repeat(indent * 2));
                out.push(']');
            }
        }
    }

    fn predicate_objects(&self, entries: &[(&str, &Term)], out: &mut String, indent: usize) {
        let pad = " ".repeat(indent * 2);
        let mut first = true;
        let mut i = 0;
        while i < entries.len() {
            let predicate = entries[i].0;
            let mut j = i;
            while j < entries.len() && entries[j].0 == predicate {
                j += 1;
            }
            if !first {
                out.push_str(" ;\n");
            }
            first = false;
            out.push_str(&pad);
            if predicate == vocab::RDF_TYPE {
                out.push('a');
            } else {
                out.push_str(&self.iri(predicate));
            }
            out.push(' ');
            for (k, (_, o)) in entries[i..j].iter().enumerate() {
                if k > 0 {
                    out.push_str(",\n");
                    out.push_str(&pad);
                    out.push_str("    ");
                }
                self.term(o, out, indent);
            }
            i = j;
        }
    }

    fn write(&self) -> String {
        let mut out = String::new();
        for (p, i) in self.graph.prefixes() {
            let _ = writeln!(out, "@prefix {p}: {} .", escape_iri(i));
        }
        for (subject, entries) in &self.by_subject {
            if self.inline.contains(subject) {
                continue;
            }
            out.push('\n');
            self.term(subject, &mut out, 0);
            out.push('\n');
            self.predicate_objects(entries, &mut out, 1);
            out.push_str(" .\n");
        }
        out
    }
}

/// Serializes `graph` as Turtle. Equal graphs produce identical bytes.
pub fn serialize_turtle(graph: &RdfGraph) -> String {
    let has_blanks = graph
        .triples()
        .any(|t| t.subject.is_blank() || t.object.is_blank());
    if has_blanks {
        let canonical = graph.canonicalize();
        Writer::new(&canonical).write()
    } else {
        Writer::new(graph).write()
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_turtle;
    use super::*;

    #[test]
    fn empty_graph_has_only_prefixes() {
        assert_eq!(serialize_turtle(&RdfGraph::new()), "");
        let g = RdfGraph::new().with_prefix("ex", "http://e/");
        assert_eq!(serialize_turtle(&g), "@prefix ex: <http://e/> .\n");
    }

    #[test]
    fn grouped_output() {
        let g = RdfGraph::new().with_prefix("ex", "http://e/");
        let mut g = g;
        let s = Term::iri("http://e/s");
        g.add(s.clone(), "http://e/p", Term::literal("b"));
        g.add(s.clone(), "http://e/p", Term::literal("a"));
        g.add(s.clone(), vocab::RDF_TYPE, Term::iri("http://e/C"));
        g.add(Term::iri("http://e/a"), "http://e/q", Term::iri("http://other/x y"));
        let out = serialize_turtle(&g);
        let expected = "@prefix ex: <http://e/> .\n\nex:a\n  ex:q <http://other/x\\u0020y> .\n\nex:s\n  a ex:C ;\n  ex:p \"a\",\n      \"b\" .\n";
        assert_eq!(out, expected);
        assert_eq!(parse_turtle(out.as_bytes()).unwrap().triple_set(), g.triple_set());
    }

    #[test]
    fn nested_blank_nodes_round_trip() {
        let doc = "@prefix ex: <http://e/> .\nex:m ex:sm [ ex:c ex:S ; ex:t \"x{col3}\" ] ; ex:pom [ ex:p ex:l ; ex:om [ ex:r \"col3\" ] ] .\n_:a ex:q _:b .\n_:b ex:q _:a .\n";
        let g = parse_turtle(doc.as_bytes()).unwrap();
        let out = serialize_turtle(&g);
        assert!(out.contains("ex:sm [\n"), "{out}");
        let back = parse_turtle(out.as_bytes()).unwrap();
        assert!(back.is_isomorphic(&g));
        assert_eq!(serialize_turtle(&back), out);
    }

    #[test]
    fn awkward_literals_round_trip() {
        let mut g = RdfGraph::new();
        let s = Term::iri("http://e/s");
        for lex in ["tab\there", "quote\"d", "back\\slash", "new\nline", "\u{1}ctl", "ünï"] {
            g.add(s.clone(), "http://e/p", Term::literal(lex));
        }
        g.add(s.clone(), "http://e/p", Term::lang("x", "en-GB"));
        g.add(s, "http://e/p", Term::typed("1", vocab::XSD_INTEGER));
        let back = parse_turtle(serialize_turtle(&g).as_bytes()).unwrap();
        assert_eq!(back.triple_set(), g.triple_set());
    }
}
