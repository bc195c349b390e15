//! Parser for the Turtle subset: prefixes, `a`, IRIs, prefixed names, blank nodes
//! (labeled and `[ ]` property lists), literals and predicate/object lists.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{vocab, RdfGraph, Term, Triple};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TurtleError {
    #[error("syntax error at {line}:{column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix {prefix:?} at {line}:{column}")]
    UnknownPrefix {
        prefix: String,
        line: usize,
        column: usize,
    },
}

pub fn parse_turtle(bytes: &[u8]) -> Result<RdfGraph, TurtleError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TurtleError::SyntaxError {
        line: 1,
        column: 1,
        message: format!("invalid UTF-8: {e}"),
    })?;
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        prefixes: BTreeMap::new(),
        base: None,
        graph: RdfGraph::new(),
        next_blank: 0,
    };
    p.document()?;
    let mut graph = p.graph;
    for (prefix, iri) in p.prefixes {
        graph.add_prefix(&prefix, &iri);
    }
    Ok(graph)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    prefixes: BTreeMap<String, String>,
    base: Option<String>,
    graph: RdfGraph,
    next_blank: usize,
}

type PResult<T> = Result<T, TurtleError>;

fn is_pn_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '\u{b7}'
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        Err(TurtleError::SyntaxError {
            line: self.line,
            column: self.column,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, ch: char) -> PResult<()> {
        self.skip_ws();
        if self.peek() == Some(ch) {
            self.bump();
            Ok(())
        } else {
            match self.peek() {
                Some(c) => self.error(format!("expected {ch:?}, found {c:?}")),
                None => self.error(format!("expected {ch:?}, found end of input")),
            }
        }
    }

    fn starts_with_keyword(&self, kw: &str, case_insensitive: bool) -> bool {
        let n = kw.chars().count();
        let slice: String = self.chars[self.pos..].iter().take(n).collect();
        let matches = if case_insensitive {
            slice.eq_ignore_ascii_case(kw)
        } else {
            slice == kw
        };
        matches
            && self
                .peek_at(n)
                .is_none_or(|c| c.is_whitespace() || c == '<' || c == '#')
    }

    fn document(&mut self) -> PResult<()> {
        loop {
            self.skip_ws();
            let Some(c) = self.peek() else {
                return Ok(());
            };
            if c == '@' {
                self.directive_at()?;
            } else if self.starts_with_keyword("PREFIX", true) {
                self.advance(6);
                self.prefix_body()?;
            } else if self.starts_with_keyword("BASE", true) {
                self.advance(4);
                self.skip_ws();
                self.base = Some(self.iri_ref()?);
            } else {
                self.triples()?;
                self.expect('.')?;
            }
        }
    }

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn directive_at(&mut self) -> PResult<()> {
        self.bump();
        let word = self.take_while(|c| c.is_ascii_alphabetic());
        match word.as_str() {
            "prefix" => {
                self.prefix_body()?;
                self.expect('.')
            }
            "base" => {
                self.skip_ws();
                self.base = Some(self.iri_ref()?);
                self.expect('.')
            }
            other => self.error(format!("unknown directive @{other}")),
        }
    }

    fn prefix_body(&mut self) -> PResult<()> {
        self.skip_ws();
        let name = self.take_while(|c| is_pn_char(c) || c == '.');
        self.expect(':')?;
        self.skip_ws();
        let iri = self.iri_ref()?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn fresh_blank(&mut self) -> Term {
        let t = Term::Blank(format!("genid{}", self.next_blank));
        self.next_blank += 1;
        t
    }

    fn triples(&mut self) -> PResult<()> {
        self.skip_ws();
        if self.peek() == Some('[') {
            let subject = self.blank_property_list()?;
            self.skip_ws();
            if self.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            return Ok(());
        }
        let subject = self.subject()?;
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> PResult<Term> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('"') | Some('\'') => self.error("literal in subject position"),
            Some('(') => self.error("collections are not supported"),
            Some(_) => Ok(Term::Iri(self.prefixed_name()?)),
            None => self.error("unexpected end of input"),
        }
    }

    fn blank_label(&mut self) -> PResult<Term> {
        self.advance(2);
        let raw = self.take_while(|c| is_pn_char(c) || c == '.');
        let label = raw.trim_end_matches('.').to_string();
        // Give back dots that end the statement.
        let extra = raw.len() - label.len();
        self.pos -= extra;
        self.column -= extra;
        if label.is_empty() {
            return self.error("empty blank node label");
        }
        Ok(Term::Blank(label))
    }

    fn blank_property_list(&mut self) -> PResult<Term> {
        self.expect('[')?;
        let node = self.fresh_blank();
        self.skip_ws();
        if self.peek() != Some(']') {
            self.predicate_object_list(&node)?;
        }
        self.expect(']')?;
        Ok(node)
    }

    fn predicate_object_list(&mut self, subject: &Term) -> PResult<()> {
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                self.graph
                    .insert(Triple::new(subject.clone(), predicate.clone(), object));
                self.skip_ws();
                if self.peek() == Some(',') {
                    self.bump();
                } else {
                    break;
                }
            }
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.bump();
                self.skip_ws();
            }
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> PResult<String> {
        self.skip_ws();
        if self.peek() == Some('a')
            && self
                .peek_at(1)
                .is_none_or(|c| c.is_whitespace() || c == '<' || c == '[' || c == '"')
        {
            self.bump();
            return Ok(vocab::RDF_TYPE.to_string());
        }
        match self.peek() {
            Some('<') => self.iri_ref(),
            Some(c) if is_pn_char(c) || c == ':' => self.prefixed_name(),
            Some(c) => self.error(format!("expected predicate, found {c:?}")),
            None => self.error("expected predicate, found end of input"),
        }
    }

    fn object(&mut self) -> PResult<Term> {
        self.skip_ws();
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iri_ref()?)),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('[') => self.blank_property_list(),
            Some('"') | Some('\'') => self.literal(),
            Some('(') => self.error("collections are not supported"),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.number(),
            Some(_) => {
                if self.starts_bool("true") {
                    self.advance(4);
                    return Ok(Term::typed("true", vocab::XSD_BOOLEAN));
                }
                if self.starts_bool("false") {
                    self.advance(5);
                    return Ok(Term::typed("false", vocab::XSD_BOOLEAN));
                }
                Ok(Term::Iri(self.prefixed_name()?))
            }
            None => self.error("expected object, found end of input"),
        }
    }

    fn starts_bool(&self, kw: &str) -> bool {
        let n = kw.len();
        let slice: String = self.chars[self.pos..].iter().take(n).collect();
        slice == kw && self.peek_at(n).is_none_or(|c| !is_pn_char(c) && c != ':')
    }

    fn number(&mut self) -> PResult<Term> {
        let start = (self.line, self.column);
        let mut s = String::new();
        if let Some(c @ ('+' | '-')) = self.peek() {
            s.push(c);
            self.bump();
        }
        s.push_str(&self.take_while(|c| c.is_ascii_digit()));
        let mut datatype = vocab::XSD_INTEGER;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            s.push('.');
            s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            datatype = vocab::XSD_DECIMAL;
        }
        if let Some(e @ ('e' | 'E')) = self.peek() {
            self.bump();
            s.push(e);
            if let Some(c @ ('+' | '-')) = self.peek() {
                s.push(c);
                self.bump();
            }
            s.push_str(&self.take_while(|c| c.is_ascii_digit()));
            datatype = vocab::XSD_DOUBLE;
        }
        if !s.chars().any(|c| c.is_ascii_digit()) {
            return Err(TurtleError::SyntaxError {
                line: start.0,
                column: start.1,
                message: format!("malformed number {s:?}"),
            });
        }
        Ok(Term::typed(s, datatype))
    }

    fn literal(&mut self) -> PResult<Term> {
        let lexical = self.string()?;
        match self.peek() {
            Some('@') => {
                self.bump();
                let tag = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if tag.is_empty() {
                    return self.error("empty language tag");
                }
                Ok(Term::lang(lexical, tag))
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.advance(2);
                let dt = match self.peek() {
                    Some('<') => self.iri_ref()?,
                    _ => self.prefixed_name()?,
                };
                Ok(Term::typed(lexical, dt))
            }
            _ => Ok(Term::literal(lexical)),
        }
    }

    fn string(&mut self) -> PResult<String> {
        let quote = self.bump().unwrap();
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.advance(2);
        }
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                return self.error("unterminated string");
            };
            if c == quote {
                if !long {
                    return Ok(out);
                }
                if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                    self.advance(2);
                    return Ok(out);
                }
                out.push(c);
            } else if c == '\\' {
                out.push(self.escape()?);
            } else if (c == '\n' || c == '\r') && !long {
                return self.error("newline in short string");
            } else {
                out.push(c);
            }
        }
    }

    fn escape(&mut self) -> PResult<char> {
        let Some(c) = self.bump() else {
            return self.error("dangling escape");
        };
        Ok(match c {
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            'b' => '\u{8}',
            'f' => '\u{c}',
            '"' => '"',
            '\'' => '\'',
            '\\' => '\\',
            'u' => self.hex_escape(4)?,
            'U' => self.hex_escape(8)?,
            other => return self.error(format!("invalid escape \\{other}")),
        })
    }

    fn hex_escape(&mut self, digits: usize) -> PResult<char> {
        let mut s = String::new();
        for _ in 0..digits {
            match self.bump() {
                Some(c) if c.is_ascii_hexdigit() => s.push(c),
                _ => return self.error("invalid unicode escape"),
            }
        }
        let code = u32::from_str_radix(&s, 16).unwrap();
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None => self.error("invalid code point"),
        }
    }

    fn iri_ref(&mut self) -> PResult<String> {
        self.expect('<')?;
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => match self.bump() {
                    Some('u') => s.push(self.hex_escape(4)?),
                    Some('U') => s.push(self.hex_escape(8)?),
                    _ => return self.error("invalid IRI escape"),
                },
                Some(c) if c.is_whitespace() => return self.error("whitespace in IRI"),
                Some(c) => s.push(c),
                None => return self.error("unterminated IRI"),
            }
        }
        Ok(match &self.base {
            Some(base) if !s.contains(':') => format!("{base}{s}"),
            _ => s,
        })
    }

    fn prefixed_name(&mut self) -> PResult<String> {
        let (line, column) = (self.line, self.column);
        let prefix = self.take_while(|c| is_pn_char(c) || c == '.');
        if self.peek() != Some(':') {
            return Err(TurtleError::SyntaxError {
                line,
                column,
                message: format!("expected prefixed name, found {prefix:?}"),
            });
        }
        self.bump();
        let mut local = String::new();
        while let Some(c) = self.peek() {
            let dot_inside = c == '.' && self.peek_at(1).is_some_and(|n| is_pn_char(n) || n == ':');
            if is_pn_char(c) || c == ':' || c == '%' || dot_inside {
                local.push(c);
                self.bump();
            } else if c == '\\' && self.peek_at(1).is_some() {
                self.bump();
                local.push(self.bump().unwrap());
            } else {
                break;
            }
        }
        match self.prefixes.get(&prefix) {
            Some(ns) => Ok(format!("{ns}{local}")),
            None => Err(TurtleError::UnknownPrefix {
                prefix,
                line,
                column,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triple() {
        let g = parse_turtle(b"<s> <p> \"x\" .").unwrap();
        assert_eq!(g.len(), 1);
        let t = g.triples().next().unwrap();
        assert_eq!(t.subject, Term::iri("s"));
        assert_eq!(t.object, Term::literal("x"));
    }

    #[test]
    fn prefix_expansion() {
        let g = parse_turtle(b"@prefix ex: <http://e/> . ex:a ex:p ex:b .").unwrap();
        let t = g.triples().next().unwrap();
        assert_eq!(t.subject, Term::iri("http://e/a"));
        assert_eq!(t.predicate, "http://e/p");
        assert_eq!(t.object, Term::iri("http://e/b"));
        assert_eq!(g.prefixes()["ex"], "http://e/");
    }

    #[test]
    fn sparql_style_prefix_and_base() {
        let g = parse_turtle(b"PREFIX ex: <http://e/>\nBASE <http://b/>\n<s> ex:p <o> .").unwrap();
        let t = g.triples().next().unwrap();
        assert_eq!(t.subject, Term::iri("http://b/s"));
    }

    #[test]
    fn unknown_prefix() {
        let err = parse_turtle(b"ex:a <p> <o> .").unwrap_err();
        assert_eq!(
            err,
            TurtleError::UnknownPrefix {
                prefix: "ex".into(),
                line: 1,
                column: 1
            }
        );
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_turtle(b"<s> <p> <o>\n<s2> <p> .").unwrap_err();
        match err {
            TurtleError::SyntaxError { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lists_literals_and_blank_nodes() {
        let doc = r#"
            @prefix ex: <http://e/> .
            @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .
            ex:a a ex:C ;
                ex:n 5, -2.5, 1e3 ;
                ex:b true ;
                ex:l "hi"@en, "t\tab" , """multi
line""" ;
                ex:d "2020-01-01"^^xsd:date ;
                ex:x [ a ex:D ; ex:v 'q' ; ] ;
            .
            _:k ex:p ex:a .
            [ ex:p ex:a ] .
        "#;
        let g = parse_turtle(doc.as_bytes()).unwrap();
        assert_eq!(g.len(), 14);
        let a = Term::iri("http://e/a");
        let nums: Vec<_> = g.objects(&a, "http://e/n").cloned().collect();
        assert!(nums.contains(&Term::typed("5", vocab::XSD_INTEGER)));
        assert!(nums.contains(&Term::typed("-2.5", vocab::XSD_DECIMAL)));
        assert!(nums.contains(&Term::typed("1e3", vocab::XSD_DOUBLE)));
        assert!(g
            .objects(&a, "http://e/l")
            .any(|t| t == &Term::literal("multi\nline")));
        assert!(g.objects(&a, "http://e/l").any(|t| t == &Term::literal("t\tab")));
    }

    #[test]
    fn blank_label_before_statement_end() {
        let g = parse_turtle(b"<s> <p> _:x.\n_:x <q> \"1\" .").unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.triples().any(|t| t.object == Term::blank("x")));
    }

    #[test]
    fn prefixed_name_before_statement_end() {
        let g = parse_turtle(b"@prefix ex: <http://e/>.\nex:a ex:p ex:b.\n").unwrap();
        assert_eq!(g.triples().next().unwrap().object, Term::iri("http://e/b"));
    }

    #[test]
    fn collections_are_rejected() {
        assert!(matches!(
            parse_turtle(b"<s> <p> (1 2) ."),
            Err(TurtleError::SyntaxError { .. })
        ));
    }
}
