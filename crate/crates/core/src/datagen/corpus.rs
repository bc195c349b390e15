//! Corpus directories: one sub-directory per table.
//!
//! ```text
//! <name>/table.csv      comma separated, header row
//! <name>/mapping.gt     column <TAB> class|property, one per line
//! <name>/relations.gt   source|property|target, one per line (optional)
//! <name>/graph.ttl      data graph of the table (optional, derived when missing)
//! <name>/domain.ttl     domain graph to match against (training corpora only)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{entity_base, ground_truth_graph, ground_truth_plan, FilterReason, TrainingInstance};
use crate::rdf::{parse_turtle, serialize_turtle, ClassRelation, RdfGraph, RelationKey, TurtleError};
use crate::tabular::{parse_table, serialize_table, DataTable, Dialect, TableError};

pub const TABLE_FILE: &str = "table.csv";
pub const MAPPING_FILE: &str = "mapping.gt";
pub const RELATIONS_FILE: &str = "relations.gt";
pub const GRAPH_FILE: &str = "graph.ttl";
pub const DOMAIN_FILE: &str = "domain.ttl";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: TableError },
    #[error("{path}: {source}")]
    Turtle { path: PathBuf, source: TurtleError },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: missing domain.ttl")]
    MissingDomain(PathBuf),
}

impl CorpusError {
    /// Filter reason when the entry is a table that cannot be read, else `None`.
    pub fn reason(&self) -> Option<FilterReason> {
        matches!(self, CorpusError::Table { .. }).then_some(FilterReason::Unparseable)
    }
}

/// One corpus directory as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub table: DataTable,
    pub mapping: BTreeMap<String, RelationKey>,
    pub class_relations: BTreeSet<ClassRelation>,
    pub graph: RdfGraph,
    pub domain: Option<RdfGraph>,
}

impl CorpusEntry {
    pub fn into_instance(self) -> Result<TrainingInstance, CorpusError> {
        Ok(TrainingInstance {
            domain: self.domain.ok_or_else(|| CorpusError::MissingDomain(PathBuf::from(&self.name)))?,
            name: self.name,
            table: self.table,
            ground_truth: self.mapping,
            class_relations: self.class_relations,
            data_graph: self.graph,
        })
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CorpusError> {
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_turtle(path: &Path) -> Result<RdfGraph, CorpusError> {
    parse_turtle(read(path)?.as_bytes()).map_err(|source| CorpusError::Turtle {
        path: path.to_owned(),
        source,
    })
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_mapping(text: &str, path: &Path) -> Result<BTreeMap<String, RelationKey>, CorpusError> {
    let mut out = BTreeMap::new();
    for (line, l) in lines(text) {
        let bad = |message: &str| CorpusError::Format {
            path: path.to_owned(),
            line,
            message: message.to_string(),
        };
        let (col, rel) = l.split_once('\t').ok_or_else(|| bad("expected column<TAB>class|property"))?;
        let (class, property) = rel
            .trim()
            .split_once('|')
            .ok_or_else(|| bad("expected class|property"))?;
        // a trailing |datatype is tolerated and ignored
        let property = property.split('|').next().unwrap_or(property);
        if out
            .insert(col.trim().to_string(), RelationKey::new(class, property))
            .is_some()
        {
            return Err(bad("column mapped twice"));
        }
    }
    Ok(out)
}

pub fn format_mapping(mapping: &BTreeMap<String, RelationKey>) -> String {
    mapping
        .iter()
        .map(|(c, r)| format!("{c}\t{}|{}\n", r.class, r.property))
        .collect()
}

pub fn parse_relations(text: &str, path: &Path) -> Result<BTreeSet<ClassRelation>, CorpusError> {
    lines(text)
        .map(|(line, l)| {
            let parts: Vec<&str> = l.split('|').collect();
            match parts[..] {
                [s, p, t] => Ok(ClassRelation::new(s, p, t)),
                _ => Err(CorpusError::Format {
                    path: path.to_owned(),
                    line,
                    message: "expected source|property|target".into(),
                }),
            }
        })
        .collect()
}

pub fn format_relations(relations: &BTreeSet<ClassRelation>) -> String {
    relations
        .iter()
        .map(|r| format!("{}|{}|{}\n", r.source, r.property, r.target))
        .collect()
}

/// Reads one corpus directory.
pub fn read_entry(dir: &Path) -> Result<CorpusEntry, CorpusError> {
    let name = dir
        .file_name()
        .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
    let table_path = dir.join(TABLE_FILE);
    let table = parse_table(read(&table_path)?.as_bytes(), &Dialect::csv_with_header())
        .map_err(|source| CorpusError::Table {
            path: table_path,
            source,
        })?;
    let mapping_path = dir.join(MAPPING_FILE);
    let mapping = parse_mapping(&read(&mapping_path)?, &mapping_path)?;
    let relations_path = dir.join(RELATIONS_FILE);
    let class_relations = if relations_path.exists() {
        parse_relations(&read(&relations_path)?, &relations_path)?
    } else {
        BTreeSet::new()
    };
    let graph_path = dir.join(GRAPH_FILE);
    let graph = if graph_path.exists() {
        read_turtle(&graph_path)?
    } else {
        ground_truth_graph(
            &table,
            &ground_truth_plan(&table, &mapping, &class_relations, &BTreeMap::new()),
            &entity_base(&name),
        )
    };
    let domain_path = dir.join(DOMAIN_FILE);
    let domain = if domain_path.exists() {
        Some(read_turtle(&domain_path)?)
    } else {
        None
    };
    Ok(CorpusEntry {
        name,
        table,
        mapping,
        class_relations,
        graph,
        domain,
    })
}

/// Sub-directories of `root` holding a table, in name order.
pub fn entry_dirs(root: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let io = |source| CorpusError::Io {
        path: root.to_owned(),
        source,
    };
    let mut dirs = Vec::new();
    for e in fs::read_dir(root).map_err(io)? {
        let path = e.map_err(io)?.path();
        if path.join(TABLE_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// Table names with the reason they were set aside.
pub type Rejections = Vec<(String, FilterReason)>;

/// Reads every entry below `root`. Tables that fail to parse are returned as
/// rejections; other errors abort.
pub fn read_corpus(root: &Path) -> Result<(Vec<CorpusEntry>, Rejections), CorpusError> {
    let mut entries = Vec::new();
    let mut rejected = Vec::new();
    for dir in entry_dirs(root)? {
        match read_entry(&dir) {
            Ok(e) => entries.push(e),
            Err(e) => match e.reason() {
                Some(r) => rejected.push((dir.file_name().unwrap_or_default().to_string_lossy().into_owned(), r)),
                None => return Err(e),
            },
        }
    }
    Ok((entries, rejected))
}

/// Writes `instance` into `root/<name>`.
pub fn write_instance(root: &Path, instance: &TrainingInstance) -> Result<PathBuf, CorpusError> {
    let dir = root.join(&instance.name);
    fs::create_dir_all(&dir).map_err(|source| CorpusError::Io {
        path: dir.clone(),
        source,
    })?;
    let table_path = dir.join(TABLE_FILE);
    let table = serialize_table(&instance.table, &Dialect::csv_with_header()).map_err(|source| CorpusError::Table {
        path: table_path.clone(),
        source,
    })?;
    write(&table_path, &table)?;
    write(&dir.join(MAPPING_FILE), &format_mapping(&instance.ground_truth))?;
    write(&dir.join(RELATIONS_FILE), &format_relations(&instance.class_relations))?;
    write(&dir.join(GRAPH_FILE), &serialize_turtle(&instance.data_graph))?;
    write(&dir.join(DOMAIN_FILE), &serialize_turtle(&instance.domain))?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_lines_round_trip() {
        let text = "col0\thttp://x/A|http://x/p\n# note\n\ncol1\thttp://x/B|http://x/q|http://www.w3.org/2001/XMLSchema#string\n";
        let m = parse_mapping(text, Path::new("m")).unwrap();
        assert_eq!(m["col1"], RelationKey::new("http://x/B", "http://x/q"));
        assert_eq!(parse_mapping(&format_mapping(&m), Path::new("m")).unwrap(), m);
        assert!(parse_mapping("col0 A|p\n", Path::new("m")).is_err());
    }

    #[test]
    fn relations_lines_round_trip() {
        let r = parse_relations("http://x/A|http://x/p|http://x/B\n", Path::new("r")).unwrap();
        assert_eq!(parse_relations(&format_relations(&r), Path::new("r")).unwrap(), r);
        assert!(parse_relations("a|b\n", Path::new("r")).is_err());
    }
}
