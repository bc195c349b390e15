//! Delimited tables: parsing, serialization, identifiers and data type identification.

mod typing;
pub mod values;

use std::collections::HashSet;

use thiserror::Error;

pub use typing::{
    identify_types, CoarseType, ColumnTyping, FineType, TypingError, CATEGORICAL_MAX_DISTINCT,
};

/// Reserved name of the virtual row-index column.
pub const ROW_NUMBER: &str = "rowNumber";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dialect {
    pub delimiter: char,
    pub has_header: bool,
    pub quote_char: Option<char>,
    /// Treat the literals `NULL` and `null` as missing values (empty cells always are).
    pub null_literals: bool,
}

impl Default for Dialect {
    fn default() -> Self {
        Dialect {
            delimiter: '\t',
            has_header: false,
            quote_char: Some('"'),
            null_literals: true,
        }
    }
}

impl Dialect {
    pub fn tsv() -> Self {
        Self::default()
    }

    pub fn csv_with_header() -> Self {
        Dialect {
            delimiter: ',',
            has_header: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TableError> {
        if !self.delimiter.is_ascii() || self.delimiter == '\n' || self.delimiter == '\r' {
            return Err(TableError::InvalidDialect(format!(
                "unsupported delimiter {:?}",
                self.delimiter
            )));
        }
        if let Some(q) = self.quote_char {
            if q == self.delimiter {
                return Err(TableError::InvalidDialect(
                    "delimiter equals quote character".into(),
                ));
            }
            if !q.is_ascii() {
                return Err(TableError::InvalidDialect(format!("unsupported quote {q:?}")));
            }
        }
        Ok(())
    }

    /// Whether a raw cell denotes a missing value.
    pub fn is_null(&self, raw: &str) -> bool {
        raw.is_empty() || (self.null_literals && (raw == "NULL" || raw == "null"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("empty input")]
    EmptyInput,
    #[error("row {line} has {found} cells, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unterminated quote opened on line {line}")]
    UnterminatedQuote { line: usize },
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("invalid dialect: {0}")]
    InvalidDialect(String),
    #[error("malformed table: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    /// Identifier referenced by RML templates and references.
    pub id: String,
    pub header: Option<String>,
}

/// A parsed table: `rows[m][n]` is the cell of row `m` and column `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Option<String>>>,
}

impl DataTable {
    /// Builds a table from a cell grid; identifiers are derived from `headers`.
    pub fn new(
        headers: Option<Vec<String>>,
        rows: Vec<Vec<Option<String>>>,
    ) -> Result<Self, TableError> {
        let width = match (&headers, rows.first()) {
            (Some(h), _) => h.len(),
            (None, Some(r)) => r.len(),
            (None, None) => return Err(TableError::EmptyInput),
        };
        if width == 0 {
            return Err(TableError::EmptyInput);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(TableError::RaggedRow {
                    line: i + 1 + usize::from(headers.is_some()),
                    expected: width,
                    found: r.len(),
                });
            }
        }
        let columns = match headers {
            Some(h) => h
                .into_iter()
                .map(|name| Column {
                    id: String::new(),
                    header: Some(name),
                })
                .collect(),
            None => (0..width)
                .map(|_| Column {
                    id: String::new(),
                    header: None,
                })
                .collect(),
        };
        Ok(add_identifiers(DataTable { columns, rows }))
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Option<String>>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column_ids(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn row_ids(&self) -> Vec<String> {
        (0..self.rows.len()).map(|m| m.to_string()).collect()
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.id == id)
    }

    pub fn cell(&self, row: usize, column: usize) -> Option<&str> {
        self.rows.get(row)?.get(column)?.as_deref()
    }

    pub fn column_values(&self, column: usize) -> Vec<Option<&str>> {
        self.rows.iter().map(|r| r[column].as_deref()).collect()
    }

    /// Value of a referenced column, or the row index for [`ROW_NUMBER`].
    pub fn reference(&self, row: usize, id: &str) -> Option<Option<String>> {
        if id == ROW_NUMBER && self.column_index(id).is_none() {
            return Some(Some(row.to_string()));
        }
        let col = self.column_index(id)?;
        Some(self.rows.get(row)?.get(col)?.clone())
    }
}

fn sanitize(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Assigns unique column identifiers: sanitized headers when present, else `col0..colN-1`.
///
/// Duplicates receive a `_k` suffix (`x`, `x_2`, ...). The name `rowNumber` is reserved.
pub fn add_identifiers(mut table: DataTable) -> DataTable {
    let mut used: HashSet<String> = HashSet::from([ROW_NUMBER.to_string()]);
    for (n, col) in table.columns.iter_mut().enumerate() {
        let base = col
            .header
            .as_deref()
            .map(sanitize)
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| format!("col{n}"));
        let mut id = base.clone();
        let mut k = 2;
        while used.contains(&id) {
            id = format!("{base}_{k}");
            k += 1;
        }
        used.insert(id.clone());
        col.id = id;
    }
    table
}

/// Finds a quoted field that never closes. Returns its 1-based line.
fn unterminated_quote(text: &str, delimiter: char, quote: char) -> Option<usize> {
    let mut line = 1;
    let mut field_start = true;
    let mut quoted_since: Option<usize> = None;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if quoted_since.is_some() {
            if c == quote {
                if chars.peek() == Some(&quote) {
                    chars.next();
                } else {
                    quoted_since = None;
                }
            } else if c == '\n' {
                line += 1;
            }
            continue;
        }
        if c == quote && field_start {
            quoted_since = Some(line);
            field_start = false;
        } else if c == delimiter {
            field_start = true;
        } else if c == '\n' {
            line += 1;
            field_start = true;
        } else if c != '\r' {
            field_start = false;
        }
    }
    quoted_since
}

pub fn parse_table(bytes: &[u8], dialect: &Dialect) -> Result<DataTable, TableError> {
    dialect.validate()?;
    let text = std::str::from_utf8(bytes).map_err(|_| TableError::InvalidUtf8)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    if text.trim().is_empty() {
        return Err(TableError::EmptyInput);
    }
    if let Some(q) = dialect.quote_char {
        if let Some(line) = unterminated_quote(text, dialect.delimiter, q) {
            return Err(TableError::UnterminatedQuote { line });
        }
    }
    let mut builder = csv::ReaderBuilder::new();
    builder
        .delimiter(dialect.delimiter as u8)
        .has_headers(false)
        .flexible(true)
        .quoting(dialect.quote_char.is_some());
    if let Some(q) = dialect.quote_char {
        builder.quote(q as u8);
    }
    let mut reader = builder.from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| TableError::Malformed(e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    let mut records = records.into_iter();
    let headers = if dialect.has_header {
        Some(records.next().ok_or(TableError::EmptyInput)?.1)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut width = headers.as_ref().map(Vec::len);
    for (line, rec) in records {
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(TableError::RaggedRow {
                line,
                expected,
                found: rec.len(),
            });
        }
        rows.push(
            rec.into_iter()
                .map(|c| (!dialect.is_null(&c)).then_some(c))
                .collect(),
        );
    }
    DataTable::new(headers, rows)
}

/// Writes the table in `dialect`; a header line holds the column identifiers.
pub fn serialize_table(table: &DataTable, dialect: &Dialect) -> Result<String, TableError> {
    dialect.validate()?;
    let mut builder = csv::WriterBuilder::new();
    builder.delimiter(dialect.delimiter as u8);
    match dialect.quote_char {
        Some(q) => {
            builder.quote(q as u8);
        }
        None => {
            builder.quote_style(csv::QuoteStyle::Never);
        }
    }
    let mut writer = builder.from_writer(Vec::new());
    let err = |e: csv::Error| TableError::Malformed(e.to_string());
    if dialect.has_header {
        writer.write_record(table.column_ids()).map_err(err)?;
    }
    for row in &table.rows {
        writer
            .write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))
            .map_err(err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| TableError::Malformed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|_| TableError::InvalidUtf8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tab_grid_without_header() {
        let t = parse_table(b"a\tb\n1\t2", &Dialect::tsv()).unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(t.column_count(), 2);
        assert_eq!(t.cell(1, 1), Some("2"));
        assert_eq!(t.column_ids(), ["col0", "col1"]);
        assert_eq!(t.row_ids(), ["0", "1"]);
    }

    #[test]
    fn ragged_row_is_rejected() {
        let err = parse_table(b"a\tb\tc\td\n1\t2\t3\n", &Dialect::tsv()).unwrap_err();
        assert_eq!(
            err,
            TableError::RaggedRow {
                line: 2,
                expected: 4,
                found: 3
            }
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(parse_table(b"", &Dialect::tsv()), Err(TableError::EmptyInput));
        assert_eq!(parse_table(b"\n  \n", &Dialect::tsv()), Err(TableError::EmptyInput));
    }

    #[test]
    fn unterminated_quote_reports_its_line() {
        let err = parse_table(b"a,b\n\"x,y\n", &Dialect::csv_with_header()).unwrap_err();
        assert_eq!(err, TableError::UnterminatedQuote { line: 2 });
        // escaped quotes inside a quoted field are fine
        let t = parse_table(b"a,b\n\"x\"\"y\",2\n", &Dialect::csv_with_header()).unwrap();
        assert_eq!(t.cell(0, 0), Some("x\"y"));
    }

    #[test]
    fn nulls() {
        let t = parse_table(b"a,b\n,NULL\nnull,x\n", &Dialect::csv_with_header()).unwrap();
        assert_eq!(t.column_values(0), [None, None]);
        assert_eq!(t.column_values(1), [None, Some("x")]);
        let keep = Dialect {
            null_literals: false,
            ..Dialect::csv_with_header()
        };
        let t = parse_table(b"a,b\n,NULL\n", &keep).unwrap();
        assert_eq!(t.cell(0, 1), Some("NULL"));
    }

    #[test]
    fn header_identifiers() {
        let t = parse_table(b"Name,Age\nx,1\n", &Dialect::csv_with_header()).unwrap();
        assert_eq!(t.column_ids(), ["Name", "Age"]);
        let t = parse_table(b"x,x,x_2\n1,2,3\n", &Dialect::csv_with_header()).unwrap();
        assert_eq!(t.column_ids(), ["x", "x_2", "x_2_2"]);
        let t = parse_table(b"first name,,rowNumber\n1,2,3\n", &Dialect::csv_with_header())
            .unwrap();
        assert_eq!(t.column_ids(), ["first_name", "col1", "rowNumber_2"]);
    }

    #[test]
    fn duplicate_headers_get_suffixes() {
        let t = parse_table(b"x,x\n1,2\n", &Dialect::csv_with_header()).unwrap();
        let ids = t.column_ids();
        assert_eq!(ids, ["x", "x_2"]);
        assert_eq!(ids.iter().collect::<HashSet<_>>().len(), ids.len());
    }

    #[test]
    fn header_only_table_has_no_rows() {
        let t = parse_table(b"a,b\n", &Dialect::csv_with_header()).unwrap();
        assert_eq!(t.row_count(), 0);
        assert_eq!(t.column_count(), 2);
    }

    #[test]
    fn row_number_reference() {
        let t = parse_table(b"a\nb\n", &Dialect::tsv()).unwrap();
        assert_eq!(t.reference(1, ROW_NUMBER), Some(Some("1".into())));
        assert_eq!(t.reference(0, "col0"), Some(Some("a".into())));
        assert_eq!(t.reference(0, "nope"), None);
    }

    #[test]
    fn invalid_dialects() {
        let d = Dialect {
            delimiter: '"',
            ..Dialect::default()
        };
        assert!(matches!(d.validate(), Err(TableError::InvalidDialect(_))));
        let d = Dialect {
            delimiter: '→',
            ..Dialect::default()
        };
        assert!(matches!(d.validate(), Err(TableError::InvalidDialect(_))));
    }

    #[test]
    fn serialize_quotes_when_needed() {
        let t = DataTable::new(
            Some(vec!["a".into(), "b".into()]),
            vec![vec![Some("x,y".into()), None]],
        )
        .unwrap();
        let s = serialize_table(&t, &Dialect::csv_with_header()).unwrap();
        assert_eq!(s, "a,b\n\"x,y\",\n");
        let back = parse_table(s.as_bytes(), &Dialect::csv_with_header()).unwrap();
        assert_eq!(back.rows(), t.rows());
    }
}
