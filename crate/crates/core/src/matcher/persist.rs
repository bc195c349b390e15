//! Line-oriented model files.
//!
//! ```text
//! TAB2KG-MODEL 1
//! <input_dim> <hidden_dim>
//! <hidden_dim lines of W1 rows>
//! <b1>
//! <w2>
//! <b2>
//! ```

use std::io::{BufRead, Write};

use super::{MatchError, SiameseModel};
use crate::scalar::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const MODEL_HEADER: &str = "TAB2KG-MODEL 1";

fn write_row<W: Write, T: Scalar>(out: &mut W, row: &[T]) -> std::io::Result<()> {
    let line: Vec<String> = row.iter().map(|v| v.to_exact_string()).collect();
    writeln!(out, "{}", line.join(" "))
}

pub fn save_model<W: Write, T: Scalar>(model: &SiameseModel<T>, mut out: W) -> Result<(), MatchError> {
    let (f, h) = (model.input_dim(), model.hidden_dim());
    writeln!(out, "{MODEL_HEADER}")?;
    writeln!(out, "{f} {h}")?;
    for j in 0..h {
        write_row(&mut out, &model.w1[j * f..(j + 1) * f])?;
    }
    write_row(&mut out, &model.b1)?;
    write_row(&mut out, &model.w2)?;
    write_row(&mut out, &[model.b2])?;
    out.flush()?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> MatchError {
    MatchError::CorruptModel(msg.into())
}

fn parse_row<T: Scalar>(line: Option<String>, len: usize, what: &str) -> Result<Vec<T>, MatchError> {
    let line = line.ok_or_else(|| corrupt(format!("missing {what}")))?;
    let row = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| corrupt(format!("bad number {tok:?} in {what}")))
        })
        .collect::<Result<Vec<T>, _>>()?;
    if row.len() != len {
        return Err(corrupt(format!("{what} has {} values, expected {len}", row.len())));
    }
    Ok(row)
}

pub fn load_model<R: BufRead, T: Scalar>(input: R) -> Result<SiameseModel<T>, MatchError> {
    let mut lines = input.lines();
    let mut next = || -> Result<Option<String>, MatchError> { Ok(lines.next().transpose()?) };
    let header = next()?.ok_or_else(|| corrupt("empty file"))?;
    let header = header.trim_end();
    if header != MODEL_HEADER {
        return if header.starts_with("TAB2KG-MODEL ") {
            Err(MatchError::VersionMismatch {
                found: header.to_string(),
            })
        } else {
            Err(corrupt("missing header"))
        };
    }
    let dims = next()?.ok_or_else(|| corrupt("missing dimensions"))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|d| d.parse().map_err(|_| corrupt(format!("bad dimension {d:?}"))))
        .collect::<Result<_, _>>()?;
    let [f, h] = dims[..] else {
        return Err(corrupt("dimension line needs two values"));
    };
    if f == 0 || h == 0 {
        return Err(corrupt("zero dimension"));
    }
    let mut w1 = Vec::with_capacity(f * h);
    for j in 0..h {
        w1.extend(parse_row::<T>(next()?, f, &format!("W1 row {j}"))?);
    }
    let b1 = parse_row(next()?, h, "b1")?;
    let w2 = parse_row(next()?, h, "w2")?;
    let b2 = parse_row(next()?, 1, "b2")?[0];
    if let Some(extra) = next()? {
        if !extra.trim().is_empty() {
            return Err(corrupt("trailing data"));
        }
    }
    SiameseModel::from_parameters(f, h, w1, b1, w2, b2).map_err(|e| corrupt(e.to_string()))
}
