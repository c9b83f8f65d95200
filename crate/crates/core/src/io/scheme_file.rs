//! The plain coefficient file: three integer blocks `U`, `V`, `W`, one row
//! per matrix entry and one column per product, separated by `#` lines.

use thiserror::Error;

use crate::coeff::Coefficient;
use crate::scheme::{BilinearScheme, Dims, SchemeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("expected 3 blocks separated by `#` lines, found {0}")]
    BlockCount(usize),
    #[error(
        "line {line}: row has {found} entries, expected {expected} like the rest of block {block}"
    )]
    RaggedRow {
        block: usize,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("rank mismatch: blocks have {0} / {1} / {2} columns")]
    RankMismatch(usize, usize, usize),
    #[error("line {line}, column {column}: `{token}` is not an integer")]
    Token {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("cannot infer dimensions from row counts {0}/{1}/{2}; pass them explicitly")]
    AmbiguousDims(usize, usize, usize),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("coefficient {value} at {matrix}[{row}][{column}] is not an integer")]
    NonInteger {
        matrix: char,
        row: usize,
        column: usize,
        value: Coefficient,
    },
}

/// The raw block structure of a coefficient file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeFileDocument {
    pub blocks: Vec<Vec<Vec<i64>>>,
    /// 1-based line numbers of the separator lines.
    pub separators: Vec<usize>,
    pub source: String,
}

impl SchemeFileDocument {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut blocks: Vec<Vec<Vec<i64>>> = vec![Vec::new()];
        let mut separators = Vec::new();
        let mut widths: Vec<Option<usize>> = vec![None];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if trimmed.starts_with('#') {
                separators.push(line_no);
                blocks.push(Vec::new());
                widths.push(None);
                continue;
            }
            let mut row = Vec::new();
            let mut rest = raw;
            let mut offset = 0;
            while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
                let len = rest[start..]
                    .find(char::is_whitespace)
                    .unwrap_or(rest.len() - start);
                let token = &rest[start..start + len];
                let value = token.parse::<i64>().map_err(|_| FormatError::Token {
                    line: line_no,
                    column: offset + start + 1,
                    token: token.to_string(),
                })?;
                row.push(value);
                offset += start + len;
                rest = &rest[start + len..];
            }
            let block = blocks.len() - 1;
            let width = widths[block].get_or_insert(row.len());
            if *width != row.len() {
                return Err(FormatError::RaggedRow {
                    block: block + 1,
                    line: line_no,
                    expected: *width,
                    found: row.len(),
                });
            }
            blocks[block].push(row);
        }
        // A trailing separator with nothing after it is not a block.
        if blocks.len() > 1 && blocks.last().is_some_and(Vec::is_empty) {
            blocks.pop();
        }
        if blocks.len() != 3 {
            return Err(FormatError::BlockCount(blocks.len()));
        }
        if let Some(k) = blocks.iter().position(Vec::is_empty) {
            return Err(FormatError::EmptyBlock(k + 1));
        }
        let cols: Vec<usize> = blocks.iter().map(|b| b[0].len()).collect();
        if cols[0] != cols[1] || cols[1] != cols[2] {
            return Err(FormatError::RankMismatch(cols[0], cols[1], cols[2]));
        }
        Ok(SchemeFileDocument {
            blocks,
            separators,
            source: text.to_string(),
        })
    }

    pub fn row_counts(&self) -> (usize, usize, usize) {
        (
            self.blocks[0].len(),
            self.blocks[1].len(),
            self.blocks[2].len(),
        )
    }
}

/// Recovers `(n, m, p)` from the row counts `(nm, mp, np)`.
pub fn infer_dims(nm: usize, mp: usize, np: usize) -> Option<Dims> {
    let product = (nm as u128) * (mp as u128) * (np as u128);
    let nmp = (product as f64).sqrt().round() as u128;
    let nmp = (nmp.saturating_sub(1)..=nmp + 1).find(|r| r * r == product)?;
    if nmp == 0 {
        return None;
    }
    let (nm, mp, np) = (nm as u128, mp as u128, np as u128);
    if nmp % mp != 0 || nmp % np != 0 || nmp % nm != 0 {
        return None;
    }
    let dims = Dims::new(
        (nmp / mp) as usize,
        (nmp / np) as usize,
        (nmp / nm) as usize,
    );
    let consistent =
        dims.a_len() as u128 == nm && dims.b_len() as u128 == mp && dims.c_len() as u128 == np;
    consistent.then_some(dims)
}

/// Reads a coefficient file. Blocks 1/2/3 become `U`/`V`/`W`; dimensions are
/// inferred from the row counts when `dims` is `None`.
pub fn parse_scheme(text: &str, dims: Option<Dims>) -> Result<BilinearScheme, FormatError> {
    let doc = SchemeFileDocument::parse(text)?;
    let (r1, r2, r3) = doc.row_counts();
    let dims = match dims {
        Some(d) => d,
        None => infer_dims(r1, r2, r3).ok_or(FormatError::AmbiguousDims(r1, r2, r3))?,
    };
    let [u, v, w]: [Vec<Vec<i64>>; 3] = doc.blocks.try_into().expect("three blocks");
    Ok(BilinearScheme::from_integers("file", dims, &u, &v, &w)?)
}

/// Writes `U`, `V`, `W` as space-separated integer blocks between `#` lines.
pub fn serialize_scheme(scheme: &BilinearScheme) -> Result<String, FormatError> {
    let mut blocks = Vec::with_capacity(3);
    for (label, matrix) in [('U', scheme.u()), ('V', scheme.v()), ('W', scheme.w())] {
        let mut rows = Vec::with_capacity(matrix.len());
        for (row, entries) in matrix.iter().enumerate() {
            let mut cells = Vec::with_capacity(entries.len());
            for (column, value) in entries.iter().enumerate() {
                let int = value.to_i64().ok_or_else(|| FormatError::NonInteger {
                    matrix: label,
                    row,
                    column,
                    value: value.clone(),
                })?;
                cells.push(int.to_string());
            }
            rows.push(cells.join(" "));
        }
        blocks.push(rows.join("\n"));
    }
    Ok(blocks.join("\n#\n"))
}

/// Collapses all whitespace runs to single spaces.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
