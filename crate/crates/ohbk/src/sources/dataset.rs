//! Numeric datasets loaded from delimited text.
//!
//! The loader is meant for files like the UCI tumor tables: an optional
//! header, a sample-id column worth dropping, integer-coded attributes,
//! and the occasional missing value marked with a token such as `?`.
//! Rows containing the missing token are dropped (and counted) rather
//! than imputed; everything that stays must parse as a finite number.
//!
//! Input is untrusted. Every failure mode is an error value, never a
//! panic, and errors carry file line and column positions.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::linalg::Vector;

/// Column indices above this are rejected outright; it bounds the
/// allocation a hostile column spec can request.
const MAX_COLUMN_INDEX: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CsvLoadError {
    #[error("cannot open dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected {expected} columns, found {found}")]
    InconsistentWidth { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column}: {cell:?} is not a number")]
    ParseCell { line: u64, column: usize, cell: String },
    #[error("line {line}, column {column}: non-finite value {cell:?}")]
    NonFiniteCell { line: u64, column: usize, cell: String },
    #[error("column selection {index} is out of range for {ncols} columns")]
    ColumnOutOfRange { index: usize, ncols: usize },
    #[error("column selection index {0} is unreasonably large")]
    ColumnIndexTooLarge(usize),
    #[error("column selection is empty")]
    EmptyColumnSelection,
    #[error("cannot drop the first column of a {0}-column file")]
    TooFewColumnsToDrop(usize),
    #[error("bad column spec {spec:?}: {reason}")]
    BadColumnSpec { spec: String, reason: String },
    #[error("no usable rows ({dropped} dropped for missing values)")]
    NoRows { dropped: usize },
    #[error("rows have no columns")]
    NoColumns,
}

/// Which columns of each row become measurement entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelect {
    /// Every column.
    All,
    /// Every column except the first (typically a sample id).
    DropFirst,
    /// Explicit zero-based indices, in the given order.
    Keep(Vec<usize>),
}

/// Parses a column spec: `all`, `drop-first`, or a comma-separated list
/// of zero-based indices and inclusive ranges like `0,3,5-9`.
pub fn parse_column_select(spec: &str) -> Result<ColumnSelect, CsvLoadError> {
    let trimmed = spec.trim();
    match trimmed {
        "all" => return Ok(ColumnSelect::All),
        "drop-first" => return Ok(ColumnSelect::DropFirst),
        "" => {
            return Err(CsvLoadError::BadColumnSpec {
                spec: spec.to_string(),
                reason: "empty spec".to_string(),
            })
        }
        _ => {}
    }
    let mut indices = Vec::new();
    for part in trimmed.split(',') {
        let part = part.trim();
        let bad = |reason: &str| CsvLoadError::BadColumnSpec {
            spec: spec.to_string(),
            reason: format!("{reason} in {part:?}"),
        };
        if let Some((a, b)) = part.split_once('-') {
            let start: usize = a.trim().parse().map_err(|_| bad("bad range start"))?;
            let end: usize = b.trim().parse().map_err(|_| bad("bad range end"))?;
            if start > end {
                return Err(bad("range start exceeds end"));
            }
            if end > MAX_COLUMN_INDEX {
                return Err(CsvLoadError::ColumnIndexTooLarge(end));
            }
            indices.extend(start..=end);
        } else {
            let index: usize = part.parse().map_err(|_| bad("bad index"))?;
            if index > MAX_COLUMN_INDEX {
                return Err(CsvLoadError::ColumnIndexTooLarge(index));
            }
            indices.push(index);
        }
    }
    if indices.is_empty() {
        return Err(CsvLoadError::EmptyColumnSelection);
    }
    Ok(ColumnSelect::Keep(indices))
}

/// Loader configuration. The defaults match id-plus-attributes files:
/// comma delimiter, no header, `?` for missing values, first column
/// dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub skip_header: bool,
    pub missing_token: String,
    pub columns: ColumnSelect,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            skip_header: false,
            missing_token: "?".to_string(),
            columns: ColumnSelect::DropFirst,
        }
    }
}

/// A dense numeric matrix whose rows serve as measurement vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    nrows: usize,
    ncols: usize,
    dropped_rows: usize,
}

impl Dataset {
    /// Builds directly from rows; useful for synthetic data and tests.
    /// Rows must be non-empty, rectangular, and finite.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, CsvLoadError> {
        if rows.is_empty() {
            return Err(CsvLoadError::NoRows { dropped: 0 });
        }
        let ncols = rows[0].len();
        if ncols == 0 {
            return Err(CsvLoadError::NoColumns);
        }
        let mut values = Vec::with_capacity(rows.len() * ncols);
        for (i, row) in rows.iter().enumerate() {
            let line = i as u64 + 1;
            if row.len() != ncols {
                return Err(CsvLoadError::InconsistentWidth {
                    line,
                    expected: ncols,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(CsvLoadError::NonFiniteCell {
                        line,
                        column: j + 1,
                        cell: v.to_string(),
                    });
                }
                values.push(v);
            }
        }
        Ok(Self {
            values,
            nrows: rows.len(),
            ncols,
            dropped_rows: 0,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Rows that were discarded during loading because they contained the
    /// missing-value token.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i < self.nrows, "row index out of range");
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_vector(&self, i: usize) -> Vector {
        Vector::from_vec(self.row(i).to_vec()).expect("dataset rows are finite and non-empty")
    }
}

/// Loads a dataset from a file on disk.
pub fn load_csv_matrix(path: &Path, options: &CsvOptions) -> Result<Dataset, CsvLoadError> {
    let file = File::open(path)?;
    parse_csv_matrix(file, options)
}

/// Parses a dataset from any reader.
///
/// Processing order per record: the header is skipped first if requested,
/// rows containing the missing token anywhere are dropped next (their
/// width is not checked), and only then are width consistency, column
/// selection, and numeric parsing applied. Column selection is resolved
/// against the width of the first retained row.
pub fn parse_csv_matrix<R: Read>(input: R, options: &CsvOptions) -> Result<Dataset, CsvLoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut values: Vec<f64> = Vec::new();
    let mut selected: Option<Vec<usize>> = None;
    let mut width = 0usize;
    let mut nrows = 0usize;
    let mut dropped = 0usize;
    let mut skip_next = options.skip_header;

    for record in reader.records() {
        let record = record?;
        if skip_next {
            skip_next = false;
            continue;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().any(|cell| cell == options.missing_token) {
            dropped += 1;
            continue;
        }
        let found = record.len();
        let indices = match &selected {
            Some(indices) => {
                if found != width {
                    return Err(CsvLoadError::InconsistentWidth {
                        line,
                        expected: width,
                        found,
                    });
                }
                indices
            }
            None => {
                if found == 0 {
                    return Err(CsvLoadError::NoColumns);
                }
                width = found;
                let indices = resolve_selection(&options.columns, width)?;
                selected = Some(indices);
                selected.as_ref().unwrap()
            }
        };
        for &j in indices {
            let cell = record.get(j).expect("selection validated against width");
            let value: f64 = cell.parse().map_err(|_| CsvLoadError::ParseCell {
                line,
                column: j + 1,
                cell: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(CsvLoadError::NonFiniteCell {
                    line,
                    column: j + 1,
                    cell: cell.to_string(),
                });
            }
            values.push(value);
        }
        nrows += 1;
    }

    if nrows == 0 {
        return Err(CsvLoadError::NoRows { dropped });
    }
    let ncols = values.len() / nrows;
    Ok(Dataset {
        values,
        nrows,
        ncols,
        dropped_rows: dropped,
    })
}

fn resolve_selection(columns: &ColumnSelect, width: usize) -> Result<Vec<usize>, CsvLoadError> {
    match columns {
        ColumnSelect::All => Ok((0..width).collect()),
        ColumnSelect::DropFirst => {
            if width < 2 {
                return Err(CsvLoadError::TooFewColumnsToDrop(width));
            }
            Ok((1..width).collect())
        }
        ColumnSelect::Keep(indices) => {
            if indices.is_empty() {
                return Err(CsvLoadError::EmptyColumnSelection);
            }
            for &index in indices {
                if index >= width {
                    return Err(CsvLoadError::ColumnOutOfRange { index, ncols: width });
                }
            }
            Ok(indices.clone())
        }
    }
}
