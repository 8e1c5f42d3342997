//! Dense CSV ingestion: every column but the last is a feature, the last is
//! the target (`b` or the labels).

use std::io::Read;
use std::path::{Path, PathBuf};

use log::info;
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub a: DMatrix<f64>,
    pub target: DVector<f64>,
    /// Column names when the first line was a header.
    pub header: Option<Vec<String>>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }
}

pub fn load_dense_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dense_csv(file, path)
}

/// Parses from any reader; `path` only labels errors.
pub fn parse_dense_csv<R: Read>(reader: R, path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let err = |line: u64, message: String| CliError::Data {
        path: PathBuf::from(path),
        line,
        message,
    };

    let mut header: Option<Vec<String>> = None;
    let mut values: Vec<f64> = Vec::new();
    let mut width = 0;
    let mut rows = 0;
    for (idx, rec) in rdr.records().enumerate() {
        let line = |rec: &csv::StringRecord| rec.position().map_or(idx as u64 + 1, |p| p.line());
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(idx as u64 + 1, |p| p.line());
            err(line, e.to_string())
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, _>> = rec.iter().map(str::parse::<f64>).collect();
        if rows == 0 && header.is_none() && parsed.iter().any(|v| v.is_err()) {
            info!("{}: skipping header row", path.display());
            header = Some(rec.iter().map(str::to_string).collect());
            continue;
        }
        if rows == 0 {
            width = rec.len();
            if width < 2 {
                return Err(err(line(&rec), "need at least one feature column and a target column".into()));
            }
        } else if rec.len() != width {
            return Err(err(line(&rec), format!("expected {width} fields, found {}", rec.len())));
        }
        for (j, v) in parsed.into_iter().enumerate() {
            match v {
                Ok(x) if x.is_finite() => values.push(x),
                _ => {
                    return Err(err(
                        line(&rec),
                        format!("column {}: not a finite number: {:?}", j + 1, &rec[j]),
                    ))
                }
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::EmptyData(path.to_path_buf()));
    }
    if let Some(h) = &header {
        if h.len() != width {
            return Err(err(1, format!("header has {} fields, data rows have {width}", h.len())));
        }
    }
    let full = DMatrix::from_row_slice(rows, width, &values);
    let a = full.columns(0, width - 1).into_owned();
    let target = full.column(width - 1).into_owned();
    info!("{}: {rows} rows, {} features", path.display(), width - 1);
    Ok(Dataset { a, target, header })
}
