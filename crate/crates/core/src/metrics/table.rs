use std::path::Path;

use nalgebra::DMatrix;

use super::features::{FeatureVector, FEATURE_NAMES};
use crate::error::{Error, Result};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Csv { line, msg: format!("{}: {kind:?}", path.display()) },
    }
}

/// Reads a numeric matrix, one row per line. A first line that does not
/// parse as numbers is taken as a header and skipped.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Csv { line: i + 1, msg: "non-finite value".into() });
                }
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(Error::Csv {
                            line: i + 1,
                            msg: format!("expected {} columns, found {}", first.len(), row.len()),
                        });
                    }
                }
                rows.push(row);
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Csv { line: i + 1, msg: e.to_string() }),
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty("CSV matrix"));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

/// Writes `m` one row per line, with an optional header.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>, header: Option<&[&str]>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    if let Some(h) = header {
        if h.len() != m.ncols() {
            return Err(Error::DimensionMismatch(format!("{} header names for {} columns", h.len(), m.ncols())));
        }
        w.write_record(h).map_err(|e| csv_err(path, e))?;
    }
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_features_csv(path: impl AsRef<Path>, feats: &[FeatureVector]) -> Result<()> {
    let m = DMatrix::from_row_iterator(feats.len(), FEATURE_NAMES.len(), feats.iter().flat_map(|f| f.to_array()));
    write_matrix_csv(path, &m, Some(&FEATURE_NAMES))
}

pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureVector>> {
    let m = read_matrix_csv(path)?;
    m.row_iter()
        .map(|r| FeatureVector::from_slice(&r.iter().copied().collect::<Vec<_>>()))
        .collect()
}
