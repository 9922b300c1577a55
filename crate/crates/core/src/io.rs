//! CSV ingestion and export for data matrices.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Format a float with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Read a headered, comma-separated numeric CSV. The column named `label`
/// (or the last column when `None`) is moved to the end.
///
/// Parse errors carry 1-based file line and column numbers.
pub fn read_csv(path: &Path, label: Option<&str>) -> Result<DataMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            msg: format!("{}: {e}", path.display()),
            row: Some(1),
            col: None,
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(Error::Parse {
            msg: "need at least two columns".into(),
            row: Some(1),
            col: None,
        });
    }
    let label_idx = match label {
        None => header.len() - 1,
        Some(name) => header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            msg: format!("label column {name:?} not in header"),
            row: Some(1),
            col: None,
        })?,
    };

    let cols = header.len();
    let mut flat: Vec<f64> = Vec::new();
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            msg: e.to_string(),
            row: Some(line),
            col: None,
        })?;
        if rec.len() != cols {
            return Err(Error::Parse {
                msg: format!("expected {cols} fields, found {}", rec.len()),
                row: Some(line),
                col: None,
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                msg: format!("non-numeric cell {cell:?} in column {:?}", header[j]),
                row: Some(line),
                col: Some(j + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    msg: format!("non-finite cell {cell:?}"),
                    row: Some(line),
                    col: Some(j + 1),
                });
            }
            flat.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty("csv has no data rows"));
    }

    let order: Vec<usize> = (0..cols).filter(|&j| j != label_idx).chain([label_idx]).collect();
    let values = DMatrix::from_fn(rows, cols, |r, c| flat[r * cols + order[c]]);
    let names = order.iter().map(|&j| header[j].clone()).collect();
    DataMatrix::new(values, names)
}

/// Write a data matrix with its header, floats at 17 significant digits.
pub fn write_csv(path: &Path, data: &DataMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str(&data.column_names().join(","));
    out.push('\n');
    let v = data.values();
    for r in 0..v.nrows() {
        let row: Vec<String> = (0..v.ncols()).map(|c| fmt_f64(v[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
