//! CSV datasets: a header row, numeric cells, one label column named by the caller.
//! Features are the remaining columns in header order. LF and CRLF line endings are
//! both accepted. Export writes shortest round-trip float text, so re-ingesting an
//! exported dataset reproduces it bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use learnability::dataset::{LabelKind, LabeledDataset};

use crate::error::{CliError, Result};

pub fn ingest_csv(path: &Path, label_column: &str, label_kind: LabelKind) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv(file, label_column, label_kind)
}

/// Row numbers in errors count file lines from 1 (the header); columns count from 1.
pub fn read_csv<R: Read>(reader: R, label_column: &str, label_kind: LabelKind) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let label_index = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| CliError::MissingColumn(label_column.to_string()))?;
    let width = headers.len();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(CliError::InconsistentWidth { row, expected: width, found: record.len() });
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| CliError::Parse {
                row,
                col: col + 1,
                column_name: headers[col].to_string(),
                message: format!("`{cell}` is not a number"),
            })?;
            if col == label_index {
                labels.push(value);
            } else {
                features.push(value);
            }
        }
    }
    Ok(LabeledDataset::new(features, width - 1, labels, label_kind)?)
}

fn csv_error(e: csv::Error) -> CliError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io("<csv input>", source),
        other => CliError::Parse { row, col: 0, column_name: String::new(), message: format!("{other:?}") },
    }
}

/// Feature columns are named `x1..xd`, followed by the label column.
pub fn write_csv<W: Write>(data: &LabeledDataset, writer: W, label_column: &str) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.d()).map(|j| format!("x{j}")).collect();
    header.push(label_column.to_string());
    out.write_record(&header).map_err(csv_error)?;
    for (x, y) in data.rows().zip(data.labels()) {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(y.to_string());
        out.write_record(&row).map_err(csv_error)?;
    }
    out.flush().map_err(|e| CliError::io("<csv output>", e))
}

pub fn export_csv(data: &LabeledDataset, path: &Path, label_column: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file), label_column)
}
