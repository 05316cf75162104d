//! CSV ingestion, column selection, and atomic file emission.

use std::io::Write;
use std::path::Path;

use foreca::TimeSeriesMatrix;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeaderMode {
    /// Treat the first row as a header when any of its cells is non-numeric.
    Auto,
    Yes,
    No,
}

#[derive(Clone, Copy, Debug)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub header: HeaderMode,
}

fn parse_cell(cell: &str) -> Result<f64, String> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Err("empty cell".into());
    }
    match trimmed.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("'{trimmed}' is not finite")),
        Err(_) => Err(format!("'{trimmed}' is not a number")),
    }
}

/// Reads a rectangular numeric CSV file into a series matrix. Needs at
/// least 16 data rows; generated names are c1..cn when no header exists.
pub fn read_dataset(path: &Path, opts: &ReadOptions) -> Result<TimeSeriesMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(opts.delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;

    let mut records = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Input(format!(
            "{}: file contains no rows",
            path.display()
        )));
    }

    let first_all_numeric = records[0].iter().all(|cell| parse_cell(cell).is_ok());
    let has_header = match opts.header {
        HeaderMode::Yes => true,
        HeaderMode::No => false,
        HeaderMode::Auto => !first_all_numeric,
    };

    let (names, data_records) = if has_header {
        let names: Vec<String> = records[0].iter().map(str::to_string).collect();
        (Some(names), &records[1..])
    } else {
        (None, &records[..])
    };

    let mut rows = Vec::with_capacity(data_records.len());
    let offset = if has_header { 2 } else { 1 };
    for (i, record) in data_records.iter().enumerate() {
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let value = parse_cell(cell).map_err(|msg| {
                CliError::Input(format!(
                    "{}: row {}, column {}: {msg}",
                    path.display(),
                    i + offset,
                    j + 1
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.len() < 16 {
        return Err(CliError::Input(format!(
            "{}: need at least 16 data rows, found {}",
            path.display(),
            rows.len()
        )));
    }

    Ok(TimeSeriesMatrix::from_rows(rows, names)?)
}

/// Resolves a comma-separated list of column names or 1-based indices.
pub fn resolve_columns(names: &[String], spec: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for token in spec.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err(CliError::Input("empty column selector".into()));
        }
        if let Some(pos) = names.iter().position(|n| n == token) {
            out.push(pos);
            continue;
        }
        match token.parse::<usize>() {
            Ok(ix) if (1..=names.len()).contains(&ix) => out.push(ix - 1),
            Ok(ix) => {
                return Err(CliError::Input(format!(
                    "column index {ix} out of range 1..={}",
                    names.len()
                )))
            }
            Err(_) => {
                return Err(CliError::Input(format!("no column named '{token}'")));
            }
        }
    }
    Ok(out)
}

/// Resolves a single column name or 1-based index.
pub fn resolve_column(names: &[String], spec: &str) -> Result<usize, CliError> {
    let columns = resolve_columns(names, spec)?;
    if columns.len() != 1 {
        return Err(CliError::Input(format!(
            "expected exactly one column, got '{spec}'"
        )));
    }
    Ok(columns[0])
}

/// 17-significant-digit decimal rendering; round-trips every finite double.
pub fn sci(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes through a temporary file in the destination directory and renames
/// into place, so readers never observe a partially written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Input(format!("cannot create file near {}: {e}", path.display())))?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Input(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(())
}
