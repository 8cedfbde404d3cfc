//! Comma-separated sample files: one row per sample, one column per feature,
//! with an optional header line.

use std::fs;
use std::io::Write;
use std::path::Path;

use sparda_core::SampleSet;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("no data rows")]
    Empty,
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}, column {column}: {cell:?} is not a number")]
    NotNumeric { line: u64, column: usize, cell: String },
    #[error("line {line}, column {column}: non-finite value {cell:?}")]
    NonFinite { line: u64, column: usize, cell: String },
    #[error(transparent)]
    Samples(#[from] sparda_core::Error),
}

/// Parsed sample file with its header, when one was present.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub samples: SampleSet,
}

fn cell_value(cell: &str, line: u64, column: usize) -> Result<f64, LoadError> {
    let v: f64 = cell
        .parse()
        .map_err(|_| LoadError::NotNumeric { line, column: column + 1, cell: cell.to_string() })?;
    if !v.is_finite() {
        return Err(LoadError::NonFinite { line, column: column + 1, cell: cell.to_string() });
    }
    Ok(v)
}

/// Parses CSV text. The first line is a header exactly when one of its cells
/// does not parse as a number.
pub fn parse_table(text: &str) -> Result<Table, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut width = None;
    let mut values = Vec::new();
    let mut rows = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(LoadError::Ragged { line, expected, found: record.len() });
        }
        for (column, cell) in record.iter().enumerate() {
            values.push(cell_value(cell, line, column)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(LoadError::Empty);
    }
    let samples = SampleSet::new(rows, width.unwrap_or(0), values)?;
    Ok(Table { header, samples })
}

pub fn load_table(path: &Path) -> Result<Table, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_table(&text)
}

pub fn load_samples(path: &Path) -> Result<SampleSet, LoadError> {
    Ok(load_table(path)?.samples)
}

/// Seventeen significant digits, enough to read back the identical `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text with a `feature_<k>` header.
pub fn samples_to_csv(samples: &SampleSet) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..samples.d()).map(|k| format!("feature_{k}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in samples.rows() {
        let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_samples(path: &Path, samples: &SampleSet) -> std::io::Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(samples_to_csv(samples).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected() {
        let t = parse_table("a,b\n1,2\n3,4").unwrap();
        assert_eq!(t.header.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
        assert_eq!((t.samples.n(), t.samples.d()), (2, 2));
        assert_eq!(t.samples.row(1), [3.0, 4.0]);
        let t = parse_table("1,2\r\n3,4\r\n").unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.samples.n(), 2);
    }

    #[test]
    fn bad_files() {
        assert!(matches!(parse_table("1,2\n3"), Err(LoadError::Ragged { line: 2, expected: 2, found: 1 })));
        assert!(matches!(parse_table("1,inf\n3,4"), Err(LoadError::NonFinite { .. })));
        assert!(matches!(parse_table("1,2\n3,NaN"), Err(LoadError::NonFinite { .. })));
        assert!(matches!(parse_table("1,2\n3,x"), Err(LoadError::NotNumeric { column: 2, .. })));
        assert!(matches!(parse_table(""), Err(LoadError::Empty)));
        assert!(matches!(parse_table("a,b\n"), Err(LoadError::Empty)));
        assert!(matches!(parse_table("a,b\n1,2,3"), Err(LoadError::Ragged { .. })));
    }

    #[test]
    fn printed_values_read_back_exactly() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
    }
}
