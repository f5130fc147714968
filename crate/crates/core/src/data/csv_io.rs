//! CSV ingestion and serialization for [`SampleTable`].
//!
//! UTF-8, comma-separated, header row required. Every non-label column is a
//! feature except the optional `synthetic` flag column. Floats are written
//! in Rust's shortest round-trip decimal form, so save/load is exact.

use std::path::Path;

use super::SampleTable;
use crate::error::{Error, Result};

/// Reserved column name for the synthetic-row flag.
pub const SYNTHETIC_COLUMN: &str = "synthetic";

pub fn load_csv(path: &Path, label_column: &str) -> Result<SampleTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header of {}: {e}", path.display())))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::Input(format!(
                "label column {label_column:?} not found in {}",
                path.display()
            ))
        })?;
    let synthetic_idx = headers.iter().position(|h| h == SYNTHETIC_COLUMN);

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && Some(i) != synthetic_idx)
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut synthetic_flags = Vec::new();

    for (row_no, record) in reader.records().enumerate() {
        let row = row_no + 1;
        let record = record.map_err(|e| Error::Input(format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Input(format!(
                "row {row}: has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        let mut feat_row = Vec::with_capacity(feature_cols.len());
        for &col in &feature_cols {
            let cell = &record[col];
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::Input(format!(
                    "row {row}, column {:?}: cannot parse {cell:?} as a number",
                    headers[col]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::Input(format!(
                    "row {row}, column {:?}: non-finite value {cell:?}",
                    headers[col]
                )));
            }
            feat_row.push(value);
        }
        labels.push(parse_binary(&record[label_idx], row, label_column)?);
        synthetic_flags.push(match synthetic_idx {
            Some(i) => parse_binary(&record[i], row, SYNTHETIC_COLUMN)?,
            None => 0,
        });
        features.push(feat_row);
    }

    SampleTable::new(feature_names, features, labels, synthetic_flags)
}

fn parse_binary(cell: &str, row: usize, column: &str) -> Result<u8> {
    match cell.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Input(format!(
            "row {row}, column {column:?}: expected 0 or 1, got {other:?}"
        ))),
    }
}

/// Writes the table to any sink; the `synthetic` column appears only when
/// some flag is set.
pub fn write_csv<W: std::io::Write>(table: &SampleTable, sink: W) -> Result<()> {
    let any_synthetic = table.synthetic_flags.iter().any(|&f| f == 1);
    let mut writer = csv::Writer::from_writer(sink);

    let mut header: Vec<String> = table.feature_names.clone();
    header.push("label".to_string());
    if any_synthetic {
        header.push(SYNTHETIC_COLUMN.to_string());
    }
    writer.write_record(&header)?;

    for i in 0..table.n_rows() {
        let mut record: Vec<String> = table.features[i].iter().map(|v| format!("{v}")).collect();
        record.push(table.labels[i].to_string());
        if any_synthetic {
            record.push(table.synthetic_flags[i].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_csv(table: &SampleTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(table, file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_features_in_header_order() {
        let f = write_tmp("speed,flow,occupancy,label\n60,1800,7.5,0\n35.25,900,22,1\n50,1500,9,0\n");
        let table = load_csv(f.path(), "label").unwrap();
        assert_eq!(table.feature_names, vec!["speed", "flow", "occupancy"]);
        assert_eq!(table.n_rows(), 3);
        assert_eq!(table.labels, vec![0, 1, 0]);
        assert_eq!(table.features[1], vec![35.25, 900.0, 22.0]);
        assert!(table.synthetic_flags.iter().all(|&f| f == 0));
    }

    #[test]
    fn rejects_non_binary_label_with_row_index() {
        let f = write_tmp("a,label\n1.0,0\n2.0,2\n");
        let err = load_csv(f.path(), "label").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn rejects_unparsable_cell_with_position() {
        let f = write_tmp("a,b,label\n1.0,2.0,0\n1.0,oops,1\n");
        let err = load_csv(f.path(), "label").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("\"b\""), "{msg}");
    }

    #[test]
    fn rejects_width_mismatch_with_row() {
        let f = write_tmp("a,b,label\n1.0,2.0,0\n1.0,1\n");
        let err = load_csv(f.path(), "label").unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn missing_label_column_named() {
        let f = write_tmp("a,b\n1,2\n");
        let err = load_csv(f.path(), "label").unwrap_err();
        assert!(err.to_string().contains("label"), "{err}");
    }

    #[test]
    fn save_load_round_trip_exact() {
        let table = SampleTable::new(
            vec!["x".into(), "y".into()],
            vec![
                vec![0.1, 1e-7],
                vec![-3.5e10, 0.30000000000000004],
                vec![2.0 / 3.0, f64::MIN_POSITIVE],
            ],
            vec![0, 1, 0],
            vec![0, 1, 0],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_csv(&table, &path).unwrap();
        let loaded = load_csv(&path, "label").unwrap();
        assert_eq!(loaded.feature_names, table.feature_names);
        assert_eq!(loaded.features, table.features);
        assert_eq!(loaded.labels, table.labels);
        assert_eq!(loaded.synthetic_flags, table.synthetic_flags);
    }

    #[test]
    fn synthetic_column_omitted_when_no_flags() {
        let table = SampleTable::new(
            vec!["x".into()],
            vec![vec![1.0]],
            vec![1],
            vec![0],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_csv(&table, &path).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert!(!content.contains("synthetic"));
    }
}
