//! Numeric CSV tables with a header row. Floats are written in Rust's
//! shortest round-trip form so files are byte-stable and re-read exactly.

use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: cannot parse `{value}` as a number")]
    Parse { row: usize, value: String },
    #[error("row {row} has {got} fields, header has {expected}")]
    Width { row: usize, expected: usize, got: usize },
}

pub fn format_value(v: f64) -> String {
    format!("{v}")
}

pub fn write_table<W: Write, S: AsRef<str>>(
    writer: W,
    header: &[S],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_value(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_to_string<S: AsRef<str>>(header: &[S], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut buf = Vec::new();
    write_table(&mut buf, header, rows).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Header and numeric rows.
pub fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>), TableError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(TableError::Width { row: i + 1, expected: header.len(), got: record.len() });
        }
        let row = record
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| TableError::Parse { row: i + 1, value: v.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![vec![0.1, 1.0 / 3.0, -2.5e-17], vec![1e300, 0.0, -0.0]];
        let text = table_to_string(&["a", "b", "c"], rows.clone());
        let (header, back) = read_table(text.as_bytes()).unwrap();
        assert_eq!(header, ["a", "b", "c"]);
        assert_eq!(back, rows);
        assert!(text.starts_with("a,b,c\n0.1,"));
    }

    #[test]
    fn rejects_ragged_and_bad_values() {
        assert!(matches!(read_table("a,b\n1,x\n".as_bytes()), Err(TableError::Parse { .. })));
        assert!(read_table("a,b\n1\n".as_bytes()).is_err());
    }
}
