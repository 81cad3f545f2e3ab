//! Matrix and point-set files.
//!
//! * CSV: comma-separated decimals, one matrix row (or data point) per line,
//!   no header. Blank lines are skipped.
//! * Binary: the magic bytes `SQMX`, a version byte `1`, rows and cols as
//!   little-endian `u64`, then `rows·cols` little-endian `f64` in row-major
//!   order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const BINARY_MAGIC: &[u8; 4] = b"SQMX";
pub const BINARY_VERSION: u8 = 1;

/// Reads a matrix, choosing the format from the leading magic bytes.
pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut head = [0u8; 4];
    let is_binary = {
        let mut f = File::open(path)?;
        f.read(&mut head)? == 4 && &head == BINARY_MAGIC
    };
    if is_binary {
        load_matrix_binary(path)
    } else {
        load_matrix_csv(path)
    }
}

pub fn load_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let rows = read_csv_rows(path)?;
    if rows.is_empty() {
        return Err(parse_error(path, 1, 1, "no data rows"));
    }
    DenseMatrix::from_rows(&rows)
}

/// Data points, one per CSV row.
pub fn load_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows = read_csv_rows(path)?;
    if rows.is_empty() {
        return Err(parse_error(path, 1, 1, "no data rows"));
    }
    Ok(rows)
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let field = field.trim();
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, col + 1, &format!("not a number: {field:?}")))?;
            if !value.is_finite() {
                return Err(Error::NonFiniteEntry { row: rows.len(), col });
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::RaggedRows {
                    line,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    if let csv::ErrorKind::Io(_) = e.kind() {
        return match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        };
    }
    parse_error(path, line, 1, &e.to_string())
}

fn parse_error(path: &Path, line: usize, column: usize, message: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.to_string(),
    }
}

pub fn load_matrix_binary(path: &Path) -> Result<DenseMatrix> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let header = 4 + 1 + 8 + 8;
    if bytes.len() < header || &bytes[..4] != BINARY_MAGIC {
        return Err(parse_error(path, 1, 1, "missing SQMX header"));
    }
    if bytes[4] != BINARY_VERSION {
        return Err(parse_error(path, 1, 5, &format!("unsupported version {}", bytes[4])));
    }
    let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let rows = read_u64(5) as usize;
    let cols = read_u64(13) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| parse_error(path, 1, 6, "dimensions overflow"))?;
    if bytes.len() - header != expected {
        return Err(parse_error(
            path,
            1,
            header + 1,
            &format!("expected {expected} payload bytes, found {}", bytes.len() - header),
        ));
    }
    let data: Vec<f64> = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::new(rows, cols, data)
}

pub fn save_matrix_binary(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&[BINARY_VERSION])?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for x in a.as_slice() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows with Rust's shortest round-trip float formatting.
pub fn save_matrix_csv(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn csv_and_binary_agree() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(&dir, "a.csv", b"1,2\n3,4\n");
        let a = load_matrix(&csv).unwrap();
        assert_eq!(a, DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap());

        let bin = dir.path().join("a.bin");
        save_matrix_binary(&bin, &a).unwrap();
        assert_eq!(std::fs::metadata(&bin).unwrap().len(), 4 + 1 + 16 + 32);
        assert_eq!(load_matrix(&bin).unwrap(), a);

        let back = dir.path().join("b.csv");
        save_matrix_csv(&back, &a).unwrap();
        assert_eq!(load_matrix(&back).unwrap(), a);
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let nan = write(&dir, "nan.csv", b"1,nan\n");
        assert!(matches!(load_matrix(&nan), Err(Error::NonFiniteEntry { row: 0, col: 1 })));
        let bad = write(&dir, "bad.csv", b"1,2\n3,x\n");
        match load_matrix(&bad) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        let ragged = write(&dir, "r.csv", b"1,2\n3\n");
        assert!(matches!(load_points(&ragged), Err(Error::RaggedRows { line: 2, expected: 2, found: 1 })));
        let empty = write(&dir, "e.csv", b"");
        assert!(matches!(load_matrix(&empty), Err(Error::Parse { .. })));
        assert!(matches!(load_matrix(&dir.path().join("missing.csv")), Err(Error::Io(_))));
    }

    #[test]
    fn binary_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = b"SQMX\x02".to_vec();
        body.extend_from_slice(&[0u8; 16]);
        let wrong_version = write(&dir, "v.bin", &body);
        assert!(matches!(load_matrix(&wrong_version), Err(Error::Parse { .. })));

        let mut short = b"SQMX\x01".to_vec();
        short.extend_from_slice(&2u64.to_le_bytes());
        short.extend_from_slice(&2u64.to_le_bytes());
        short.extend_from_slice(&1.0f64.to_le_bytes());
        let truncated = write(&dir, "t.bin", &short);
        assert!(matches!(load_matrix(&truncated), Err(Error::Parse { .. })));

        let mut inf = b"SQMX\x01".to_vec();
        inf.extend_from_slice(&1u64.to_le_bytes());
        inf.extend_from_slice(&1u64.to_le_bytes());
        inf.extend_from_slice(&f64::INFINITY.to_le_bytes());
        let p = write(&dir, "inf.bin", &inf);
        assert!(matches!(load_matrix(&p), Err(Error::NonFiniteEntry { .. })));
    }

    #[test]
    fn points() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "p.csv", b"0,1\n2,3\n4,5\n");
        assert_eq!(load_points(&p).unwrap().len(), 3);
        let one = write(&dir, "one.csv", b"1.5,2.5,3.5\n");
        assert_eq!(load_points(&one).unwrap(), vec![vec![1.5, 2.5, 3.5]]);
    }
}
