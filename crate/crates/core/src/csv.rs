//! Fixed-dialect CSV: comma separator, dot decimal, no quoting, no missing
//! values. LF or CRLF on read, LF on write.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reads a matrix, one row per non-empty line. Line numbers in errors are
/// 1-based physical lines of the source.
pub fn load_csv<R: Read>(source: R, has_header: bool) -> Result<Matrix> {
    let reader = BufReader::new(source);
    let mut data = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    let mut header_pending = has_header;

    for (idx, line) in reader.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = line?;
        let text = std::str::from_utf8(&raw)
            .map_err(|_| Error::Parse { line: line_no, message: "line is not valid UTF-8".into() })?;
        let text = text.strip_suffix('\r').unwrap_or(text);
        if text.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }

        let mut count = 0usize;
        for (col, field) in text.split(',').enumerate() {
            let field = field.trim();
            let value = parse_field(field).ok_or_else(|| Error::ParseField {
                line: line_no,
                column: col + 1,
                field: field.to_string(),
            })?;
            data.push(value);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(expected) if expected != count => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {expected} fields, found {count}"),
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }

    Matrix::from_vec(rows, cols.unwrap_or(0), data)
}

fn parse_field(field: &str) -> Option<f64> {
    // Rust's float parser also accepts "inf"/"nan"; the dialect does not.
    let v: f64 = field.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Writes `m` with shortest round-trip float formatting. A `0 x 0` matrix
/// produces no output.
pub fn save_csv<W: Write>(m: &Matrix, mut sink: W) -> Result<()> {
    let mut line = String::new();
    for row in m.iter_rows() {
        line.clear();
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format_f64(*v));
        }
        line.push('\n');
        sink.write_all(line.as_bytes())?;
    }
    sink.flush()?;
    Ok(())
}

/// Shortest decimal text that parses back to the identical bit pattern.
pub fn format_f64(v: f64) -> String {
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(stripped) => stripped.to_string(),
        None => s,
    }
}
