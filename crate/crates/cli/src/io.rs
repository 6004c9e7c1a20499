//! CSV interchange for sampled functions and JSON output formatting.
//!
//! Grids are written as a `t,f` header followed by one row per node, every
//! number printed with 17 significant digits so that a write/read cycle
//! reproduces the values bit for bit. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;
use vofrac::GridFunction;

/// Largest accepted deviation of a spacing from the mean step, relative to it.
pub const UNIFORMITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },

    #[error("line {line}: abscissae are not uniformly spaced (relative deviation {deviation:.3e})")]
    NonUniformGrid { line: u64, deviation: f64 },

    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },

    #[error(transparent)]
    Grid(#[from] vofrac::Error),
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Format { .. } => "format",
            IoError::NonUniformGrid { .. } => "non-uniform-grid",
            IoError::Io { .. } => "io",
            IoError::Grid(e) => e.code(),
        }
    }
}

fn format_error(line: u64, message: impl Into<String>) -> IoError {
    IoError::Format { line, message: message.into() }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a `t,f` file into a uniform grid.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<GridFunction<f64>, IoError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })?;
    ingest_reader(file)
}

pub fn ingest_reader(reader: impl Read) -> Result<GridFunction<f64>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let line_of = |e: &csv::Error| e.position().map_or(0, |p| p.line());

    let header = match records.next() {
        None => return Err(format_error(1, "missing header `t,f`")),
        Some(Err(e)) => return Err(format_error(line_of(&e), e.to_string())),
        Some(Ok(r)) => r,
    };
    let header_line = header.position().map_or(1, |p| p.line());
    if header.len() != 2 || &header[0] != "t" || &header[1] != "f" {
        return Err(format_error(header_line, "expected header `t,f`"));
    }

    let mut ts = Vec::new();
    let mut fs = Vec::new();
    let mut lines = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| format_error(line_of(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(format_error(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| format_error(line, format!("`{s}` is not a number")));
        ts.push(parse(&rec[0])?);
        fs.push(parse(&rec[1])?);
        lines.push(line);
    }
    if ts.len() < 2 {
        return Err(format_error(header_line + 1, "need at least two data rows"));
    }

    let n = ts.len();
    let step = (ts[n - 1] - ts[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(format_error(lines[n - 1], "abscissae must be increasing"));
    }
    for i in 1..n {
        let deviation = ((ts[i] - ts[i - 1]) - step).abs() / step;
        if !(deviation <= UNIFORMITY_TOL) {
            return Err(IoError::NonUniformGrid { line: lines[i], deviation });
        }
    }
    Ok(GridFunction::new(ts[0], ts[n - 1], fs)?)
}

pub fn write_grid(g: &GridFunction<f64>, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "f"])?;
    for (i, v) in g.values().iter().enumerate() {
        w.write_record([fmt_f64(g.node(i)), fmt_f64(*v)])?;
    }
    w.flush()
}

pub fn emit_grid(g: &GridFunction<f64>, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let io_err = |source| IoError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    write_grid(g, file).map_err(io_err)
}

/// JSON formatter printing floats with 17 significant digits.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }
}

pub fn to_json(value: &impl Serialize) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_uniform_file() {
        let mut text = String::from("# comment\nt,f\n");
        for i in 0..11 {
            text.push_str(&format!("{},{}\n", i as f64 * 0.1, i * i));
        }
        let g = ingest_reader(text.as_bytes()).unwrap();
        assert_eq!(g.n_points(), 11);
        assert_eq!(g.values()[3], 9.0);
    }

    #[test]
    fn rejects_non_uniform_spacing() {
        let text = "t,f\n0,1\n0.1,2\n0.3,3\n";
        assert!(matches!(ingest_reader(text.as_bytes()), Err(IoError::NonUniformGrid { line: 3, .. })));
    }

    #[test]
    fn missing_header_names_line_one() {
        let text = "0,1\n1,2\n";
        match ingest_reader(text.as_bytes()) {
            Err(IoError::Format { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(ingest_reader("".as_bytes()), Err(IoError::Format { line: 1, .. })));
    }

    #[test]
    fn bad_row_names_its_line() {
        let text = "t,f\n0,1\n0.5,abc\n1,2\n";
        assert!(matches!(ingest_reader(text.as_bytes()), Err(IoError::Format { line: 3, .. })));
    }

    #[test]
    fn write_then_read_is_lossless() {
        let g = GridFunction::from_fn(0.1, 2.3, 37, |t: f64| (3.7 * t).sin() / 3.0).unwrap();
        let mut buf = Vec::new();
        write_grid(&g, &mut buf).unwrap();
        assert_eq!(ingest_reader(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn json_floats_have_seventeen_digits() {
        assert_eq!(to_json(&vec![0.1, 2.0]), "[1.0000000000000001e-1,2.0000000000000000e0]");
        assert_eq!(to_json(&f64::NAN), "null");
    }
}
