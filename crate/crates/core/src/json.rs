//! JSON input and output. Floats are written with 17 significant digits;
//! non-finite values become `null`.

use std::io;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::linalg::{c, CMat, CVec, RMat};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid matrix document: {0}")]
    Shape(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDocument {
    n: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
struct MatrixDocumentOut {
    n: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

/// Parses `{ "n": int, "matrix": [[[re, im], ...], ...] }`; the matrix must be `(n+1) x (n+1)`.
pub fn parse_matrix(text: &str) -> Result<(usize, CMat), JsonError> {
    let doc: MatrixDocument = serde_json::from_str(text)?;
    let dim = doc.n + 1;
    if doc.n == 0 {
        return Err(JsonError::Shape("n must be at least 1".into()));
    }
    if doc.matrix.len() != dim || doc.matrix.iter().any(|row| row.len() != dim) {
        return Err(JsonError::Shape(format!("matrix must be {dim}x{dim} for n = {}", doc.n)));
    }
    Ok((doc.n, CMat::from_fn(dim, dim, |i, j| c(doc.matrix[i][j][0], doc.matrix[i][j][1]))))
}

/// Parses a square complex matrix without the `(n+1)` size constraint.
pub fn parse_square(text: &str) -> Result<CMat, JsonError> {
    let doc: MatrixDocument = serde_json::from_str(text)?;
    let dim = doc.matrix.len();
    if doc.n != dim || doc.matrix.iter().any(|row| row.len() != dim) {
        return Err(JsonError::Shape(format!("expected an n x n matrix with n = {}", doc.n)));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| c(doc.matrix[i][j][0], doc.matrix[i][j][1])))
}

pub fn matrix_document(n: usize, m: &CMat) -> serde_json::Value {
    serde_json::to_value(MatrixDocumentOut { n, matrix: matrix_pairs(m) }).expect("plain data serializes")
}

pub fn matrix_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn vector_pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn real_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn serialize_real_matrix<S: Serializer>(m: &RMat, s: S) -> Result<S::Ok, S::Error> {
    real_rows(m).serialize(s)
}

/// Pretty printer that writes every float with 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with full-precision floats and a trailing newline.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
