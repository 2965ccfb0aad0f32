//! Matrix Market exchange format.
//!
//! Reads `coordinate` and `array` files with `real`, `integer` or `complex`
//! fields and `general` or `symmetric` symmetry. Symmetric files are expanded
//! to full storage. Coordinate files become sparse matrices, array files dense.
//! Values are written in shortest round-trip form, so write-then-read is exact.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ipt_core::{ComplexMatrix, CsrMatrix, DenseMatrix, C64};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub layout: Layout,
    pub field: Field,
    pub symmetry: Symmetry,
}

impl Header {
    fn parse(line: &str) -> Result<Self> {
        let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
        let bad = |msg: &str| Error::parse(1, format!("{msg}: `{line}`"));
        if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
            return Err(bad("expected `%%MatrixMarket matrix <layout> <field> <symmetry>`"));
        }
        let layout = match words[2].as_str() {
            "coordinate" => Layout::Coordinate,
            "array" => Layout::Array,
            _ => return Err(bad("unsupported layout")),
        };
        let field = match words[3].as_str() {
            "real" | "double" => Field::Real,
            "integer" => Field::Integer,
            "complex" => Field::Complex,
            _ => return Err(bad("unsupported field")),
        };
        let symmetry = match words[4].as_str() {
            "general" => Symmetry::General,
            "symmetric" => Symmetry::Symmetric,
            _ => return Err(bad("unsupported symmetry")),
        };
        Ok(Self { layout, field, symmetry })
    }

    fn line(&self) -> String {
        let layout = match self.layout {
            Layout::Coordinate => "coordinate",
            Layout::Array => "array",
        };
        let field = match self.field {
            Field::Real => "real",
            Field::Integer => "integer",
            Field::Complex => "complex",
        };
        let symmetry = match self.symmetry {
            Symmetry::General => "general",
            Symmetry::Symmetric => "symmetric",
        };
        format!("%%MatrixMarket matrix {layout} {field} {symmetry}")
    }
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_from(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Data lines with their 1-based line numbers, comments and blanks skipped.
struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line.map_err(|e| Error::io("<input>", e))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.number, t.to_string())));
        }
        Ok(None)
    }
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.parse().map_err(|_| Error::parse(line, format!("expected an integer, found `{s}`")))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::parse(line, format!("expected a number, found `{s}`")))
}

fn parse_value(field: Field, parts: &[&str], line: usize) -> Result<C64> {
    let want = if field == Field::Complex { 2 } else { 1 };
    if parts.len() != want {
        return Err(Error::parse(line, format!("expected {want} value(s), found {}", parts.len())));
    }
    let re = parse_f64(parts[0], line)?;
    let im = if want == 2 { parse_f64(parts[1], line)? } else { 0.0 };
    Ok(C64::new(re, im))
}

pub fn read_from<R: Read>(reader: R) -> Result<ComplexMatrix> {
    let mut lines = BufReader::new(reader).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file"))?
        .map_err(|e| Error::io("<input>", e))?;
    let header = Header::parse(&first)?;
    let mut lines = Lines { inner: lines, number: 1 };
    let (size_line, size) = lines.next_data()?.ok_or_else(|| Error::parse(2, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();

    match header.layout {
        Layout::Coordinate => {
            if dims.len() != 3 {
                return Err(Error::parse(size_line, "expected `rows cols entries`"));
            }
            let rows = parse_usize(dims[0], size_line)?;
            let cols = parse_usize(dims[1], size_line)?;
            let nnz = parse_usize(dims[2], size_line)?;
            if header.symmetry == Symmetry::Symmetric && rows != cols {
                return Err(Error::parse(size_line, "symmetric matrix must be square"));
            }
            let mut triplets = Vec::with_capacity(nnz * 2);
            for _ in 0..nnz {
                let (ln, text) = lines.next_data()?.ok_or_else(|| Error::parse(lines.number, "fewer entries than declared"))?;
                let parts: Vec<&str> = text.split_whitespace().collect();
                if parts.len() < 2 {
                    return Err(Error::parse(ln, "expected `row col value`"));
                }
                let (i, j) = (parse_usize(parts[0], ln)?, parse_usize(parts[1], ln)?);
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(Error::parse(ln, format!("index ({i}, {j}) out of bounds for {rows}x{cols}")));
                }
                let v = parse_value(header.field, &parts[2..], ln)?;
                if header.symmetry == Symmetry::Symmetric {
                    if j > i {
                        return Err(Error::parse(ln, format!("entry ({i}, {j}) above the diagonal of a symmetric file")));
                    }
                    if i != j {
                        triplets.push((j - 1, i - 1, v));
                    }
                }
                triplets.push((i - 1, j - 1, v));
            }
            if let Some((ln, _)) = lines.next_data()? {
                return Err(Error::parse(ln, "more entries than declared"));
            }
            Ok(CsrMatrix::from_triplets(rows, cols, triplets)?.into())
        }
        Layout::Array => {
            if dims.len() != 2 {
                return Err(Error::parse(size_line, "expected `rows cols`"));
            }
            let rows = parse_usize(dims[0], size_line)?;
            let cols = parse_usize(dims[1], size_line)?;
            let symmetric = header.symmetry == Symmetry::Symmetric;
            if symmetric && rows != cols {
                return Err(Error::parse(size_line, "symmetric matrix must be square"));
            }
            let mut m = DenseMatrix::zeros(rows, cols);
            // Column-major; symmetric files hold the lower triangle only.
            for j in 0..cols {
                let start = if symmetric { j } else { 0 };
                for i in start..rows {
                    let (ln, text) = lines.next_data()?.ok_or_else(|| Error::parse(lines.number, "fewer entries than declared"))?;
                    let parts: Vec<&str> = text.split_whitespace().collect();
                    let v = parse_value(header.field, &parts, ln)?;
                    m[(i, j)] = v;
                    if symmetric {
                        m[(j, i)] = v;
                    }
                }
            }
            if let Some((ln, _)) = lines.next_data()? {
                return Err(Error::parse(ln, "more entries than declared"));
            }
            Ok(m.into())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct WriteOptions {
    /// Defaults to the storage of the matrix.
    pub layout: Option<Layout>,
    /// Defaults to `real` when every imaginary part is zero.
    pub field: Option<Field>,
    /// Store only the lower triangle; the matrix must equal its transpose.
    pub symmetric: bool,
}

fn push_value(out: &mut String, field: Field, v: C64) {
    match field {
        Field::Complex => write!(out, " {:e} {:e}", v.re, v.im),
        Field::Integer => write!(out, " {}", v.re),
        Field::Real => write!(out, " {:e}", v.re),
    }
    .expect("writing to a string");
}

pub fn write_matrix_market(m: &ComplexMatrix, path: impl AsRef<Path>, options: WriteOptions) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(to_string(m, options)?.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn to_string(m: &ComplexMatrix, options: WriteOptions) -> Result<String> {
    let layout = options.layout.unwrap_or(if m.is_sparse() { Layout::Coordinate } else { Layout::Array });
    let dense;
    let entries: Vec<(usize, usize, C64)> = match m {
        ComplexMatrix::Sparse(s) => s.iter().collect(),
        ComplexMatrix::Dense(d) => {
            dense = d;
            (0..d.rows()).flat_map(|i| (0..d.cols()).map(move |j| (i, j, dense[(i, j)]))).collect()
        }
    };
    let real = entries.iter().all(|e| e.2.im == 0.0);
    let field = options.field.unwrap_or(if real { Field::Real } else { Field::Complex });
    if field != Field::Complex && !real {
        return Err(Error::Usage("matrix has imaginary parts; write it as complex".into()));
    }
    if field == Field::Integer && entries.iter().any(|e| e.2.re.fract() != 0.0 || !e.2.re.is_finite()) {
        return Err(Error::Usage("matrix has non-integer entries".into()));
    }
    if options.symmetric && (!m.is_square() || m.transpose().to_dense() != m.to_dense()) {
        return Err(Error::Usage("matrix is not symmetric".into()));
    }
    let symmetry = if options.symmetric { Symmetry::Symmetric } else { Symmetry::General };
    let header = Header { layout, field, symmetry };
    let keep = |i: usize, j: usize| !options.symmetric || i >= j;

    let mut out = header.line();
    out.push('\n');
    match layout {
        Layout::Coordinate => {
            let kept: Vec<_> = entries.iter().filter(|e| keep(e.0, e.1) && e.2 != C64::new(0.0, 0.0)).collect();
            writeln!(out, "{} {} {}", m.rows(), m.cols(), kept.len()).expect("string");
            for &&(i, j, v) in &kept {
                write!(out, "{} {}", i + 1, j + 1).expect("string");
                push_value(&mut out, field, v);
                out.push('\n');
            }
        }
        Layout::Array => {
            let d = m.to_dense();
            writeln!(out, "{} {}", m.rows(), m.cols()).expect("string");
            for j in 0..d.cols() {
                for i in 0..d.rows() {
                    if keep(i, j) {
                        let mut line = String::new();
                        push_value(&mut line, field, d[(i, j)]);
                        out.push_str(line.trim_start());
                        out.push('\n');
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_coordinate() {
        let text = "%%MatrixMarket matrix coordinate real general\n% the 2x2 example\n2 2 3\n1 2 0.1\n2 1 0.1\n2 2 1.0\n";
        let m = read_from(text.as_bytes()).unwrap();
        assert!(m.is_sparse());
        let want = DenseMatrix::from_real(2, 2, &[0.0, 0.1, 0.1, 1.0]).unwrap();
        assert_eq!(m.to_dense(), want);
    }

    #[test]
    fn symmetric_coordinate_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2\n2 1 -1\n3 2 0.5\n3 3 4\n";
        let m = read_from(text.as_bytes()).unwrap();
        assert_eq!(m.transpose().to_dense(), m.to_dense());
        assert_eq!(m.get(0, 1), C64::new(-1.0, 0.0));
        assert_eq!(m.get(1, 2), C64::new(0.5, 0.0));
    }

    #[test]
    fn complex_array_round_trip_is_exact() {
        let d = DenseMatrix::from_vec(
            2,
            2,
            vec![C64::new(0.1, -1.0 / 3.0), C64::new(f64::MIN_POSITIVE, 1e300), C64::new(-2.5, 0.0), C64::new(std::f64::consts::PI, 7.0)],
        )
        .unwrap();
        let m: ComplexMatrix = d.into();
        let text = to_string(&m, WriteOptions::default()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix array complex general"));
        assert_eq!(read_from(text.as_bytes()).unwrap(), m);
    }

    #[test]
    fn symmetric_array_round_trip() {
        let m: ComplexMatrix = DenseMatrix::from_real(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]).unwrap().into();
        let opts = WriteOptions { symmetric: true, ..Default::default() };
        let text = to_string(&m, opts).unwrap();
        assert_eq!(text.lines().count(), 2 + 6);
        assert_eq!(read_from(text.as_bytes()).unwrap(), m);
    }

    #[test]
    fn header_errors() {
        for bad in ["%%MatrixMarket matrix coordinate pattern general\n1 1 0\n", "%MatrixMarket matrix array real general\n", "hello\n", ""] {
            assert!(matches!(read_from(bad.as_bytes()), Err(Error::Parse { .. })), "{bad:?}");
        }
    }

    #[test]
    fn index_and_duplicate_errors() {
        let oob = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(read_from(oob.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let dup = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n";
        assert!(matches!(read_from(dup.as_bytes()), Err(Error::Solver(ipt_core::Error::DuplicateEntry { row: 0, col: 0 }))));
        let upper = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n";
        assert!(read_from(upper.as_bytes()).is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_from(short.as_bytes()).is_err());
    }

    #[test]
    fn integer_field_reads_as_real() {
        let text = "%%MatrixMarket matrix array integer general\n1 2\n3\n-4\n";
        let m = read_from(text.as_bytes()).unwrap();
        assert_eq!(m.to_dense(), DenseMatrix::from_real(1, 2, &[3.0, -4.0]).unwrap());
    }
}
