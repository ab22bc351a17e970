//! Dense row-major matrices, a handful of vector kernels, and the two
//! on-disk matrix formats (CSV and the `SLCA` binary layout).
//!
//! Binary layout: the four magic bytes `SLCA`, then `rows` and `cols` as
//! little-endian `u32`, then `rows * cols` little-endian `f64` values in
//! row-major order.
//!
//! CSV layout: a header line `rows,cols` holding the two integers, then one
//! line per row of comma-separated values. Values are written with Rust's
//! shortest round-trip formatting, so a write/read cycle is bit-exact.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{ensure_finite, ensure_len, Error, Result};

const MAGIC: &[u8; 4] = b"SLCA";

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes,
    /// length mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix shape must be positive, got {rows}x{cols}"
            )));
        }
        ensure_len("matrix data", rows * cols, data.len())?;
        ensure_finite("matrix data", &data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Stacks equally long columns side by side.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            ensure_len("column", rows, c.len())?;
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_len("matrix-vector operand", self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        ensure_len("transpose-vector operand", self.rows, y.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        ensure_len("matrix product inner dimension", self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in self.row(i).iter().enumerate() {
                if aik != 0.0 {
                    axpy(aik, other.row(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `AᵀA`, accumulated as a sum of row outer products so the inner loop
    /// stays contiguous. The result is exactly symmetric.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ai = row[i];
                if ai == 0.0 {
                    continue;
                }
                let dst = &mut g.data[i * n + i..(i + 1) * n];
                for (d, &aj) in dst.iter_mut().zip(&row[i..]) {
                    *d += ai * aj;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &v) in sq.iter_mut().zip(self.row(i)) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Returns the matrix with unit ℓ₂ columns and the original norms.
    /// Zero columns are left untouched.
    pub fn normalize_columns(&self) -> (Self, Vec<f64>) {
        let norms = self.column_norms();
        let mut out = self.clone();
        for i in 0..self.rows {
            for (v, &n) in out.row_mut(i).iter_mut().zip(&norms) {
                if n > 0.0 {
                    *v /= n;
                }
            }
        }
        (out, norms)
    }

    /// `[self, other]`
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        ensure_len("hstack rows", self.rows, other.rows)?;
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},{}", self.rows, self.cols)?;
        let mut line = String::new();
        for i in 0..self.rows {
            line.clear();
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the CSV layout. Values after the header may be laid out in any
    /// row-major arrangement (one row per line, one value per line, ...).
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(Error::Parse("empty matrix file".into())),
            }
        };
        let (rows, cols) = parse_shape(&header)?;
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines {
            let line = line?;
            for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                data.push(parse_f64(tok)?);
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let rows = u32::try_from(self.rows)
            .map_err(|_| Error::InvalidParameter("row count exceeds u32".into()))?;
        let cols = u32::try_from(self.cols)
            .map_err(|_| Error::InvalidParameter("column count exceeds u32".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("missing SLCA magic bytes".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let rows = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cols = u32::from_le_bytes(word) as usize;
        let mut bytes = vec![0u8; rows * cols * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(rows, cols, data)
    }

    /// Loads either format, sniffing the magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            Self::read_csv(bytes.as_slice())
        }
    }

    /// Writes the binary format when the extension is `.bin`, CSV otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        if path.extension().is_some_and(|e| e == "bin") {
            self.write_binary(file)
        } else {
            self.write_csv(file)
        }
    }
}

fn parse_shape(header: &str) -> Result<(usize, usize)> {
    let mut parts = header.split(',').map(str::trim);
    let mut next = || -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::Parse(format!("bad shape header {header:?}")))?
            .parse()
            .map_err(|_| Error::Parse(format!("bad shape header {header:?}")))
    };
    Ok((next()?, next()?))
}

pub(crate) fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("not a number: {tok:?}")))
}

/// Writes a vector as an `n,1` matrix CSV.
pub fn write_vector_csv<W: Write>(v: &[f64], w: W) -> Result<()> {
    DenseMatrix::new(v.len(), 1, v.to_vec())?.write_csv(w)
}

/// Reads a vector from either the matrix CSV layout (any shape, flattened)
/// or a bare single-column file with one value per line. A non-numeric
/// first line of a bare file is treated as a column name and skipped.
pub fn read_vector_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut text = String::new();
    BufReader::new(r).read_to_string(&mut text)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    let first = lines
        .peek()
        .copied()
        .ok_or_else(|| Error::Parse("empty vector file".into()))?;
    if first.contains(',') && parse_shape(first).is_ok() {
        return Ok(DenseMatrix::read_csv(text.as_bytes())?.into_data());
    }
    if parse_f64(first.trim()).is_err() {
        lines.next();
    }
    let values = lines
        .map(|l| parse_f64(l.split(',').next().unwrap_or("").trim()))
        .collect::<Result<Vec<_>>>()?;
    ensure_finite("vector file", &values)?;
    Ok(values)
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_vector_csv(std::fs::File::open(path)?)
}

pub fn save_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_vector_csv(v, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn products_against_loops() {
        let a = DenseMatrix::from_fn(3, 4, |i, j| (i * 4 + j) as f64 - 5.0);
        let x = [1.0, -2.0, 0.5, 3.0];
        let ax = a.mul_vec(&x).unwrap();
        for i in 0..3 {
            let want: f64 = (0..4).map(|j| a.get(i, j) * x[j]).sum();
            assert_eq!(ax[i], want);
        }
        let y = [0.5, 1.0, -1.0];
        let aty = a.tr_mul_vec(&y).unwrap();
        let at = a.transpose();
        assert_eq!(aty, at.mul_vec(&y).unwrap());
        assert_eq!(a.gram(), at.matmul(&a).unwrap());
    }

    #[test]
    fn hstack_and_normalize() {
        let a = DenseMatrix::new(2, 2, vec![3.0, 0.0, 4.0, 0.0]).unwrap();
        let (n, norms) = a.normalize_columns();
        assert_eq!(norms, vec![5.0, 0.0]);
        assert_eq!(n.column(0), vec![0.6, 0.8]);
        assert_eq!(n.column(1), vec![0.0, 0.0]);
        let h = a.hstack(&a.scaled(-1.0)).unwrap();
        assert_eq!(h.shape(), (2, 4));
        assert_eq!(h.column(2), vec![-3.0, -4.0]);
    }

    #[test]
    fn csv_header_layout() {
        let a = DenseMatrix::new(2, 3, vec![1.0, 2.5, -3.0, 0.1, 0.2, 1e-300]).unwrap();
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("2,3\n1,2.5,-3\n"));
        // one-value-per-line is also accepted
        let alt = "2,3\n1\n2.5\n-3\n0.1\n0.2\n1e-300\n";
        assert_eq!(DenseMatrix::read_csv(alt.as_bytes()).unwrap(), a);
    }

    #[test]
    fn binary_layout() {
        let a = DenseMatrix::new(1, 2, vec![1.0, -2.0]).unwrap();
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SLCA");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..20], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 12 + 16);
        assert!(DenseMatrix::read_binary(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn bare_vector_files() {
        assert_eq!(read_vector_csv("1.5\n-2\n".as_bytes()).unwrap(), vec![1.5, -2.0]);
        assert_eq!(
            read_vector_csv("accel\n0.25\n0.5\n".as_bytes()).unwrap(),
            vec![0.25, 0.5]
        );
        assert_eq!(
            read_vector_csv("2,1\n3\n4\n".as_bytes()).unwrap(),
            vec![3.0, 4.0]
        );
    }

    proptest! {
        #[test]
        fn both_formats_roundtrip_bit_exact(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in proptest::collection::vec(-1e12f64..1e12, 36),
        ) {
            let data: Vec<f64> = seed.iter().take(rows * cols).map(|v| v / 7.0).collect();
            let a = DenseMatrix::new(rows, cols, data).unwrap();
            let mut csv = Vec::new();
            a.write_csv(&mut csv).unwrap();
            let back = DenseMatrix::read_csv(csv.as_slice()).unwrap();
            prop_assert!(back.data().iter().zip(a.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
            let mut bin = Vec::new();
            a.write_binary(&mut bin).unwrap();
            let back = DenseMatrix::read_binary(bin.as_slice()).unwrap();
            prop_assert!(back.data().iter().zip(a.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
