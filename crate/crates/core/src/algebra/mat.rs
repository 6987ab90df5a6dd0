use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::C64;

/// Work above this many multiply-adds is spread across threads.
const PAR_THRESHOLD: usize = 1 << 16;

/// Dense complex matrix standing for a truncated operator.
///
/// Entry `(i, j)` is the coefficient of `e_{row_offset+i} ⊗ e*_{col_offset+j}`,
/// so rows and columns each carry the index of their first basis vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MatOp {
    rows: usize,
    cols: usize,
    row_offset: i64,
    col_offset: i64,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct MatRepr {
    rows: usize,
    cols: usize,
    #[serde(default)]
    row_offset: i64,
    #[serde(default)]
    col_offset: i64,
    entries: Vec<[f64; 2]>,
}

impl MatOp {
    /// Row-major construction; rejects empty shapes and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be nonempty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFiniteEntries);
        }
        Ok(MatOp {
            rows,
            cols,
            row_offset: 0,
            col_offset: 0,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be nonempty");
        MatOp {
            rows,
            cols,
            row_offset: 0,
            col_offset: 0,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = MatOp::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = MatOp::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = MatOp::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn with_offsets(mut self, row_offset: i64, col_offset: i64) -> Self {
        self.row_offset = row_offset;
        self.col_offset = col_offset;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_offset(&self) -> i64 {
        self.row_offset
    }

    pub fn col_offset(&self) -> i64 {
        self.col_offset
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    /// Entry addressed by basis indices; zero outside the window.
    pub fn at_index(&self, row: i64, col: i64) -> C64 {
        let i = row - self.row_offset;
        let j = col - self.col_offset;
        if i < 0 || j < 0 || i >= self.rows as i64 || j >= self.cols as i64 {
            return C64::new(0.0, 0.0);
        }
        self.get(i as usize, j as usize)
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn same_shape(&self, other: &MatOp) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Matrix product; the inner windows must describe the same basis range.
    pub fn mul(&self, other: &MatOp) -> Result<MatOp> {
        if self.cols != other.rows || self.col_offset != other.row_offset {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} (cols from {}) by {}x{} (rows from {})",
                self.rows, self.cols, self.col_offset, other.rows, other.cols, other.row_offset
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![C64::new(0.0, 0.0); n * m];
        let kernel = |(i, out_row): (usize, &mut [C64])| {
            for (t, &a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(t)) {
                    *o += a * b;
                }
            }
        };
        if n * k * m >= PAR_THRESHOLD {
            out.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(MatOp {
            rows: n,
            cols: m,
            row_offset: self.row_offset,
            col_offset: other.col_offset,
            data: out,
        })
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn transpose(&self) -> MatOp {
        let mut out = MatOp::from_fn(self.cols, self.rows, |i, j| self.get(j, i));
        out.row_offset = self.col_offset;
        out.col_offset = self.row_offset;
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> MatOp {
        let mut out = MatOp::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj());
        out.row_offset = self.col_offset;
        out.col_offset = self.row_offset;
        out
    }

    pub fn scale(&self, alpha: C64) -> MatOp {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= alpha);
        out
    }

    pub fn add(&self, other: &MatOp) -> Result<MatOp> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &MatOp) -> Result<MatOp> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let s: f64 = self.data.iter().map(|c| (c / scale).norm_sqr()).sum();
        scale * s.sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Distance `‖self − other‖_∞` over entries, for tests and symmetry checks.
    pub fn max_abs_diff(&self, other: &MatOp) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serializes")
    }

    pub fn from_json(json: &str) -> Result<MatOp> {
        serde_json::from_str(json).map_err(|e| Error::InvalidArgument(format!("matrix JSON: {e}")))
    }

    /// One line per row, real and imaginary parts in alternating columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.cols)
            .map(|j| {
                let idx = self.col_offset + j as i64;
                format!("c{idx}_re,c{idx}_im")
            })
            .collect();
        writeln!(out, "row,{}", header.join(",")).unwrap();
        for i in 0..self.rows {
            write!(out, "{}", self.row_offset + i as i64).unwrap();
            for c in self.row(i) {
                write!(out, ",{},{}", c.re, c.im).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

impl Serialize for MatOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatRepr {
            rows: self.rows,
            cols: self.cols,
            row_offset: self.row_offset,
            col_offset: self.col_offset,
            entries: self.data.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatRepr::deserialize(d)?;
        let data = r.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        MatOp::new(r.rows, r.cols, data)
            .map(|m| m.with_offsets(r.row_offset, r.col_offset))
            .map_err(serde::de::Error::custom)
    }
}
