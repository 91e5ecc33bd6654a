//! Dense row-major linear algebra and the row-norm primitives.
//!
//! Every reduction accumulates in ascending index order, so results are
//! bit-identical across runs. Products use the `i-k-j` loop order: each
//! output entry still sums its terms with `k` ascending, which keeps the
//! result identical to a naive dot-product loop while letting the inner
//! loop vectorize.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    /// Builds a vector, rejecting non-finite entries.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("vector entry {i} is not finite")));
        }
        Ok(Vector(data))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, checking length and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "matrix entry ({}, {}) is not finite",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows"));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
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

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += alpha * other`, element-wise.
    pub fn add_scaled(&mut self, alpha: f64, other: &Matrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "add_scaled {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        axpy(alpha, &other.data, &mut self.data)
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(Error::dim(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        gemm_into(self, rhs, &mut out);
        Ok(out)
    }

    /// `self · rhsᵀ` without materializing the caller's transpose.
    pub fn matmul_transposed(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(Error::dim(format!(
                "matmul_transposed {}x{} by ({}x{})ᵀ",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        self.matmul(&rhs.transpose())
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "matvec {}x{} by length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(Vector(
            self.row_iter().map(|row| dot_unchecked(row, x)).collect(),
        ))
    }

    /// `xᵀ · self` (a row vector times the matrix).
    pub fn vecmat(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.rows {
            return Err(Error::dim(format!(
                "vecmat length {} by {}x{}",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &a) in x.iter().enumerate() {
            if a != 0.0 {
                axpy_unchecked(a, self.row(r), &mut out);
            }
        }
        Ok(Vector(out))
    }
}

/// `out = a · b`; `out` must be zeroed and correctly shaped.
fn gemm_into(a: &Matrix, b: &Matrix, out: &mut Matrix) {
    let n = b.cols;
    for i in 0..a.rows {
        let a_row = &a.data[i * a.cols..(i + 1) * a.cols];
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for (k, &aik) in a_row.iter().enumerate() {
            if aik != 0.0 {
                axpy_unchecked(aik, &b.data[k * n..(k + 1) * n], out_row);
            }
        }
    }
}

#[inline]
fn axpy_unchecked(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim(format!(
            "dot of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dot_unchecked(a, b))
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::dim(format!(
            "axpy of lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    axpy_unchecked(alpha, x, y);
    Ok(())
}

pub fn norm2(x: &[f64]) -> f64 {
    dot_unchecked(x, x).sqrt()
}

/// Euclidean norm of every row.
pub fn l2_row_norms(m: &Matrix) -> Result<Vector> {
    if m.is_empty() {
        return Err(Error::dim("row norms of an empty matrix"));
    }
    Ok(Vector(m.row_iter().map(norm2).collect()))
}

/// Largest Euclidean row norm: the L2,∞ norm.
pub fn l2_inf_norm(m: &Matrix) -> Result<f64> {
    Ok(l2_row_norms(m)?.iter().fold(0.0, |acc, &v| acc.max(v)))
}

/// Rescales every row whose norm exceeds `c` onto the sphere of radius `c`.
pub fn project_rows(m: &Matrix, c: f64) -> Result<Matrix> {
    let mut out = m.clone();
    project_rows_in_place(&mut out, c)?;
    Ok(out)
}

/// In-place form of [`project_rows`]. Returns the number of rows rescaled.
pub fn project_rows_in_place(m: &mut Matrix, c: f64) -> Result<usize> {
    if !(c > 0.0) {
        return Err(Error::param(format!("row-norm bound must be > 0, got {c}")));
    }
    if c.is_infinite() {
        return Ok(0);
    }
    let cols = m.cols.max(1);
    let mut rescaled = 0;
    for row in m.data.chunks_exact_mut(cols) {
        let norm = norm2(row);
        if norm > c {
            // rounding can leave the rescaled norm one ulp above c; shrink until it is not
            let original: Vec<f64> = row.to_vec();
            let mut s = c / norm;
            loop {
                for (v, o) in row.iter_mut().zip(&original) {
                    *v = o * s;
                }
                if norm2(row) <= c {
                    break;
                }
                s = s.next_down();
            }
            rescaled += 1;
        }
    }
    Ok(rescaled)
}
