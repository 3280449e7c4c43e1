//! Dense `f64` arrays and the seeded generator shared by every stochastic
//! component.
//!
//! All randomness flows through [`Rng`], a ChaCha8 stream keyed by a 64-bit
//! seed. ChaCha output is specified bit-for-bit, so an experiment is fully
//! determined by its seeds on any platform. Independent sub-streams are
//! obtained with [`Rng::fork`], which keeps the key and selects a different
//! ChaCha stream id.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result, Shape};

/// A dense vector of finite reals.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    /// The zero vector of length `len`.
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    /// Wraps `data`, rejecting NaN and infinities.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self { data })
    }

    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self { data }
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True for the zero-length vector.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Entries as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entries as a mutable slice.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Consumes the vector, returning its entries.
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Inner product. Panics on length mismatch.
    pub fn dot(&self, other: &DenseVector) -> f64 {
        dot(&self.data, &other.data)
    }

    /// Euclidean norm.
    pub fn l2_norm(&self) -> f64 {
        l2_norm(self)
    }

    /// `self += scale · other`.
    pub fn axpy(&mut self, scale: f64, other: &DenseVector) {
        axpy(&mut self.data, scale, &other.data);
    }

    /// Multiplies every entry by `scale`.
    pub fn scale(&mut self, scale: f64) {
        self.data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Sets every entry to zero.
    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub(crate) fn push(&mut self, value: f64) {
        self.data.push(value);
    }

    pub(crate) fn shape(&self) -> Shape {
        Shape::vector(self.len())
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<&[f64]> for DenseVector {
    fn from(values: &[f64]) -> Self {
        Self::from_vec(values.to_vec()).expect("non-finite entry")
    }
}

/// A dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// The `rows × cols` zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Wraps row-major `data`; its length must be `rows × cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "matrix construction",
                left: Shape::matrix(rows, cols),
                right: Shape::vector(data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "matrix construction",
                    left: Shape::vector(cols),
                    right: Shape::vector(row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    /// Row count.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Column count.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shape as `(rows, cols)`.
    pub fn shape(&self) -> Shape {
        Shape::matrix(self.rows, self.cols)
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable row-major entries.
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable row `i`.
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Appends a row. An empty `0 × 0` matrix adopts the row's width.
    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "push_row",
                left: self.shape(),
                right: Shape::vector(row.len()),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("push_row"));
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// `self · v`.
    pub fn matvec(&self, v: &DenseVector) -> Result<DenseVector> {
        matvec(self, v)
    }

    /// `selfᵀ · v`.
    pub fn matvec_transposed(&self, v: &DenseVector) -> Result<DenseVector> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "matvec_transposed",
                left: self.shape(),
                right: v.shape(),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.as_slice().iter().enumerate() {
            if vi != 0.0 {
                axpy(&mut out, vi, self.row(i));
            }
        }
        Ok(DenseVector::from_vec_unchecked(out))
    }

    /// `self += scale · a ⊗ b` where `a` indexes rows and `b` columns.
    pub fn add_outer(&mut self, scale: f64, a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), self.rows, "outer product row mismatch");
        assert_eq!(b.len(), self.cols, "outer product column mismatch");
        for (i, &ai) in a.iter().enumerate() {
            let s = scale * ai;
            if s != 0.0 {
                axpy(self.row_mut(i), s, b);
            }
        }
    }

    /// `self += scale · other`. Panics on shape mismatch.
    pub fn axpy(&mut self, scale: f64, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape(), "matrix axpy shape mismatch");
        axpy(&mut self.data, scale, &other.data);
    }

    /// Sets every entry to zero.
    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Matrix-vector product `m · v`.
pub fn matvec(m: &DenseMatrix, v: &DenseVector) -> Result<DenseVector> {
    if m.cols != v.len() {
        return Err(Error::DimensionMismatch {
            op: "matvec",
            left: m.shape(),
            right: v.shape(),
        });
    }
    let out = (0..m.rows).map(|i| dot(m.row(i), v.as_slice())).collect();
    Ok(DenseVector::from_vec_unchecked(out))
}

/// Euclidean norm `sqrt(Σ vᵢ²)`.
pub fn l2_norm(v: &DenseVector) -> f64 {
    norm(v.as_slice())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|x| x * x).sum())
}

pub(crate) fn axpy(y: &mut [f64], scale: f64, x: &[f64]) {
    assert_eq!(y.len(), x.len(), "axpy length mismatch");
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += scale * xi);
}

/// Seeded ChaCha8 generator.
///
/// The same seed (and fork path) always yields the same draws.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    /// Generator keyed by `seed`, on stream 0.
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed this generator was keyed with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator with the same key on ChaCha stream `stream`.
    ///
    /// Forks do not advance `self` and draws on different streams are
    /// independent.
    pub fn fork(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        Self {
            seed: self.seed,
            inner,
        }
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(invalid(alloc::format!(
                "uniform range [{lo}, {hi}) is empty"
            )));
        }
        Ok(self.inner.random_range(lo..hi))
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst);
    }
}

/// Uniform draw in `[lo, hi)`; errors when `lo >= hi`.
pub fn rng_uniform(rng: &mut Rng, lo: f64, hi: f64) -> Result<f64> {
    rng.uniform(lo, hi)
}
