use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Storage threshold: entries of smaller magnitude are dropped.
pub const DROP_TOL: f64 = 1e-14;

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Sums duplicate positions and drops entries below [`DROP_TOL`].
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) outside {nrows}x{ncols}");
            rows[i].push((j, v));
        }
        let mut m = SparseMatrix::zeros(nrows, ncols);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut acc = Complex64::new(0.0, 0.0);
                while k < row.len() && row[k].0 == j {
                    acc += row[k].1;
                    k += 1;
                }
                if acc.norm() >= DROP_TOL {
                    m.col_idx.push(j);
                    m.values.push(acc);
                }
            }
            m.row_ptr[i + 1] = m.col_idx.len();
        }
        m
    }

    pub fn from_dense(a: &DMatrix<Complex64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                t.push((i, j, a[(i, j)]));
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let slice = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match slice.binary_search(&j) {
            Ok(k) => self.values[self.row_ptr[i] + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            a[(i, j)] = v;
        }
        a
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.iter().map(|(i, j, v)| (i, j, v * c)))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.nrows, self.ncols) != (other.nrows, other.ncols) {
            return Err(Error::DimensionMismatch {
                expected: self.nrows * self.ncols,
                found: other.nrows * other.ncols,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().chain(other.iter()),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().chain(other.iter().map(|(i, j, v)| (i, j, -v))),
        ))
    }

    /// Gustavson row-by-row product; accumulation order is fixed.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: other.nrows,
            });
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut out = SparseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let mut touched = Vec::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = Complex64::new(0.0, 0.0);
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for j in touched {
                if acc[j].norm() >= DROP_TOL {
                    out.col_idx.push(j);
                    out.values.push(acc[j]);
                }
            }
            out.row_ptr[i + 1] = out.col_idx.len();
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(x.len(), self.ncols);
        DVector::from_iterator(
            self.nrows,
            (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()),
        )
    }

    pub fn adjoint_mul_vec(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = DVector::zeros(self.ncols);
        for (i, j, v) in self.iter() {
            out[j] += v.conj() * y[i];
        }
        out
    }

    /// Dense product with a dense right factor.
    pub fn mul_dense(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(b.nrows(), self.ncols);
        let mut out = DMatrix::zeros(self.nrows, b.ncols());
        for (i, k, v) in self.iter() {
            for j in 0..b.ncols() {
                out[(i, j)] += v * b[(k, j)];
            }
        }
        out
    }

    /// Keeps only the listed columns (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.ncols];
        for (new, &c) in cols.iter().enumerate() {
            pos[c] = new;
        }
        Self::from_triplets(
            self.nrows,
            cols.len(),
            self.iter()
                .filter(|&(_, j, _)| pos[j] != usize::MAX)
                .map(|(i, j, v)| (i, pos[j], v)),
        )
    }

    /// Keeps only the listed rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let t: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(new, &r)| self.row(r).map(move |(j, v)| (new, j, v)))
            .collect();
        Self::from_triplets(rows.len(), self.ncols, t)
    }

    /// Column `j` as a dense vector.
    pub fn column(&self, j: usize) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.nrows);
        for i in 0..self.nrows {
            out[i] = self.get(i, j);
        }
        out
    }

    /// `A ⊗ I_n` with the ampliation index as the slow coordinate: block diagonal copies.
    pub fn ampliate(&self, n: usize) -> Self {
        let (r, c) = (self.nrows, self.ncols);
        Self::from_triplets(
            r * n,
            c * n,
            (0..n).flat_map(|b| self.iter().map(move |(i, j, v)| (b * r + i, b * c + j, v))),
        )
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
