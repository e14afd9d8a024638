//! Dense complex matrices with the decomposition conventions the rest of the
//! crate relies on:
//!
//! * singular values in descending order, thin factors only;
//! * a fixed phase convention (the largest-magnitude entry of each left
//!   singular vector / eigenvector is rotated to be real nonnegative), so
//!   repeated factorizations of equal inputs are bit-identical;
//! * pseudo-inverse cutoff at `1e-12 * s_max`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const PINV_CUTOFF_REL: f64 = 1e-12;

/// Row-major dense complex matrix. All entries are finite by construction.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                let z = self.get(i, j);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        if self.rows > 8 || self.cols > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        for (idx, z) in data.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds from a generator; panics on non-finite entries (programmer error).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let z = f(i, j);
                assert!(
                    z.re.is_finite() && z.im.is_finite(),
                    "non-finite entry at ({i}, {j})"
                );
                data.push(z);
            }
        }
        Self { rows, cols, data }
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Columns `0..k` as a new matrix.
    pub fn leading_columns(&self, k: usize) -> ComplexMatrix {
        assert!(k <= self.cols);
        ComplexMatrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    pub fn hstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
        assert!(!blocks.is_empty());
        let rows = blocks[0].rows;
        assert!(blocks.iter().all(|b| b.rows == rows));
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = ComplexMatrix::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.get(i, j));
                }
            }
            off += b.cols;
        }
        out
    }

    pub fn conj(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "dimension mismatch in matrix product: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let lhs_row = i * rhs.cols;
                let rhs_row = k * rhs.cols;
                for j in 0..rhs.cols {
                    out.data[lhs_row + j] += a * rhs.data[rhs_row + j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape());
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape());
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    /// Re tr(A^H B), the real inner product two Hermitian matrices induce.
    pub fn inner_re(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Column-major vectorization (stacks columns), matching vec(AXB) = (B^T (x) A) vec(X).
    pub fn vec_cols(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.get(i, j));
            }
        }
        v
    }

    /// Inverse of [`vec_cols`]: rebuilds an `rows x cols` matrix from stacked columns.
    pub fn from_vec_cols(rows: usize, cols: usize, v: &[Complex64]) -> ComplexMatrix {
        assert_eq!(v.len(), rows * cols);
        ComplexMatrix::from_fn(rows, cols, |i, j| v[j * rows + i])
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    fn to_na(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    fn from_na(m: &DMatrix<Complex64>) -> ComplexMatrix {
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn determinant(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        self.to_na().determinant()
    }

    /// Thin SVD `A = U diag(s) V^H` with `s` descending and the phase
    /// convention fixed per column (see module docs).
    pub fn svd_thin(&self) -> Result<SvdThin> {
        let na = self.to_na();
        let svd = na.try_svd(true, true, f64::EPSILON, 1000).ok_or_else(|| {
            Error::InvalidInput("singular value decomposition did not converge".into())
        })?;
        let mut u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let mut v = v_t.adjoint();
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();

        // Defensive descending order; nalgebra already sorts, a stable sort
        // keeps ties deterministic either way.
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite singular values"));
        if order.iter().enumerate().any(|(i, &o)| i != o) {
            let u2 = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, order[j])]);
            let v2 = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, order[j])]);
            s = order.iter().map(|&o| s[o]).collect();
            u = u2;
            v = v2;
        }

        // Phase convention: rotate each column pair so the largest-magnitude
        // entry of the U-column is real nonnegative. Ties break on the lowest
        // row index; an all-zero column is left untouched.
        for j in 0..s.len() {
            let mut best = 0usize;
            let mut best_mag = 0.0f64;
            for i in 0..u.nrows() {
                let mag = u[(i, j)].norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = i;
                }
            }
            if best_mag > 0.0 {
                let phase = u[(best, j)] / Complex64::new(best_mag, 0.0);
                let rot = phase.conj();
                for i in 0..u.nrows() {
                    u[(i, j)] *= rot;
                }
                for i in 0..v.nrows() {
                    v[(i, j)] *= rot;
                }
            }
        }

        Ok(SvdThin {
            u: ComplexMatrix::from_na(&u),
            s,
            v: ComplexMatrix::from_na(&v),
        })
    }

    /// Moore-Penrose pseudo-inverse; singular values below
    /// `1e-12 * s_max` are treated as zero.
    pub fn pinv(&self) -> Result<ComplexMatrix> {
        let svd = self.svd_thin()?;
        let s_max = svd.s.first().copied().unwrap_or(0.0);
        let cutoff = PINV_CUTOFF_REL * s_max;
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for (k, &sk) in svd.s.iter().enumerate() {
            if sk <= cutoff || sk == 0.0 {
                continue;
            }
            let inv = 1.0 / sk;
            for i in 0..self.cols {
                let vik = svd.v.get(i, k) * inv;
                for j in 0..self.rows {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + vik * svd.u.get(j, k).conj());
                }
            }
        }
        Ok(out)
    }

    /// Eigendecomposition of a Hermitian matrix, eigenvalues descending,
    /// eigenvector phases fixed as in [`svd_thin`]. The caller guarantees
    /// Hermitian input; symmetry is enforced by averaging with the adjoint.
    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        assert_eq!(self.rows, self.cols, "eigh needs a square matrix");
        let na = self.to_na();
        let sym = (&na + na.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
        });
        let vals: Vec<f64> = order.iter().map(|&o| eig.eigenvalues[o]).collect();
        let mut vecs = ComplexMatrix::from_fn(self.rows, self.rows, |i, j| {
            eig.eigenvectors[(i, order[j])]
        });
        for j in 0..self.rows {
            let mut best = 0usize;
            let mut best_mag = 0.0f64;
            for i in 0..self.rows {
                let mag = vecs.get(i, j).norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = i;
                }
            }
            if best_mag > 0.0 {
                let rot = (vecs.get(best, j) / Complex64::new(best_mag, 0.0)).conj();
                for i in 0..self.rows {
                    let cur = vecs.get(i, j);
                    vecs.set(i, j, cur * rot);
                }
            }
        }
        Ok((vals, vecs))
    }

    /// Lower Cholesky factor of a Hermitian positive-definite matrix.
    pub fn cholesky(&self) -> Option<ComplexMatrix> {
        assert_eq!(self.rows, self.cols);
        nalgebra::Cholesky::new(self.to_na()).map(|c| ComplexMatrix::from_na(&c.l()))
    }

    /// Solves `L X = B` for lower-triangular `L` (forward substitution).
    pub fn solve_lower_triangular(&self, b: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.rows);
        let mut x = b.clone();
        for j in 0..b.cols {
            for i in 0..self.rows {
                let mut acc = x.get(i, j);
                for k in 0..i {
                    acc -= self.get(i, k) * x.get(k, j);
                }
                x.set(i, j, acc / self.get(i, i));
            }
        }
        x
    }
}

/// Thin SVD result; `a = u * diag(s) * v^H`.
#[derive(Debug, Clone)]
pub struct SvdThin {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::mul(self, rhs)
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::add(self, rhs)
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::sub(self, rhs)
    }
}
