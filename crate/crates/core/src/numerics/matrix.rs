//! Row-major dense complex matrices.
//!
//! Products skip zero entries of the left factor, which keeps the banded
//! grid operators cheap without a separate sparse type.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::Serialize;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_diag(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| {
            self.row(i)
                .iter()
                .enumerate()
                .all(|(j, z)| i == j || *z == ZERO)
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Replaces entries with modulus below `eps` by exact zeros.
    pub fn snap_zeros(&mut self, eps: f64) {
        for z in &mut self.data {
            if z.norm() < eps {
                *z = ZERO;
            }
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Self {
        self.check_same(other);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let dst = &mut out.data[i * oc..(i + 1) * oc];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * oc..(k + 1) * oc];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(a, _)| **a != ZERO)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `self* · x` without forming the adjoint.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, x.len(), "adjoint matvec dimension mismatch");
        let mut out = vec![ZERO; self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if *a != ZERO {
                    *o += a.conj() * xi;
                }
            }
        }
        out
    }

    /// `diag(d) · self`.
    pub fn left_diag_mul(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.rows);
        let mut out = self.clone();
        for (i, di) in d.iter().enumerate() {
            for z in &mut out.data[i * self.cols..(i + 1) * self.cols] {
                *z *= di;
            }
        }
        out
    }

    /// `self · diag(d)`.
    pub fn right_diag_mul(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            for (z, dj) in out.data[i * self.cols..(i + 1) * self.cols].iter_mut().zip(d) {
                *z *= dj;
            }
        }
        out
    }

    pub fn powi(&self, mut k: u64) -> Self {
        assert!(self.is_square());
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.matmul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius inner product `⟨self, other⟩ = Σ self_ij · conj(other_ij)`.
    pub fn frobenius_inner(&self, other: &Self) -> Complex64 {
        self.check_same(other);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
    }

    fn check_same(&self, other: &Self) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "dimension mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.axpy(ONE, rhs)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.axpy(-ONE, rhs)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
