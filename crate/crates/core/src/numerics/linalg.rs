//! LU factorization, spectral norm by power iteration and a positivity test
//! for Hermitian matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{vec_norm, ComplexMatrix};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl LuDecomposition {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = 1e-13 * a.norm_1().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= threshold {
                return Err(Error::SingularMatrix { pivot: pmax });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let ukj = lu[(k, j)];
                    lu[(i, j)] -= factor * ukj;
                }
            }
        }
        Ok(LuDecomposition { lu, perm, sign })
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A·X = B` column by column.
    pub fn solve_matrix(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.lu.rows();
        let mut out = ComplexMatrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col: Vec<Complex64> = (0..n).map(|i| b[(i, j)]).collect();
            for (i, v) in self.solve(&col).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve_matrix(&ComplexMatrix::identity(self.lu.rows()))
    }

    pub fn determinant(&self) -> Complex64 {
        self.lu.diag().iter().product::<Complex64>() * self.sign
    }
}

pub fn solve_linear(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    Ok(LuDecomposition::new(a)?.solve(b))
}

/// Nonzero pattern of a matrix, used to make repeated products cheap.
struct Compressed {
    rows: Vec<Vec<(usize, Complex64)>>,
    cols: usize,
}

impl Compressed {
    fn new(m: &ComplexMatrix) -> Self {
        let rows = (0..m.rows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| **z != ZERO)
                    .map(|(j, z)| (j, *z))
                    .collect()
            })
            .collect();
        Compressed { rows, cols: m.cols() }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(j, a)| a * x[*j]).sum())
            .collect()
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.cols];
        for (r, yi) in self.rows.iter().zip(y) {
            for (j, a) in r {
                out[*j] += a.conj() * yi;
            }
        }
        out
    }
}

const MAX_POWER_STEPS: usize = 5000;

/// Largest singular value by power iteration on `M*M`.
///
/// Starting vectors come from a fixed seed so the result is reproducible.
/// A start that lands in the kernel is retried with a fresh random vector.
pub fn operator_norm(m: &ComplexMatrix, tol: f64) -> f64 {
    if m.is_diagonal() {
        return m.diag().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let fro = m.frobenius_norm();
    if fro == 0.0 {
        return 0.0;
    }
    let cm = Compressed::new(m);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_726d);
    let mut best: f64 = 0.0;
    for _attempt in 0..4 {
        let mut v: Vec<Complex64> = (0..m.cols())
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let nv = vec_norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        let mut sigma: f64 = 0.0;
        let mut stalled = false;
        for _ in 0..MAX_POWER_STEPS {
            let w = cm.apply(&v);
            let s = vec_norm(&w);
            let u = cm.apply_adjoint(&w);
            let nu = vec_norm(&u);
            if nu == 0.0 {
                stalled = true;
                break;
            }
            let converged = (s - sigma).abs() <= tol * s;
            sigma = s;
            v = u.into_iter().map(|z| z / nu).collect();
            if converged {
                break;
            }
        }
        best = best.max(sigma);
        if !stalled && best > 0.0 {
            break;
        }
    }
    best
}

/// Positive semidefiniteness of the Hermitian part of `m`, allowing a
/// diagonal shift of `tol` (relative to the largest diagonal entry).
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.rows();
    let scale = m.diag().iter().map(|z| z.re.abs()).fold(1.0, f64::max);
    let shift = tol * scale;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = 0.5 * (m[(j, j)] + m[(j, j)].conj()).re + shift;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 {
            return false;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    true
}
