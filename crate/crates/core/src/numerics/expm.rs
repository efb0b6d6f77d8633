//! Matrix exponential by scaling and squaring with the degree 13 diagonal
//! Padé approximant.

use num_complex::Complex64;

use super::linalg::LuDecomposition;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const THETA_13: f64 = 5.371920351148152;
const MAX_SQUARINGS: i32 = 64;

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(scale·m)`.
pub fn mat_exp(m: &ComplexMatrix, scale: Complex64) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "matrix exponential of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let a = m.scale(scale);
    let n = a.rows();
    if a.is_diagonal() {
        return Ok(ComplexMatrix::from_diag(
            &a.diag().iter().map(|z| z.exp()).collect::<Vec<_>>(),
        ));
    }
    let norm = a.norm_1();
    if !norm.is_finite() {
        return Err(Error::Overflow { norm });
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow { norm });
    }
    let a = a.scale_real(0.5f64.powi(s));

    let id = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| Complex64::new(B13[k], 0.0);

    let u_inner = a6
        .scale(b(13))
        .axpy(b(11), &a4)
        .axpy(b(9), &a2);
    let u_outer = a6
        .scale(b(7))
        .axpy(b(5), &a4)
        .axpy(b(3), &a2)
        .axpy(b(1), &id);
    let u = &a * &(&(&a6 * &u_inner) + &u_outer);

    let v_inner = a6
        .scale(b(12))
        .axpy(b(10), &a4)
        .axpy(b(8), &a2);
    let v = (&a6 * &v_inner)
        .axpy(b(6), &a6)
        .axpy(b(4), &a4)
        .axpy(b(2), &a2)
        .axpy(b(0), &id);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = LuDecomposition::new(&q)?.solve_matrix(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::Overflow { norm });
    }
    Ok(r)
}
