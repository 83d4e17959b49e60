//! Complex-number conventions and dense linear algebra shared by every module.
//!
//! All square roots of complex quantities go through [`csqrt`]: the branch with
//! `Im >= 0`, and `Re >= 0` when the imaginary part vanishes. Wavenumbers built
//! this way describe waves that decay (or are outgoing) along their direction
//! of travel.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Square root with `Im >= 0` (and `Re >= 0` on the real axis).
pub fn csqrt(w: C64) -> C64 {
    let s = w.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// `i^n` for any integer `n`.
pub fn ipow(n: i64) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

pub fn sign_pow(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Matrix product through BLAS `zgemm`.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    unsafe {
        blas::zgemm(
            b'N',
            b'N',
            m as i32,
            n as i32,
            k as i32,
            ONE,
            a.as_slice(),
            m as i32,
            b.as_slice(),
            k as i32,
            ZERO,
            c.as_mut_slice(),
            m as i32,
        );
    }
    c
}

/// LU factorisation with a reciprocal condition estimate (1-norm).
pub struct Lu {
    factors: CMat,
    pivots: Vec<i32>,
    pub rcond: f64,
}

/// Condition numbers above this are reported through the log.
pub const COND_REPORT: f64 = 1e10;

impl Lu {
    /// Factorise `a`. Fails when `a` is exactly singular or when its reciprocal
    /// condition number drops below `min_rcond`.
    pub fn new(a: &CMat, min_rcond: f64, context: &str) -> Result<Lu> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Lu: matrix must be square");
        let mut factors = a.clone();
        let mut pivots = vec![0i32; n];
        if n == 0 {
            return Ok(Lu {
                factors,
                pivots,
                rcond: 1.0,
            });
        }
        if factors.iter().any(|z| !is_finite(*z)) {
            return Err(Error::Internal(format!("{context}: non-finite matrix entries")));
        }
        let anorm = one_norm(a);
        let mut info = 0;
        unsafe {
            lapack::zgetrf(
                n as i32,
                n as i32,
                factors.as_mut_slice(),
                n as i32,
                &mut pivots,
                &mut info,
            );
        }
        if info > 0 {
            return Err(Error::Singular {
                context: context.to_string(),
                condition: f64::INFINITY,
            });
        }
        let mut rcond = 0.0;
        let mut work = vec![ZERO; 2 * n];
        let mut rwork = vec![0.0; 2 * n];
        unsafe {
            lapack::zgecon(
                b'1',
                n as i32,
                factors.as_slice(),
                n as i32,
                anorm,
                &mut rcond,
                &mut work,
                &mut rwork,
                &mut info,
            );
        }
        if rcond < min_rcond || !rcond.is_finite() {
            return Err(Error::Singular {
                context: context.to_string(),
                condition: 1.0 / rcond,
            });
        }
        if 1.0 / rcond > COND_REPORT {
            log::warn!("{context}: condition number {:.3e}", 1.0 / rcond);
        }
        Ok(Lu { factors, pivots, rcond })
    }

    pub fn condition(&self) -> f64 {
        1.0 / self.rcond
    }

    /// Solve `A X = B`.
    pub fn solve(&self, b: &CMat) -> CMat {
        let n = self.factors.nrows();
        assert_eq!(b.nrows(), n);
        let mut x = b.clone();
        if n == 0 || b.ncols() == 0 {
            return x;
        }
        let mut info = 0;
        unsafe {
            lapack::zgetrs(
                b'N',
                n as i32,
                b.ncols() as i32,
                self.factors.as_slice(),
                n as i32,
                &self.pivots,
                x.as_mut_slice(),
                n as i32,
                &mut info,
            );
        }
        x
    }

    /// Solve `X A = B`, i.e. `A^T X^T = B^T`.
    pub fn solve_right(&self, b: &CMat) -> CMat {
        let n = self.factors.nrows();
        assert_eq!(b.ncols(), n);
        let mut x = b.transpose();
        if n == 0 || b.nrows() == 0 {
            return x.transpose();
        }
        let mut info = 0;
        unsafe {
            lapack::zgetrs(
                b'T',
                n as i32,
                x.ncols() as i32,
                self.factors.as_slice(),
                n as i32,
                &self.pivots,
                x.as_mut_slice(),
                n as i32,
                &mut info,
            );
        }
        x.transpose()
    }
}

pub fn one_norm(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Generalized eigenproblem `A x = lambda B x` via LAPACK `zggev`.
///
/// Returns `(alpha, beta, right_vectors)` with `lambda = alpha / beta`; infinite
/// eigenvalues have `beta == 0`.
pub fn generalized_eigen(a: &CMat, b: &CMat) -> Result<(Vec<C64>, Vec<C64>, CMat)> {
    let n = a.nrows();
    assert!(a.is_square() && b.shape() == a.shape());
    let mut aa = a.clone();
    let mut bb = b.clone();
    let mut alpha = vec![ZERO; n];
    let mut beta = vec![ZERO; n];
    let mut vl = vec![ZERO; 1];
    let mut vr = CMat::zeros(n, n);
    let mut rwork = vec![0.0; 8 * n.max(1)];
    let mut info = 0;
    let mut query = [ZERO];
    unsafe {
        lapack::zggev(
            b'N',
            b'V',
            n as i32,
            aa.as_mut_slice(),
            n as i32,
            bb.as_mut_slice(),
            n as i32,
            &mut alpha,
            &mut beta,
            &mut vl,
            1,
            vr.as_mut_slice(),
            n as i32,
            &mut query,
            -1,
            &mut rwork,
            &mut info,
        );
    }
    let lwork = (query[0].re as usize).max(2 * n).max(1);
    let mut work = vec![ZERO; lwork];
    unsafe {
        lapack::zggev(
            b'N',
            b'V',
            n as i32,
            aa.as_mut_slice(),
            n as i32,
            bb.as_mut_slice(),
            n as i32,
            &mut alpha,
            &mut beta,
            &mut vl,
            1,
            vr.as_mut_slice(),
            n as i32,
            &mut work,
            lwork as i32,
            &mut rwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigen(format!("zggev returned info = {info}")));
    }
    Ok((alpha, beta, vr))
}
