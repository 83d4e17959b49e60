//! Special functions of complex argument for spherical-wave expansions.
//!
//! Spherical harmonics are orthonormal with the Condon–Shortley phase:
//! `Y_lm(θ, φ) = N_lm P_l^m(cos θ) e^{imφ}` with `P_l^m` carrying `(-1)^m`,
//! and `Y_{l,-m} = (-1)^m conj(Y_lm)`. Every module uses this convention.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{is_finite, C64, I, ZERO};

/// Largest orbital order accepted for multipole expansions.
pub const LMAX_CAP: usize = 14;
pub const LMAX_DEFAULT: usize = 7;

/// An `(l, m)` pair with `|m| <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularIndex {
    pub l: usize,
    pub m: i64,
}

impl AngularIndex {
    pub fn new(l: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > l {
            return Err(Error::invalid(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        Ok(AngularIndex { l, m })
    }

    /// Position in the flattened `(l, m)` ordering `l^2 + l + m`.
    pub fn flat(&self) -> usize {
        lm_index(self.l, self.m)
    }
}

/// Flattened index `l^2 + l + m` of `(l, m)`.
#[inline]
pub fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of `(l, m)` pairs with `l <= lmax`.
#[inline]
pub fn lm_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Inverse of [`lm_index`].
pub fn lm_from_index(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

fn check_finite(z: C64) -> Result<()> {
    if is_finite(z) {
        Ok(())
    } else {
        Err(Error::invalid(format!("non-finite argument {z}")))
    }
}

/// Spherical Bessel functions `j_l(z)`, `l = 0..=lmax`.
///
/// Miller's downward recurrence from well above `max(lmax, |z|)`, normalised
/// against whichever of the closed forms `j_0`, `j_1` is larger.
pub fn sph_bessel(lmax: usize, z: C64) -> Result<Vec<C64>> {
    check_finite(z)?;
    let mut out = vec![ZERO; lmax + 1];
    if z == ZERO {
        out[0] = C64::new(1.0, 0.0);
        return Ok(out);
    }
    let az = z.norm();
    if az < 1e-3 {
        // Leading terms of the power series; recurrence loses nothing here but
        // the closed forms for j_0, j_1 cancel badly.
        let z2 = z * z;
        let mut pref = C64::new(1.0, 0.0);
        let mut dfact = 1.0;
        for (l, o) in out.iter_mut().enumerate() {
            if l > 0 {
                pref *= z;
                dfact *= (2 * l + 1) as f64;
            }
            let t1 = -z2 / (2.0 * (2 * l + 3) as f64);
            let t2 = z2 * z2 / (8.0 * ((2 * l + 3) * (2 * l + 5)) as f64);
            let t3 = -z2 * z2 * z2 / (48.0 * ((2 * l + 3) * (2 * l + 5) * (2 * l + 7)) as f64);
            *o = pref / dfact * (1.0 + t1 + t2 + t3);
        }
        return Ok(out);
    }
    let start = lmax.max(az.ceil() as usize) + 20 + (az.sqrt() * 4.0) as usize;
    let mut jp1 = ZERO;
    let mut j = C64::new(1e-30, 0.0);
    let mut tmp = vec![ZERO; start + 1];
    tmp[start] = j;
    for l in (1..=start).rev() {
        let jm1 = j * ((2 * l + 1) as f64) / z - jp1;
        jp1 = j;
        j = jm1;
        tmp[l - 1] = j;
        if j.norm() > 1e250 {
            let s = 1e-250;
            for t in tmp[l - 1..].iter_mut() {
                *t *= s;
            }
            j *= s;
            jp1 *= s;
        }
    }
    let j0 = z.sin() / z;
    let j1 = z.sin() / (z * z) - z.cos() / z;
    let scale = if j0.norm() >= j1.norm() {
        j0 / tmp[0]
    } else {
        j1 / tmp[1]
    };
    for l in 0..=lmax {
        out[l] = tmp[l] * scale;
    }
    Ok(out)
}

/// Spherical Hankel functions of the first kind `h_l(z) = j_l + i y_l`.
///
/// Upward recurrence from the closed forms, stable for the dominant solution.
pub fn sph_hankel1(lmax: usize, z: C64) -> Result<Vec<C64>> {
    check_finite(z)?;
    if z == ZERO {
        return Err(Error::SingularArgument("h_l(0) is singular".into()));
    }
    let mut out = vec![ZERO; lmax + 1];
    let e = (I * z).exp();
    out[0] = -I * e / z;
    if lmax >= 1 {
        out[1] = -e * (z + I) / (z * z);
    }
    for l in 1..lmax {
        out[l + 1] = out[l] * ((2 * l + 1) as f64) / z - out[l - 1];
    }
    Ok(out)
}

/// Spherical Neumann functions `y_l(z)` by upward recurrence.
pub fn sph_neumann(lmax: usize, z: C64) -> Result<Vec<C64>> {
    check_finite(z)?;
    if z == ZERO {
        return Err(Error::SingularArgument("y_l(0) is singular".into()));
    }
    let mut out = vec![ZERO; lmax + 1];
    out[0] = -z.cos() / z;
    if lmax >= 1 {
        out[1] = -z.cos() / (z * z) - z.sin() / z;
    }
    for l in 1..lmax {
        out[l + 1] = out[l] * ((2 * l + 1) as f64) / z - out[l - 1];
    }
    Ok(out)
}

/// Derivatives `f'_l(z)` of a spherical Bessel-type table holding orders
/// `0..=lmax+1`; returns orders `0..=lmax`. Uses `f'_0 = -f_1` and
/// `f'_l = f_{l-1} - (l+1)/z f_l`.
pub fn derivative_table(f: &[C64], z: C64) -> Vec<C64> {
    let lmax = f.len() - 2;
    (0..=lmax)
        .map(|l| {
            if l == 0 {
                -f[1]
            } else {
                f[l - 1] - f[l] * ((l + 1) as f64) / z
            }
        })
        .collect()
}

/// Associated Legendre functions `P_l^m(x)` for `0 <= m <= l <= lmax`, with
/// the Condon–Shortley phase and without normalisation. Indexed
/// `table[l][m]`.
pub fn assoc_legendre(lmax: usize, x: f64) -> Result<Vec<Vec<f64>>> {
    if !(-1.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::invalid(format!("|x| = {} > 1", x.abs())));
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut p = vec![vec![0.0; lmax + 1]; lmax + 1];
    let mut pmm = 1.0;
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -((2 * m - 1) as f64) * s;
        }
        p[m][m] = pmm;
        if m < lmax {
            p[m + 1][m] = (2 * m + 1) as f64 * x * pmm;
        }
        for l in (m + 2)..=lmax {
            p[l][m] = ((2 * l - 1) as f64 * x * p[l - 1][m] - (l + m - 1) as f64 * p[l - 2][m]) / (l - m) as f64;
        }
    }
    Ok(p)
}

/// Orthonormal spherical harmonics `Y_lm` for `l <= lmax`, flattened by
/// [`lm_index`], at a direction given by `cos θ`, `sin θ` and `e^{iφ}`.
///
/// All three may be complex: this is the polynomial continuation used for
/// evanescent plane-wave directions, and is never conjugated.
pub fn ylm_table(lmax: usize, cos_t: C64, sin_t: C64, eiphi: C64) -> Vec<C64> {
    let mut y = vec![ZERO; lm_count(lmax)];
    // normalised P̄_l^m with Y_lm = P̄_l^m e^{imφ}
    let mut pmm = C64::new(1.0 / (4.0 * PI).sqrt(), 0.0);
    let mut eim = C64::new(1.0, 0.0);
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -sin_t * ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
            eim *= eiphi;
        }
        let mut p_lm2 = ZERO;
        let mut p_lm1 = pmm;
        let phase_neg = if m % 2 == 0 { 1.0 } else { -1.0 };
        let eim_neg = if m == 0 { eim } else { eim.inv() };
        let store = |y: &mut Vec<C64>, l: usize, p: C64| {
            y[lm_index(l, m as i64)] = p * eim;
            if m > 0 {
                y[lm_index(l, -(m as i64))] = p * eim_neg * phase_neg;
            }
        };
        store(&mut y, m, pmm);
        for l in (m + 1)..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = if l >= m + 2 {
                (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt()
            } else {
                0.0
            };
            let p = a * (cos_t * p_lm1 - b * p_lm2);
            p_lm2 = p_lm1;
            p_lm1 = p;
            store(&mut y, l, p);
        }
    }
    y
}

/// Real-direction spherical harmonics at polar angle `theta`, azimuth `phi`.
pub fn ylm_real_dir(lmax: usize, theta: f64, phi: f64) -> Vec<C64> {
    ylm_table(
        lmax,
        C64::new(theta.cos(), 0.0),
        C64::new(theta.sin(), 0.0),
        C64::new(phi.cos(), phi.sin()),
    )
}

/// Spherical harmonics at a Cartesian direction `v`, which may be complex
/// with `v·v != 0` (bilinear, not Hermitian, norm). The in-plane part of `v`
/// must be real.
pub fn ylm_of_vector(lmax: usize, v: [C64; 3]) -> Vec<C64> {
    let k = crate::numeric::csqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    let rho = (v[0].re * v[0].re + v[1].re * v[1].re).sqrt();
    let eiphi = if rho > 0.0 {
        C64::new(v[0].re / rho, v[1].re / rho)
    } else {
        C64::new(1.0, 0.0)
    };
    ylm_table(lmax, v[2] / k, C64::new(rho, 0.0) / k, eiphi)
}

fn ln_fact(n: i64) -> f64 {
    debug_assert!(n >= 0);
    LN_FACT.with(|t| t[n as usize])
}

thread_local! {
    static LN_FACT: Vec<f64> = {
        let mut v = vec![0.0; 200];
        for i in 1..200 {
            v[i] = v[i - 1] + (i as f64).ln();
        }
        v
    };
}

/// Wigner 3j symbol by Racah's formula.
pub fn wigner3j(l1: i64, l2: i64, l3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || m1.abs() > l1 || m2.abs() > l2 || m3.abs() > l3 || l3 > l1 + l2 || l3 < (l1 - l2).abs() {
        return 0.0;
    }
    if m1 == 0 && m2 == 0 && m3 == 0 {
        let g = l1 + l2 + l3;
        if g % 2 == 1 {
            return 0.0;
        }
        // closed form without alternating sums
        let h = g / 2;
        let ln = 0.5 * (ln_fact(g - 2 * l1) + ln_fact(g - 2 * l2) + ln_fact(g - 2 * l3) - ln_fact(g + 1)) + ln_fact(h)
            - ln_fact(h - l1)
            - ln_fact(h - l2)
            - ln_fact(h - l3);
        let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
        return sign * ln.exp();
    }
    let ln_delta =
        0.5 * (ln_fact(l1 + l2 - l3) + ln_fact(l1 - l2 + l3) + ln_fact(-l1 + l2 + l3) - ln_fact(l1 + l2 + l3 + 1));
    let ln_pref = 0.5
        * (ln_fact(l1 + m1)
            + ln_fact(l1 - m1)
            + ln_fact(l2 + m2)
            + ln_fact(l2 - m2)
            + ln_fact(l3 + m3)
            + ln_fact(l3 - m3));
    let tmin = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
    let tmax = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
    let mut terms = Vec::with_capacity((tmax - tmin + 1).max(0) as usize);
    for t in tmin..=tmax {
        let ln_den = ln_fact(t)
            + ln_fact(l3 - l2 + t + m1)
            + ln_fact(l3 - l1 + t - m2)
            + ln_fact(l1 + l2 - l3 - t)
            + ln_fact(l1 - t - m1)
            + ln_fact(l2 - t + m2);
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(sign * (ln_delta + ln_pref - ln_den).exp());
    }
    // pairwise-ish summation ordered by magnitude reduces cancellation error
    terms.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
    let sum: f64 = terms.iter().sum();
    let sign = if (l1 - l2 - m3) % 2 == 0 { 1.0 } else { -1.0 };
    sign * sum
}

/// `∫ Y_{a1} Y_{a2} conj(Y_{a3}) dΩ`. Exact zero when a selection rule fails.
pub fn gaunt(a1: AngularIndex, a2: AngularIndex, a3: AngularIndex) -> f64 {
    let (l1, l2, l3) = (a1.l as i64, a2.l as i64, a3.l as i64);
    if a3.m != a1.m + a2.m || (l1 + l2 + l3) % 2 == 1 || l3 > l1 + l2 || l3 < (l1 - l2).abs() {
        return 0.0;
    }
    if a1.m.abs() > l1 || a2.m.abs() > l2 || a3.m.abs() > l3 {
        return 0.0;
    }
    let pref = (((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64 / (4.0 * PI)).sqrt();
    let sign = if a3.m % 2 == 0 { 1.0 } else { -1.0 };
    sign * pref * wigner3j(l1, l2, l3, 0, 0, 0) * wigner3j(l1, l2, l3, a1.m, a2.m, -a3.m)
}
