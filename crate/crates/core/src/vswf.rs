//! Vector spherical waves in Cartesian-component form.
//!
//! A vector field is written `F = Σ_c ê_c Σ_{lm} C_{c,lm} f_l(kr) Y_lm(r̂)`
//! with `c ∈ {x, y, z}` and `f_l` a spherical Bessel-type function. The
//! multipoles `M_lm = f_l X_lm`, `X_lm = L Y_lm / sqrt(l(l+1))`, and
//! `N_lm = ∇×M_lm / k` have fixed coefficients in this form, independent of
//! `k` and identical for regular (`j_l`) and outgoing (`h_l`) waves. Since
//! Cartesian unit vectors do not rotate under translation, translating a
//! vector wave is the scalar translation applied to each component.
//!
//! Vector coefficients are ordered `(type, l, m)`: type 0 = `M`
//! (magnetic), 1 = `N` (electric); within a type by `lm_index(l, m) - 1`,
//! `l = 1..=lmax`.

use std::f64::consts::PI;

use crate::numeric::{ipow, CMat, C64, ZERO};
use crate::specfun::{lm_count, lm_from_index, lm_index, ylm_of_vector};

/// Number of `(l, m)` pairs with `1 <= l <= lmax`.
pub fn multipole_count(lmax: usize) -> usize {
    lm_count(lmax) - 1
}

/// Index of `(type, l, m)` in a vector coefficient array.
pub fn vindex(kind: usize, l: usize, m: i64, lmax: usize) -> usize {
    kind * multipole_count(lmax) + lm_index(l, m) - 1
}

/// Scalar coefficient vector over `(l, m)`, `l <= ls`.
type Scalar = Vec<C64>;

fn ladder_up(l: usize, m: i64) -> f64 {
    let (l, m) = (l as f64, m as f64);
    ((l - m) * (l + m + 1.0)).max(0.0).sqrt()
}

fn ladder_down(l: usize, m: i64) -> f64 {
    let (l, m) = (l as f64, m as f64);
    ((l + m) * (l - m + 1.0)).max(0.0).sqrt()
}

fn add(s: &mut Scalar, ls: usize, l: i64, m: i64, v: C64) {
    if l < 0 || m.abs() > l || l as usize > ls {
        return;
    }
    s[lm_index(l as usize, m)] += v;
}

/// `cos θ Y_lm`, `sin θ e^{±iφ} Y_lm` expansions (Condon–Shortley phase).
fn cos_coeffs(l: usize, m: i64) -> (f64, f64) {
    let (lf, mf) = (l as f64, m as f64);
    let up = (((lf + 1.0).powi(2) - mf * mf) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt();
    let down = if l == 0 {
        0.0
    } else {
        ((lf * lf - mf * mf) / ((2.0 * lf - 1.0) * (2.0 * lf + 1.0)))
            .max(0.0)
            .sqrt()
    };
    (up, down)
}

fn sin_plus_coeffs(l: usize, m: i64) -> (f64, f64) {
    let (lf, mf) = (l as f64, m as f64);
    let up = -(((lf + mf + 1.0) * (lf + mf + 2.0)) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt();
    let down = if l == 0 {
        0.0
    } else {
        (((lf - mf) * (lf - mf - 1.0)) / ((2.0 * lf - 1.0) * (2.0 * lf + 1.0)))
            .max(0.0)
            .sqrt()
    };
    (up, down)
}

fn sin_minus_coeffs(l: usize, m: i64) -> (f64, f64) {
    let (lf, mf) = (l as f64, m as f64);
    let up = (((lf - mf + 1.0) * (lf - mf + 2.0)) / ((2.0 * lf + 1.0) * (2.0 * lf + 3.0))).sqrt();
    let down = if l == 0 {
        0.0
    } else {
        -(((lf + mf) * (lf + mf - 1.0)) / ((2.0 * lf - 1.0) * (2.0 * lf + 1.0)))
            .max(0.0)
            .sqrt()
    };
    (up, down)
}

/// `∂_z / k` applied to `f_l Y_lm` combinations.
fn dz(s: &Scalar, ls: usize) -> Scalar {
    let mut out = vec![ZERO; s.len()];
    for (i, &v) in s.iter().enumerate() {
        if v == ZERO {
            continue;
        }
        let (l, m) = lm_from_index(i);
        let (up, down) = cos_coeffs(l, m);
        add(&mut out, ls, l as i64 + 1, m, -up * v);
        add(&mut out, ls, l as i64 - 1, m, down * v);
    }
    out
}

/// `(∂_x ± i ∂_y) / k` applied to `f_l Y_lm` combinations.
fn dpm(s: &Scalar, ls: usize, plus: bool) -> Scalar {
    let mut out = vec![ZERO; s.len()];
    for (i, &v) in s.iter().enumerate() {
        if v == ZERO {
            continue;
        }
        let (l, m) = lm_from_index(i);
        let (up, down, dm) = if plus {
            let (u, d) = sin_plus_coeffs(l, m);
            (u, d, 1)
        } else {
            let (u, d) = sin_minus_coeffs(l, m);
            (u, d, -1)
        };
        add(&mut out, ls, l as i64 + 1, m + dm, -up * v);
        add(&mut out, ls, l as i64 - 1, m + dm, down * v);
    }
    out
}

fn combine(a: &Scalar, ca: C64, b: &Scalar, cb: C64) -> Scalar {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// Cartesian components of `M_lm` (orders `l`) over scalar orders `<= ls`.
fn m_components(l: usize, m: i64, ls: usize) -> [Scalar; 3] {
    let n = lm_count(ls);
    let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
    let mut x = vec![ZERO; n];
    let mut y = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    let up = ladder_up(l, m);
    let down = ladder_down(l, m);
    let half = C64::new(0.5 * norm, 0.0);
    let half_over_i = C64::new(0.0, -0.5 * norm);
    add(&mut x, ls, l as i64, m + 1, half * up);
    add(&mut x, ls, l as i64, m - 1, half * down);
    add(&mut y, ls, l as i64, m + 1, half_over_i * up);
    add(&mut y, ls, l as i64, m - 1, -half_over_i * down);
    add(&mut z, ls, l as i64, m, C64::new(m as f64 * norm, 0.0));
    [x, y, z]
}

/// Curl divided by `k` of a Cartesian-component field.
fn curl(f: &[Scalar; 3], ls: usize) -> [Scalar; 3] {
    let i = C64::new(0.0, 1.0);
    let half = C64::new(0.5, 0.0);
    // ∂_x = (∂_+ + ∂_-)/2, ∂_y = (∂_+ - ∂_-)/(2i)
    let d = |s: &Scalar| -> (Scalar, Scalar, Scalar) {
        let p = dpm(s, ls, true);
        let mi = dpm(s, ls, false);
        let dx = combine(&p, half, &mi, half);
        let dy = combine(&p, -half * i, &mi, half * i);
        (dx, dy, dz(s, ls))
    };
    let (_, fx_y, fx_z) = d(&f[0]);
    let (fy_x, _, fy_z) = d(&f[1]);
    let (fz_x, fz_y, _) = d(&f[2]);
    let one = C64::new(1.0, 0.0);
    [
        combine(&fz_y, one, &fy_z, -one),
        combine(&fx_z, one, &fz_x, -one),
        combine(&fy_x, one, &fx_y, -one),
    ]
}

/// Matrix mapping vector coefficients (`l <= lmax`) to Cartesian scalar
/// coefficients over orders `<= lmax + 1`; rows `c * lm_count(lmax+1) + lm`.
pub fn cartesian_matrix(lmax: usize) -> CMat {
    let ls = lmax + 1;
    let ns = lm_count(ls);
    let nv = multipole_count(lmax);
    let mut c = CMat::zeros(3 * ns, 2 * nv);
    for l in 1..=lmax {
        for m in -(l as i64)..=(l as i64) {
            let mc = m_components(l, m, ls);
            let nc = curl(&mc, ls);
            for comp in 0..3 {
                for j in 0..ns {
                    c[(comp * ns + j, vindex(0, l, m, lmax))] = mc[comp][j];
                    c[(comp * ns + j, vindex(1, l, m, lmax))] = nc[comp][j];
                }
            }
        }
    }
    c
}

/// Matrix extracting vector coefficients (`l <= lmax`) from the Cartesian
/// scalar coefficients (over orders `<= lmax + 1`) of a regular,
/// divergence-free field.
///
/// `M_lm` is read from the tangential projection onto `X_lm` (same order
/// `l`); `N_lm` from the projection of `r̂·F` onto `Y_lm`, using only the
/// order `l - 1` components. Both functionals are normalised against the
/// multipoles themselves.
pub fn projection_matrix(lmax: usize) -> CMat {
    let ls = lmax + 1;
    let ns = lm_count(ls);
    let nv = multipole_count(lmax);
    let cm = cartesian_matrix(lmax);
    let mut p = CMat::zeros(2 * nv, 3 * ns);
    let i = C64::new(0.0, 1.0);
    for l in 1..=lmax {
        for m in -(l as i64)..=(l as i64) {
            // tangential functional: conj of X_lm components at order l
            let mc = m_components(l, m, ls);
            let row_m = vindex(0, l, m, lmax);
            for comp in 0..3 {
                for j in 0..ns {
                    let (lj, _) = lm_from_index(j);
                    if lj == l {
                        p[(row_m, comp * ns + j)] = mc[comp][j].conj();
                    }
                }
            }
            // radial functional restricted to order l-1 inputs:
            // (x/r, y/r, z/r) = ((s+ + s-)/2, (s+ - s-)/(2i), cos)
            let row_n = vindex(1, l, m, lmax);
            for lp in [l - 1] {
                for mp in -(lp as i64)..=(lp as i64) {
                    let j = lm_index(lp, mp);
                    // coefficient of Y_lm in (x_c / r) Y_{lp,mp}
                    let (cu, _) = cos_coeffs(lp, mp);
                    let (spu, _) = sin_plus_coeffs(lp, mp);
                    let (smu, _) = sin_minus_coeffs(lp, mp);
                    let zc = if mp == m { cu } else { 0.0 };
                    let sp = if mp + 1 == m { spu } else { 0.0 };
                    let sm = if mp - 1 == m { smu } else { 0.0 };
                    let xc = C64::new(0.5 * (sp + sm), 0.0);
                    let yc = (sp - sm) / (2.0 * i);
                    p[(row_n, j)] += xc;
                    p[(row_n, ns + j)] += yc;
                    p[(row_n, 2 * ns + j)] += C64::new(zc, 0.0);
                }
            }
        }
    }
    // normalise each functional on its own multipole
    for k in 0..2 * nv {
        let mut s = ZERO;
        for j in 0..3 * ns {
            s += p[(k, j)] * cm[(j, k)];
        }
        for j in 0..3 * ns {
            p[(k, j)] /= s;
        }
    }
    p
}

/// Cartesian scalar coefficients (orders `<= ls`) of the regular expansion
/// of `pol · e^{iK·r}`, `K·K = k²` (bilinear; `K` may be complex).
pub fn plane_wave_cartesian(kvec: [C64; 3], pol: [C64; 3], ls: usize) -> Vec<C64> {
    let ns = lm_count(ls);
    let y = ylm_of_vector(ls, kvec);
    let mut out = vec![ZERO; 3 * ns];
    for j in 0..ns {
        let (l, m) = lm_from_index(j);
        // analytic conj(Y_lm(K̂)) = (-1)^m Y_{l,-m}(K̂)
        let ystar = y[lm_index(l, -m)] * if m % 2 == 0 { 1.0 } else { -1.0 };
        let s = 4.0 * PI * ipow(l as i64) * ystar;
        for c in 0..3 {
            out[c * ns + j] = pol[c] * s;
        }
    }
    out
}

/// Plane-wave amplitude vector of the Bloch sum of outgoing Cartesian-scalar
/// waves, `Σ_R e^{iq·R} F(r - R)`, in the beam `e^{iK·r}`:
/// `(2π / (A k kz)) Σ_c ê_c Σ_{lm} C_{c,lm} (-i)^l Y_lm(K̂)`.
pub fn outgoing_to_plane_wave(cart: &[C64], ls: usize, kvec: [C64; 3], k: C64, kz: C64, area: f64) -> [C64; 3] {
    let ns = lm_count(ls);
    let y = ylm_of_vector(ls, kvec);
    let mut v = [ZERO; 3];
    for j in 0..ns {
        let (l, _) = lm_from_index(j);
        let f = ipow(-(l as i64)) * y[j];
        for c in 0..3 {
            v[c] += cart[c * ns + j] * f;
        }
    }
    let pref = 2.0 * PI / (area * k * kz);
    [v[0] * pref, v[1] * pref, v[2] * pref]
}
