//! Lattice sums (structure constants) of a 2D-periodic plane of scatterers.
//!
//! `D_LM = Σ_{R≠0} e^{i kpar·R} h_L(k|R|) conj(Y_LM(R̂))` over the in-plane
//! lattice vectors, evaluated by Ewald splitting of the integral
//! representation `h_L(kR) ∝ R^L ∫ t^{2L} exp(-R²t² + k²/4t²) dt` at `t = η`:
//! the inner part is Poisson-summed over reciprocal vectors, the outer part
//! summed directly, and the `R = 0` term of the inner part removed. A direct
//! real-space sum is kept as an oracle for lossy hosts.
//!
//! From `D_LM` the scalar translation matrix follows:
//! `Ω_{lm,l'm'} = 4π Σ_L i^{l+L-l'} (-1)^L G(l'm', L m-m' | lm) D_{L,m-m'}`,
//! which re-expands the Bloch sum of outgoing waves `h_{l'} Y_{l'm'}` centred
//! on every other site as regular waves `j_l Y_lm` about the origin.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use errorfunctions::ComplexErrorFunctions;

use crate::error::{Error, Result};
use crate::lattice::{dot, fold_kpar, norm, reciprocal_lattice, Lattice2D, Vec2};
use crate::mie::Material;
use crate::numeric::{csqrt, ipow, is_finite, CMat, C64, I, ZERO};
use crate::specfun::{gaunt, lm_count, lm_index, sph_hankel1, ylm_table, AngularIndex};

/// How the lattice sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumMethod {
    /// Ewald splitting; `eta = None` selects the automatic parameter.
    Ewald { eta: Option<f64> },
    /// Plain real-space summation over `0 < |R| <= rmax`. Only meaningful
    /// for lossy hosts; kept as a test oracle.
    Direct { rmax: f64 },
}

impl Default for SumMethod {
    fn default() -> Self {
        SumMethod::Ewald { eta: None }
    }
}

/// Exponent below which Ewald terms are dropped (`e^{-50} ≈ 2e-22`).
const EWALD_TAIL: f64 = 50.0;

/// Default splitting parameter: `sqrt(π / A)`, raised to `|k|/4` at high
/// frequency so that `exp(k²/4η²)` stays bounded.
/// Cache-key form of a folded wavevector component; values that differ only
/// by round-off from the fold share a key.
fn snap(x: f64) -> i64 {
    (x * 1e11).round() as i64
}

pub fn default_eta(lat: &Lattice2D, k: C64) -> f64 {
    (PI / lat.cell_area()).sqrt().max(k.norm() / 4.0)
}

/// Lattice sums `D_LM`, `L <= lmax_sum`, flattened by `lm_index`.
pub fn lattice_sums(lat: &Lattice2D, k: C64, kpar: Vec2, lmax_sum: usize, method: SumMethod) -> Result<Vec<C64>> {
    if !is_finite(k) || k.norm() == 0.0 {
        return Err(Error::invalid(format!(
            "host wavenumber {k} must be finite and nonzero"
        )));
    }
    let d = match method {
        SumMethod::Direct { rmax } => direct_sums(lat, k, kpar, lmax_sum, rmax)?,
        SumMethod::Ewald { eta } => {
            let eta = eta.unwrap_or_else(|| default_eta(lat, k));
            if !(eta > 0.0) {
                return Err(Error::invalid(format!("Ewald parameter {eta} must be > 0")));
            }
            ewald_sums(lat, k, kpar, lmax_sum, eta)?
        }
    };
    if d.iter().any(|z| !is_finite(*z)) {
        return Err(Error::Convergence(format!(
            "non-finite lattice sum at k = {k}, kpar = {kpar:?}"
        )));
    }
    Ok(d)
}

/// `conj(Y_LM)` on the equator at `φ = 0`; real.
fn equator_coeffs(lmax: usize) -> Vec<f64> {
    ylm_table(lmax, ZERO, C64::new(1.0, 0.0), C64::new(1.0, 0.0))
        .iter()
        .map(|z| z.re)
        .collect()
}

fn direct_sums(lat: &Lattice2D, k: C64, kpar: Vec2, lmax: usize, rmax: f64) -> Result<Vec<C64>> {
    let c = equator_coeffs(lmax);
    let mut d = vec![ZERO; lm_count(lmax)];
    for (n1, n2, r) in lat.points_within(rmax) {
        if (n1, n2) == (0, 0) {
            continue;
        }
        let rn = norm(r);
        let phase = C64::new(0.0, dot(kpar, r)).exp();
        let h = sph_hankel1(lmax, k * rn)?;
        let phi = r[1].atan2(r[0]);
        for l in 0..=lmax {
            let hl = h[l] * phase;
            for m in -(l as i64)..=(l as i64) {
                if (l as i64 + m) % 2 != 0 {
                    continue;
                }
                let idx = lm_index(l, m);
                d[idx] += hl * c[idx] * C64::new(0.0, -(m as f64) * phi).exp();
            }
        }
    }
    Ok(d)
}

/// Continued-fraction factor `F` of `Γ(a, z) = e^{-z} z^a F(a, z)`
/// (Legendre's fraction, modified Lentz). Requires `Re z > 0`, `|z|` not small.
fn gamma_cf_fraction(a: f64, z: C64) -> C64 {
    let tiny = C64::new(1e-300, 0.0);
    let mut b = z + 1.0 - a;
    let mut c = C64::new(1.0 / 1e-300, 0.0);
    let mut dd = b.inv();
    let mut h = dd;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        dd = an * dd + b;
        if dd.norm() < 1e-300 {
            dd = tiny;
        }
        c = b + an / c;
        if c.norm() < 1e-300 {
            c = tiny;
        }
        dd = dd.inv();
        let del = dd * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h
}

/// Upper incomplete gamma `Γ(a, z)`, principal branch of `z^a`.
fn upper_gamma_cf(a: f64, z: C64) -> C64 {
    (-z + a * z.ln()).exp() * gamma_cf_fraction(a, z)
}

/// `G_p = ∫_0^η t^{2p-2} exp(-c/t²) dt` for `p = 0..=pmax`, continued
/// analytically with `sqrt(c) = -i kz / 2` (outgoing branch).
fn reciprocal_integrals(c: C64, sqrt_c: C64, eta: f64, pmax: usize) -> Result<Vec<C64>> {
    let z = c / (eta * eta);
    let mut g = vec![ZERO; pmax + 1];
    if z.re > 2.0 {
        let ez = (-z).exp();
        for (p, gp) in g.iter_mut().enumerate() {
            // G_p = ½ c^{p-½} Γ(½-p, z) = ½ η^{2p-1} e^{-z} F(½-p, z)
            *gp = 0.5 * eta.powi(2 * p as i32 - 1) * ez * gamma_cf_fraction(0.5 - p as f64, z);
        }
        return Ok(g);
    }
    if sqrt_c.norm() < 1e-12 {
        return Err(Error::Convergence(
            "beam at grazing emergence (kz = 0): lattice sum diverges (Wood anomaly)".into(),
        ));
    }
    g[0] = PI.sqrt() / (2.0 * sqrt_c) * (sqrt_c / eta).erfc();
    let ez = (-z).exp();
    for p in 1..=pmax {
        g[p] = (eta.powi(2 * p as i32 - 1) * ez - 2.0 * c * g[p - 1]) / ((2 * p - 1) as f64);
    }
    Ok(g)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `Γ(a, x)` for real `x > 0` and `a = amin + j`, `j = 0..count`, half-integer `a`.
fn upper_gamma_half_table(amin: f64, count: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    let sx = x.sqrt();
    let ex = (-x).exp();
    // Γ(1/2, x) anchors the positive orders through the stable upward recurrence
    let g_half = PI.sqrt() * erfc_real(sx);
    for (j, o) in out.iter_mut().enumerate() {
        let a = amin + j as f64;
        if a > 0.0 {
            continue;
        }
        *o = if x > 1.0 {
            upper_gamma_cf(a, C64::new(x, 0.0)).re
        } else {
            // downward from 1/2; no cancellation for small x
            let mut g = g_half;
            let mut aa = 0.5;
            while aa > a + 0.25 {
                aa -= 1.0;
                g = (g - x.powf(aa) * ex) / aa;
            }
            g
        };
    }
    let mut g = g_half;
    let mut a = 0.5;
    for (j, o) in out.iter_mut().enumerate() {
        let aj = amin + j as f64;
        if aj < 0.0 {
            continue;
        }
        while a < aj - 0.25 {
            g = a * g + x.powf(a) * ex;
            a += 1.0;
        }
        *o = g;
    }
    out
}

fn erfc_real(x: f64) -> f64 {
    use errorfunctions::RealErrorFunctions;
    RealErrorFunctions::erfc(x)
}

fn ewald_sums(lat: &Lattice2D, k: C64, kpar: Vec2, lmax: usize, eta: f64) -> Result<Vec<C64>> {
    let area = lat.cell_area();
    let ceq = equator_coeffs(lmax);
    let k2 = k * k;
    let w = k2 / 4.0;
    let mut d = vec![ZERO; lm_count(lmax)];
    // pref_L = 2^{L+1} / (i sqrt(π) k^{L+1})
    let pref: Vec<C64> = (0..=lmax)
        .map(|l| 2f64.powi(l as i32 + 1) / (I * PI.sqrt() * k.powi(l as i32 + 1)))
        .collect();

    // reciprocal-space part
    let rec = reciprocal_lattice(lat)?;
    let kmax = (k2.re.max(0.0) + 4.0 * (EWALD_TAIL + 5.0) * eta * eta).sqrt();
    let (kpar, _) = fold_kpar(lat, kpar)?;
    let gvecs = rec.points_within(kmax + norm(kpar));
    let nmax = lmax / 2;
    for (_, _, g) in gvecs {
        let kv = [kpar[0] + g[0], kpar[1] + g[1]];
        let kk = norm(kv);
        let c = (kk * kk - k2) / 4.0;
        if (c / (eta * eta)).re > EWALD_TAIL + 5.0 {
            continue;
        }
        let kz = csqrt(k2 - kk * kk);
        let sqrt_c = -I * kz / 2.0;
        let gp = reciprocal_integrals(c, sqrt_c, eta, nmax)?;
        let phi = if kk > 0.0 { kv[1].atan2(kv[0]) } else { 0.0 };
        let u = kk * kk / 4.0;
        for l in 0..=lmax {
            for m in -(l as i64)..=(l as i64) {
                if (l as i64 + m) % 2 != 0 {
                    continue;
                }
                let mu = m.unsigned_abs() as usize;
                if kk == 0.0 && mu > 0 {
                    continue;
                }
                let n = (l - mu) / 2;
                let mut s = ZERO;
                for j in 0..=n {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign * binomial(n + mu, n - j) * u.powi(j as i32) / factorial(j) * gp[n - j];
                }
                let f = ipow(mu as i64)
                    * C64::new(0.0, -(m as f64) * phi).exp()
                    * kk.powi(mu as i32)
                    * (factorial(n) / 2f64.powi(mu as i32 + 1));
                d[lm_index(l, m)] += f * s * (2.0 * PI / area) * pref[l] * ceq[lm_index(l, m)];
            }
        }
    }

    // real-space part
    let rmax = ((EWALD_TAIL + 5.0 + w.re.max(0.0) / (eta * eta)).sqrt()) / eta;
    let nser = {
        // terms (|w|/η²)^n/n! decay below 1e-18 of the leading term
        let x = w.norm() / (eta * eta);
        let mut n = 0usize;
        let mut t = 1.0;
        while n < 400 && (n as f64 <= x || t > 1e-18) {
            n += 1;
            t *= x / n as f64;
        }
        n + 2
    };
    for (n1, n2, r) in lat.points_within(rmax) {
        if (n1, n2) == (0, 0) {
            continue;
        }
        let rn = norm(r);
        let x = rn * rn * eta * eta;
        // Γ(L - n + 1/2, x) for n = 0..nser and L = 0..=lmax
        let amin = -(nser as f64) + 0.5;
        let count = nser + lmax + 1;
        let gam = upper_gamma_half_table(amin, count, x);
        let phase = C64::new(0.0, dot(kpar, r)).exp();
        let phi = r[1].atan2(r[0]);
        for l in 0..=lmax {
            // I_L(R) = Σ_n w^n/n! ½ R^{-(2L-2n+1)} Γ(L-n+½, R²η²)
            let mut integral = ZERO;
            let mut wn = C64::new(1.0, 0.0);
            for n in 0..nser {
                if n > 0 {
                    wn *= w / n as f64;
                }
                let a_idx = (l as i64 - n as i64 + nser as i64) as usize; // a = L-n+½
                let term = wn * 0.5 * rn.powi(-(2 * l as i32 - 2 * n as i32 + 1)) * gam[a_idx];
                integral += term;
            }
            let base = pref[l] * phase * rn.powi(l as i32) * integral;
            for m in -(l as i64)..=(l as i64) {
                if (l as i64 + m) % 2 != 0 {
                    continue;
                }
                let idx = lm_index(l, m);
                d[idx] += base * ceq[idx] * C64::new(0.0, -(m as f64) * phi).exp();
            }
        }
    }

    // remove the R = 0 term carried by the reciprocal sum (L = 0 only)
    let mut series = ZERO;
    let mut wn = C64::new(1.0, 0.0);
    for n in 0..nser.max(4) {
        if n > 0 {
            wn *= w / n as f64;
        }
        series += wn * eta.powi(1 - 2 * n as i32) / ((2 * n) as f64 - 1.0);
    }
    let phi0 = I * k - 2.0 / PI.sqrt() * series;
    d[0] -= phi0 / (I * k * (4.0 * PI).sqrt());
    Ok(d)
}

/// Gaunt coefficients needed by the translation matrix, cached per `lmax`.
struct GauntTable {
    lmax: usize,
    /// For each `(lm, l'm')` pair, the nonzero `(L, value)` list with
    /// `M = m - m'` in `G(l'm', LM | lm)`.
    entries: Vec<Vec<(usize, f64)>>,
}

fn gaunt_table(lmax: usize) -> Arc<GauntTable> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<GauntTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = cache.read().unwrap().get(&lmax) {
        return t.clone();
    }
    let n = lm_count(lmax);
    let mut entries = vec![Vec::new(); n * n];
    for i in 0..n {
        let (l, m) = crate::specfun::lm_from_index(i);
        for j in 0..n {
            let (lp, mp) = crate::specfun::lm_from_index(j);
            let mm = m - mp;
            let lo = (l as i64 - lp as i64).unsigned_abs() as usize;
            for big_l in lo..=(l + lp) {
                if (l + lp + big_l) % 2 != 0 || mm.unsigned_abs() as usize > big_l {
                    continue;
                }
                let g = gaunt(
                    AngularIndex { l: lp, m: mp },
                    AngularIndex { l: big_l, m: mm },
                    AngularIndex { l, m },
                );
                if g != 0.0 {
                    entries[i * n + j].push((big_l, g));
                }
            }
        }
    }
    let t = Arc::new(GauntTable { lmax, entries });
    cache.write().unwrap().insert(lmax, t.clone());
    t
}

/// Scalar translation matrix `Ω_{lm,l'm'}` for `l, l' <= lmax` from lattice
/// sums holding orders up to `2 lmax`.
pub fn translation_matrix(dlm: &[C64], lmax: usize) -> CMat {
    let table = gaunt_table(lmax);
    debug_assert_eq!(table.lmax, lmax);
    let n = lm_count(lmax);
    assert!(dlm.len() >= lm_count(2 * lmax), "lattice sums truncated too early");
    let mut om = CMat::zeros(n, n);
    for i in 0..n {
        let (l, m) = crate::specfun::lm_from_index(i);
        for j in 0..n {
            let (lp, mp) = crate::specfun::lm_from_index(j);
            let mut s = ZERO;
            for &(big_l, g) in &table.entries[i * n + j] {
                let sign = if big_l % 2 == 0 { 1.0 } else { -1.0 };
                s += ipow(l as i64 + big_l as i64 - lp as i64) * (sign * g) * dlm[lm_index(big_l, m - mp)];
            }
            om[(i, j)] = 4.0 * PI * s;
        }
    }
    om
}

/// Structure constants of one plane at fixed `(ω, kpar, host)`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    pub omega: f64,
    /// Folded Bloch vector the sums were evaluated at.
    pub kpar: Vec2,
    pub host: Material,
    /// Vector-multipole order the constants serve.
    pub lmax: usize,
    /// Lattice sums `D_LM` for `L <= 2 (lmax + 1)`.
    pub dlm: Vec<C64>,
    /// Scalar translation matrix for `l, l' <= lmax + 1`.
    pub omega_scalar: CMat,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    omega: u64,
    kpar: [i64; 2],
    lmax: usize,
    lattice: [u64; 4],
    eps: [u64; 2],
    method: [u64; 2],
}

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<StructureConstants>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<StructureConstants>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

const CACHE_LIMIT: usize = 4096;

/// Structure constants, memoised per `(ω, folded kpar, lmax, lattice, host,
/// method)`.
pub fn structure_constants(
    lat: &Lattice2D,
    omega: f64,
    kpar: Vec2,
    host: &Material,
    lmax: usize,
    method: SumMethod,
) -> Result<Arc<StructureConstants>> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega = {omega} must be > 0")));
    }
    let (folded, _) = fold_kpar(lat, kpar)?;
    let (mtag, mval) = match method {
        SumMethod::Ewald { eta } => (0, eta.unwrap_or(0.0)),
        SumMethod::Direct { rmax } => (1, rmax),
    };
    let key = CacheKey {
        omega: omega.to_bits(),
        kpar: [snap(folded[0]), snap(folded[1])],
        lmax,
        lattice: [
            lat.a1[0].to_bits(),
            lat.a1[1].to_bits(),
            lat.a2[0].to_bits(),
            lat.a2[1].to_bits(),
        ],
        eps: [host.eps.re.to_bits(), host.eps.im.to_bits()],
        method: [mtag, mval.to_bits()],
    };
    if let Some(sc) = cache().read().unwrap().get(&key) {
        return Ok(sc.clone());
    }
    let k = host.wavenumber(omega);
    let ls = lmax + 1;
    let dlm = lattice_sums(lat, k, folded, 2 * ls, method)?;
    let omega_scalar = translation_matrix(&dlm, ls);
    let sc = Arc::new(StructureConstants {
        omega,
        kpar: folded,
        host: *host,
        lmax,
        dlm,
        omega_scalar,
    });
    let mut w = cache().write().unwrap();
    if w.len() >= CACHE_LIMIT {
        w.clear();
    }
    w.insert(key, sc.clone());
    Ok(sc)
}


#[cfg(test)]
mod field_checks {
    use super::*;
    use crate::specfun::{sph_bessel, ylm_real_dir};
    use crate::vswf::outgoing_to_plane_wave;

    fn outgoing_scalar(ls: usize, k: C64, r: [f64; 3]) -> Vec<C64> {
        let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let h = sph_hankel1(ls, k * rn).unwrap();
        let y = ylm_real_dir(ls, (r[2] / rn).acos(), r[1].atan2(r[0]));
        (0..lm_count(ls))
            .map(|i| h[crate::specfun::lm_from_index(i).0] * y[i])
            .collect()
    }

    #[test]
    fn translation_reproduces_bloch_field() {
        let lat = Lattice2D::hexagonal(1.0);
        let k = csqrt(C64::new(2.0, 1.5)) * 2.0;
        let q = [0.4, -0.3];
        // sources up to order 4, regular expansion carried to order 12
        let (ls, lx) = (4, 12);
        let d = lattice_sums(&lat, k, q, 2 * lx, SumMethod::Ewald { eta: None }).unwrap();
        let om = translation_matrix(&d, lx);
        let r: [f64; 3] = [0.04, -0.03, 0.05];
        let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let j = sph_bessel(lx, k * rn).unwrap();
        let y = ylm_real_dir(lx, (r[2] / rn).acos(), r[1].atan2(r[0]));
        let n = lm_count(ls);
        let mut direct = vec![ZERO; n];
        for (_, _, p) in lat.points_within(40.0) {
            if norm(p) == 0.0 {
                continue;
            }
            let ph = (I * dot(q, p)).exp();
            let f = outgoing_scalar(ls, k, [r[0] - p[0], r[1] - p[1], r[2]]);
            for i in 0..n {
                direct[i] += ph * f[i];
            }
        }
        for jp in 0..n {
            let mut s = ZERO;
            for i in 0..lm_count(lx) {
                s += om[(i, jp)] * j[crate::specfun::lm_from_index(i).0] * y[i];
            }
            assert!(
                (s - direct[jp]).norm() < 1e-9 * direct[jp].norm().max(1e-3),
                "{jp} {s} {}",
                direct[jp]
            );
        }
    }

    #[test]
    fn bloch_sum_becomes_plane_waves() {
        let lat = Lattice2D::square(1.0);
        let k = csqrt(C64::new(1.0, 1.0)) * 1.5;
        let q = [0.3, 0.2];
        let ls = 3;
        let n = lm_count(ls);
        let r = [0.2, 0.1, 0.7];
        // one Cartesian component carrying every (l, m) with distinct weights
        let coef: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + i as f64 * 0.1, 0.3 - 0.05 * i as f64))
            .collect();
        let mut direct = ZERO;
        for (_, _, p) in lat.points_within(45.0) {
            let ph = (I * dot(q, p)).exp();
            let f = outgoing_scalar(ls, k, [r[0] - p[0], r[1] - p[1], r[2]]);
            for i in 0..n {
                direct += ph * coef[i] * f[i];
            }
        }
        let mut cart = vec![ZERO; 3 * n];
        cart[..n].copy_from_slice(&coef);
        let mut sum = ZERO;
        for g in reciprocal_lattice(&lat).unwrap().points_within(60.0) {
            let kp = [q[0] + g.2[0], q[1] + g.2[1]];
            let kz = csqrt(k * k - dot(kp, kp));
            let kv = [C64::new(kp[0], 0.0), C64::new(kp[1], 0.0), kz];
            let v = outgoing_to_plane_wave(&cart, ls, kv, k, kz, lat.cell_area());
            sum += v[0] * (I * (kp[0] * r[0] + kp[1] * r[1] + kz * r[2])).exp();
        }
        assert!((sum - direct).norm() < 1e-6 * direct.norm(), "{sum} {direct}");
    }
}
