//! Reference implementations shared by the integration tests. None of them
//! calls into the library's special functions.

#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// Riccati–Bessel `ψ_n(z) = z j_n(z)` for `n = 0..=nmax` by Miller's
/// downward recurrence, normalised against the closed form of `ψ_0` or `ψ_1`.
pub fn riccati_psi(nmax: usize, z: C64) -> Vec<C64> {
    let start = nmax + 30 + (z.norm() as usize) * 2;
    let mut j = vec![C64::new(0.0, 0.0); start + 2];
    j[start + 1] = C64::new(0.0, 0.0);
    j[start] = C64::new(1e-30, 0.0);
    for n in (1..=start).rev() {
        j[n - 1] = (2 * n + 1) as f64 / z * j[n] - j[n + 1];
        if j[n - 1].norm() > 1e250 {
            for v in j.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let j0 = z.sin() / z;
    let j1 = z.sin() / (z * z) - z.cos() / z;
    let scale = if j0.norm() > j1.norm() { j0 / j[0] } else { j1 / j[1] };
    (0..=nmax).map(|n| z * j[n] * scale).collect()
}

/// `ξ_n(z) = z h⁽¹⁾_n(z)` by upward recurrence from the closed forms.
pub fn riccati_xi(nmax: usize, z: C64) -> Vec<C64> {
    let i = C64::new(0.0, 1.0);
    let e = (i * z).exp();
    let mut h = vec![-i * e / z, -e * (z + i) / (z * z)];
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / z * h[n] - h[n - 1];
        h.push(next);
    }
    h.truncate(nmax + 1);
    h.iter().map(|v| z * v).collect()
}

/// Logarithmic derivative `ψ_n'(z)/ψ_n(z)` by downward recurrence.
pub fn log_derivative(nmax: usize, z: C64) -> Vec<C64> {
    let start = nmax + 30 + (z.norm() as usize) * 2;
    let mut d = C64::new(0.0, 0.0);
    let mut out = vec![C64::new(0.0, 0.0); nmax + 1];
    for n in (1..=start).rev() {
        let nz = n as f64 / z;
        if n <= nmax {
            out[n] = d;
        }
        d = nz - 1.0 / (d + nz);
    }
    out[0] = d;
    out
}

/// Scattering coefficients `(a_n, b_n)` of the textbook series for a sphere
/// of relative index `m = n_in / n_host` at size parameter `x = n_host k0 r`.
pub fn mie_ab(m: C64, x: C64, nmax: usize) -> (Vec<C64>, Vec<C64>) {
    let psi = riccati_psi(nmax, x);
    let xi = riccati_xi(nmax, x);
    let d = log_derivative(nmax, m * x);
    let mut a = vec![C64::new(0.0, 0.0); nmax + 1];
    let mut b = a.clone();
    for n in 1..=nmax {
        let nx = n as f64 / x;
        let ta = d[n] / m + nx;
        let tb = d[n] * m + nx;
        a[n] = (ta * psi[n] - psi[n - 1]) / (ta * xi[n] - xi[n - 1]);
        b[n] = (tb * psi[n] - psi[n - 1]) / (tb * xi[n] - xi[n - 1]);
    }
    (a, b)
}

/// Extinction and scattering efficiencies for a real size parameter.
pub fn mie_q(m: C64, x: f64) -> (f64, f64) {
    let nmax = (x + 4.0 * x.cbrt() + 2.0).ceil() as usize;
    let (a, b) = mie_ab(m, C64::new(x, 0.0), nmax);
    let mut ext = 0.0;
    let mut sca = 0.0;
    for n in 1..=nmax {
        let w = (2 * n + 1) as f64;
        ext += w * (a[n] + b[n]).re;
        sca += w * (a[n].norm_sqr() + b[n].norm_sqr());
    }
    (2.0 * ext / (x * x), 2.0 * sca / (x * x))
}

/// Roots of `f` on `[lo, hi]` found by scanning `n` cells and bisecting
/// each sign change to machine precision.
pub fn roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let h = (hi - lo) / n as f64;
    for i in 0..n {
        let (mut a, mut b) = (lo + i as f64 * h, lo + (i + 1) as f64 * h);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            out.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        let sa = fa.signum();
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if f(mid).signum() == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Polynomial extrapolation through `(x, y)` evaluated at `at`.
pub fn neville(x: &[f64], y: &[C64], at: f64) -> C64 {
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = ((at - x[i + m]) * p[i] + (x[i] - at) * p[i + 1]) / (x[i] - x[i + m]);
        }
    }
    p[0]
}

/// Peak of `x³/(eˣ - 1)`: root of `3(1 - e^{-x}) = x` by bisection.
pub fn planck_peak_bisection() -> f64 {
    let f = |x: f64| 3.0 * (1.0 - (-x).exp()) - x;
    let (mut a, mut b) = (1.0, 5.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
