//! Scattering matrices of single layers in the plane-wave basis of a
//! [`BeamSet`].
//!
//! Basis index `2 g + p`: beam `g` major, polarization `p` minor (0 = s,
//! 1 = p). Amplitudes are flux-normalised: a plane wave with electric field
//! `a ê e^{iK·r}` has amplitude `α = a sqrt(kz)`. The unit vectors are
//! `ê_s = ẑ × K̂∥` (the lattice y axis when `K∥ = 0`) and
//! `ê_p = (cos θ cos φ, cos θ sin φ, -sin θ)` with `cos θ = ±kz/k`; both are
//! continued analytically for complex `k` and `kz`.
//!
//! Every layer has a left and a right reference plane. `tpp` maps waves
//! entering from the left to waves leaving on the right, `rpm` entering from
//! the left to leaving on the left, `rmp` entering from the right to leaving
//! on the right, `tmm` entering from the right to leaving on the left.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{norm, BeamSet, Lattice2D, Vec2};
use crate::mie::{mie_t, Material, SphereScatterer};
use crate::numeric::{csqrt, ipow, is_finite, matmul, CMat, Lu, C64, I, ONE, ZERO};
use crate::specfun::{lm_count, lm_from_index, ylm_of_vector};
use crate::structure::StructureConstants;
use crate::vswf::{cartesian_matrix, multipole_count, plane_wave_cartesian, projection_matrix};

#[derive(Debug, Clone)]
pub struct LayerS {
    pub beams: Arc<BeamSet>,
    pub left: Material,
    pub right: Material,
    /// Distance between the reference planes.
    pub thickness: f64,
    pub tpp: CMat,
    pub rpm: CMat,
    pub rmp: CMat,
    pub tmm: CMat,
}

impl LayerS {
    /// Zero-thickness layer in a single medium.
    pub fn identity(beams: Arc<BeamSet>, medium: Material) -> LayerS {
        let n = 2 * beams.len();
        LayerS {
            beams,
            left: medium,
            right: medium,
            thickness: 0.0,
            tpp: CMat::identity(n, n),
            rpm: CMat::zeros(n, n),
            rmp: CMat::zeros(n, n),
            tmm: CMat::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.tpp.nrows()
    }

    /// Full S-matrix mapping (left incoming, right incoming) to
    /// (left outgoing, right outgoing).
    pub fn full(&self) -> CMat {
        let n = self.dim();
        let mut s = CMat::zeros(2 * n, 2 * n);
        s.view_mut((0, 0), (n, n)).copy_from(&self.rpm);
        s.view_mut((0, n), (n, n)).copy_from(&self.tmm);
        s.view_mut((n, 0), (n, n)).copy_from(&self.tpp);
        s.view_mut((n, n), (n, n)).copy_from(&self.rmp);
        s
    }

    /// Largest deviation of `S^H S` from the identity on the propagating
    /// channels of both ambients.
    pub fn flux_defect(&self) -> f64 {
        let n = self.dim();
        let pl = self.beams.propagating(&self.left);
        let pr = self.beams.propagating(&self.right);
        let mut idx = Vec::new();
        for (g, &p) in pl.iter().enumerate() {
            if p {
                idx.push(2 * g);
                idx.push(2 * g + 1);
            }
        }
        for (g, &p) in pr.iter().enumerate() {
            if p {
                idx.push(n + 2 * g);
                idx.push(n + 2 * g + 1);
            }
        }
        let s = self.full();
        let mut worst: f64 = 0.0;
        for &a in &idx {
            for &b in &idx {
                let mut v = ZERO;
                for &c in &idx {
                    v += s[(c, a)].conj() * s[(c, b)];
                }
                let e = if a == b { ONE } else { ZERO };
                worst = worst.max((v - e).norm());
            }
        }
        worst
    }

    /// The same layer translated in-plane by `offset`: outgoing beams pick up
    /// `e^{-iK_g·s}`, incoming beams `e^{iK_g'·s}`.
    pub fn with_offset(&self, offset: Vec2) -> LayerS {
        let shift: Vec<C64> = self
            .beams
            .beams
            .iter()
            .map(|b| (I * (b.k[0] * offset[0] + b.k[1] * offset[1])).exp())
            .collect();
        let mut out = self.clone();
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let f = shift[j / 2] / shift[i / 2];
                out.tpp[(i, j)] *= f;
                out.rpm[(i, j)] *= f;
                out.rmp[(i, j)] *= f;
                out.tmm[(i, j)] *= f;
            }
        }
        out
    }

    fn check_finite(&self, what: &str) -> Result<()> {
        for m in [&self.tpp, &self.rpm, &self.rmp, &self.tmm] {
            if !m.iter().all(|z| is_finite(*z)) {
                return Err(Error::Internal(format!("non-finite entry in {what} S-matrix")));
            }
        }
        Ok(())
    }
}

/// Unit polarization vectors `(ê_s, ê_p)` and wavevector of a beam
/// travelling in direction `dir = ±1`.
pub fn polarization_vectors(kpar: Vec2, kz: C64, k: C64, dir: f64) -> ([C64; 3], [C64; 3], [C64; 3]) {
    let rho = norm(kpar);
    let (c, s) = if rho > 0.0 {
        (kpar[0] / rho, kpar[1] / rho)
    } else {
        (1.0, 0.0)
    };
    let cos_t = kz * dir / k;
    let sin_t = C64::new(rho, 0.0) / k;
    let es = [C64::new(-s, 0.0), C64::new(c, 0.0), ZERO];
    let ep = [cos_t * c, cos_t * s, -sin_t];
    let kv = [C64::new(kpar[0], 0.0), C64::new(kpar[1], 0.0), kz * dir];
    (es, ep, kv)
}

/// A 2D-periodic plane of identical spheres centred at `offset` within the
/// unit cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneOfSpheres {
    pub lattice: Lattice2D,
    pub sphere: SphereScatterer,
    pub offset: Vec2,
}

impl PlaneOfSpheres {
    pub fn new(lattice: Lattice2D, sphere: SphereScatterer, offset: Vec2) -> Result<Self> {
        if 2.0 * sphere.radius >= lattice.min_distance() {
            return Err(Error::invalid(format!(
                "sphere diameter {} overlaps in-plane neighbours at distance {}",
                2.0 * sphere.radius,
                lattice.min_distance()
            )));
        }
        Ok(PlaneOfSpheres {
            lattice,
            sphere,
            offset,
        })
    }
}

/// S-matrix of a sphere plane with reference planes `left` below and `right`
/// above the sphere centres.
pub fn sphere_plane_smatrix(
    plane: &PlaneOfSpheres,
    sc: &StructureConstants,
    beams: &Arc<BeamSet>,
    lmax: usize,
    left: f64,
    right: f64,
    min_rcond: f64,
) -> Result<LayerS> {
    let host = plane.sphere.host;
    let omega = beams.omega;
    if sc.omega != omega
        || (sc.kpar[0] - beams.kpar[0]).hypot(sc.kpar[1] - beams.kpar[1]) > 1e-9 * (1.0 + norm(beams.kpar))
        || sc.host != host
        || sc.lmax != lmax
    {
        return Err(Error::invalid(
            "structure constants and beam set were computed at different (omega, kpar, host, lmax)",
        ));
    }
    if !(left >= 0.0 && right >= 0.0) {
        return Err(Error::invalid("reference-plane distances must be >= 0"));
    }
    let nb = beams.len();
    let n = 2 * nb;
    let k = host.wavenumber(omega);
    let kz = beams.kz(&host);
    if let Some(g) = kz.iter().position(|z| z.norm() < 1e-12) {
        return Err(Error::SingularArgument(format!(
            "beam {:?} grazes the plane (kz = 0) at omega = {omega}",
            beams.beams[g].n
        )));
    }
    let t = mie_t(&plane.sphere, omega, lmax)?;
    let nv = multipole_count(lmax);
    let ls = lmax + 1;
    let ns = lm_count(ls);
    let cm = cartesian_matrix(lmax);
    let pm = projection_matrix(lmax);

    // vector translation: each Cartesian component is translated as a scalar
    let mut g_cart = CMat::zeros(3 * ns, 2 * nv);
    for c in 0..3 {
        let block = cm.rows(c * ns, ns).into_owned();
        g_cart.rows_mut(c * ns, ns).copy_from(&matmul(&sc.omega_scalar, &block));
    }
    let omega_v = matmul(&pm, &g_cart);
    let mut tdiag = vec![ZERO; 2 * nv];
    for i in 0..nv {
        let (l, _) = lm_from_index(i + 1);
        tdiag[i] = t.magnetic[l];
        tdiag[nv + i] = t.electric[l];
    }
    let mut a = -omega_v;
    for i in 0..2 * nv {
        for j in 0..2 * nv {
            a[(i, j)] *= tdiag[i];
        }
        a[(i, i)] += ONE;
    }
    let lu = Lu::new(&a, min_rcond, "sphere plane (I - T Omega)")?;

    // incoming plane waves, columns [dir +: 0..n, dir -: n..2n]
    let mut pw = CMat::zeros(3 * ns, 2 * n);
    let mut wout = CMat::zeros(2 * n, 3 * ns);
    let area = plane.lattice.cell_area();
    for (d, dir) in [1.0, -1.0].into_iter().enumerate() {
        for (g, beam) in beams.beams.iter().enumerate() {
            let (es, ep, kv) = polarization_vectors(beam.k, kz[g], k, dir);
            let sq = csqrt(kz[g]);
            let y = ylm_of_vector(ls, kv);
            let pref = 2.0 * PI / (area * k * kz[g]) * sq;
            for (p, e) in [es, ep].into_iter().enumerate() {
                let col = d * n + 2 * g + p;
                let cart = plane_wave_cartesian(kv, e, ls);
                for (r, v) in cart.into_iter().enumerate() {
                    pw[(r, col)] = v / sq;
                }
                for j in 0..ns {
                    let (l, _) = lm_from_index(j);
                    let f = pref * ipow(-(l as i64)) * y[j];
                    for c in 0..3 {
                        wout[(col, c * ns + j)] = e[c] * f;
                    }
                }
            }
        }
    }
    let mut rhs = matmul(&pm, &pw);
    for i in 0..2 * nv {
        for j in 0..2 * n {
            rhs[(i, j)] *= tdiag[i];
        }
    }
    let b = lu.solve(&rhs);
    let s = matmul(&wout, &matmul(&cm, &b));

    let mut tpp = s.view((0, 0), (n, n)).into_owned();
    let rmp = s.view((0, n), (n, n)).into_owned();
    let rpm = s.view((n, 0), (n, n)).into_owned();
    let mut tmm = s.view((n, n), (n, n)).into_owned();
    for i in 0..n {
        tpp[(i, i)] += ONE;
        tmm[(i, i)] += ONE;
    }
    let mut layer = LayerS {
        beams: beams.clone(),
        left: host,
        right: host,
        thickness: left + right,
        tpp,
        rpm,
        rmp,
        tmm,
    };
    let pl: Vec<C64> = kz.iter().map(|z| (I * z * left).exp()).collect();
    let pr: Vec<C64> = kz.iter().map(|z| (I * z * right).exp()).collect();
    for i in 0..n {
        for j in 0..n {
            let (gi, gj) = (i / 2, j / 2);
            layer.tpp[(i, j)] *= pr[gi] * pl[gj];
            layer.rpm[(i, j)] *= pl[gi] * pl[gj];
            layer.rmp[(i, j)] *= pr[gi] * pr[gj];
            layer.tmm[(i, j)] *= pl[gi] * pr[gj];
        }
    }
    if plane.offset != [0.0, 0.0] {
        layer = layer.with_offset(plane.offset);
    }
    layer.check_finite("sphere plane")?;
    Ok(layer)
}

/// Flux-normalised Fresnel coefficients `(r, t)` for a wave crossing from
/// medium 1 into medium 2, polarization `p` (0 = s, 1 = p).
fn fresnel(kz1: C64, kz2: C64, eps1: C64, eps2: C64, p: usize) -> (C64, C64) {
    let root = 2.0 * csqrt(kz1) * csqrt(kz2);
    if p == 0 {
        let d = kz1 + kz2;
        ((kz1 - kz2) / d, root / d)
    } else {
        let d = eps2 * kz1 + eps1 * kz2;
        let n12 = csqrt(eps1) * csqrt(eps2);
        ((eps2 * kz1 - eps1 * kz2) / d, n12 * root / d)
    }
}

/// Diagonal layer from per-channel `(tpp, rpm, rmp, tmm)`.
fn diagonal(
    beams: &Arc<BeamSet>,
    left: Material,
    right: Material,
    thickness: f64,
    f: impl Fn(usize, usize) -> (C64, C64, C64, C64),
) -> LayerS {
    let n = 2 * beams.len();
    let mut s = LayerS {
        beams: beams.clone(),
        left,
        right,
        thickness,
        tpp: CMat::zeros(n, n),
        rpm: CMat::zeros(n, n),
        rmp: CMat::zeros(n, n),
        tmm: CMat::zeros(n, n),
    };
    for g in 0..beams.len() {
        for p in 0..2 {
            let i = 2 * g + p;
            let (a, b, c, d) = f(g, p);
            s.tpp[(i, i)] = a;
            s.rpm[(i, i)] = b;
            s.rmp[(i, i)] = c;
            s.tmm[(i, i)] = d;
        }
    }
    s
}

pub fn interface_smatrix(left: &Material, right: &Material, beams: &Arc<BeamSet>) -> LayerS {
    if left.eps == right.eps {
        let mut s = LayerS::identity(beams.clone(), *left);
        s.right = *right;
        return s;
    }
    let k1 = beams.kz(left);
    let k2 = beams.kz(right);
    diagonal(beams, *left, *right, 0.0, |g, p| {
        let (r, t) = fresnel(k1[g], k2[g], left.eps, right.eps, p);
        (t, r, -r, t)
    })
}

/// Free propagation over `distance` in `medium`.
pub fn gap_smatrix(distance: f64, beams: &Arc<BeamSet>, medium: &Material) -> Result<LayerS> {
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::invalid(format!(
            "gap distance {distance} must be finite and >= 0"
        )));
    }
    let kz = beams.kz(medium);
    Ok(diagonal(beams, *medium, *medium, distance, |g, _| {
        let ph = (I * kz[g] * distance).exp();
        (ph, ZERO, ZERO, ph)
    }))
}

/// A homogeneous slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plate {
    pub thickness: f64,
    pub material: Material,
}

impl Plate {
    pub fn new(thickness: f64, material: Material) -> Result<Self> {
        if !(thickness >= 0.0) {
            return Err(Error::invalid(format!("plate thickness {thickness} must be >= 0")));
        }
        Ok(Plate { thickness, material })
    }
}

/// Closed-form slab S-matrix between two ambients. Only decaying phase
/// factors `e^{i kz d}` appear, so an opaque plate gives exactly zero
/// transmission.
pub fn plate_smatrix(plate: &Plate, beams: &Arc<BeamSet>, left: &Material, right: &Material) -> Result<LayerS> {
    if !(plate.thickness >= 0.0) {
        return Err(Error::invalid(format!(
            "plate thickness {} must be >= 0",
            plate.thickness
        )));
    }
    let m = plate.material;
    let k1 = beams.kz(left);
    let k2 = beams.kz(&m);
    let k3 = beams.kz(right);
    let d = plate.thickness;
    let s = diagonal(beams, *left, *right, d, |g, p| {
        let (r12, t12) = if left.eps == m.eps {
            (ZERO, ONE)
        } else {
            fresnel(k1[g], k2[g], left.eps, m.eps, p)
        };
        let (r23, t23) = if m.eps == right.eps {
            (ZERO, ONE)
        } else {
            fresnel(k2[g], k3[g], m.eps, right.eps, p)
        };
        let ph = (I * k2[g] * d).exp();
        let ph2 = ph * ph;
        let r21 = -r12;
        let den = ONE - r21 * r23 * ph2;
        let tpp = t12 * t23 * ph / den;
        let rpm = r12 + t12 * t12 * r23 * ph2 / den;
        let rmp = -r23 + t23 * t23 * r21 * ph2 / den;
        (tpp, rpm, rmp, tpp)
    });
    s.check_finite("plate")?;
    Ok(s)
}
