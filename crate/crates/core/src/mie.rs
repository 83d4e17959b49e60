//! Single-sphere scattering: diagonal T-matrix elements and efficiencies.
//!
//! For an incident regular vector wave of amplitude `a` (magnetic `M` or
//! electric `N` multipole of order `l`) the sphere radiates the outgoing wave
//! `T_l a`. Per channel, `1 + 2 T_l` is the S-matrix eigenvalue, unimodular
//! when both media are lossless.

use crate::error::{Error, Result};
use crate::numeric::{csqrt, C64};
use crate::specfun::{sph_bessel, sph_hankel1};

/// A homogeneous, non-magnetic medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub eps: C64,
}

impl Material {
    pub fn new(eps: C64) -> Result<Self> {
        if !(eps.re.is_finite() && eps.im.is_finite()) {
            return Err(Error::invalid("permittivity must be finite"));
        }
        if eps.im < 0.0 {
            return Err(Error::invalid(format!(
                "Im(eps) = {} < 0: only passive media are supported",
                eps.im
            )));
        }
        if eps.norm() == 0.0 {
            return Err(Error::invalid("eps = 0"));
        }
        Ok(Material { eps })
    }

    pub fn real(eps: f64) -> Self {
        Material {
            eps: C64::new(eps, 0.0),
        }
    }

    pub fn vacuum() -> Self {
        Material::real(1.0)
    }

    /// Refractive index on the global square-root branch.
    pub fn index(&self) -> C64 {
        csqrt(self.eps)
    }

    pub fn wavenumber(&self, omega: f64) -> C64 {
        self.index() * omega
    }

    pub fn is_lossless(&self) -> bool {
        self.eps.im == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereScatterer {
    pub radius: f64,
    pub inside: Material,
    pub host: Material,
}

impl SphereScatterer {
    pub fn new(radius: f64, inside: Material, host: Material) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("sphere radius {radius} must be > 0")));
        }
        Ok(SphereScatterer { radius, inside, host })
    }
}

/// T-matrix elements for `l = 1..=lmax`; index 0 is unused and zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MieT {
    /// Magnetic (TE) multipoles, coupling the `M` waves.
    pub magnetic: Vec<C64>,
    /// Electric (TM) multipoles, coupling the `N` waves.
    pub electric: Vec<C64>,
}

impl MieT {
    pub fn lmax(&self) -> usize {
        self.magnetic.len() - 1
    }
}

pub fn mie_t(sphere: &SphereScatterer, omega: f64, lmax: usize) -> Result<MieT> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega = {omega} must be > 0")));
    }
    let mut magnetic = vec![C64::new(0.0, 0.0); lmax + 1];
    let mut electric = magnetic.clone();
    if sphere.inside.eps == sphere.host.eps {
        return Ok(MieT { magnetic, electric });
    }
    let n_host = sphere.host.index();
    let n_in = sphere.inside.index();
    let m = n_in / n_host;
    let x = n_host * omega * sphere.radius;
    let mx = n_in * omega * sphere.radius;
    let jx = sph_bessel(lmax, x)?;
    let jmx = sph_bessel(lmax, mx)?;
    let hx = sph_hankel1(lmax, x)?;
    for l in 1..=lmax {
        let lf = l as f64;
        // Riccati functions ψ = z j, ξ = z h and their derivatives
        let psi_x = x * jx[l];
        let dpsi_x = x * jx[l - 1] - lf * jx[l];
        let psi_mx = mx * jmx[l];
        let dpsi_mx = mx * jmx[l - 1] - lf * jmx[l];
        let xi_x = x * hx[l];
        let dxi_x = x * hx[l - 1] - lf * hx[l];
        let a = (m * psi_mx * dpsi_x - psi_x * dpsi_mx) / (m * psi_mx * dxi_x - xi_x * dpsi_mx);
        let b = (psi_mx * dpsi_x - m * psi_x * dpsi_mx) / (psi_mx * dxi_x - m * xi_x * dpsi_mx);
        electric[l] = -a;
        magnetic[l] = -b;
    }
    if electric
        .iter()
        .chain(magnetic.iter())
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::Internal(format!(
            "non-finite Mie coefficient at omega = {omega}"
        )));
    }
    Ok(MieT { magnetic, electric })
}

/// Extinction, scattering and absorption efficiencies (cross sections over
/// `π r²`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiencies {
    pub ext: f64,
    pub sca: f64,
    pub abs: f64,
}

/// Efficiencies are only defined here for a lossless host.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossSections {
    Defined(Efficiencies),
    NotApplicable,
}

/// Multipole order needed for convergence at size parameter `x`.
pub fn wiscombe_lmax(x: f64) -> usize {
    ((x + 4.0 * x.cbrt() + 2.0).ceil() as usize).clamp(1, 200)
}

pub fn mie_cross_sections(sphere: &SphereScatterer, omega: f64) -> Result<CrossSections> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega = {omega} must be > 0")));
    }
    if !sphere.host.is_lossless() {
        return Ok(CrossSections::NotApplicable);
    }
    let x = sphere.host.wavenumber(omega).re * sphere.radius;
    let t = mie_t(sphere, omega, wiscombe_lmax(x))?;
    let mut ext = 0.0;
    let mut sca = 0.0;
    let mut abs = 0.0;
    for l in 1..=t.lmax() {
        let w = (2 * l + 1) as f64;
        let (a, b) = (-t.electric[l], -t.magnetic[l]);
        ext += w * (a.re + b.re);
        sca += w * (a.norm_sqr() + b.norm_sqr());
        abs += w * (a.re - a.norm_sqr() + b.re - b.norm_sqr());
    }
    let f = 2.0 / (x * x);
    Ok(CrossSections::Defined(Efficiencies {
        ext: f * ext,
        sca: f * sca,
        abs: f * abs,
    }))
}
