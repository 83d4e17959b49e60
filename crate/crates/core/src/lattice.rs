//! Two-dimensional Bravais lattices and the diffraction-order (beam) basis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mie::Material;
use crate::numeric::{csqrt, C64};

pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice2D {
    pub a1: Vec2,
    pub a2: Vec2,
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

impl Lattice2D {
    pub fn new(a1: Vec2, a2: Vec2) -> Result<Self> {
        let lat = Lattice2D { a1, a2 };
        lat.validate()?;
        Ok(lat)
    }

    pub fn square(a: f64) -> Self {
        Lattice2D {
            a1: [a, 0.0],
            a2: [0.0, a],
        }
    }

    pub fn hexagonal(a: f64) -> Self {
        Lattice2D {
            a1: [a, 0.0],
            a2: [0.5 * a, 0.5 * 3f64.sqrt() * a],
        }
    }

    fn validate(&self) -> Result<()> {
        let c = cross(self.a1, self.a2);
        let scale = norm(self.a1) * norm(self.a2);
        if !c.is_finite() || scale == 0.0 || c.abs() < 1e-12 * scale {
            return Err(Error::invalid("degenerate lattice: a1 x a2 = 0"));
        }
        Ok(())
    }

    pub fn cell_area(&self) -> f64 {
        cross(self.a1, self.a2).abs()
    }

    /// Lattice vector `n1 a1 + n2 a2`.
    pub fn point(&self, n1: i64, n2: i64) -> Vec2 {
        [
            n1 as f64 * self.a1[0] + n2 as f64 * self.a2[0],
            n1 as f64 * self.a1[1] + n2 as f64 * self.a2[1],
        ]
    }

    /// Shortest nonzero lattice vector length.
    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for n1 in -3..=3 {
            for n2 in -3..=3 {
                if (n1, n2) != (0, 0) {
                    best = best.min(norm(self.point(n1, n2)));
                }
            }
        }
        best
    }

    /// All lattice vectors with `|R| <= rmax`, in deterministic order.
    pub fn points_within(&self, rmax: f64) -> Vec<(i64, i64, Vec2)> {
        let (b1, b2) = reciprocal_basis_unchecked(self);
        // |n_i| <= rmax |b_i| / 2π bounds the search box
        let n1max = (rmax * norm(b1) / (2.0 * PI)).ceil() as i64 + 1;
        let n2max = (rmax * norm(b2) / (2.0 * PI)).ceil() as i64 + 1;
        let mut out = Vec::new();
        for n1 in -n1max..=n1max {
            for n2 in -n2max..=n2max {
                let r = self.point(n1, n2);
                if norm(r) <= rmax {
                    out.push((n1, n2, r));
                }
            }
        }
        out
    }
}

fn reciprocal_basis_unchecked(lat: &Lattice2D) -> (Vec2, Vec2) {
    let c = cross(lat.a1, lat.a2);
    let f = 2.0 * PI / c;
    ([lat.a2[1] * f, -lat.a2[0] * f], [-lat.a1[1] * f, lat.a1[0] * f])
}

/// Reciprocal basis with `b_i · a_j = 2π δ_ij`.
pub fn reciprocal_basis(lat: &Lattice2D) -> Result<(Vec2, Vec2)> {
    lat.validate()?;
    Ok(reciprocal_basis_unchecked(lat))
}

/// Reciprocal lattice of `lat` as a lattice in its own right.
pub fn reciprocal_lattice(lat: &Lattice2D) -> Result<Lattice2D> {
    let (b1, b2) = reciprocal_basis(lat)?;
    Ok(Lattice2D { a1: b1, a2: b2 })
}

/// Fold a Bloch vector into the first Brillouin zone.
///
/// Returns the folded vector and the integer coordinates `(n1, n2)` of the
/// reciprocal vector `g` with `kpar = folded + g`. Ties on the zone boundary
/// go to the lexicographically smallest `(n1, n2)`.
pub fn fold_kpar(lat: &Lattice2D, kpar: Vec2) -> Result<(Vec2, (i64, i64))> {
    let (b1, b2) = reciprocal_basis(lat)?;
    // fractional coordinates of kpar in the reciprocal basis
    let f1 = dot(kpar, lat.a1) / (2.0 * PI);
    let f2 = dot(kpar, lat.a2) / (2.0 * PI);
    let (c1, c2) = (f1.round() as i64, f2.round() as i64);
    let scale = norm(b1).max(norm(b2));
    let mut best: Option<(f64, (i64, i64))> = None;
    for n1 in c1 - 2..=c1 + 2 {
        for n2 in c2 - 2..=c2 + 2 {
            let g = [
                n1 as f64 * b1[0] + n2 as f64 * b2[0],
                n1 as f64 * b1[1] + n2 as f64 * b2[1],
            ];
            let d = norm([kpar[0] - g[0], kpar[1] - g[1]]);
            best = match best {
                None => Some((d, (n1, n2))),
                Some((bd, bn)) => {
                    if d < bd - 1e-12 * scale || ((d - bd).abs() <= 1e-12 * scale && (n1, n2) < bn) {
                        Some((d, (n1, n2)))
                    } else {
                        Some((bd, bn))
                    }
                }
            };
        }
    }
    let (_, (n1, n2)) = best.expect("search box is nonempty");
    let g = [
        n1 as f64 * b1[0] + n2 as f64 * b2[0],
        n1 as f64 * b1[1] + n2 as f64 * b2[1],
    ];
    Ok(([kpar[0] - g[0], kpar[1] - g[1]], (n1, n2)))
}

/// One diffraction order: the plane-wave channel `kpar + g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    /// Integer coordinates of `g` in the reciprocal basis.
    pub n: (i64, i64),
    /// In-plane wavevector `kpar + g`.
    pub k: Vec2,
}

impl Beam {
    pub fn kpar_norm(&self) -> f64 {
        norm(self.k)
    }

    /// Normal wavenumber in a medium, `sqrt(eps ω² - |kpar+g|²)` on the
    /// global branch.
    pub fn kz(&self, omega: f64, medium: &Material) -> C64 {
        csqrt(medium.eps * omega * omega - dot(self.k, self.k))
    }
}

/// Truncated plane-wave basis at fixed frequency and reduced Bloch vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    pub lattice: Lattice2D,
    pub omega: f64,
    /// Bloch vector folded into the first zone.
    pub kpar: Vec2,
    /// Reciprocal vector removed by folding: `requested = kpar + g_fold`.
    pub fold: (i64, i64),
    pub cutoff: f64,
    pub beams: Vec<Beam>,
}

impl BeamSet {
    /// Basis holding only the beam `kpar`, for stacks without in-plane
    /// structure.
    pub fn single(omega: f64, kpar: Vec2) -> BeamSet {
        BeamSet {
            lattice: Lattice2D::square(1.0),
            omega,
            kpar,
            fold: (0, 0),
            cutoff: norm(kpar),
            beams: vec![Beam { n: (0, 0), k: kpar }],
        }
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Index of the beam carrying the requested (unfolded) Bloch vector.
    pub fn specular(&self) -> usize {
        self.index_of(self.fold).expect("specular beam is always present")
    }

    pub fn index_of(&self, n: (i64, i64)) -> Option<usize> {
        self.beams.iter().position(|b| b.n == n)
    }

    pub fn kz(&self, medium: &Material) -> Vec<C64> {
        self.beams.iter().map(|b| b.kz(self.omega, medium)).collect()
    }

    /// Beams whose normal wavenumber is real and positive in `medium`.
    pub fn propagating(&self, medium: &Material) -> Vec<bool> {
        self.kz(medium).iter().map(|kz| kz.im == 0.0 && kz.re > 0.0).collect()
    }
}

pub fn beam_set(lat: &Lattice2D, omega: f64, kpar: Vec2, ambient: &Material, cutoff: f64) -> Result<BeamSet> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega = {omega} must be > 0")));
    }
    let (folded, fold) = fold_kpar(lat, kpar)?;
    if !(cutoff >= norm(kpar)) {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} excludes the specular beam |kpar| = {}",
            norm(kpar)
        )));
    }
    let needed = omega * ambient.index().norm();
    if cutoff < needed {
        log::warn!("beam cutoff {cutoff} below omega*sqrt|eps| = {needed}: propagating orders may be dropped");
    }
    let rec = reciprocal_lattice(lat)?;
    let (b1, b2) = (rec.a1, rec.a2);
    let reach = cutoff + norm(folded);
    let n1max = (reach * norm(lat.a1) / (2.0 * PI)).ceil() as i64 + 1;
    let n2max = (reach * norm(lat.a2) / (2.0 * PI)).ceil() as i64 + 1;
    let mut beams = Vec::new();
    for n1 in -n1max..=n1max {
        for n2 in -n2max..=n2max {
            let k = [
                folded[0] + n1 as f64 * b1[0] + n2 as f64 * b2[0],
                folded[1] + n1 as f64 * b1[1] + n2 as f64 * b2[1],
            ];
            if norm(k) <= cutoff || (n1, n2) == fold {
                beams.push(Beam { n: (n1, n2), k });
            }
        }
    }
    // sort by |kpar+g|; near-equal lengths are ties broken on (n1, n2)
    let tol = 1e-9 * cutoff.max(1.0);
    beams.sort_by(|a, b| {
        let (na, nb) = (a.kpar_norm(), b.kpar_norm());
        if (na - nb).abs() <= tol {
            a.n.cmp(&b.n)
        } else {
            na.partial_cmp(&nb).unwrap()
        }
    });
    Ok(BeamSet {
        lattice: *lat,
        omega,
        kpar: folded,
        fold,
        cutoff,
        beams,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_reciprocal() {
        let (b1, b2) = reciprocal_basis(&Lattice2D::square(1.0)).unwrap();
        assert!((b1[0] - 2.0 * PI).abs() < 1e-14 && b1[1].abs() < 1e-14);
        assert!((b2[1] - 2.0 * PI).abs() < 1e-14 && b2[0].abs() < 1e-14);
    }

    #[test]
    fn hexagonal_reciprocal() {
        let (b1, b2) = reciprocal_basis(&Lattice2D::hexagonal(1.0)).unwrap();
        let expect = 4.0 * PI / 3f64.sqrt();
        assert!((norm(b1) - expect).abs() < 1e-13);
        assert!((norm(b2) - expect).abs() < 1e-13);
    }

    #[test]
    fn degenerate_rejected() {
        assert!(Lattice2D::new([1.0, 0.0], [2.0, 0.0]).is_err());
    }

    #[test]
    fn long_wavelength_has_specular_only() {
        let lat = Lattice2D::square(1.0);
        let bs = beam_set(&lat, 0.5, [0.0, 0.0], &Material::vacuum(), 2.0 * PI * 1.1).unwrap();
        let prop = bs.propagating(&Material::vacuum());
        assert_eq!(prop.iter().filter(|p| **p).count(), 1);
        assert_eq!(bs.beams[0].n, (0, 0));
        assert_eq!(bs.len(), 5);
    }

    #[test]
    fn cutoff_must_hold_specular() {
        let lat = Lattice2D::square(1.0);
        assert!(beam_set(&lat, 1.0, [0.5, 0.0], &Material::vacuum(), 0.4).is_err());
    }

    #[test]
    fn folding_records_translation() {
        let lat = Lattice2D::square(1.0);
        let (f, n) = fold_kpar(&lat, [2.0 * PI + 0.3, -0.2]).unwrap();
        assert_eq!(n, (1, 0));
        assert!((f[0] - 0.3).abs() < 1e-12 && (f[1] + 0.2).abs() < 1e-12);
        let bs = beam_set(&lat, 8.0, [2.0 * PI + 0.3, -0.2], &Material::vacuum(), 12.0).unwrap();
        let s = bs.beams[bs.specular()];
        assert!((s.k[0] - (2.0 * PI + 0.3)).abs() < 1e-12);
    }
}
