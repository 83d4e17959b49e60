//! Composition of layer S-matrices into a finite film and extraction of
//! reflectance, transmittance and absorbance for one incident beam.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{beam_set, BeamSet, Lattice2D};
use crate::layer::{
    gap_smatrix, interface_smatrix, plate_smatrix, sphere_plane_smatrix, LayerS, PlaneOfSpheres, Plate,
};
use crate::mie::Material;
use crate::numeric::{matmul, CMat, Lu, ONE};
use crate::specfun::{LMAX_CAP, LMAX_DEFAULT};
use crate::structure::{structure_constants, SumMethod};

/// Reciprocal condition number below which an inter-layer solve fails.
pub const MIN_RCOND_DEFAULT: f64 = 1e-13;

/// Redheffer composition: `s1` on the left, `s2` on the right.
pub fn star_product(s1: &LayerS, s2: &LayerS) -> Result<LayerS> {
    if !(Arc::ptr_eq(&s1.beams, &s2.beams) || s1.beams == s2.beams) {
        return Err(Error::invalid("star product of layers on different beam sets"));
    }
    if s1.right.eps != s2.left.eps {
        return Err(Error::invalid(format!(
            "star product across mismatched media: {} then {}",
            s1.right.eps, s2.left.eps
        )));
    }
    star_with(s1, s2, MIN_RCOND_DEFAULT)
}

fn star_with(s1: &LayerS, s2: &LayerS, min_rcond: f64) -> Result<LayerS> {
    let n = s1.dim();
    let id = CMat::identity(n, n);
    let m1 = &id - matmul(&s1.rmp, &s2.rpm);
    let lu1 = Lu::new(&m1, min_rcond, "star product (I - R1 R2)")?;
    let x1 = lu1.solve(&s1.tpp);
    let tpp = matmul(&s2.tpp, &x1);
    let rpm = &s1.rpm + matmul(&s1.tmm, &matmul(&s2.rpm, &x1));
    let m2 = &id - matmul(&s2.rpm, &s1.rmp);
    let lu2 = Lu::new(&m2, min_rcond, "star product (I - R2 R1)")?;
    let x2 = lu2.solve(&s2.tmm);
    let tmm = matmul(&s1.tmm, &x2);
    let rmp = &s2.rmp + matmul(&s2.tpp, &matmul(&s1.rmp, &x2));
    Ok(LayerS {
        beams: s1.beams.clone(),
        left: s1.left,
        right: s2.right,
        thickness: s1.thickness + s2.thickness,
        tpp,
        rpm,
        rmp,
        tmm,
    })
}

/// `n` copies of `s` composed by repeated doubling; `n = 0` is the identity.
pub fn repeat_slice(s: &LayerS, n: i64) -> Result<LayerS> {
    if n < 0 {
        return Err(Error::invalid(format!("repeat count {n} must be >= 0")));
    }
    if s.left.eps != s.right.eps {
        return Err(Error::invalid("repeated slice must have the same medium on both sides"));
    }
    let mut acc: Option<LayerS> = None;
    let mut pow = s.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => pow.clone(),
                Some(a) => star_product(&a, &pow)?,
            });
        }
        k >>= 1;
        if k > 0 {
            pow = star_product(&pow, &pow)?;
        }
    }
    Ok(acc.unwrap_or_else(|| LayerS::identity(s.beams.clone(), s.left)))
}

/// One element of a film, read left (incident side) to right.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Sphere plane with reference planes `left` and `right` of the centres.
    Plane {
        plane: PlaneOfSpheres,
        left: f64,
        right: f64,
    },
    /// Homogeneous slab embedded in the current medium.
    Plate(Plate),
    /// Change of medium.
    Interface(Material),
    /// Free propagation in the current medium.
    Gap(f64),
    Repeat(Vec<Element>, i64),
}

/// What lies behind the last element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exit {
    /// Semi-infinite medium.
    HalfSpace(Material),
    /// A slab of finite thickness followed by `behind`.
    Substrate { plate: Plate, behind: Material },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackDescription {
    pub incident: Material,
    pub elements: Vec<Element>,
    pub exit: Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pol {
    S,
    P,
}

impl Pol {
    pub fn index(self) -> usize {
        match self {
            Pol::S => 0,
            Pol::P => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pol::S => "s",
            Pol::P => "p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub pol: Pol,
    pub r: f64,
    pub t: f64,
    pub a: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalControls {
    pub lmax: usize,
    /// Beam cutoff `|kpar + g|` in units of `1/a`; `None` picks one from the
    /// frequency and lattice.
    pub cutoff: Option<f64>,
    /// Multiplies the cutoff, explicit or automatic (convergence studies).
    pub cutoff_scale: f64,
    pub min_rcond: f64,
    pub sums: SumMethod,
}

impl Default for NumericalControls {
    fn default() -> Self {
        NumericalControls {
            lmax: LMAX_DEFAULT,
            cutoff: None,
            cutoff_scale: 1.0,
            min_rcond: MIN_RCOND_DEFAULT,
            sums: SumMethod::Ewald { eta: None },
        }
    }
}

/// Shortest reciprocal vectors kept beyond the propagating ones by the
/// automatic cutoff.
pub const AUTO_CUTOFF_SHELLS: f64 = 2.5;

impl NumericalControls {
    pub fn validate(&self) -> Result<()> {
        if self.lmax == 0 || self.lmax > LMAX_CAP {
            return Err(Error::invalid(format!("lmax = {} outside 1..={LMAX_CAP}", self.lmax)));
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("cutoff = {c} must be > 0")));
            }
        }
        if !(self.cutoff_scale > 0.0 && self.cutoff_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "cutoff scale {} must be > 0",
                self.cutoff_scale
            )));
        }
        if !(self.min_rcond >= 0.0 && self.min_rcond < 1.0) {
            return Err(Error::invalid("min_rcond must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Cutoff in use at `omega` for a lattice and the largest medium index.
    pub fn cutoff_for(&self, lat: &Lattice2D, omega: f64, max_index: f64) -> f64 {
        self.cutoff_scale
            * self.cutoff.unwrap_or_else(|| {
                let rec = crate::lattice::reciprocal_lattice(lat).expect("validated lattice");
                omega * max_index + AUTO_CUTOFF_SHELLS * rec.min_distance()
            })
    }
}

impl StackDescription {
    /// Checks medium continuity and lattice consistency. Returns the common
    /// lattice (if any plane is present) and the medium after the last
    /// element.
    pub fn validate(&self) -> Result<(Option<Lattice2D>, Material)> {
        fn walk(els: &[Element], mut medium: Material, lat: &mut Option<Lattice2D>) -> Result<Material> {
            for e in els {
                match e {
                    Element::Plane { plane, left, right } => {
                        if plane.sphere.host.eps != medium.eps {
                            return Err(Error::invalid(format!(
                                "sphere plane host {} differs from the surrounding medium {}",
                                plane.sphere.host.eps, medium.eps
                            )));
                        }
                        if !(*left >= 0.0 && *right >= 0.0) {
                            return Err(Error::invalid("sphere plane spacings must be >= 0"));
                        }
                        match lat {
                            None => *lat = Some(plane.lattice),
                            Some(l) if *l != plane.lattice => {
                                return Err(Error::invalid("all sphere planes must share one lattice"))
                            }
                            _ => {}
                        }
                    }
                    Element::Plate(p) => {
                        if !(p.thickness >= 0.0) {
                            return Err(Error::invalid("plate thickness must be >= 0"));
                        }
                    }
                    Element::Interface(m) => medium = *m,
                    Element::Gap(d) => {
                        if !(*d >= 0.0) {
                            return Err(Error::invalid("gap distance must be >= 0"));
                        }
                    }
                    Element::Repeat(sub, n) => {
                        if *n < 0 {
                            return Err(Error::invalid(format!("repeat count {n} must be >= 0")));
                        }
                        let after = walk(sub, medium, lat)?;
                        if after.eps != medium.eps {
                            return Err(Error::invalid("a repeated block must end in the medium it starts in"));
                        }
                    }
                }
            }
            Ok(medium)
        }
        let mut lat = None;
        let last = walk(&self.elements, self.incident, &mut lat)?;
        Ok((lat, last))
    }

    /// Medium carrying the transmitted flux, if it is lossless.
    pub fn exit_medium(&self) -> Material {
        match self.exit {
            Exit::HalfSpace(m) => m,
            Exit::Substrate { behind, .. } => behind,
        }
    }

    fn max_index(&self) -> f64 {
        fn scan(els: &[Element], best: &mut f64) {
            for e in els {
                match e {
                    Element::Plane { plane, .. } => {
                        *best = best.max(plane.sphere.inside.index().norm());
                        *best = best.max(plane.sphere.host.index().norm());
                    }
                    Element::Plate(p) => *best = best.max(p.material.index().norm()),
                    Element::Interface(m) => *best = best.max(m.index().norm()),
                    Element::Gap(_) => {}
                    Element::Repeat(sub, _) => scan(sub, best),
                }
            }
        }
        let mut best = self.incident.index().norm();
        scan(&self.elements, &mut best);
        best
    }
}

type PlaneKey = ([u64; 6], [u64; 2]);

struct Builder<'a> {
    beams: Arc<BeamSet>,
    controls: &'a NumericalControls,
    planes: HashMap<PlaneKey, LayerS>,
}

impl Builder<'_> {
    fn plane(&mut self, plane: &PlaneOfSpheres, left: f64, right: f64) -> Result<LayerS> {
        let s = &plane.sphere;
        let key = (
            [
                s.radius.to_bits(),
                s.inside.eps.re.to_bits(),
                s.inside.eps.im.to_bits(),
                s.host.eps.re.to_bits(),
                s.host.eps.im.to_bits(),
                plane.lattice.cell_area().to_bits(),
            ],
            [left.to_bits(), right.to_bits()],
        );
        if !self.planes.contains_key(&key) {
            let at_origin = PlaneOfSpheres {
                offset: [0.0, 0.0],
                ..*plane
            };
            let b = &self.beams;
            let sc = structure_constants(
                &plane.lattice,
                b.omega,
                b.kpar,
                &s.host,
                self.controls.lmax,
                self.controls.sums,
            )?;
            let layer = sphere_plane_smatrix(
                &at_origin,
                &sc,
                b,
                self.controls.lmax,
                left,
                right,
                self.controls.min_rcond,
            )?;
            self.planes.insert(key, layer);
        }
        let base = &self.planes[&key];
        Ok(if plane.offset == [0.0, 0.0] {
            base.clone()
        } else {
            base.with_offset(plane.offset)
        })
    }

    fn compose(&self, acc: Option<LayerS>, next: LayerS) -> Result<Option<LayerS>> {
        Ok(Some(match acc {
            None => next,
            Some(a) => star_with(&a, &next, self.controls.min_rcond)?,
        }))
    }

    fn build(&mut self, els: &[Element], mut medium: Material) -> Result<(Option<LayerS>, Material)> {
        let mut acc: Option<LayerS> = None;
        for e in els {
            let next = match e {
                Element::Plane { plane, left, right } => self.plane(plane, *left, *right)?,
                Element::Plate(p) => plate_smatrix(p, &self.beams, &medium, &medium)?,
                Element::Interface(m) => {
                    let s = interface_smatrix(&medium, m, &self.beams);
                    medium = *m;
                    s
                }
                Element::Gap(d) => gap_smatrix(*d, &self.beams, &medium)?,
                Element::Repeat(sub, n) => {
                    let (unit, _) = self.build(sub, medium)?;
                    let unit = unit.unwrap_or_else(|| LayerS::identity(self.beams.clone(), medium));
                    repeat_slice(&unit, *n)?
                }
            };
            acc = self.compose(acc, next)?;
        }
        Ok((acc, medium))
    }
}

/// Beam set for a stack at `(omega, kpar)`: the lattice basis when sphere
/// planes are present, the single specular beam otherwise.
pub fn stack_beams(
    desc: &StackDescription,
    omega: f64,
    kpar: [f64; 2],
    controls: &NumericalControls,
) -> Result<Arc<BeamSet>> {
    let (lat, _) = desc.validate()?;
    Ok(Arc::new(match lat {
        Some(lat) => {
            let cutoff = controls.cutoff_for(&lat, omega, desc.max_index());
            beam_set(&lat, omega, kpar, &desc.incident, cutoff)?
        }
        None => BeamSet::single(omega, kpar),
    }))
}

/// Total S-matrix of the elements (without the exit termination).
pub fn elements_smatrix(
    desc: &StackDescription,
    els: &[Element],
    beams: &Arc<BeamSet>,
    controls: &NumericalControls,
) -> Result<(LayerS, Material)> {
    controls.validate()?;
    let mut b = Builder {
        beams: beams.clone(),
        controls,
        planes: HashMap::new(),
    };
    let (s, m) = b.build(els, desc.incident)?;
    Ok((s.unwrap_or_else(|| LayerS::identity(beams.clone(), desc.incident)), m))
}

/// Total S-matrix including the exit termination.
pub fn stack_smatrix(desc: &StackDescription, beams: &Arc<BeamSet>, controls: &NumericalControls) -> Result<LayerS> {
    let (body, medium) = elements_smatrix(desc, &desc.elements, beams, controls)?;
    let exit = match desc.exit {
        Exit::HalfSpace(m) => interface_smatrix(&medium, &m, beams),
        Exit::Substrate { plate, behind } => plate_smatrix(&plate, beams, &medium, &behind)?,
    };
    star_with(&body, &exit, controls.min_rcond)
}

/// In-plane wavevector of a plane wave incident at `(theta, phi)`.
pub fn incident_kpar(incident: &Material, omega: f64, theta: f64, phi: f64) -> Result<[f64; 2]> {
    if !(incident.eps.im == 0.0 && incident.eps.re > 0.0) {
        return Err(Error::invalid("incident medium must be lossless with eps > 0"));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::invalid(format!("theta = {theta} must lie in [0, pi/2)")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega = {omega} must be > 0")));
    }
    let kp = omega * incident.eps.re.sqrt() * theta.sin();
    Ok([kp * phi.cos(), kp * phi.sin()])
}

/// Reflectance, transmittance and absorbance for both polarizations,
/// sharing one S-matrix.
pub fn solve_stack_both(
    desc: &StackDescription,
    omega: f64,
    theta: f64,
    phi: f64,
    controls: &NumericalControls,
) -> Result<[SpectrumPoint; 2]> {
    let run = || -> Result<[SpectrumPoint; 2]> {
        let kpar = incident_kpar(&desc.incident, omega, theta, phi)?;
        let beams = stack_beams(desc, omega, kpar, controls)?;
        let s = stack_smatrix(desc, &beams, controls)?;
        let prop_in = beams.propagating(&desc.incident);
        let exit = desc.exit_medium();
        let prop_out = if exit.eps.im == 0.0 {
            beams.propagating(&exit)
        } else {
            vec![false; beams.len()]
        };
        let spec = beams.specular();
        let mut out = [Pol::S, Pol::P].map(|pol| SpectrumPoint {
            omega,
            theta,
            phi,
            pol,
            r: 0.0,
            t: 0.0,
            a: 0.0,
            e: 0.0,
        });
        for pt in out.iter_mut() {
            let j = 2 * spec + pt.pol.index();
            let mut r = 0.0;
            let mut t = 0.0;
            for g in 0..beams.len() {
                for p in 0..2 {
                    let i = 2 * g + p;
                    if prop_in[g] {
                        r += s.rpm[(i, j)].norm_sqr();
                    }
                    if prop_out[g] {
                        t += s.tpp[(i, j)].norm_sqr();
                    }
                }
            }
            if !(r.is_finite() && t.is_finite()) {
                return Err(Error::Internal("non-finite reflectance or transmittance".into()));
            }
            let mut a = ONE.re - r - t;
            if (-1e-12..0.0).contains(&a) {
                a = 0.0;
            } else if a < 0.0 {
                log::warn!("negative absorbance {a:e} at omega = {omega}, theta = {theta}: truncation not converged");
            }
            pt.r = r;
            pt.t = t;
            pt.a = a;
            pt.e = a;
        }
        Ok(out)
    };
    run().map_err(|e| e.at(omega, theta))
}

pub fn solve_stack(
    desc: &StackDescription,
    omega: f64,
    theta: f64,
    phi: f64,
    pol: Pol,
    controls: &NumericalControls,
) -> Result<SpectrumPoint> {
    Ok(solve_stack_both(desc, omega, theta, phi, controls)?[pol.index()])
}
