//! Transfer matrices of planar multilayers.
//!
//! Amplitudes are those of the tangential electric field of the forward and
//! backward waves; the matrix maps the amplitudes on the right of a structure
//! to those on its left, so that `(1, r) = M (t, 0)`. Each medium enters
//! through its admittance `Y = kz` (s) or `Y = ε / kz` (p).

use crate::error::{Error, Result};
use crate::mie::Material;
use crate::numeric::{csqrt, is_finite, C64, I, ONE, ZERO};
use crate::stack::{Element, Exit, Pol, StackDescription};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDimMatrix {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
    /// `Re Y_exit / Re Y_in` when the exit medium is lossless, else 0.
    pub exit_flux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDimLayer {
    pub eps: C64,
    pub thickness: f64,
}

impl OneDimLayer {
    pub fn new(eps: C64, thickness: f64) -> Result<Self> {
        Material::new(eps)?;
        if !(thickness >= 0.0 && thickness.is_finite()) {
            return Err(Error::invalid(format!("layer thickness {thickness} must be >= 0")));
        }
        Ok(OneDimLayer { eps, thickness })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtResult {
    pub r: C64,
    pub t: C64,
    pub big_r: f64,
    pub big_t: f64,
    pub big_a: f64,
}

type M2 = [[C64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

struct Kinematics {
    omega: f64,
    kpar2: f64,
    pol: Pol,
}

impl Kinematics {
    fn new(omega: f64, theta0: f64, pol: Pol, ambient: &Material) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::invalid(format!("omega = {omega} must be > 0")));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta0) {
            return Err(Error::invalid(format!("theta0 = {theta0} must lie in [0, pi/2)")));
        }
        if !(ambient.eps.im == 0.0 && ambient.eps.re > 0.0) {
            return Err(Error::invalid("incident ambient must be lossless with eps > 0"));
        }
        let kpar = omega * ambient.eps.re.sqrt() * theta0.sin();
        Ok(Kinematics {
            omega,
            kpar2: kpar * kpar,
            pol,
        })
    }

    fn kz(&self, eps: C64) -> C64 {
        csqrt(eps * self.omega * self.omega - self.kpar2)
    }

    fn admittance(&self, eps: C64) -> Result<C64> {
        let kz = self.kz(eps);
        match self.pol {
            Pol::S => Ok(kz),
            Pol::P => {
                if kz == ZERO {
                    return Err(Error::SingularArgument("grazing wave (kz = 0) in a layer".into()));
                }
                Ok(eps / kz)
            }
        }
    }

    /// `D^{-1}_a D_b`: amplitudes in `b` to amplitudes in `a` at a shared
    /// interface.
    fn interface(&self, a: C64, b: C64) -> Result<M2> {
        if a == b {
            return Ok([[ONE, ZERO], [ZERO, ONE]]);
        }
        let (ya, yb) = (self.admittance(a)?, self.admittance(b)?);
        let q = yb / ya;
        Ok([[(ONE + q) * 0.5, (ONE - q) * 0.5], [(ONE - q) * 0.5, (ONE + q) * 0.5]])
    }

    fn propagation(&self, eps: C64, d: f64) -> M2 {
        let ph = I * self.kz(eps) * d;
        [[(-ph).exp(), ZERO], [ZERO, ph.exp()]]
    }

    fn exit_flux(&self, ambient: C64, exit: C64) -> Result<f64> {
        if exit.im != 0.0 {
            return Ok(0.0);
        }
        Ok(self.admittance(exit)?.re / self.admittance(ambient)?.re)
    }
}

/// A single slab embedded in `ambient` on both sides.
pub fn layer_matrix(
    layer: &OneDimLayer,
    omega: f64,
    theta0: f64,
    pol: Pol,
    ambient: &Material,
) -> Result<OneDimMatrix> {
    stack_matrix(std::slice::from_ref(layer), omega, theta0, pol, ambient, ambient)
}

/// Ordered product over the layers, including the interfaces with the
/// incident ambient and the exit half-space.
pub fn stack_matrix(
    layers: &[OneDimLayer],
    omega: f64,
    theta0: f64,
    pol: Pol,
    ambient: &Material,
    exit: &Material,
) -> Result<OneDimMatrix> {
    if layers.is_empty() {
        return Err(Error::invalid("layer sequence must not be empty"));
    }
    let kin = Kinematics::new(omega, theta0, pol, ambient)?;
    let mut m: M2 = [[ONE, ZERO], [ZERO, ONE]];
    let mut cur = ambient.eps;
    for l in layers {
        m = mul(&m, &kin.interface(cur, l.eps)?);
        m = mul(&m, &kin.propagation(l.eps, l.thickness));
        cur = l.eps;
    }
    m = mul(&m, &kin.interface(cur, exit.eps)?);
    let out = OneDimMatrix {
        m11: m[0][0],
        m12: m[0][1],
        m21: m[1][0],
        m22: m[1][1],
        exit_flux: kin.exit_flux(ambient.eps, exit.eps)?,
    };
    if ![out.m11, out.m12, out.m21, out.m22].iter().all(|z| is_finite(*z)) {
        return Err(Error::Internal(format!("transfer matrix overflow at omega = {omega}")));
    }
    Ok(out)
}

pub fn rt_from_matrix(m: &OneDimMatrix) -> Result<RtResult> {
    if m.m11 == ZERO {
        return Err(Error::Singular {
            context: "transfer matrix with M11 = 0".into(),
            condition: f64::INFINITY,
        });
    }
    let t = ONE / m.m11;
    let r = m.m21 / m.m11;
    let big_r = r.norm_sqr();
    let big_t = t.norm_sqr() * m.exit_flux;
    Ok(RtResult {
        r,
        t,
        big_r,
        big_t,
        big_a: 1.0 - big_r - big_t,
    })
}

/// Layers of a stack built only from plates, interfaces and gaps, or `None`
/// if it contains sphere planes. A substrate slab whose attenuation exceeds
/// the double-precision range is replaced by its half-space.
pub fn layers_of(desc: &StackDescription, omega: f64, theta0: f64) -> Option<(Vec<OneDimLayer>, Material)> {
    fn walk(els: &[Element], medium: &mut C64, out: &mut Vec<OneDimLayer>) -> bool {
        for e in els {
            match e {
                Element::Plane { .. } => return false,
                Element::Plate(p) => {
                    out.push(OneDimLayer {
                        eps: p.material.eps,
                        thickness: p.thickness,
                    });
                }
                Element::Interface(m) => *medium = m.eps,
                Element::Gap(d) => out.push(OneDimLayer {
                    eps: *medium,
                    thickness: *d,
                }),
                Element::Repeat(sub, n) => {
                    let mut unit = Vec::new();
                    if !walk(sub, medium, &mut unit) {
                        return false;
                    }
                    for _ in 0..*n {
                        out.extend_from_slice(&unit);
                    }
                }
            }
        }
        true
    }
    let mut layers = Vec::new();
    let mut medium = desc.incident.eps;
    if !walk(&desc.elements, &mut medium, &mut layers) {
        return None;
    }
    let exit = match desc.exit {
        Exit::HalfSpace(m) => m,
        Exit::Substrate { plate, behind } => {
            let kpar = omega * desc.incident.eps.re.max(0.0).sqrt() * theta0.sin();
            let kz = csqrt(plate.material.eps * omega * omega - kpar * kpar);
            if kz.im * plate.thickness > 700.0 {
                plate.material
            } else {
                layers.push(OneDimLayer {
                    eps: plate.material.eps,
                    thickness: plate.thickness,
                });
                behind
            }
        }
    };
    Some((layers, exit))
}

/// `(R, T, A)` of a plate-only stack by transfer matrices.
pub fn solve_layers(desc: &StackDescription, omega: f64, theta0: f64, pol: Pol) -> Result<Option<RtResult>> {
    let Some((mut layers, exit)) = layers_of(desc, omega, theta0) else {
        return Ok(None);
    };
    if layers.is_empty() {
        layers.push(OneDimLayer {
            eps: desc.incident.eps,
            thickness: 0.0,
        });
    }
    let m = stack_matrix(&layers, omega, theta0, pol, &desc.incident, &exit)?;
    rt_from_matrix(&m).map(Some)
}

/// The plates of a periodic 1D crystal: `periods` repetitions of
/// `(eps, thickness)` pairs.
pub fn periodic_layers(unit: &[(C64, f64)], periods: usize) -> Result<Vec<OneDimLayer>> {
    let mut out = Vec::new();
    for _ in 0..periods {
        for &(e, d) in unit {
            out.push(OneDimLayer::new(e, d)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::Plate;
    use crate::stack::{solve_stack, NumericalControls};
    use std::f64::consts::FRAC_PI_2;

    fn vac() -> Material {
        Material::vacuum()
    }

    #[test]
    fn vacuum_layer_is_pure_propagation() {
        let (w, d, th) = (1.3, 0.7, 0.4f64);
        let m = layer_matrix(&OneDimLayer::new(ONE, d).unwrap(), w, th, Pol::P, &vac()).unwrap();
        let ph = I * w * d * th.cos();
        assert!((m.m11 - (-ph).exp()).norm() < 1e-14 && (m.m22 - ph.exp()).norm() < 1e-14);
        assert!(m.m12.norm() < 1e-15 && m.m21.norm() < 1e-15);
    }

    #[test]
    fn quarter_wave_slab_matches_airy() {
        let n = 2.0f64;
        let w = 1.0;
        let d = FRAC_PI_2 / (n * w);
        let m = layer_matrix(
            &OneDimLayer::new(C64::new(n * n, 0.0), d).unwrap(),
            w,
            0.0,
            Pol::S,
            &vac(),
        )
        .unwrap();
        let rt = rt_from_matrix(&m).unwrap();
        let airy = 1.0 / (1.0 + 0.25 * (n - 1.0 / n).powi(2));
        assert!((rt.t.norm_sqr() - airy).abs() < 1e-12);
        // faces as reference planes: t = i |t| at the quarter-wave point
        let u = rt.t / (I * rt.t.norm());
        assert!((u - ONE).norm() < 1e-12);
    }

    #[test]
    fn polarizations_agree_at_normal_incidence() {
        let ls = [
            OneDimLayer::new(C64::new(2.6, 0.1), 0.6).unwrap(),
            OneDimLayer::new(C64::new(1.44, 0.0), 0.81).unwrap(),
        ];
        let s = stack_matrix(&ls, 1.7, 0.0, Pol::S, &vac(), &Material::real(2.0)).unwrap();
        let p = stack_matrix(&ls, 1.7, 0.0, Pol::P, &vac(), &Material::real(2.0)).unwrap();
        for (a, b) in [(s.m11, p.m11), (s.m12, p.m12), (s.m21, p.m21), (s.m22, p.m22)] {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn determinant_is_admittance_ratio() {
        let ls = [OneDimLayer::new(C64::new(3.0, 0.2), 0.5).unwrap()];
        let exit = Material::real(2.25);
        let th = 0.3f64;
        for pol in [Pol::S, Pol::P] {
            let m = stack_matrix(&ls, 2.0, th, pol, &vac(), &exit).unwrap();
            let det = m.m11 * m.m22 - m.m12 * m.m21;
            let kin = Kinematics::new(2.0, th, pol, &vac()).unwrap();
            let ratio = kin.admittance(exit.eps).unwrap() / kin.admittance(ONE).unwrap();
            assert!((det - ratio).norm() < 1e-12);
            let same = stack_matrix(&ls, 2.0, th, pol, &vac(), &vac()).unwrap();
            assert!((same.m11 * same.m22 - same.m12 * same.m21 - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn bragg_mirror_reflectance() {
        let (n1, n2, w, periods) = (1.5f64, 2.5f64, 1.0f64, 8);
        let unit = [
            (C64::new(n1 * n1, 0.0), FRAC_PI_2 / (n1 * w)),
            (C64::new(n2 * n2, 0.0), FRAC_PI_2 / (n2 * w)),
        ];
        let ls = periodic_layers(&unit, periods).unwrap();
        let rt = rt_from_matrix(&stack_matrix(&ls, w, 0.0, Pol::S, &vac(), &vac()).unwrap()).unwrap();
        let q = (n2 / n1).powi(2 * periods as i32);
        let want = ((q - 1.0) / (q + 1.0)).powi(2);
        assert!((rt.big_r - want).abs() < 1e-10);
    }

    #[test]
    fn lossless_conserves_energy_at_any_angle() {
        let unit = [(C64::new(2.6, 0.0), 0.6), (C64::new(1.44, 0.0), 0.81)];
        let ls = periodic_layers(&unit, 16).unwrap();
        for th in [0.0, 0.4, 1.0, 1.4] {
            for pol in [Pol::S, Pol::P] {
                for w in [0.5, 1.7, 2.3, 4.0] {
                    let rt = rt_from_matrix(&stack_matrix(&ls, w, th, pol, &vac(), &vac()).unwrap()).unwrap();
                    assert!((rt.big_r + rt.big_t - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn split_products_agree() {
        let ls: Vec<OneDimLayer> = (0..6)
            .map(|i| OneDimLayer::new(C64::new(1.5 + i as f64, 0.05 * i as f64), 0.2 + 0.1 * i as f64).unwrap())
            .collect();
        let whole = stack_matrix(&ls, 1.1, 0.0, Pol::S, &vac(), &vac()).unwrap();
        let a = stack_matrix(&ls[..2], 1.1, 0.0, Pol::S, &vac(), &vac()).unwrap();
        let b = stack_matrix(&ls[2..], 1.1, 0.0, Pol::S, &vac(), &vac()).unwrap();
        let p = mul(&[[a.m11, a.m12], [a.m21, a.m22]], &[[b.m11, b.m12], [b.m21, b.m22]]);
        for (x, y) in [
            (p[0][0], whole.m11),
            (p[0][1], whole.m12),
            (p[1][0], whole.m21),
            (p[1][1], whole.m22),
        ] {
            assert!((x - y).norm() < 1e-12 * y.norm().max(1.0));
        }
    }

    #[test]
    fn identity_matrix_transmits() {
        let m = OneDimMatrix {
            m11: ONE,
            m12: ZERO,
            m21: ZERO,
            m22: ONE,
            exit_flux: 1.0,
        };
        let rt = rt_from_matrix(&m).unwrap();
        assert_eq!((rt.r, rt.t, rt.big_a), (ZERO, ONE, 0.0));
        let z = OneDimMatrix { m11: ZERO, ..m };
        assert!(rt_from_matrix(&z).is_err());
    }

    #[test]
    fn agrees_with_layered_engine() {
        let desc = StackDescription {
            incident: vac(),
            elements: vec![
                Element::Plate(Plate::new(0.37, Material::new(C64::new(5.0, 0.4)).unwrap()).unwrap()),
                Element::Gap(0.2),
                Element::Interface(Material::real(2.0)),
                Element::Gap(0.5),
            ],
            exit: Exit::Substrate {
                plate: Plate::new(0.3, Material::new(C64::new(12.0, 7.0)).unwrap()).unwrap(),
                behind: vac(),
            },
        };
        for pol in [Pol::S, Pol::P] {
            let th = 0.6;
            let a = solve_layers(&desc, 1.4, th, pol).unwrap().unwrap();
            let b = solve_stack(&desc, 1.4, th, 0.0, pol, &NumericalControls::default()).unwrap();
            assert!((a.big_r - b.r).abs() < 1e-10 && (a.big_t - b.t).abs() < 1e-10 && (a.big_a - b.a).abs() < 1e-10);
        }
    }
}
