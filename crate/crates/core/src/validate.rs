//! Self-checks run by `opalite validate`: invariants that must hold for any
//! scene, each reported with its measured residual.

use crate::emissivity::{planck_peak, solve_point, Engine};
use crate::error::Result;
use crate::mie::{mie_t, Material, SphereScatterer};
use crate::numeric::C64;
use crate::scene::Scene;
use crate::specfun::lm_index;
use crate::structure::{default_eta, lattice_sums, SumMethod};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.threshold
    }
}

fn sample(v: &[f64], n: usize) -> Vec<f64> {
    if v.len() <= n {
        return v.to_vec();
    }
    (0..n).map(|i| v[i * (v.len() - 1) / (n - 1)]).collect()
}

/// Worst per-order relative deviation between two sets of lattice sums.
fn sums_deviation(a: &[C64], b: &[C64], lmax: usize) -> f64 {
    let peak: Vec<f64> = (0..=lmax)
        .map(|l| {
            (-(l as i64)..=l as i64)
                .map(|m| b[lm_index(l, m)].norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut worst = 0.0f64;
    for l in 0..=lmax {
        let scale = peak[l.saturating_sub(1)..=(l + 1).min(lmax)]
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        for m in -(l as i64)..=l as i64 {
            let i = lm_index(l, m);
            worst = worst.max((a[i] - b[i]).norm() / scale);
        }
    }
    worst
}

pub fn validate_scene(scene: &Scene) -> Result<Vec<Check>> {
    let controls = scene.controls();
    let engine = scene.numerics.engine;
    let desc = scene.description()?;
    let plate_only = scene.lattice.is_none();
    let omegas = sample(&scene.omega_grid(), 4);
    let mut out = Vec::new();

    let lossless = scene.lossless().description()?;
    let mut worst = 0.0f64;
    for &w in &omegas {
        for th in [0.0, 30f64.to_radians(), 60f64.to_radians()] {
            for p in solve_point(&lossless, w, th, &controls, engine)? {
                worst = worst.max((p.r + p.t - 1.0).abs());
            }
        }
    }
    out.push(Check {
        name: "energy conservation, lossless copy: max |R + T - 1|".into(),
        residual: worst,
        threshold: if plate_only { 1e-10 } else { 1e-6 },
    });

    let mut worst = 0.0f64;
    for &w in &omegas {
        for &th in &sample(&scene.theta_grid(), 3) {
            for p in solve_point(&desc, w, th, &controls, engine)? {
                worst = worst.max((p.e - p.a).abs()).max(-p.e).max(p.e - 1.0);
            }
        }
    }
    out.push(Check {
        name: "emissivity equals absorbance and lies in [0, 1]".into(),
        residual: worst,
        threshold: 1e-9,
    });

    if plate_only {
        let mut worst = 0.0f64;
        for &w in &omegas {
            for th in [0.0, 0.7] {
                let a = solve_point(&desc, w, th, &controls, Engine::Layered)?;
                let b = solve_point(&desc, w, th, &controls, Engine::OneDim)?;
                for (x, y) in a.iter().zip(&b) {
                    worst = worst
                        .max((x.r - y.r).abs())
                        .max((x.t - y.t).abs())
                        .max((x.a - y.a).abs());
                }
            }
        }
        out.push(Check {
            name: "layered vs transfer-matrix engine: max |difference| in R, T, A".into(),
            residual: worst,
            threshold: 1e-10,
        });
    }

    if let Some(lat) = &scene.lattice {
        let (_, host, _) = scene.unit_description()?;
        let real_host = Material::real(host.eps.re);
        let sphere = SphereScatterer::new(
            lat.radius,
            Material::real(scene.material(&lat.sphere)?.eps.re),
            real_host,
        )?;
        let mut worst = 0.0f64;
        for &w in &omegas {
            let t = mie_t(&sphere, w, controls.lmax)?;
            for z in t.electric.iter().chain(&t.magnetic) {
                worst = worst.max(((C64::new(1.0, 0.0) + 2.0 * z).norm() - 1.0).abs());
            }
        }
        out.push(Check {
            name: "Mie unitarity |1 + 2 T_l| = 1, lossless sphere".into(),
            residual: worst,
            threshold: 1e-10,
        });

        let lattice = lat.lattice();
        let ls = 2 * controls.lmax;
        let mut worst = 0.0f64;
        for &w in &omegas {
            let k = host.wavenumber(w);
            let kpar = [0.3 * w, 0.1 * w];
            let eta0 = default_eta(&lattice, k);
            let base = lattice_sums(&lattice, k, kpar, ls, SumMethod::Ewald { eta: Some(eta0) })?;
            for f in [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::SQRT_2] {
                let other = lattice_sums(&lattice, k, kpar, ls, SumMethod::Ewald { eta: Some(eta0 * f) })?;
                worst = worst.max(sums_deviation(&other, &base, ls));
            }
        }
        out.push(Check {
            name: "Ewald lattice sums independent of the splitting parameter".into(),
            residual: worst,
            threshold: 1e-8,
        });
    }

    out.push(Check {
        name: "Planck peak position x = 2.8214".into(),
        residual: (planck_peak() - 2.8214).abs(),
        threshold: 1e-3,
    });
    Ok(out)
}
