//! Emissivity through Kirchhoff's law (`E = A = 1 - R - T`), angular maps,
//! stop-band extraction and Planck weighting.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::onedim::solve_layers;
use crate::stack::{solve_stack_both, NumericalControls, Pol, SpectrumPoint, StackDescription};

/// Default emissivity threshold below which a frequency counts as in-gap.
pub const GAP_THRESHOLD: f64 = 0.2;

/// Which solver handles a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Transfer matrices for plate-only stacks, layered scattering otherwise.
    #[default]
    Auto,
    Layered,
    OneDim,
}

/// `R, T, A, E` for both polarizations at one `(ω, θ)`, azimuth zero.
pub fn solve_point(
    desc: &StackDescription,
    omega: f64,
    theta: f64,
    controls: &NumericalControls,
    engine: Engine,
) -> Result<[SpectrumPoint; 2]> {
    if engine != Engine::Layered {
        let s = solve_layers(desc, omega, theta, Pol::S).map_err(|e| e.at(omega, theta))?;
        let p = solve_layers(desc, omega, theta, Pol::P).map_err(|e| e.at(omega, theta))?;
        if let (Some(s), Some(p)) = (s, p) {
            return Ok([(Pol::S, s), (Pol::P, p)].map(|(pol, rt)| {
                let a = if (-1e-12..0.0).contains(&rt.big_a) {
                    0.0
                } else {
                    rt.big_a
                };
                SpectrumPoint {
                    omega,
                    theta,
                    phi: 0.0,
                    pol,
                    r: rt.big_r,
                    t: rt.big_t,
                    a,
                    e: a,
                }
            }));
        }
        if engine == Engine::OneDim {
            return Err(Error::invalid("the transfer-matrix engine needs a plate-only stack").at(omega, theta));
        }
    }
    solve_stack_both(desc, omega, theta, 0.0, controls)
}

pub fn emissivity_point(
    desc: &StackDescription,
    omega: f64,
    theta: f64,
    pol: Pol,
    controls: &NumericalControls,
) -> Result<f64> {
    Ok(solve_point(desc, omega, theta, controls, Engine::Auto)?[pol.index()].e)
}

/// Polarization channel of a map: either one of the two or their mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    S,
    P,
    Average,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::S, Channel::P, Channel::Average];

    pub fn name(self) -> &'static str {
        match self {
            Channel::S => "s",
            Channel::P => "p",
            Channel::Average => "avg",
        }
    }
}

/// Spectra on an `ω × θ` grid, stored row-major by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissivityMap {
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
    pub points: Vec<[SpectrumPoint; 2]>,
}

impl EmissivityMap {
    pub fn point(&self, i_omega: usize, i_theta: usize) -> &[SpectrumPoint; 2] {
        &self.points[i_omega * self.theta.len() + i_theta]
    }

    pub fn e(&self, channel: Channel, i_omega: usize, i_theta: usize) -> f64 {
        let [s, p] = self.point(i_omega, i_theta);
        match channel {
            Channel::S => s.e,
            Channel::P => p.e,
            Channel::Average => 0.5 * (s.e + p.e),
        }
    }

    /// Emissivity spectrum at one angle.
    pub fn spectrum(&self, channel: Channel, i_theta: usize) -> Vec<f64> {
        (0..self.omega.len()).map(|i| self.e(channel, i, i_theta)).collect()
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{name} grid has non-finite values")));
    }
    let up = g.windows(2).all(|w| w[1] > w[0]);
    let down = g.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::invalid(format!("{name} grid must be strictly monotone")));
    }
    Ok(())
}

/// Solve every grid point in parallel. The result does not depend on the
/// scheduling; on failure the error of the first failing point in grid
/// order is returned.
pub fn angular_map(
    desc: &StackDescription,
    omega: &[f64],
    theta: &[f64],
    controls: &NumericalControls,
    engine: Engine,
) -> Result<EmissivityMap> {
    check_grid("frequency", omega)?;
    check_grid("angle", theta)?;
    desc.validate()?;
    controls.validate()?;
    let nt = theta.len();
    let results: Vec<Result<[SpectrumPoint; 2]>> = (0..omega.len() * nt)
        .into_par_iter()
        .map(|k| solve_point(desc, omega[k / nt], theta[k % nt], controls, engine))
        .collect();
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EmissivityMap {
        omega: omega.to_vec(),
        theta: theta.to_vec(),
        points,
    })
}

/// A contiguous low-emissivity interval with interpolated edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopBand {
    pub lo: f64,
    pub hi: f64,
}

impl StopBand {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Maximal runs of `e < threshold` on an increasing grid. A run only counts
/// when samples at or above the threshold bound it on both sides, so a
/// spectrum that is low everywhere has no stop band.
pub fn stop_bands(omega: &[f64], e: &[f64], threshold: f64) -> Vec<StopBand> {
    assert_eq!(omega.len(), e.len());
    let cross = |i: usize, j: usize| {
        // threshold crossing between samples i and j
        let t = (threshold - e[i]) / (e[j] - e[i]);
        omega[i] + t * (omega[j] - omega[i])
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < e.len() {
        if e[i] >= threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < e.len() && e[i] < threshold {
            i += 1;
        }
        if start > 0 && i < e.len() {
            out.push(StopBand {
                lo: cross(start - 1, start),
                hi: cross(i - 1, i),
            });
        }
    }
    out
}

/// The widest stop band, if any.
pub fn main_stop_band(omega: &[f64], e: &[f64], threshold: f64) -> Option<StopBand> {
    stop_bands(omega, e, threshold)
        .into_iter()
        .max_by(|a, b| a.width().total_cmp(&b.width()))
}

/// Largest emissivity within one band width of either edge of `band`.
pub fn band_edge_peak(omega: &[f64], e: &[f64], band: &StopBand) -> f64 {
    let w = band.width();
    omega
        .iter()
        .zip(e)
        .filter(|(o, _)| (**o >= band.lo - w && **o <= band.lo) || (**o >= band.hi && **o <= band.hi + w))
        .map(|(_, e)| *e)
        .fold(f64::NAN, f64::max)
}

/// Planck shape `x³ / (eˣ - 1)`.
pub fn planck_b(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x * x * x / x.exp_m1()
}

/// `∫₀^∞ b(x) dx = π⁴/15`.
pub const PLANCK_INTEGRAL: f64 = 6.493_939_402_266_829;

/// Location of the maximum of `b`: Newton iteration on `b'(x) = 0`, which
/// reduces to `x = 3 (1 - e^{-x})`.
pub fn planck_peak() -> f64 {
    let mut x = 3.0f64;
    for _ in 0..50 {
        let g = x - 3.0 * (-(-x).exp_m1());
        let dg = 1.0 - 3.0 * (-x).exp();
        let step = g / dg;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanckWeighted {
    pub omega: Vec<f64>,
    /// `E(ω) b(ω/x₀)`, scaled so that `E ≡ 1` integrates to one over the grid.
    pub power: Vec<f64>,
    /// Fraction of the full Planck integral that the grid spans.
    pub coverage: f64,
    /// Set when the coverage is below [`MIN_PLANCK_COVERAGE`].
    pub low_coverage: bool,
}

pub const MIN_PLANCK_COVERAGE: f64 = 0.8;

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Weight an emissivity spectrum by the blackbody spectrum at scale `x0`
/// (`x = ω / x0`).
pub fn planck_weight(omega: &[f64], e: &[f64], x0: f64) -> Result<PlanckWeighted> {
    if omega.len() != e.len() {
        return Err(Error::invalid("frequency and emissivity lengths differ"));
    }
    if omega.len() < 2 || !omega.windows(2).all(|w| w[1] > w[0]) || omega[0] < 0.0 {
        return Err(Error::invalid(
            "Planck weighting needs an increasing grid of at least two non-negative frequencies",
        ));
    }
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::invalid(format!("temperature scale {x0} must be > 0")));
    }
    let b: Vec<f64> = omega.iter().map(|w| planck_b(w / x0)).collect();
    let norm = trapezoid(omega, &b);
    if !(norm > 0.0) {
        return Err(Error::invalid("the Planck spectrum vanishes on this grid"));
    }
    let coverage = norm / (x0 * PLANCK_INTEGRAL);
    let low_coverage = coverage < MIN_PLANCK_COVERAGE;
    if low_coverage {
        log::warn!("grid spans only {:.1}% of the Planck integral", 100.0 * coverage);
    }
    Ok(PlanckWeighted {
        omega: omega.to_vec(),
        power: e.iter().zip(&b).map(|(e, b)| e * b / norm).collect(),
        coverage,
        low_coverage,
    })
}
