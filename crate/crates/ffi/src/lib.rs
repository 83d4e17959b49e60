//! C ABI over the opalite solver.
//!
//! Scenes live behind an opaque `OpaliteScene` handle created from a config
//! text or a preset name and released with `opalite_scene_free`. Every call
//! returns an `OpaliteStatus`; on failure `opalite_last_error` gives the
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use opalite::emissivity::{angular_map, planck_b, solve_point, Channel};
use opalite::mie::{mie_cross_sections, CrossSections, Material, SphereScatterer};
use opalite::numeric::C64;
use opalite::scene::{parse_config, preset, Scene};
use opalite::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpaliteStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Singular = 4,
    Convergence = 5,
    Eigen = 6,
    NotApplicable = 7,
    Io = 8,
    Internal = 9,
    Panic = 10,
}

/// Opaque scene handle.
pub struct OpaliteScene {
    scene: Scene,
}

/// Reflectance, transmittance, absorbance and emissivity at one point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OpalitePoint {
    pub r: f64,
    pub t: f64,
    pub a: f64,
    pub e: f64,
}

/// Extinction, scattering and absorption efficiencies.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OpaliteEfficiencies {
    pub ext: f64,
    pub sca: f64,
    pub abs: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|b| *b != 0));
    });
}

fn status_of(err: &Error) -> OpaliteStatus {
    match err {
        Error::InvalidArgument(_) | Error::SingularArgument(_) => OpaliteStatus::InvalidArgument,
        Error::Convergence(_) => OpaliteStatus::Convergence,
        Error::Singular { .. } => OpaliteStatus::Singular,
        Error::Eigen(_) => OpaliteStatus::Eigen,
        Error::Internal(_) => OpaliteStatus::Internal,
        Error::AtPoint { source, .. } => status_of(source),
        Error::Config { .. } | Error::ConfigList(_) => OpaliteStatus::Config,
        Error::Io(_) => OpaliteStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (OpaliteStatus, String)>) -> OpaliteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OpaliteStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside opalite");
            OpaliteStatus::Panic
        }
    }
}

fn lift(e: Error) -> (OpaliteStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (OpaliteStatus, String) {
    (OpaliteStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (OpaliteStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (OpaliteStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn opalite_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn opalite_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a scene from config text.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opalite_scene_from_config(
    config: *const c_char,
    out: *mut *mut OpaliteScene,
) -> OpaliteStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let scene = parse_config(text(config, "config")?).map_err(lift)?;
        *out = Box::into_raw(Box::new(OpaliteScene { scene }));
        Ok(())
    })
}

/// Loads a built-in scene (`paper-fig2`, `paper-fig3`, `paper-fig4`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opalite_scene_from_preset(name: *const c_char, out: *mut *mut OpaliteScene) -> OpaliteStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let scene = preset(text(name, "name")?).map_err(lift)?;
        *out = Box::into_raw(Box::new(OpaliteScene { scene }));
        Ok(())
    })
}

/// Releases a scene. Null is ignored.
///
/// # Safety
/// `scene` must come from one of the constructors and not be used again.
#[no_mangle]
pub unsafe extern "C" fn opalite_scene_free(scene: *mut OpaliteScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Sets the multipole order; `cutoff <= 0` restores the automatic beam
/// cutoff.
///
/// # Safety
/// `scene` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn opalite_scene_set_numerics(scene: *mut OpaliteScene, lmax: u32, cutoff: f64) -> OpaliteStatus {
    guard(|| {
        let s = scene.as_mut().ok_or_else(|| null("scene"))?;
        let mut n = s.scene.numerics.clone();
        n.lmax = lmax as usize;
        n.cutoff = (cutoff > 0.0).then_some(cutoff);
        let mut trial = s.scene.clone();
        trial.numerics = n;
        trial.controls().validate().map_err(lift)?;
        s.scene = trial;
        Ok(())
    })
}

/// Number of frequencies and angles in the scene's sweep grid.
///
/// # Safety
/// `scene` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn opalite_scene_grid_size(
    scene: *const OpaliteScene,
    n_omega: *mut usize,
    n_theta: *mut usize,
) -> OpaliteStatus {
    guard(|| {
        let s = scene.as_ref().ok_or_else(|| null("scene"))?;
        if n_omega.is_null() || n_theta.is_null() {
            return Err(null("output"));
        }
        *n_omega = s.scene.omega_grid().len();
        *n_theta = s.scene.theta_grid().len();
        Ok(())
    })
}

/// `R, T, A, E` at angular frequency `omega` (`ω a / c`) and polar angle
/// `theta` (radians). `pol` is 0 for s, 1 for p.
///
/// # Safety
/// `scene` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opalite_solve_point(
    scene: *const OpaliteScene,
    omega: f64,
    theta: f64,
    pol: u32,
    out: *mut OpalitePoint,
) -> OpaliteStatus {
    guard(|| {
        let s = scene.as_ref().ok_or_else(|| null("scene"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if pol > 1 {
            return Err((
                OpaliteStatus::InvalidArgument,
                format!("pol = {pol} must be 0 (s) or 1 (p)"),
            ));
        }
        let desc = s.scene.description().map_err(lift)?;
        let pts = solve_point(&desc, omega, theta, &s.scene.controls(), s.scene.numerics.engine).map_err(lift)?;
        let p = pts[pol as usize];
        *out = OpalitePoint {
            r: p.r,
            t: p.t,
            a: p.a,
            e: p.e,
        };
        Ok(())
    })
}

/// Emissivity on a grid. `e_s`, `e_p` receive `n_omega * n_theta` values,
/// frequency-major (`e[i * n_theta + j]`).
///
/// # Safety
/// Grids must hold the stated counts; outputs must hold their product.
#[no_mangle]
pub unsafe extern "C" fn opalite_emissivity_map(
    scene: *const OpaliteScene,
    omega: *const f64,
    n_omega: usize,
    theta: *const f64,
    n_theta: usize,
    e_s: *mut f64,
    e_p: *mut f64,
) -> OpaliteStatus {
    guard(|| {
        let s = scene.as_ref().ok_or_else(|| null("scene"))?;
        if omega.is_null() || theta.is_null() || e_s.is_null() || e_p.is_null() {
            return Err(null("grid or output"));
        }
        let om = std::slice::from_raw_parts(omega, n_omega);
        let th = std::slice::from_raw_parts(theta, n_theta);
        let desc = s.scene.description().map_err(lift)?;
        let map = angular_map(&desc, om, th, &s.scene.controls(), s.scene.numerics.engine).map_err(lift)?;
        let es = std::slice::from_raw_parts_mut(e_s, n_omega * n_theta);
        let ep = std::slice::from_raw_parts_mut(e_p, n_omega * n_theta);
        for i in 0..n_omega {
            for j in 0..n_theta {
                es[i * n_theta + j] = map.e(Channel::S, i, j);
                ep[i * n_theta + j] = map.e(Channel::P, i, j);
            }
        }
        Ok(())
    })
}

/// Efficiencies of a single sphere. Returns `NotApplicable` for an
/// absorbing host.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn opalite_mie_efficiencies(
    radius: f64,
    eps_sphere_re: f64,
    eps_sphere_im: f64,
    eps_host_re: f64,
    eps_host_im: f64,
    omega: f64,
    out: *mut OpaliteEfficiencies,
) -> OpaliteStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let inside = Material::new(C64::new(eps_sphere_re, eps_sphere_im)).map_err(lift)?;
        let host = Material::new(C64::new(eps_host_re, eps_host_im)).map_err(lift)?;
        let sphere = SphereScatterer::new(radius, inside, host).map_err(lift)?;
        match mie_cross_sections(&sphere, omega).map_err(lift)? {
            CrossSections::Defined(e) => {
                *out = OpaliteEfficiencies {
                    ext: e.ext,
                    sca: e.sca,
                    abs: e.abs,
                };
                Ok(())
            }
            CrossSections::NotApplicable => Err((
                OpaliteStatus::NotApplicable,
                "efficiencies are not defined in an absorbing host".into(),
            )),
        }
    })
}

/// Planck shape `x³ / (eˣ - 1)`.
#[no_mangle]
pub extern "C" fn opalite_planck_b(x: f64) -> f64 {
    planck_b(x)
}
