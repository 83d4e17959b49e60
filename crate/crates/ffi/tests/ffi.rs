use std::ffi::{c_char, CString};
use std::process::Command;
use std::ptr;

use opalite_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { opalite_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(511)].iter().map(|c| *c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

const SLAB: &str = "\
[materials]
glass = 2.25
[stack]
plate = 0.3 glass
exit = halfspace vacuum
";

#[test]
fn scene_lifecycle_and_point() {
    let text = CString::new(SLAB).unwrap();
    let mut scene = ptr::null_mut();
    assert_eq!(
        unsafe { opalite_scene_from_config(text.as_ptr(), &mut scene) },
        OpaliteStatus::Ok
    );
    assert!(!scene.is_null());
    let mut p = OpalitePoint::default();
    assert_eq!(
        unsafe { opalite_solve_point(scene, 1.7, 0.3, 1, &mut p) },
        OpaliteStatus::Ok
    );
    assert!((p.r + p.t - 1.0).abs() < 1e-12 && p.r > 1e-3);
    assert_eq!(p.a, p.e);

    let (mut no, mut nt) = (0usize, 0usize);
    assert_eq!(
        unsafe { opalite_scene_grid_size(scene, &mut no, &mut nt) },
        OpaliteStatus::Ok
    );
    assert_eq!((no, nt), (101, 1));

    assert_eq!(
        unsafe { opalite_solve_point(scene, 1.7, 0.3, 2, &mut p) },
        OpaliteStatus::InvalidArgument
    );
    assert!(last_error().contains("pol"));
    assert_eq!(
        unsafe { opalite_solve_point(scene, -1.0, 0.3, 0, &mut p) },
        OpaliteStatus::InvalidArgument
    );
    assert!(last_error().contains("omega"));
    assert_eq!(
        unsafe { opalite_scene_set_numerics(scene, 0, 0.0) },
        OpaliteStatus::InvalidArgument
    );
    assert_eq!(unsafe { opalite_scene_set_numerics(scene, 5, 0.0) }, OpaliteStatus::Ok);
    unsafe { opalite_scene_free(scene) };
    unsafe { opalite_scene_free(ptr::null_mut()) };
}

#[test]
fn map_layout_matches_points() {
    let text = CString::new(SLAB).unwrap();
    let mut scene = ptr::null_mut();
    unsafe { opalite_scene_from_config(text.as_ptr(), &mut scene) };
    let om = [1.0, 2.0, 3.0];
    let th = [0.0, 0.5];
    let mut es = [0.0; 6];
    let mut ep = [0.0; 6];
    let st = unsafe { opalite_emissivity_map(scene, om.as_ptr(), 3, th.as_ptr(), 2, es.as_mut_ptr(), ep.as_mut_ptr()) };
    assert_eq!(st, OpaliteStatus::Ok);
    // lossless slab: no emission
    assert!(es.iter().chain(&ep).all(|e| e.abs() < 1e-12));
    unsafe { opalite_scene_free(scene) };
}

#[test]
fn errors_and_presets() {
    let mut scene = ptr::null_mut();
    let bad = CString::new("[stack]\nexit = halfspace vacuum\n").unwrap();
    assert_eq!(
        unsafe { opalite_scene_from_config(bad.as_ptr(), &mut scene) },
        OpaliteStatus::Config
    );
    assert!(scene.is_null());
    assert!(last_error().contains("at least one element"));
    assert_eq!(
        unsafe { opalite_scene_from_config(ptr::null(), &mut scene) },
        OpaliteStatus::NullPointer
    );
    let name = CString::new("paper-fig3").unwrap();
    assert_eq!(
        unsafe { opalite_scene_from_preset(name.as_ptr(), &mut scene) },
        OpaliteStatus::Ok
    );
    let mut p = OpalitePoint::default();
    assert_eq!(
        unsafe { opalite_solve_point(scene, 1.6, 0.0, 0, &mut p) },
        OpaliteStatus::Ok
    );
    assert!(p.e < 0.2, "{p:?}");
    unsafe { opalite_scene_free(scene) };
    let name = CString::new("nope").unwrap();
    assert_eq!(
        unsafe { opalite_scene_from_preset(name.as_ptr(), &mut scene) },
        OpaliteStatus::InvalidArgument
    );
}

#[test]
fn mie_and_planck() {
    let mut e = OpaliteEfficiencies::default();
    assert_eq!(
        unsafe { opalite_mie_efficiencies(0.3, 1.0, 0.0, 12.0, 0.0, 2.0, &mut e) },
        OpaliteStatus::Ok
    );
    assert!((e.ext - e.sca).abs() < 1e-10 && e.ext > 0.0);
    assert_eq!(
        unsafe { opalite_mie_efficiencies(0.3, 1.0, 0.0, 12.0, 0.1, 2.0, &mut e) },
        OpaliteStatus::NotApplicable
    );
    assert_eq!(opalite_planck_b(0.0), 0.0);
    let v = unsafe { std::ffi::CStr::from_ptr(opalite_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/opalite.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "opalite_scene_from_config",
        "opalite_solve_point",
        "opalite_emissivity_map",
        "OPALITE_STATUS_OK",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    match Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler; skipped syntax check"),
    }
}
