use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pconvex_ffi::*;

fn last_error() -> String {
    let p = pcx_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn pball(w: &[f64], p: f64) -> *mut PcxBody {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { pcx_body_pball(w.as_ptr(), w.len(), p, &mut b) }, PcxStatus::Ok);
    b
}

#[test]
fn gauge_matches_power_sum() {
    let b = pball(&[1.0, 2.0], 0.5);
    let x = [0.25, -0.09];
    let mut g = 0.0;
    assert_eq!(unsafe { pcx_gauge(b, x.as_ptr(), 2, 1e-12, &mut g) }, PcxStatus::Ok);
    assert!((g - (0.5 + 2.0 * 0.3)).abs() < 1e-10);
    assert_eq!(unsafe { pcx_body_dim(b) }, 2);
    unsafe { pcx_body_free(b) };
}

#[test]
fn retract_lands_on_boundary_in_place() {
    let b = pball(&[1.0, 1.0], 1.0);
    let mut x = [3.0, 1.0];
    let xp = x.as_mut_ptr();
    assert_eq!(unsafe { pcx_retract(b, xp, 2, 1e-12, xp) }, PcxStatus::Ok);
    assert!((x[0] - 0.75).abs() < 1e-9 && (x[1] - 0.25).abs() < 1e-9);
    let mut inside = 0;
    assert_eq!(unsafe { pcx_contains(b, x.as_ptr(), 2, &mut inside) }, PcxStatus::Ok);
    assert_eq!(inside, 1);
    unsafe { pcx_body_free(b) };
}

#[test]
fn invalid_exponent_reports_message() {
    let mut b = ptr::null_mut();
    let st = unsafe { pcx_body_euclidean_disk(2, 1.0, 1.5, &mut b) };
    assert_eq!(st, PcxStatus::InvalidArgument);
    assert!(b.is_null());
    assert!(last_error().contains("p must lie in (0,1]"));
    let (mut s, mut t) = (0.0, 0.0);
    assert_eq!(unsafe { pcx_admissible_pair(0.5, 0.25, &mut s, &mut t) }, PcxStatus::Ok);
    assert!(pcx_last_error().is_null());
    assert!((s - 0.0625).abs() < 1e-15 && (t - 0.5625).abs() < 1e-15);
}

#[test]
fn null_and_dimension_errors() {
    let mut g = 0.0;
    assert_eq!(unsafe { pcx_gauge(ptr::null(), [0.0].as_ptr(), 1, 1e-9, &mut g) }, PcxStatus::NullPointer);
    let b = pball(&[1.0, 1.0], 0.5);
    let mut m = 0;
    assert_eq!(unsafe { pcx_contains(b, [0.0; 3].as_ptr(), 3, &mut m) }, PcxStatus::DimensionMismatch);
    unsafe {
        pcx_body_free(b);
        pcx_body_free(ptr::null_mut());
    }
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios")
}

#[test]
fn run_scenario_writes_report_and_maps_errors() {
    let dir = tempfile_dir("run");
    let cfg = CString::new(scenarios().join("geometry.json").to_str().unwrap()).unwrap();
    let out = CString::new(dir.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pcx_run_scenario(cfg.as_ptr(), out.as_ptr(), 3, 1, 0) }, PcxStatus::Ok, "{:?}", pcx_last_error());
    let report = std::fs::read_to_string(dir.join("report.json")).unwrap();
    assert!(report.contains("\"seed\": 3"));
    let missing = CString::new("/nonexistent.json").unwrap();
    assert_eq!(unsafe { pcx_run_scenario(missing.as_ptr(), out.as_ptr(), 0, 0, 0) }, PcxStatus::Io);
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"name\":\"x\",\"seed\":1,\"space\":{\"dim\":2,\"p\":2},\"body\":{\"key\":\"pball\"},\"tasks\":[]}").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { pcx_run_scenario(bad.as_ptr(), out.as_ptr(), 0, 0, 0) }, PcxStatus::InvalidConfig);
    assert!(last_error().contains("space.p"));
    std::fs::remove_dir_all(dir).ok();
}

fn tempfile_dir(tag: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("ffi-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "pconvex.h"
int main(void) {
    double w[2] = {1.0, 1.0};
    PcxBody *b = NULL;
    if (pcx_body_pball(w, 2, 0.5, &b) != PCX_STATUS_OK) return 1;
    double x[2] = {0.25, 0.25};
    double g = 0.0;
    if (pcx_gauge(b, x, 2, 1e-12, &g) != PCX_STATUS_OK) return 2;
    pcx_body_free(b);
    if (pcx_body_euclidean_disk(2, 1.0, 0.0, &b) != PCX_STATUS_INVALID_ARGUMENT) return 3;
    printf("%.12f %s\n", g, pcx_last_error());
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(header_dir.join("pconvex.h")).unwrap();
    for f in ["pcx_body_pball", "pcx_gauge", "pcx_retract", "pcx_admissible_pair", "pcx_run_scenario", "pcx_last_error", "PCX_STATUS_OK"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    // target/<profile>/deps/abi-xxxx -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libpconvex_ffi.a");
    if !lib.exists() {
        let st = Command::new(env!("CARGO")).args(["build", "-p", "pconvex-ffi", "--lib"]).status().unwrap();
        assert!(st.success());
    }
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile_dir("c");
    let src = dir.join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.join("main");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let st = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("1.000000000000 "), "{text}");
    assert!(text.contains("p must lie in (0,1]"));
    std::fs::remove_dir_all(dir).ok();
}
