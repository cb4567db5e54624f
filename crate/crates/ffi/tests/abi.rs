use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use heun_ffi::*;

fn params(a: f64, q: f64, alpha: f64, beta: f64, gamma: f64, delta: f64) -> *mut HeunParamsHandle {
    let mut h = ptr::null_mut();
    let s = unsafe { heun_params_new(a, q, alpha, beta, gamma, delta, &mut h) };
    assert_eq!(s, HeunStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> String {
    let p = heun_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn blank() -> HeunValue {
    HeunValue { value: f64::NAN, d1: f64::NAN, d2: f64::NAN, error_estimate: f64::NAN, terms_used: 0 }
}

#[test]
fn closed_form_member_through_every_method() {
    // y = 2/(2-x)
    let p = params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0);
    for method in [HeunMethod::Frobenius, HeunMethod::Trf, HeunMethod::Rk] {
        let mut v = blank();
        let s = unsafe { heun_eval(p, HeunBranch::First, method, 0.1, &mut v) };
        assert_eq!(s, HeunStatus::Ok, "{method:?}");
        assert!((v.value - 2.0 / 1.9).abs() < 1e-10, "{method:?}: {}", v.value);
        assert!(heun_last_error().is_null());
    }
    let mut eps = 0.0;
    assert_eq!(unsafe { heun_params_epsilon(p, &mut eps) }, HeunStatus::Ok);
    assert_eq!(eps, 2.0);
    unsafe { heun_params_free(p) };
}

#[test]
fn coefficients_agree_between_methods() {
    let p = params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0);
    let mut fro = [0.0; 11];
    let mut trf = [0.0; 11];
    unsafe {
        assert_eq!(heun_coeffs(p, HeunBranch::First, HeunMethod::Frobenius, 10, fro.as_mut_ptr(), 11), HeunStatus::Ok);
        assert_eq!(heun_coeffs(p, HeunBranch::First, HeunMethod::Trf, 10, trf.as_mut_ptr(), 11), HeunStatus::Ok);
    }
    for (n, (u, v)) in fro.iter().zip(&trf).enumerate() {
        assert!((u - 0.5f64.powi(n as i32)).abs() < 1e-15);
        assert!((u - v).abs() < 1e-15);
    }
    let mut short = [0.0; 3];
    let s = unsafe { heun_coeffs(p, HeunBranch::First, HeunMethod::Frobenius, 10, short.as_mut_ptr(), 3) };
    assert_eq!(s, HeunStatus::Usage);
    assert!(last_error().contains("buffer"));
    unsafe { heun_params_free(p) };
}

#[test]
fn status_codes_follow_error_classes() {
    let mut h = ptr::null_mut();
    // a = 0 is not a valid singular point
    let s = unsafe { heun_params_new(0.0, 1.0, 1.0, 2.0, 1.0, 1.0, &mut h) };
    assert_eq!(s, HeunStatus::Domain);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let p = params(2.0, 1.0, 1.0, 2.0, 1.0, 1.0);
    let mut v = blank();
    assert_eq!(unsafe { heun_eval(p, HeunBranch::First, HeunMethod::Trf, 1.0, &mut v) }, HeunStatus::Domain);

    let (mut r, mut sc) = (0.0, 0.0);
    assert_eq!(unsafe { heun_residual(p, 0.0, 1.0, 0.0, 0.0, &mut r, &mut sc) }, HeunStatus::Domain);
    assert_eq!(unsafe { heun_residual(p, 0.25, 1.0, 0.0, 0.0, &mut r, &mut sc) }, HeunStatus::Ok);
    assert!((r - (-32.0 / 21.0)).abs() < 1e-14);
    assert!(sc >= 1.0);

    assert_eq!(unsafe { heun_eval(ptr::null(), HeunBranch::First, HeunMethod::Trf, 0.1, &mut v) }, HeunStatus::NullPointer);
    assert!(last_error().contains("params"));
    assert_eq!(unsafe { heun_eval(p, HeunBranch::First, HeunMethod::Trf, 0.1, ptr::null_mut()) }, HeunStatus::NullPointer);
    unsafe { heun_params_free(p) };
    unsafe { heun_params_free(ptr::null_mut()) };
}

#[test]
fn tables_load_parse_and_evaluate() {
    let json = CString::new(
        r#"[{"name":"swap","prefactor":[{"base":"one_minus_x","exponent":"1 - delta"}],
            "arg_map":{"p":"1","r":"0","s":"0","t":"1"},
            "params":{"a":"a","q":"q - (delta - 1)*gamma*a","alpha":"beta - delta + 1",
                      "beta":"alpha - delta + 1","gamma":"gamma","delta":"2 - delta"}}]"#,
    )
    .unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { heun_table_parse(json.as_ptr(), &mut t) }, HeunStatus::Ok);
    assert_eq!(unsafe { heun_table_len(t) }, 1);

    // δ = 1 makes the record an identity on the solution
    let p = params(2.0, 0.3, 0.7, -0.4, 1.2, 1.0);
    let (mut plain, mut mapped) = (blank(), blank());
    unsafe {
        assert_eq!(heun_eval(p, HeunBranch::First, HeunMethod::Trf, 0.2, &mut plain), HeunStatus::Ok);
        assert_eq!(heun_transformed_eval(t, 0, p, HeunBranch::First, 0.2, &mut mapped), HeunStatus::Ok);
        assert!((plain.value - mapped.value).abs() < 1e-12);
        assert_eq!(heun_transformed_eval(t, 3, p, HeunBranch::First, 0.2, &mut mapped), HeunStatus::Usage);
        heun_table_free(t);
        heun_params_free(p);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    std::fs::write(&path, json.as_bytes()).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { heun_table_load(cpath.as_ptr(), &mut t) }, HeunStatus::Ok);
    assert_eq!(unsafe { heun_table_len(t) }, 1);
    unsafe { heun_table_free(t) };

    let missing = CString::new(dir.path().join("nope.json").to_str().unwrap()).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { heun_table_load(missing.as_ptr(), &mut t) }, HeunStatus::Usage);
    assert!(t.is_null());
    let bad = CString::new("{").unwrap();
    assert_eq!(unsafe { heun_table_parse(bad.as_ptr(), &mut t) }, HeunStatus::Usage);
}

#[test]
fn errors_are_per_thread() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { heun_params_new(0.0, 1.0, 1.0, 2.0, 1.0, 1.0, &mut h) }, HeunStatus::Domain);
    std::thread::spawn(|| assert!(heun_last_error().is_null())).join().unwrap();
    assert!(!heun_last_error().is_null());
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("heun.h").exists(), "header not generated");
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libheun_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "heun.h"
int main(void) {
    HeunParamsHandle *p = NULL;
    if (heun_params_new(2.0, 1.0, 1.0, 2.0, 1.0, 1.0, &p) != HEUN_STATUS_OK) return 10;
    HeunValue v;
    if (heun_eval(p, HEUN_BRANCH_FIRST, HEUN_METHOD_TRF, 0.1, &v) != HEUN_STATUS_OK) return 11;
    if (fabs(v.value - 2.0 / 1.9) > 1e-14) return 12;
    double c[4];
    if (heun_coeffs(p, HEUN_BRANCH_FIRST, HEUN_METHOD_FROBENIUS, 3, c, 4) != HEUN_STATUS_OK) return 13;
    if (fabs(c[3] - 0.125) > 1e-15) return 14;
    if (heun_eval(p, HEUN_BRANCH_FIRST, HEUN_METHOD_TRF, 1.0, &v) != HEUN_STATUS_DOMAIN) return 15;
    if (heun_last_error() == NULL) return 16;
    heun_params_free(p);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("run C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
