use std::ffi::{c_void, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gdpa_ffi::*;

fn last_error() -> String {
    let p = gdpa_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn analytic(id: &str) -> *mut GdpaProblem {
    let id = CString::new(id).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { gdpa_problem_analytic(id.as_ptr(), &mut p) }, GdpaStatus::Ok);
    p
}

#[test]
fn solves_analytic_problem_through_handles() {
    let p = analytic("scaled-1d");
    let cfg = GdpaSolverConfig {
        max_iters: 2000,
        ..gdpa_config_default()
    };
    let mut res = ptr::null_mut();
    let status = unsafe { gdpa_solve(p, &cfg, [0.0].as_ptr(), 1, &mut res) };
    assert_eq!(status, GdpaStatus::Ok);
    unsafe {
        assert_eq!(gdpa_result_vector_len(res, GdpaVector::XFinal), 1);
        assert_eq!(gdpa_result_vector_len(res, GdpaVector::LambdaFinal), 1);
        let mut x = [0.0];
        assert_eq!(gdpa_result_vector(res, GdpaVector::XFinal, x.as_mut_ptr(), 1), GdpaStatus::Ok);
        assert!((x[0] - 1.0).abs() < 0.2, "{x:?}");
        let mut term = GdpaTermination::FeasibilityStop;
        assert_eq!(gdpa_result_termination(res, &mut term), GdpaStatus::Ok);
        assert_eq!(term, GdpaTermination::BudgetExhausted);
        assert_eq!(gdpa_result_iterations(res), 2000);
        let n = gdpa_result_trace_len(res);
        assert!(n > 0);
        let mut rec = std::mem::zeroed::<GdpaIterationRecord>();
        assert_eq!(gdpa_result_trace_record(res, 0, &mut rec), GdpaStatus::Ok);
        assert_eq!(rec.r, 1);
        assert_eq!(gdpa_result_trace_record(res, n, &mut rec), GdpaStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        let mut wrong = [0.0; 2];
        assert_eq!(
            gdpa_result_vector(res, GdpaVector::XAverage, wrong.as_mut_ptr(), 2),
            GdpaStatus::InvalidArgument
        );
        gdpa_result_free(res);
        gdpa_problem_free(p);
    }
}

unsafe extern "C" fn quad_f(x: *const f64, d: usize, _: *mut c_void) -> f64 {
    std::slice::from_raw_parts(x, d).iter().map(|v| (v - 3.0) * (v - 3.0)).sum()
}

unsafe extern "C" fn quad_grad(x: *const f64, d: usize, out: *mut f64, n: usize, _: *mut c_void) {
    let x = std::slice::from_raw_parts(x, d);
    let out = std::slice::from_raw_parts_mut(out, n);
    for (o, v) in out.iter_mut().zip(x) {
        *o = 2.0 * (v - 3.0);
    }
}

unsafe extern "C" fn sum_g(x: *const f64, d: usize, out: *mut f64, _: usize, user: *mut c_void) {
    let cap = *(user as *const f64);
    *out = std::slice::from_raw_parts(x, d).iter().sum::<f64>() - cap;
}

unsafe extern "C" fn sum_jac(_: *const f64, _: usize, out: *mut f64, n: usize, _: *mut c_void) {
    std::slice::from_raw_parts_mut(out, n).fill(1.0);
}

#[test]
fn callback_problem_with_box_and_user_data() {
    let mut cap = 4.0f64;
    let mut p = ptr::null_mut();
    let status = unsafe {
        gdpa_problem_from_callbacks(
            2,
            1,
            Some(quad_f),
            Some(quad_grad),
            Some(sum_g),
            Some(sum_jac),
            &mut cap as *mut f64 as *mut c_void,
            &mut p,
        )
    };
    assert_eq!(status, GdpaStatus::Ok);
    unsafe {
        let (lo, hi) = ([0.0, 0.0], [10.0, 10.0]);
        assert_eq!(gdpa_problem_set_box(p, lo.as_ptr(), hi.as_ptr(), 2), GdpaStatus::Ok);
        assert_eq!(gdpa_problem_set_box(p, hi.as_ptr(), lo.as_ptr(), 2), GdpaStatus::InvalidArgument);

        let pts = [0.5, 1.0, 2.0, 3.0, 7.0, 1.0];
        let (mut ge, mut je) = (f64::NAN, f64::NAN);
        assert_eq!(gdpa_check_gradients(p, pts.as_ptr(), 3, 1e-6, &mut ge, &mut je), GdpaStatus::Ok);
        assert!(ge < 1e-8 && je < 1e-8, "{ge} {je}");

        let cfg = GdpaSolverConfig {
            beta0: 10.0,
            alpha01: 0.5,
            alpha03: 10.0,
            max_iters: 20_000,
            ..gdpa_config_default()
        };
        let mut res = ptr::null_mut();
        assert_eq!(gdpa_solve(p, &cfg, [9.0, 9.0].as_ptr(), 2, &mut res), GdpaStatus::Ok);
        let mut x = [0.0; 2];
        gdpa_result_vector(res, GdpaVector::XFinal, x.as_mut_ptr(), 2);
        // min ‖x − 3‖² s.t. x₁ + x₂ ≤ 4: x* = (2, 2)
        assert!((x[0] - 2.0).abs() < 0.05 && (x[1] - 2.0).abs() < 0.05, "{x:?}");
        gdpa_result_free(res);
        gdpa_problem_free(p);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(gdpa_problem_analytic(ptr::null(), &mut p), GdpaStatus::NullPointer);
        let bad = CString::new("no-such-problem").unwrap();
        assert_eq!(gdpa_problem_analytic(bad.as_ptr(), &mut p), GdpaStatus::InvalidArgument);
        assert!(last_error().contains("no-such-problem"));
        assert_eq!(
            gdpa_problem_from_callbacks(1, 1, Some(quad_f), Some(quad_grad), None, None, ptr::null_mut(), &mut p),
            GdpaStatus::NullPointer
        );

        let p = analytic("circle-exterior");
        let mut res = ptr::null_mut();
        let cfg = gdpa_config_default();
        // wrong dimension
        assert_eq!(gdpa_solve(p, &cfg, [0.0].as_ptr(), 1, &mut res), GdpaStatus::InvalidArgument);
        let bad_cfg = GdpaSolverConfig { tau: 1.5, ..cfg };
        assert_eq!(gdpa_solve(p, &bad_cfg, [0.0, 0.0].as_ptr(), 2, &mut res), GdpaStatus::InvalidArgument);
        assert!(last_error().contains("tau"));
        assert_eq!(gdpa_solve(p, ptr::null(), [0.0, 0.0].as_ptr(), 2, &mut res), GdpaStatus::NullPointer);
        assert!(res.is_null());
        assert_eq!(gdpa_result_t_eps(ptr::null()), -1);
        gdpa_problem_free(p);
        gdpa_problem_free(ptr::null_mut());
        gdpa_result_free(ptr::null_mut());
    }
}

fn header_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("gdpa.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header_path()).unwrap();
    for needle in [
        "typedef struct GdpaProblem GdpaProblem;",
        "typedef struct GdpaResult GdpaResult;",
        "GDPA_STATUS_NUMERICAL_FAILURE = 3",
        "gdpa_solve(",
        "gdpa_problem_from_callbacks(",
        "gdpa_last_error_message(void)",
        "gdpa_check_gradients(",
        "size_t",
    ] {
        assert!(h.contains(needle), "header lacks {needle}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "gdpa.h"
int main(void) {
    GdpaProblem *p = NULL;
    if (gdpa_problem_analytic("halfspace-quadratic", &p) != GDPA_STATUS_OK) return 1;
    GdpaSolverConfig cfg = gdpa_config_default();
    cfg.max_iters = 500;
    double x0[2] = {0.0, 0.0};
    GdpaResult *r = NULL;
    if (gdpa_solve(p, &cfg, x0, 2, &r) != GDPA_STATUS_OK) return 2;
    double x[2];
    if (gdpa_result_vector(r, GDPA_VECTOR_X_FINAL, x, 2) != GDPA_STATUS_OK) return 3;
    printf("%.6f %.6f\n", x[0], x[1]);
    gdpa_result_free(r);
    gdpa_problem_free(p);
    return 0;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().unwrap().parent().unwrap();
    let lib = target_dir.join("libgdpa_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.path().join("main");
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header_path().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    let vals: Vec<f64> = text.split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(vals.len(), 2);
    assert!(vals.iter().all(|v| (v - 0.5).abs() < 0.1), "{vals:?}");
}
