use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use cvwitness_ffi::*;

fn last_error() -> String {
    let p = cvw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn random(structure: Option<&str>, eta: f64) -> *mut CvwState {
    let s = structure.map(|s| CString::new(s).unwrap());
    let mut out = ptr::null_mut();
    let status = unsafe {
        cvw_state_random_structured(3, 6, s.as_ref().map_or(ptr::null(), |c| c.as_ptr()), 2, eta, 11, &mut out)
    };
    assert_eq!(status, CvwStatus::Ok, "{}", last_error());
    out
}

#[test]
fn certify_and_baselines() {
    let rho = random(None, 1.0);
    let (mut n, mut d) = (0, 0);
    assert_eq!(unsafe { cvw_state_dims(rho, &mut n, &mut d) }, CvwStatus::Ok);
    assert_eq!((n, d), (3, 6));

    let (mut certified, mut g, mut json) = (false, 0.0, ptr::null_mut());
    assert_eq!(unsafe { cvw_certify(rho, ptr::null(), 2, &mut certified, &mut g, &mut json) }, CvwStatus::Ok);
    assert!(certified && g > 0.0);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed["g"].as_f64().unwrap(), g);
    unsafe { cvw_string_free(json) };

    let k = CString::new("[[0],[1,2]]").unwrap();
    let mut lam = 0.0;
    assert_eq!(unsafe { cvw_witness_max_eigenvalue(rho, k.as_ptr(), 2, &mut lam) }, CvwStatus::Ok);
    assert!(lam >= g - 1e-12);

    let mut v = 0.0;
    assert_eq!(unsafe { cvw_van_loock(rho, &mut v) }, CvwStatus::Ok);
    assert!(v.is_finite());
    let mut pt = 0.0;
    assert_eq!(unsafe { cvw_ppt_min_eigenvalue(rho, [0usize].as_ptr(), 1, &mut pt) }, CvwStatus::Ok);
    assert!(pt < 0.0);
    unsafe { cvw_state_free(rho) };
}

#[test]
fn product_structure_has_separable_cut() {
    let rho = random(Some("[[0,1],[2]]"), 0.9);
    let k = CString::new("[[0,1],[2]]").unwrap();
    let mut lam = 1.0;
    assert_eq!(unsafe { cvw_witness_max_eigenvalue(rho, k.as_ptr(), 1, &mut lam) }, CvwStatus::Ok);
    assert!(lam <= 1e-8);
    let mut pt = -1.0;
    assert_eq!(unsafe { cvw_ppt_min_eigenvalue(rho, [2usize].as_ptr(), 1, &mut pt) }, CvwStatus::Ok);
    assert!(pt >= -1e-10);
    unsafe { cvw_state_free(rho) };
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("s.cvdm").to_str().unwrap()).unwrap();
    let rho = random(None, 1.0);
    assert_eq!(unsafe { cvw_state_save(rho, path.as_ptr()) }, CvwStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { cvw_state_load(path.as_ptr(), &mut back) }, CvwStatus::Ok);
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        cvw_van_loock(rho, &mut a);
        cvw_van_loock(back, &mut b);
        cvw_state_free(rho);
        cvw_state_free(back);
    }
    assert_eq!(a, b);
}

#[test]
fn errors_are_reported() {
    let mut out = ptr::null_mut();
    let missing = CString::new("/nonexistent/state.cvdm").unwrap();
    assert_eq!(unsafe { cvw_state_load(missing.as_ptr(), &mut out) }, CvwStatus::Io);
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { cvw_state_load(ptr::null(), &mut out) }, CvwStatus::NullPointer);
    let bad = CString::new("[[0,1]").unwrap();
    assert_eq!(
        unsafe { cvw_state_random_structured(3, 6, bad.as_ptr(), 2, 1.0, 1, &mut out) },
        CvwStatus::InvalidArgument
    );
    assert!(last_error().contains("structure"));
    assert_eq!(unsafe { cvw_state_random_structured(3, 1, ptr::null(), 2, 1.0, 1, &mut out) }, CvwStatus::InvalidArgument);
    let mut v = 0.0;
    assert_eq!(unsafe { cvw_van_loock(ptr::null(), &mut v) }, CvwStatus::NullPointer);

    let rho = random(None, 1.0);
    let (mut c, mut g) = (false, 0.0);
    assert_eq!(unsafe { cvw_certify(rho, ptr::null(), 7, &mut c, &mut g, ptr::null_mut()) }, CvwStatus::InvalidArgument);
    assert_eq!(unsafe { cvw_ppt_min_eigenvalue(rho, [5usize].as_ptr(), 1, &mut v) }, CvwStatus::InvalidArgument);
    unsafe {
        cvw_state_free(rho);
        cvw_state_free(ptr::null_mut());
        cvw_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { CStr::from_ptr(cvw_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn staticlib() -> Option<PathBuf> {
    // tests live in target/<profile>/deps; the library sits one level up.
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libcvwitness_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_demo_compiles_against_the_header() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    let demo = manifest.join("examples/demo.c");
    let Ok(check) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"]).arg(&include).arg(&demo).output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));

    let Some(lib) = staticlib() else {
        eprintln!("static library not found; link step skipped");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("demo");
    let link = Command::new("cc")
        .args(["-std=c99", "-I"])
        .arg(&include)
        .arg(&demo)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(link.status.success(), "{}", String::from_utf8_lossy(&link.stderr));
    let run = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout} {}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("certified=1"));
}
