use secrisk_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

fn corpus() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus")
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(secrisk_last_error_message()) }.to_str().unwrap().to_string()
}

fn scanner(root: &Path) -> *mut SecriskScanner {
    let mut s = ptr::null_mut();
    let root = c(root.to_str().unwrap());
    assert_eq!(unsafe { secrisk_scanner_new(root.as_ptr(), &mut s) }, SecriskStatus::Ok);
    for (k, v) in [("offline", "true"), ("dns_fixture", "dns.txt"), ("scan_fixture", "scan.txt")] {
        let v = if v.ends_with(".txt") { corpus().join(v).to_string_lossy().into_owned() } else { v.to_string() };
        assert_eq!(unsafe { secrisk_scanner_set(s, c(k).as_ptr(), c(&v).as_ptr()) }, SecriskStatus::Ok);
    }
    s
}

#[test]
fn scan_through_handle() {
    let trio = corpus().join("../fixtures/table3");
    let s = scanner(&trio);
    let mut json = ptr::null_mut();
    let mut code = -1;
    assert_eq!(unsafe { secrisk_scanner_run(s, &mut json, &mut code) }, SecriskStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    unsafe { secrisk_string_free(json) };
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["findings"][0]["risk_score"], 1600);
    assert!(text.contains("Fm**dj"));

    assert_eq!(unsafe { secrisk_scanner_set(s, c("ease_mapping").as_ptr(), c("table3").as_ptr()) }, SecriskStatus::Ok);
    assert_eq!(unsafe { secrisk_scanner_run(s, &mut json, ptr::null_mut()) }, SecriskStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_string();
    unsafe { secrisk_string_free(json) };
    assert!(text.contains("\"risk_score\": 320"));
    unsafe { secrisk_scanner_free(s) };
}

#[test]
fn errors_carry_status_and_message() {
    let s = scanner(&corpus());
    assert_eq!(unsafe { secrisk_scanner_set(s, c("no_such_key").as_ptr(), c("1").as_ptr()) }, SecriskStatus::InvalidConfig);
    assert!(last_error().contains("no_such_key"), "{}", last_error());
    assert_eq!(unsafe { secrisk_scanner_set(s, ptr::null(), c("1").as_ptr()) }, SecriskStatus::NullPointer);
    let bad = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { secrisk_scanner_set(s, bad.as_ptr() as *const _, c("1").as_ptr()) }, SecriskStatus::InvalidUtf8);
    assert_eq!(unsafe { secrisk_scanner_set(s, c("offline").as_ptr(), c("true").as_ptr()) }, SecriskStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { secrisk_scanner_free(s) };

    let missing = scanner(Path::new("/no/such/root"));
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { secrisk_scanner_run(missing, &mut json, ptr::null_mut()) }, SecriskStatus::Io);
    assert!(json.is_null());
    unsafe { secrisk_scanner_free(missing) };
    assert_eq!(unsafe { secrisk_scanner_run(ptr::null(), &mut json, ptr::null_mut()) }, SecriskStatus::NullPointer);
    unsafe { secrisk_scanner_free(ptr::null_mut()) };
    unsafe { secrisk_string_free(ptr::null_mut()) };
}

#[test]
fn scores_and_similarity() {
    let mut out = 0u32;
    for (v, e, want) in [("HIGH", "VERY_DIFFICULT", 100), ("LOW", "DIFFICULT", 40), ("MODERATE", "DIFFICULT", 320), ("HIGH", "DIFFICULT", 800)] {
        assert_eq!(unsafe { secrisk_risk_score(c(v).as_ptr(), c(e).as_ptr(), &mut out) }, SecriskStatus::Ok);
        assert_eq!(out, want);
    }
    assert_eq!(unsafe { secrisk_risk_score(c("CRITICAL").as_ptr(), c("EASY").as_ptr(), &mut out) }, SecriskStatus::InvalidArgument);
    let (mut jw, mut ro) = (0.0, 0.0);
    assert_eq!(unsafe { secrisk_similarity(c("MARTHA").as_ptr(), c("MARHTA").as_ptr(), &mut jw, &mut ro) }, SecriskStatus::Ok);
    assert!((jw - 0.961_111_111_111_111).abs() < 1e-12);
    assert!((ro - 5.0 / 6.0).abs() < 1e-12);
    let v = unsafe { CStr::from_ptr(secrisk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
