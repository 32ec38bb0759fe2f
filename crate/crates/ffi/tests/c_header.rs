//! Compiles a small C program against the generated header and the static
//! library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "secrisk.h"

int main(void) {
    uint32_t score = 0;
    if (secrisk_risk_score("MODERATE", "DIFFICULT", &score) != SECRISK_STATUS_OK || score != 320) return 1;
    if (secrisk_risk_score("nope", "EASY", &score) != SECRISK_STATUS_INVALID_ARGUMENT) return 2;
    if (strlen(secrisk_last_error_message()) == 0) return 3;
    SecriskScanner *s = NULL;
    if (secrisk_scanner_new("/no/such/root", &s) != SECRISK_STATUS_OK) return 4;
    char *json = NULL;
    if (secrisk_scanner_run(s, &json, NULL) != SECRISK_STATUS_IO) return 5;
    secrisk_scanner_free(s);
    printf("%s\n", secrisk_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libsecrisk_ffi.a");
    assert!(lib.is_file(), "missing {}", lib.display());
    let work = Path::new(env!("CARGO_TARGET_TMPDIR")).join("c_header");
    std::fs::create_dir_all(&work).unwrap();
    let src = work.join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = work.join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("run cc");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), env!("CARGO_PKG_VERSION"));
}
