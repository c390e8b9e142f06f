//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "gml.h"

int main(void) {
    GmlHypothesis *h = NULL;
    if (gml_hypothesis_parse("2:00,11", &h) != GML_STATUS_OK) return 10;
    uint64_t num; uint32_t log2; double v;
    if (gml_hypothesis_premeasure(h, &num, &log2, &v) != GML_STATUS_OK) return 11;
    if (num != 1 || log2 != 1) return 12;
    bool y = false;
    if (gml_hypothesis_evaluate(h, "0111", &y) != GML_STATUS_OK || y) return 13;
    gml_hypothesis_free(h);

    if (gml_hypothesis_parse("2:0", &h) != GML_STATUS_PARSE) return 14;
    if (gml_last_error() == NULL || strlen(gml_last_error()) == 0) return 15;

    double p;
    if (gml_penalty(1, 200, 0.1, GML_WEIGHTS_GEOMETRIC, &p) != GML_STATUS_OK) return 16;
    printf("%.6f\n", p);
    return 0;
}
"#;

fn has_compiler() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

fn static_lib() -> Option<PathBuf> {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libgml_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links() {
    if !has_compiler() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("gml.h").exists(), "header not generated");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();

    let Some(lib) = static_lib() else {
        let status = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&include)
            .arg(&src)
            .status()
            .unwrap();
        assert!(status.success());
        eprintln!("static library not found; checked the header only");
        return;
    };

    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.112641");
}
