//! Compiles a small C program against the generated header and the static
//! library, then runs it. Skipped when no C compiler is installed.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "hblu.h"

int main(void) {
    size_t cp[] = {0, 2, 5, 7};
    size_t ri[] = {0, 1, 0, 1, 2, 1, 2};
    double v[] = {4, 1, 1, 4, 1, 1, 4};
    HbluMatrix *m = NULL;
    HbluPlan *p = NULL;
    HbluFactor *f = NULL;
    if (hblu_matrix_from_csc(3, cp, ri, v, &m) != HBLU_STATUS_OK) return 1;
    HbluOptions o = hblu_options_default(1);
    if (hblu_analyze(m, &o, &p) != HBLU_STATUS_OK) return 2;
    if (hblu_factor(p, m, &f) != HBLU_STATUS_OK) return 3;
    double b[] = {6, 12, 14}, x[3];
    if (hblu_solve(f, b, x, 3) != HBLU_STATUS_OK) return 4;
    for (int i = 0; i < 3; i++)
        if (fabs(x[i] - (i + 1)) > 1e-14) return 5;
    if (hblu_solve(f, b, x, 3) != HBLU_STATUS_OK) return 6;
    if (hblu_analyze(NULL, &o, &p) != HBLU_STATUS_NULL_POINTER) return 7;
    printf("%s ok\n", hblu_last_error_message());
    hblu_factor_free(f);
    hblu_plan_free(p);
    hblu_matrix_free(m);
    return 0;
}
"#;

fn find_staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [deps, deps.parent()?]
        .iter()
        .map(|d| d.join("libhblu_ffi.a"))
        .find(|p| p.exists())
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_and_solves() {
    if !have_cc() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let Some(lib) = find_staticlib() else {
        eprintln!("skipped: static library not found next to the test binary");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_program");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    let bin = dir.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "cc failed:\n{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "program exited with {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "matrix is null ok");
}
