use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "cf.h"

int main(void) {
    CfCircuit *p = NULL, *r = NULL;
    char *count = NULL, *bad = NULL;
    bool eq = false;
    if (cf_gen_perm(3, &p) != CF_STATUS_OK) return 1;
    if (cf_count_parse_trees(p, &count) != CF_STATUS_OK) return 2;
    if (strcmp(count, "6") != 0) return 3;
    cf_string_free(count);
    if (cf_reduce_to_depth4(p, 0, &r, NULL) != CF_STATUS_OK) return 4;
    if (cf_equivalent(p, r, 1, &eq) != CF_STATUS_OK || !eq) return 5;
    if (cf_circuit_parse("mul m x\n", &r) != CF_STATUS_PARSE) return 6;
    if (cf_last_error() == NULL) return 7;
    if (cf_circuit_to_text(NULL, &bad) != CF_STATUS_NULL_POINTER) return 8;
    cf_circuit_free(p);
    cf_circuit_free(r);
    puts("ok");
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libcf_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("a C compiler is installed");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
