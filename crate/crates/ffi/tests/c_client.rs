//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "stagecraft.h"

int main(void) {
    StcModel *truth = NULL, *fit = NULL;
    StcDataset *data = NULL;
    if (stc_simulate(3, NULL, 0.5, 500, 42, &truth, &data) != STC_STATUS_OK) return 1;
    if (stc_learn(data, "marginal", "X1,X2,X3", 0.0, &fit) != STC_STATUS_OK) return 2;
    double bic = 0.0;
    if (stc_model_bic(fit, data, &bic) != STC_STATUS_OK) return 3;
    if (!stc_model_is_simple(fit)) return 4;
    StcModel *bad = NULL;
    if (stc_model_from_json("{}", &bad) != STC_STATUS_PARSE) return 5;
    if (strlen(stc_last_error()) == 0) return 6;
    printf("bic=%.6f stages=%zu\n", bic, stc_model_num_stages(fit));
    stc_model_free(fit);
    stc_model_free(truth);
    stc_dataset_free(data);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn find_static_lib(dir: &Path) -> Option<PathBuf> {
    [dir.join("libstagecraft_ffi.a"), dir.join("deps/libstagecraft_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
}

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let lib = find_static_lib(&target_dir()).expect("static library is built alongside the tests");
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("client.c");
    let exe = tmp.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C client failed to compile");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C client exited with {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("bic="), "{stdout}");
}
