//! Compile and run a small C program against the generated header and
//! the static library, exercising the ABI from actual C.

use std::path::PathBuf;
use std::process::Command;

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "trittersim.h"

int main(void) {
    TsimCircuit *circuit = NULL;
    if (tsim_circuit_ideal_tritter(&circuit) != TSIM_STATUS_OK) return 1;

    uintptr_t count = 0;
    if (tsim_pattern_count(3, 3, &count) != TSIM_STATUS_OK || count != 10) return 2;

    uintptr_t modes[3] = {0, 1, 2};
    double probs[10];
    if (tsim_distribution(circuit, modes, 3, NULL, NULL, probs, 10) != TSIM_STATUS_OK) return 3;
    /* canonical index 4 is the (1,1,1) pattern */
    if (fabs(probs[4] - 1.0 / 3.0) > 1e-10) return 4;

    double active = 0.0, passive = 0.0;
    if (tsim_demux_rates(3, 200e-9, 1.0, 0.0, 0.0, &active, &passive) != TSIM_STATUS_OK) return 5;
    if (fabs(active - 0.25) > 1e-6 || fabs(passive - 0.03125) > 1e-6) return 6;

    double eta = 0.0;
    bool anomalous = true;
    if (tsim_active_efficiency(6.6, 8.0, &eta, &anomalous) != TSIM_STATUS_OK) return 7;
    if (fabs(eta - 0.80) > 1e-12 || anomalous) return 8;

    /* error paths map to codes, not crashes */
    if (tsim_circuit_modes(NULL, &count) != TSIM_STATUS_NULL_POINTER) return 9;

    tsim_circuit_free(circuit);
    printf("ok %s\n", tsim_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = crate_dir.join("include");
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    let lib_dir = crate_dir.join("../../target").join(profile);
    let staticlib = lib_dir.join("libtrittersim_ffi.a");

    // `cargo test` links the rlib; make sure the staticlib artifact is
    // current before handing it to the C compiler.
    let mut build = Command::new(env!("CARGO"));
    build.args(["build", "-p", "trittersim-ffi"]);
    if profile == "release" {
        build.arg("--release");
    }
    let build = build.output().expect("cargo is available");
    assert!(
        build.status.success(),
        "staticlib build failed:\n{}",
        String::from_utf8_lossy(&build.stderr)
    );
    assert!(
        staticlib.exists(),
        "static library missing at {}",
        staticlib.display()
    );

    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("smoke.c");
    std::fs::write(&source, C_PROGRAM).unwrap();
    let binary = dir.path().join("smoke");

    let compile = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include_dir)
        .arg(&source)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("cc not available");
    assert!(
        compile.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().unwrap();
    assert!(
        run.status.success(),
        "smoke binary exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
