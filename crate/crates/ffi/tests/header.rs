use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/actinf.h")
}

#[test]
fn header_declares_the_exported_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "ACTINF_H",
        "typedef struct ActinfModel ActinfModel",
        "ACTINF_STATUS_OK = 0",
        "ACTINF_STATUS_BUFFER_TOO_SMALL",
        "actinf_model_tmaze",
        "actinf_model_from_json",
        "actinf_model_load",
        "actinf_model_save",
        "actinf_model_free",
        "actinf_model_num_states",
        "actinf_num_policies",
        "actinf_initial_belief",
        "actinf_filter_step",
        "actinf_policy_posterior",
        "actinf_last_error_message",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
}

/// Compiles the header as C when a C compiler is on the path.
#[test]
fn header_is_valid_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"actinf.h\"\nint main(void) { ActinfModel *m = 0; return (int)actinf_model_tmaze(false, &m); }\n",
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let Ok(out) = Command::new("cc").arg("-fsyntax-only").arg("-I").arg(include).arg(&src).output() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
