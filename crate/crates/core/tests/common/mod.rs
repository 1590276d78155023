#![allow(dead_code)]

use std::path::{Path, PathBuf};

use diffharness::toolchain::{ToolKind, ToolProfile};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// A scripted compiler; see `fixtures/stubcc.sh` for the directive language.
pub fn stub(tag: &str) -> ToolProfile {
    ToolProfile::new(
        tag,
        ToolKind::Compiler,
        vec![
            "sh".into(),
            fixtures().join("stubcc.sh").display().to_string(),
            tag.into(),
            "{input}".into(),
            "{output}".into(),
            "{options}".into(),
        ],
    )
    .with_crash_pattern("internal compiler error")
    .with_timeout(5.0)
}

pub fn stub_with_grid(tag: &str) -> ToolProfile {
    stub(tag)
        .with_axis("opt", &["-O0", "-O1", "-O2", "-O3", "-O4"])
        .with_axis("debug", &["-g0", "-g", "-ginline"])
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(&p, body).unwrap();
    p
}

/// A host C compiler producing an executable.
pub fn host_cc(id: &str, program: &str) -> ToolProfile {
    ToolProfile::new(
        id,
        ToolKind::Compiler,
        vec![
            program.into(),
            "{options}".into(),
            "-std=c99".into(),
            "-w".into(),
            "{input}".into(),
            "-o".into(),
            "{output}".into(),
        ],
    )
    .with_axis("opt", &["-O0", "-O2"])
    .with_crash_pattern("internal compiler error")
    .with_timeout(60.0)
}

pub fn native_runner() -> ToolProfile {
    ToolProfile::new("native", ToolKind::Runner, vec!["{input}".into()]).with_timeout(10.0)
}
