#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn core_fixtures() -> PathBuf {
    workspace().join("crates/core/tests/fixtures")
}

pub struct Out {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Out {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("not JSON ({e}):\n{}\n{}", self.stdout, self.stderr))
    }
}

pub fn run<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_diffharness"))
        .args(args)
        .output()
        .expect("spawn diffharness");
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Scripted compiler; see `stubcc.sh` in the core fixtures.
pub fn stub_tool(id: &str, tag: &str) -> Value {
    json!({
        "id": id,
        "kind": "compiler",
        "command_template": ["sh", core_fixtures().join("stubcc.sh"), tag, "{input}", "{output}", "{options}"],
        "option_axes": [
            {"name": "opt", "values": ["-O0", "-O1", "-O2", "-O3", "-O4"]},
            {"name": "debug", "values": ["-g0", "-g", "-ginline"]}
        ],
        "crash_patterns": ["internal compiler error"],
        "timeout_seconds": 5.0
    })
}

/// "Runs" a stub-compiled file by printing its `// PRINT ` lines.
pub fn printer_runner() -> Value {
    json!({"id": "printer", "kind": "runner", "command_template": ["sed", "-n", "s|^// PRINT ||p", "{input}"]})
}

pub fn host_cc(id: &str, program: &str, axes: Value) -> Value {
    json!({
        "id": id,
        "kind": "compiler",
        "command_template": [program, "{options}", "-std=c99", "-w", "{input}", "-o", "{output}"],
        "option_axes": axes,
        "crash_patterns": ["internal compiler error"],
        "timeout_seconds": 120.0
    })
}

pub fn native_runner() -> Value {
    json!({"id": "native", "kind": "runner", "command_template": ["{input}"], "timeout_seconds": 20.0})
}

pub fn write_config(dir: &Path, tools: Vec<Value>, campaign: Value) -> PathBuf {
    let p = dir.join("campaign.json");
    std::fs::write(
        &p,
        serde_json::to_string_pretty(&json!({"tools": tools, "campaign": campaign})).unwrap(),
    )
    .unwrap();
    p
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(&p, body).unwrap();
    p
}

pub fn copy_dir(from: &Path, to: &Path) -> Vec<PathBuf> {
    std::fs::create_dir_all(to).unwrap();
    let mut out = Vec::new();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dest = to.join(e.file_name());
        std::fs::copy(e.path(), &dest).unwrap();
        out.push(dest);
    }
    out.sort();
    out
}
