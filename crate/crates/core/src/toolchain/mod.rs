//! Declarative tool profiles, sandboxed invocation, and verdict classification.
//!
//! Every invocation runs in a fresh temporary directory that is kept alive by
//! the returned [`Invocation`]; dropping it removes the directory and any
//! artifact the tool produced.

pub(crate) mod process;
mod profile;

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use thiserror::Error;

pub use process::{fresh_workdir, TMPDIR_ENV};
pub use profile::{
    OptionAxis, OptionSet, ToolKind, ToolProfile, ToolSet, DEFAULT_STDERR_CAP, DEFAULT_TIMEOUT_SECONDS,
    INPUT_PLACEHOLDER, OPTIONS_PLACEHOLDER, OUTPUT_PLACEHOLDER,
};

use process::{absolute, is_not_found, path_string, run_captured, Spawn};

/// Upper bound on captured program output.
pub const STDOUT_CAP: usize = 64 << 20;

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error("tool `{profile}` not found: {program}")]
    ToolNotFound { profile: String, program: String },
    #[error("runner `{profile}` not found: {program}")]
    RunnerNotFound { profile: String, program: String },
    #[error("work directory error: {0}")]
    Workdir(#[source] std::io::Error),
    #[error("input {0} does not exist")]
    MissingInput(PathBuf),
    #[error("invalid profile `{id}`: {reason}")]
    InvalidProfile { id: String, reason: String },
    #[error("invalid options for `{profile}`: {reason}")]
    InvalidOptions { profile: String, reason: String },
    #[error("profile `{profile}` is a {actual:?}, expected {expected:?}")]
    WrongKind {
        profile: String,
        expected: ToolKind,
        actual: ToolKind,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("failed to launch `{program}`: {source}")]
    Launch {
        program: String,
        #[source]
        source: std::io::Error,
    },
}

impl ToolchainError {
    /// Missing tools abort a whole campaign rather than a single file.
    pub fn is_environment(&self) -> bool {
        matches!(
            self,
            ToolchainError::ToolNotFound { .. }
                | ToolchainError::RunnerNotFound { .. }
                | ToolchainError::Workdir(_)
                | ToolchainError::Launch { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Accept,
    Reject,
    Crash,
    Timeout,
}

impl Status {
    /// Crash and timeout are the outcomes a crash sweep reports.
    pub fn is_crash_like(self) -> bool {
        matches!(self, Status::Crash | Status::Timeout)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Accept => "Accept",
            Status::Reject => "Reject",
            Status::Crash => "Crash",
            Status::Timeout => "Timeout",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a single tool run did, before any interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub profile_id: String,
    pub cell: OptionSet,
    pub exit_code: Option<i32>,
    pub terminated_by_signal: bool,
    pub signal: Option<i32>,
    /// Standard error with the work directory path replaced by `<workdir>`.
    pub stderr: String,
    pub wall_time: f64,
    pub timed_out: bool,
    pub artifact: Option<PathBuf>,
}

/// A finished invocation. Holds the work directory so that `record.artifact`
/// stays valid until this value is dropped.
#[derive(Debug)]
pub struct Invocation {
    pub record: RawRecord,
    workdir: TempDir,
}

impl Invocation {
    pub fn workdir(&self) -> &Path {
        self.workdir.path()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub exit_code: Option<i32>,
    pub terminated_by_signal: bool,
    pub diagnostics: String,
    pub wall_time: f64,
    pub cell: OptionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub exit_code: Option<i32>,
    pub terminated_by_signal: bool,
    #[serde(with = "bytes_lossy")]
    pub stdout_bytes: Vec<u8>,
    #[serde(with = "bytes_lossy")]
    pub stderr_bytes: Vec<u8>,
    pub wall_time: f64,
    pub timed_out: bool,
}

pub(crate) mod bytes_lossy {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&String::from_utf8_lossy(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        Ok(String::deserialize(d)?.into_bytes())
    }
}

/// Runs `profile` on `input_path` with `options` inside a fresh temporary
/// directory. Timeouts still produce a record; only a missing program or a
/// broken work directory is an error.
pub fn invoke(profile: &ToolProfile, options: &OptionSet, input_path: &Path) -> Result<Invocation, ToolchainError> {
    profile.check_options(options)?;
    if !input_path.exists() {
        return Err(ToolchainError::MissingInput(input_path.to_path_buf()));
    }
    let input = absolute(input_path).map_err(ToolchainError::Workdir)?;
    let workdir = fresh_workdir().map_err(ToolchainError::Workdir)?;
    let output = workdir.path().join(format!("output.{}", profile.output_extension));
    let argv = profile.render_command(options, &input, &output);

    let captured = run_captured(Spawn {
        argv: &argv,
        cwd: workdir.path(),
        env: &profile.env,
        stdin: &[],
        timeout: Duration::from_secs_f64(profile.timeout_seconds),
        stdout_cap: profile.stderr_cap_bytes,
        stderr_cap: profile.stderr_cap_bytes,
    })
    .map_err(|e| {
        if is_not_found(&e) {
            ToolchainError::ToolNotFound {
                profile: profile.id.clone(),
                program: argv[0].clone(),
            }
        } else {
            ToolchainError::Launch {
                program: argv[0].clone(),
                source: e,
            }
        }
    })?;

    let artifact = (profile.declares_output() && output.exists()).then_some(output);
    let stderr = String::from_utf8_lossy(&captured.stderr).replace(&path_string(workdir.path()), "<workdir>");

    Ok(Invocation {
        record: RawRecord {
            profile_id: profile.id.clone(),
            cell: options.clone(),
            exit_code: captured.exit_code,
            terminated_by_signal: captured.signal.is_some(),
            signal: captured.signal,
            stderr,
            wall_time: captured.wall_time,
            timed_out: captured.timed_out,
            artifact,
        },
        workdir,
    })
}

/// Maps a raw record onto a [`Verdict`]. Precedence: timeout, then crash
/// (signal or crash pattern), then accept, otherwise reject.
pub fn classify(record: &RawRecord, profile: &ToolProfile) -> Verdict {
    let pattern_hit = profile
        .compiled_crash_patterns()
        .iter()
        .any(|re| re.is_match(&record.stderr));
    let status = if record.timed_out {
        Status::Timeout
    } else if record.terminated_by_signal || pattern_hit {
        Status::Crash
    } else if record.exit_code == Some(0) && (record.artifact.is_some() || !profile.declares_output()) {
        Status::Accept
    } else {
        Status::Reject
    };
    Verdict {
        status,
        exit_code: record.exit_code,
        terminated_by_signal: record.terminated_by_signal,
        diagnostics: record.stderr.clone(),
        wall_time: record.wall_time,
        cell: record.cell.clone(),
    }
}

/// `invoke` followed by `classify`, dropping the work directory.
pub fn invoke_and_classify(
    profile: &ToolProfile,
    options: &OptionSet,
    input_path: &Path,
) -> Result<Verdict, ToolchainError> {
    let inv = invoke(profile, options, input_path)?;
    Ok(classify(&inv.record, profile))
}

/// Executes `binary` through a runner profile (native shell, emulator, wrapper),
/// feeding `stdin_bytes` and capturing stdout byte-exactly.
pub fn run_binary(binary: &Path, runner: &ToolProfile, stdin_bytes: &[u8]) -> Result<ExecutionResult, ToolchainError> {
    if runner.kind != ToolKind::Runner {
        return Err(ToolchainError::WrongKind {
            profile: runner.id.clone(),
            expected: ToolKind::Runner,
            actual: runner.kind,
        });
    }
    let binary = absolute(binary).map_err(ToolchainError::Workdir)?;
    let workdir = fresh_workdir().map_err(ToolchainError::Workdir)?;
    let output = workdir.path().join(format!("output.{}", runner.output_extension));
    let argv = runner.render_command(&runner.default_options(), &binary, &output);
    let captured = run_captured(Spawn {
        argv: &argv,
        cwd: workdir.path(),
        env: &runner.env,
        stdin: stdin_bytes,
        timeout: Duration::from_secs_f64(runner.timeout_seconds),
        stdout_cap: STDOUT_CAP,
        stderr_cap: runner.stderr_cap_bytes,
    })
    .map_err(|e| {
        if is_not_found(&e) {
            ToolchainError::RunnerNotFound {
                profile: runner.id.clone(),
                program: argv[0].clone(),
            }
        } else {
            ToolchainError::Launch {
                program: argv[0].clone(),
                source: e,
            }
        }
    })?;
    Ok(ExecutionResult {
        exit_code: captured.exit_code,
        terminated_by_signal: captured.signal.is_some(),
        stdout_bytes: captured.stdout,
        stderr_bytes: captured.stderr,
        wall_time: captured.wall_time,
        timed_out: captured.timed_out,
    })
}

/// First line of `<program> --version`, or `None` if the tool cannot say.
pub fn tool_version(profile: &ToolProfile) -> Option<String> {
    let program = profile.command_template.first()?;
    if program.contains(INPUT_PLACEHOLDER) {
        return None;
    }
    let out = std::process::Command::new(program)
        .arg("--version")
        .stdin(std::process::Stdio::null())
        .output()
        .ok()?;
    let text = if out.stdout.is_empty() { out.stderr } else { out.stdout };
    String::from_utf8_lossy(&text)
        .lines()
        .next()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
}
