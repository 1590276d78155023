//! Execution-output verification: capture a reference build's stdout, embed
//! it in the source behind comment markers, and check subject builds against
//! it line by line.

mod block;
mod compare;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::toolchain::{classify, invoke, run_binary, OptionSet, Status, ToolProfile, ToolchainError, Verdict};

pub use block::{
    embed_expected, embed_with_exit, extract_block, extract_expected, is_plain_text, render_block, strip_block,
    AnnotatedSource, ExpectedBlock, BEGIN_MARKER, END_MARKER, MARKER_STEM,
};
pub use compare::{first_byte_difference, first_line_difference, FirstDifference};

#[derive(Debug, Error)]
pub enum ExecDiffError {
    #[error("source already contains expected-output markers")]
    MarkerCollision,
    #[error("malformed expected-output block: {0}")]
    MalformedBlock(String),
    #[error("{0} has no expected-output block")]
    NoExpectedBlock(PathBuf),
    #[error("reference build of {path} failed ({status})")]
    ReferenceBuildFailed {
        path: PathBuf,
        status: Status,
        diagnostics: String,
    },
    #[error("reference run of {0} timed out")]
    ReferenceRunTimeout(PathBuf),
    #[error("reference run of {path} failed: {reason}")]
    ReferenceRunFailed { path: PathBuf, reason: String },
    #[error("{path} is not valid UTF-8 text")]
    NotText { path: PathBuf },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
}

pub fn read_source(path: &Path) -> Result<String, ExecDiffError> {
    let bytes = std::fs::read(path).map_err(|source| ExecDiffError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| ExecDiffError::NotText {
        path: path.to_path_buf(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffVerdict {
    Match,
    Mismatch,
    BuildFailure,
    RunFailure,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub file: String,
    pub verdict: DiffVerdict,
    pub first_diff_line: Option<usize>,
    pub expected_line: Option<String>,
    pub actual_line: Option<String>,
    pub eol_mismatch: bool,
    /// Byte offset for base64-stored (binary) expectations.
    pub first_diff_byte: Option<usize>,
    pub cell: String,
    pub exit_code: Option<i32>,
    pub expected_exit: Option<i32>,
    /// Exit status differed from the recorded one but was not compared.
    pub exit_status_ignored: bool,
    pub diagnostics: Option<String>,
}

impl DiffReport {
    fn new(file: &Path, verdict: DiffVerdict, cell: &OptionSet) -> Self {
        DiffReport {
            file: file.display().to_string(),
            verdict,
            first_diff_line: None,
            expected_line: None,
            actual_line: None,
            eol_mismatch: false,
            first_diff_byte: None,
            cell: cell.canonical_key(),
            exit_code: None,
            expected_exit: None,
            exit_status_ignored: false,
            diagnostics: None,
        }
    }

    pub fn is_match(&self) -> bool {
        self.verdict == DiffVerdict::Match
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Treat a differing exit status as a run failure. Off by default: only
    /// printed output is compared.
    pub compare_exit: bool,
}

/// Compiles `file` with the reference compiler, runs it, and returns the
/// source annotated with the captured stdout. Any previous block is replaced.
pub fn capture_reference(
    file: &Path,
    ref_compiler: &ToolProfile,
    ref_runner: &ToolProfile,
    cell: &OptionSet,
) -> Result<AnnotatedSource, ExecDiffError> {
    let text = read_source(file)?;
    let inv = invoke(ref_compiler, cell, file)?;
    let verdict = classify(&inv.record, ref_compiler);
    let Some(binary) = accepted_artifact(&verdict, &inv.record.artifact) else {
        return Err(ExecDiffError::ReferenceBuildFailed {
            path: file.to_path_buf(),
            status: verdict.status,
            diagnostics: verdict.diagnostics,
        });
    };
    let run = run_binary(binary, ref_runner, b"")?;
    if run.timed_out {
        return Err(ExecDiffError::ReferenceRunTimeout(file.to_path_buf()));
    }
    if run.terminated_by_signal {
        return Err(ExecDiffError::ReferenceRunFailed {
            path: file.to_path_buf(),
            reason: "terminated by signal".into(),
        });
    }
    let exit = run.exit_code.unwrap_or(-1);
    if exit != 0 && run.stdout_bytes.is_empty() {
        return Err(ExecDiffError::ReferenceRunFailed {
            path: file.to_path_buf(),
            reason: format!("exit status {exit} with no output"),
        });
    }
    embed_with_exit(strip_block(&text), &run.stdout_bytes, Some(exit))
}

fn accepted_artifact<'a>(verdict: &Verdict, artifact: &'a Option<PathBuf>) -> Option<&'a Path> {
    match (verdict.status, artifact) {
        (Status::Accept, Some(p)) => Some(p.as_path()),
        _ => None,
    }
}

/// Builds `file` with the subject toolchain at `cell`, runs it, and compares
/// stdout against the embedded expectation.
pub fn verify(
    file: &Path,
    subject_compiler: &ToolProfile,
    subject_runner: &ToolProfile,
    cell: &OptionSet,
    options: VerifyOptions,
) -> Result<DiffReport, ExecDiffError> {
    let text = read_source(file)?;
    let expected = extract_block(&text)?.ok_or_else(|| ExecDiffError::NoExpectedBlock(file.to_path_buf()))?;
    let mut report = DiffReport::new(file, DiffVerdict::Match, cell);
    report.expected_exit = Some(expected.exit_code.unwrap_or(0));

    let inv = invoke(subject_compiler, cell, file)?;
    let verdict = classify(&inv.record, subject_compiler);
    let Some(binary) = accepted_artifact(&verdict, &inv.record.artifact) else {
        report.verdict = if verdict.status == Status::Timeout {
            DiffVerdict::Timeout
        } else {
            DiffVerdict::BuildFailure
        };
        report.diagnostics = Some(format!("{}: {}", verdict.status, verdict.diagnostics));
        return Ok(report);
    };
    let run = run_binary(binary, subject_runner, b"")?;
    report.exit_code = run.exit_code;
    if run.timed_out {
        report.verdict = DiffVerdict::Timeout;
        return Ok(report);
    }
    if run.terminated_by_signal {
        report.verdict = DiffVerdict::RunFailure;
        report.diagnostics = Some(format!(
            "terminated by signal: {}",
            String::from_utf8_lossy(&run.stderr_bytes)
        ));
        return Ok(report);
    }
    let exit_differs = run.exit_code != report.expected_exit;
    if exit_differs && options.compare_exit {
        report.verdict = DiffVerdict::RunFailure;
        report.diagnostics = Some(format!(
            "exit status {:?}, expected {:?}",
            run.exit_code, report.expected_exit
        ));
        return Ok(report);
    }
    report.exit_status_ignored = exit_differs;

    let diff = if expected.binary {
        first_byte_difference(&expected.output, &run.stdout_bytes)
    } else {
        first_line_difference(&expected.output, &run.stdout_bytes)
    };
    if let Some(d) = diff {
        report.verdict = DiffVerdict::Mismatch;
        report.first_diff_line = d.line;
        report.expected_line = d.expected_line;
        report.actual_line = d.actual_line;
        report.eol_mismatch = d.eol_mismatch;
        report.first_diff_byte = d.byte_offset;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub report: DiffReport,
    /// The reference toolchain disagrees with itself, so the test is
    /// nondeterministic or environment-dependent.
    pub quarantined: bool,
}

/// Verifies an annotated file against the toolchain that produced its
/// expectation.
pub fn self_check(
    file: &Path,
    ref_compiler: &ToolProfile,
    ref_runner: &ToolProfile,
    cell: &OptionSet,
) -> Result<SelfCheck, ExecDiffError> {
    let report = verify(file, ref_compiler, ref_runner, cell, VerifyOptions::default())?;
    Ok(SelfCheck {
        quarantined: !report.is_match(),
        report,
    })
}
