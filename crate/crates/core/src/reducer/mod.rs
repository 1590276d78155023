//! Test-case minimization by delta debugging over lines or blank-line
//! separated blocks of a text file.

mod ddmin;

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::toolchain::process::{run_captured, Spawn};
use crate::toolchain::{fresh_workdir, STDOUT_CAP};

pub use ddmin::{ddmin, split, Outcome, Reduction};

/// Exit status of a `--test` command that marks the candidate interesting.
pub const INTERESTING_EXIT: i32 = 0;
/// Exit status meaning "cannot tell"; treated as not interesting.
pub const UNRESOLVED_EXIT: i32 = 125;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("the full input does not reproduce the failure")]
    NotReproducible,
    #[error("predicate budget exhausted after {} runs", best.calls)]
    BudgetExhausted { best: Reduction },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    #[default]
    Line,
    BlankLineBlock,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Granularity::Line),
            "blank-line-block" | "block" => Ok(Granularity::BlankLineBlock),
            other => Err(format!("unknown granularity `{other}`")),
        }
    }
}

/// Splits text into units whose concatenation is the original text. A block
/// is a run of non-blank lines plus the blank lines that follow it.
pub fn split_units(text: &str, granularity: Granularity) -> Vec<&str> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    match granularity {
        Granularity::Line => lines,
        Granularity::BlankLineBlock => {
            let mut units = Vec::new();
            let mut start = 0;
            let mut offset = 0;
            let mut in_gap = false;
            for l in lines {
                let blank = l.trim().is_empty();
                if !blank && in_gap {
                    units.push(&text[start..offset]);
                    start = offset;
                }
                in_gap = blank;
                offset += l.len();
            }
            if start < text.len() {
                units.push(&text[start..]);
            }
            units
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceSummary {
    pub input: PathBuf,
    pub output: PathBuf,
    pub original_units: usize,
    pub reduced_units: usize,
    pub original_bytes: usize,
    pub reduced_bytes: usize,
    pub calls: usize,
    pub minimal: bool,
}

impl ReduceSummary {
    /// Reduced size over original size, in bytes.
    pub fn ratio(&self) -> f64 {
        if self.original_bytes == 0 {
            1.0
        } else {
            self.reduced_bytes as f64 / self.original_bytes as f64
        }
    }
}

/// Runs a shell command on candidate files. The candidate path is appended
/// as the last argument.
#[derive(Debug, Clone)]
pub struct TestCommand {
    pub command: String,
    pub timeout: Duration,
}

impl TestCommand {
    pub fn new(command: impl Into<String>) -> Self {
        TestCommand {
            command: command.into(),
            timeout: Duration::from_secs(60),
        }
    }

    pub fn run(&self, candidate: &Path) -> Outcome {
        let argv = vec![
            "sh".to_string(),
            "-c".to_string(),
            format!("{} \"$1\"", self.command),
            "diffharness-reduce".to_string(),
            candidate.display().to_string(),
        ];
        let cwd = candidate.parent().unwrap_or(Path::new("."));
        let captured = run_captured(Spawn {
            argv: &argv,
            cwd,
            env: &Default::default(),
            stdin: b"",
            timeout: self.timeout,
            stdout_cap: STDOUT_CAP,
            stderr_cap: STDOUT_CAP,
        });
        match captured {
            Ok(c) if c.timed_out || c.signal.is_some() => Outcome::Unresolved,
            Ok(c) if c.exit_code == Some(INTERESTING_EXIT) => Outcome::Fail,
            Ok(c) if c.exit_code == Some(UNRESOLVED_EXIT) => Outcome::Unresolved,
            Ok(_) => Outcome::Pass,
            Err(_) => Outcome::Unresolved,
        }
    }
}

/// `dir/stem.reduced.ext` next to the input.
pub fn default_output_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match input.extension() {
        Some(ext) => format!("{stem}.reduced.{}", ext.to_string_lossy()),
        None => format!("{stem}.reduced"),
    };
    input.with_file_name(name)
}

/// Minimizes `input` under `predicate` and writes the kept units, in their
/// original order, to `output`. When the budget runs out the best failing
/// candidate so far is written and `minimal` is false.
pub fn reduce_text_file(
    input: &Path,
    output: &Path,
    granularity: Granularity,
    budget: Option<usize>,
    mut predicate: impl FnMut(&Path) -> Outcome,
) -> Result<ReduceSummary, ReduceError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReduceError::Io { path, source }
    };
    let text = std::fs::read_to_string(input).map_err(io(input))?;
    let units = split_units(&text, granularity);
    let dir = fresh_workdir().map_err(io(input))?;
    let candidate = dir.path().join(input.file_name().unwrap_or("candidate".as_ref()));
    let assemble = |subset: &[usize]| -> String { subset.iter().map(|&i| units[i]).collect() };
    let result = ddmin(
        units.len(),
        |subset| match std::fs::write(&candidate, assemble(subset)) {
            Ok(()) => predicate(&candidate),
            Err(_) => Outcome::Unresolved,
        },
        budget,
    );
    let reduction = match result {
        Ok(r) => r,
        Err(ReduceError::BudgetExhausted { best }) => best,
        Err(e) => return Err(e),
    };
    let reduced = assemble(&reduction.subset);
    std::fs::write(output, &reduced).map_err(io(output))?;
    Ok(ReduceSummary {
        input: input.to_path_buf(),
        output: output.to_path_buf(),
        original_units: units.len(),
        reduced_units: reduction.subset.len(),
        original_bytes: text.len(),
        reduced_bytes: reduced.len(),
        calls: reduction.calls,
        minimal: reduction.minimal,
    })
}

/// `reduce_text_file` with an external test command.
pub fn reduce_file(
    input: &Path,
    output: &Path,
    test: &TestCommand,
    granularity: Granularity,
    budget: Option<usize>,
) -> Result<ReduceSummary, ReduceError> {
    reduce_text_file(input, output, granularity, budget, |c| test.run(c))
}
