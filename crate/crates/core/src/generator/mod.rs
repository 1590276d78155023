//! Arithmetic test synthesis: every pair of pool constants under every
//! operator, minus the pairs whose evaluation is undefined or
//! implementation-defined. Expected values come from running the reference
//! build, never from evaluating expressions here.

mod ctype;
mod emit;
mod exclude;
mod pool;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::execdiff::{capture_reference, AnnotatedSource, ExecDiffError};
use crate::toolchain::{fresh_workdir, OptionSet, ToolProfile};

pub use ctype::{CType, DataModel};
pub use emit::{case_label, gen_programs, lhs_name, rhs_name, GeneratedCase, GeneratedProgram, GENERATOR_VERSION};
pub use exclude::{conversion_excluded, is_excluded, Exclusion, ExclusionRule, Operator};
pub use pool::{default_literals, min_macro, Constant, ConstantPool, PoolPreset, Value};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("constant pool is empty")]
    EmptyPool,
    #[error("no operators selected")]
    NoOperators,
    #[error("chunk size must be at least 1")]
    ZeroChunk,
    #[error("literal does not fit its type: {0}")]
    BadLiteral(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    ExecDiff(#[from] ExecDiffError),
}

/// Parses a comma-separated operator list (`+,-,<<` or `add,sub,shl`).
pub fn parse_operators(list: &str) -> Result<Vec<Operator>, GenError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Operator::parse(s).ok_or_else(|| GenError::UnknownOperator(s.to_string())))
        .collect()
}

/// Writes each program into `dir` and returns the paths in order.
pub fn write_programs(dir: &Path, programs: &[GeneratedProgram]) -> Result<Vec<PathBuf>, GenError> {
    std::fs::create_dir_all(dir).map_err(|source| GenError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    programs
        .iter()
        .map(|p| {
            let path = dir.join(&p.file_name);
            std::fs::write(&path, &p.source).map_err(|source| GenError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

/// Annotates a generated program with the output of the reference build.
pub fn expected_via_reference(
    program: &GeneratedProgram,
    ref_compiler: &ToolProfile,
    ref_runner: &ToolProfile,
    cell: &OptionSet,
) -> Result<AnnotatedSource, GenError> {
    let dir = fresh_workdir().map_err(|source| GenError::Io {
        path: std::env::temp_dir(),
        source,
    })?;
    let path = write_programs(dir.path(), std::slice::from_ref(program))?.remove(0);
    Ok(capture_reference(&path, ref_compiler, ref_runner, cell)?)
}
