//! The expected-output block appended to annotated sources.
//!
//! ```text
//! /* DIFFHARNESS-EXPECTED-OUTPUT v1
//! exit:3                  optional, recorded nonzero exit status
//! noeol:                  optional, output lacks a final newline
//! :first line of output
//! :second line
//! DIFFHARNESS-EXPECTED-OUTPUT-END */
//! ```
//!
//! Output that is not plain text (invalid UTF-8, control characters other
//! than tab, or comment delimiters) is stored as base64 after a `b64:` flag
//! line, one `:`-prefixed chunk per line.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;

use super::ExecDiffError;

pub const BEGIN_MARKER: &str = "/* DIFFHARNESS-EXPECTED-OUTPUT v1";
pub const END_MARKER: &str = "DIFFHARNESS-EXPECTED-OUTPUT-END */";
/// Substring shared by both markers; sources containing it cannot be annotated.
pub const MARKER_STEM: &str = "DIFFHARNESS-EXPECTED-OUTPUT";

const B64_FLAG: &str = "b64:";
const NOEOL_FLAG: &str = "noeol:";
const EXIT_FLAG: &str = "exit:";
const B64_LINE: usize = 76;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedBlock {
    pub output: Vec<u8>,
    pub binary: bool,
    pub exit_code: Option<i32>,
}

/// A source file together with its expected output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSource {
    pub body: String,
    pub expected_output: Option<Vec<u8>>,
    pub expected_exit: Option<i32>,
    pub marker_block: String,
}

impl AnnotatedSource {
    /// Full file text: the untouched body, a separating newline when the
    /// body lacks one, then the marker block.
    pub fn text(&self) -> String {
        let mut text = self.body.clone();
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(&self.marker_block);
        text
    }
}

pub fn is_plain_text(output: &[u8]) -> bool {
    match std::str::from_utf8(output) {
        Ok(s) => !s.contains("*/") && !s.contains("/*") && !s.chars().any(|c| c.is_control() && c != '\n' && c != '\t'),
        Err(_) => false,
    }
}

pub fn render_block(output: &[u8], exit_code: Option<i32>) -> String {
    let mut block = String::from(BEGIN_MARKER);
    block.push('\n');
    if let Some(code) = exit_code.filter(|c| *c != 0) {
        block.push_str(&format!("{EXIT_FLAG}{code}\n"));
    }
    if is_plain_text(output) {
        let text = std::str::from_utf8(output).expect("checked utf-8");
        if !text.is_empty() && !text.ends_with('\n') {
            block.push_str(NOEOL_FLAG);
            block.push('\n');
        }
        for line in text.split_terminator('\n') {
            block.push(':');
            block.push_str(line);
            block.push('\n');
        }
    } else {
        block.push_str(B64_FLAG);
        block.push('\n');
        let encoded = B64.encode(output);
        for chunk in encoded.as_bytes().chunks(B64_LINE) {
            block.push(':');
            block.push_str(std::str::from_utf8(chunk).expect("base64 is ascii"));
            block.push('\n');
        }
    }
    block.push_str(END_MARKER);
    block.push('\n');
    block
}

/// Appends an expected-output block to `source`.
pub fn embed_expected(source: &str, output: &[u8]) -> Result<AnnotatedSource, ExecDiffError> {
    embed_with_exit(source, output, None)
}

pub fn embed_with_exit(source: &str, output: &[u8], exit_code: Option<i32>) -> Result<AnnotatedSource, ExecDiffError> {
    if source.contains(MARKER_STEM) {
        return Err(ExecDiffError::MarkerCollision);
    }
    Ok(AnnotatedSource {
        body: source.to_string(),
        expected_output: Some(output.to_vec()),
        expected_exit: exit_code.filter(|c| *c != 0),
        marker_block: render_block(output, exit_code),
    })
}

/// Byte offset of the begin-marker line of the final block, if any.
fn begin_offset(text: &str) -> Option<usize> {
    let mut offset = 0;
    let mut found = None;
    for line in text.split_inclusive('\n') {
        if line.trim_end_matches('\n') == BEGIN_MARKER {
            found = Some(offset);
        }
        offset += line.len();
    }
    found
}

/// The source with any expected block removed.
pub fn strip_block(text: &str) -> &str {
    match begin_offset(text) {
        Some(at) => &text[..at],
        None => text,
    }
}

/// Parses the trailing expected block; `None` when the file has none.
pub fn extract_block(text: &str) -> Result<Option<ExpectedBlock>, ExecDiffError> {
    let Some(start) = begin_offset(text) else {
        return Ok(None);
    };
    let mut lines = text[start..].split_inclusive('\n');
    lines.next();
    let mut binary = false;
    let mut noeol = false;
    let mut exit_code = None;
    let mut content: Vec<&str> = Vec::new();
    let mut closed = false;
    let mut consumed = 0;
    for raw in lines.by_ref() {
        consumed += raw.len();
        let line = raw.strip_suffix('\n').unwrap_or(raw);
        if line == END_MARKER {
            closed = true;
            break;
        }
        if let Some(rest) = line.strip_prefix(':') {
            content.push(rest);
            continue;
        }
        if !content.is_empty() {
            return Err(ExecDiffError::MalformedBlock(format!(
                "flag line after content: `{line}`"
            )));
        }
        match line {
            B64_FLAG => binary = true,
            NOEOL_FLAG => noeol = true,
            _ => match line.strip_prefix(EXIT_FLAG) {
                Some(code) => {
                    exit_code = Some(
                        code.parse()
                            .map_err(|_| ExecDiffError::MalformedBlock(format!("bad exit status `{code}`")))?,
                    )
                }
                None => return Err(ExecDiffError::MalformedBlock(format!("unexpected line `{line}`"))),
            },
        }
    }
    if !closed {
        return Err(ExecDiffError::MalformedBlock("missing end marker".into()));
    }
    let trailing = &text[start + BEGIN_MARKER.len() + 1 + consumed..];
    if !trailing.trim().is_empty() {
        return Err(ExecDiffError::MalformedBlock(
            "expected block is not the final block".into(),
        ));
    }
    let output = if binary {
        B64.decode(content.concat())
            .map_err(|e| ExecDiffError::MalformedBlock(format!("bad base64: {e}")))?
    } else {
        let mut text = content.join("\n");
        if !content.is_empty() && !noeol {
            text.push('\n');
        }
        text.into_bytes()
    };
    Ok(Some(ExpectedBlock {
        output,
        binary,
        exit_code,
    }))
}

pub fn extract_expected(text: &str) -> Result<Option<Vec<u8>>, ExecDiffError> {
    Ok(extract_block(text)?.map(|b| b.output))
}
