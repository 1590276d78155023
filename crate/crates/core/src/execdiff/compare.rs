use serde::{Deserialize, Serialize};

/// Where two outputs first part ways.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FirstDifference {
    /// 1-based line index.
    pub line: Option<usize>,
    /// `None` means the output ran out of lines.
    pub expected_line: Option<String>,
    pub actual_line: Option<String>,
    /// Lines agree but exactly one side ends with a newline.
    pub eol_mismatch: bool,
    /// Set for byte-wise comparison of binary expectations.
    pub byte_offset: Option<usize>,
}

fn split_lines(bytes: &[u8]) -> Vec<&[u8]> {
    let mut lines: Vec<&[u8]> = bytes.split(|b| *b == b'\n').collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

/// Line-granular comparison with the trailing newline checked separately.
/// Returns `None` when the outputs are identical.
pub fn first_line_difference(expected: &[u8], actual: &[u8]) -> Option<FirstDifference> {
    let (e, a) = (split_lines(expected), split_lines(actual));
    let lossy = |l: Option<&&[u8]>| l.map(|l| String::from_utf8_lossy(l).into_owned());
    for i in 0..e.len().max(a.len()) {
        if e.get(i) != a.get(i) {
            return Some(FirstDifference {
                line: Some(i + 1),
                expected_line: lossy(e.get(i)),
                actual_line: lossy(a.get(i)),
                ..Default::default()
            });
        }
    }
    if expected.ends_with(b"\n") != actual.ends_with(b"\n") {
        let last = e.len();
        return Some(FirstDifference {
            line: Some(last),
            expected_line: lossy(e.last()),
            actual_line: lossy(a.last()),
            eol_mismatch: true,
            byte_offset: None,
        });
    }
    None
}

pub fn first_byte_difference(expected: &[u8], actual: &[u8]) -> Option<FirstDifference> {
    if expected == actual {
        return None;
    }
    let offset = expected
        .iter()
        .zip(actual)
        .position(|(x, y)| x != y)
        .unwrap_or(expected.len().min(actual.len()));
    Some(FirstDifference {
        byte_offset: Some(offset),
        ..Default::default()
    })
}
