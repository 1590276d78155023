use regex::Regex;
use serde::{Deserialize, Serialize};

use super::AsmDiffError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRule {
    /// Regex matched against the code part of a line.
    pub pattern: String,
    /// Replacement template; `$1`, `${name}` refer to capture groups.
    pub replacement: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentSyntax {
    /// Line-comment marker of the input dialect, e.g. `;`.
    pub source: Option<String>,
    /// Marker written in its place, e.g. `@`.
    pub target: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialectRuleSet {
    #[serde(default)]
    pub rules: Vec<RewriteRule>,
    /// Lines whose code part matches one of these are dropped and logged.
    #[serde(default)]
    pub skip: Vec<String>,
    #[serde(default)]
    pub comments: CommentSyntax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    /// 1-based.
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Translation {
    pub text: String,
    pub skipped: Vec<SkippedLine>,
}

/// Rule set with its regexes compiled.
#[derive(Debug, Clone)]
pub struct CompiledRules {
    rules: Vec<(Regex, String)>,
    skip: Vec<Regex>,
    comments: CommentSyntax,
}

impl DialectRuleSet {
    pub fn from_json(text: &str) -> Result<Self, AsmDiffError> {
        serde_json::from_str(text).map_err(|e| AsmDiffError::Config(e.to_string()))
    }

    pub fn compile(&self) -> Result<CompiledRules, AsmDiffError> {
        let re = |p: &str| Regex::new(p).map_err(|e| AsmDiffError::Config(format!("bad pattern `{p}`: {e}")));
        Ok(CompiledRules {
            rules: self
                .rules
                .iter()
                .map(|r| Ok((re(&r.pattern)?, r.replacement.clone())))
                .collect::<Result<_, AsmDiffError>>()?,
            skip: self.skip.iter().map(|p| re(p)).collect::<Result<_, _>>()?,
            comments: self.comments.clone(),
        })
    }

    /// Digest of the canonical JSON form, recorded in baselines.
    pub fn digest(&self) -> String {
        crate::corpus::content_hash(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }
}

/// Position of a line comment marker outside string literals.
fn comment_start(line: &str, marker: &str) -> Option<usize> {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
        } else if c == '"' {
            in_str = true;
        } else if line[i..].starts_with(marker) {
            return Some(i);
        }
    }
    None
}

impl CompiledRules {
    /// Rewrites `source` line by line: comments are split off, skip patterns
    /// drop the line, otherwise the first matching rule rewrites it.
    pub fn translate(&self, source: &str) -> Translation {
        let mut text = String::with_capacity(source.len());
        let mut skipped = Vec::new();
        for (n, raw) in source.split_inclusive('\n').enumerate() {
            let (line, eol) = match raw.strip_suffix('\n') {
                Some(l) => (l.strip_suffix('\r').unwrap_or(l), "\n"),
                None => (raw, ""),
            };
            let (code, comment) = match self.comments.source.as_deref() {
                Some(m) if !m.is_empty() => match comment_start(line, m) {
                    Some(i) => (&line[..i], Some(&line[i + m.len()..])),
                    None => (line, None),
                },
                _ => (line, None),
            };
            if self.skip.iter().any(|re| re.is_match(code)) {
                skipped.push(SkippedLine {
                    line: n + 1,
                    text: line.to_string(),
                });
                continue;
            }
            match self.rules.iter().find(|(re, _)| re.is_match(code)) {
                Some((re, rep)) => text.push_str(&re.replace(code, rep.as_str())),
                None => text.push_str(code),
            }
            if let Some(c) = comment {
                let marker = self
                    .comments
                    .target
                    .as_deref()
                    .or(self.comments.source.as_deref())
                    .unwrap_or("");
                text.push_str(marker);
                text.push_str(c);
            }
            text.push_str(eol);
        }
        Translation { text, skipped }
    }
}

pub fn translate(source: &str, rules: &DialectRuleSet) -> Result<Translation, AsmDiffError> {
    Ok(rules.compile()?.translate(source))
}
