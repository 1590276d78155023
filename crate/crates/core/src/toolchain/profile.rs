use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ToolchainError;

pub const INPUT_PLACEHOLDER: &str = "{input}";
pub const OUTPUT_PLACEHOLDER: &str = "{output}";
pub const OPTIONS_PLACEHOLDER: &str = "{options}";

pub const DEFAULT_TIMEOUT_SECONDS: f64 = 60.0;
pub const DEFAULT_STDERR_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolKind {
    Compiler,
    Assembler,
    Runner,
}

/// One named option axis, e.g. `opt = ["-O0", "-O1", ...]`.
///
/// An entry may hold several whitespace-separated arguments (`"-g -fno-inline"`)
/// or be empty, meaning "no argument".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionAxis {
    pub name: String,
    pub values: Vec<String>,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECONDS
}

fn default_stderr_cap() -> usize {
    DEFAULT_STDERR_CAP
}

fn default_output_extension() -> String {
    "out".to_string()
}

/// Declarative description of how to invoke one external tool.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolProfile {
    pub id: String,
    pub kind: ToolKind,
    pub command_template: Vec<String>,
    #[serde(default)]
    pub option_axes: Vec<OptionAxis>,
    #[serde(default)]
    pub crash_patterns: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    /// Extension given to the `{output}` artifact inside the work directory.
    #[serde(default = "default_output_extension")]
    pub output_extension: String,
    #[serde(default = "default_stderr_cap")]
    pub stderr_cap_bytes: usize,
}

impl ToolProfile {
    pub fn new(id: impl Into<String>, kind: ToolKind, command_template: Vec<String>) -> Self {
        ToolProfile {
            id: id.into(),
            kind,
            command_template,
            option_axes: Vec::new(),
            crash_patterns: Vec::new(),
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
            env: BTreeMap::new(),
            output_extension: default_output_extension(),
            stderr_cap_bytes: DEFAULT_STDERR_CAP,
        }
    }

    pub fn with_axis(mut self, name: &str, values: &[&str]) -> Self {
        self.option_axes.push(OptionAxis {
            name: name.to_string(),
            values: values.iter().map(|v| v.to_string()).collect(),
        });
        self
    }

    pub fn with_crash_pattern(mut self, pattern: &str) -> Self {
        self.crash_patterns.push(pattern.to_string());
        self
    }

    pub fn with_timeout(mut self, seconds: f64) -> Self {
        self.timeout_seconds = seconds;
        self
    }

    pub fn validate(&self) -> Result<(), ToolchainError> {
        let invalid = |reason: String| ToolchainError::InvalidProfile {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(invalid("empty id".into()));
        }
        if self.command_template.is_empty() {
            return Err(invalid("empty command_template".into()));
        }
        let inputs: usize = self
            .command_template
            .iter()
            .map(|arg| arg.matches(INPUT_PLACEHOLDER).count())
            .sum();
        if inputs != 1 {
            return Err(invalid(format!(
                "command_template must contain {{input}} exactly once, found {inputs}"
            )));
        }
        if self
            .command_template
            .iter()
            .any(|arg| arg.contains(OPTIONS_PLACEHOLDER) && arg != OPTIONS_PLACEHOLDER)
        {
            return Err(invalid("{options} must be a standalone argument".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for axis in &self.option_axes {
            if axis.values.is_empty() {
                return Err(invalid(format!("axis `{}` has no entries", axis.name)));
            }
            if !seen.insert(axis.name.as_str()) {
                return Err(invalid(format!("duplicate axis `{}`", axis.name)));
            }
        }
        if !(self.timeout_seconds > 0.0 && self.timeout_seconds.is_finite()) {
            return Err(invalid("timeout_seconds must be a positive number".into()));
        }
        for pattern in &self.crash_patterns {
            Regex::new(pattern).map_err(|e| invalid(format!("bad crash pattern: {e}")))?;
        }
        Ok(())
    }

    pub fn axis(&self, name: &str) -> Option<&OptionAxis> {
        self.option_axes.iter().find(|a| a.name == name)
    }

    /// The template names an `{output}` artifact.
    pub fn declares_output(&self) -> bool {
        self.command_template.iter().any(|arg| arg.contains(OUTPUT_PLACEHOLDER))
    }

    /// First entry of every axis.
    pub fn default_options(&self) -> OptionSet {
        OptionSet::from_pairs(self.option_axes.iter().map(|a| (a.name.clone(), a.values[0].clone())))
    }

    /// Checks that `options` picks exactly one declared entry per axis.
    pub fn check_options(&self, options: &OptionSet) -> Result<(), ToolchainError> {
        let bad = |reason: String| ToolchainError::InvalidOptions {
            profile: self.id.clone(),
            reason,
        };
        if options.len() != self.option_axes.len() {
            return Err(bad(format!(
                "expected {} axes, got {}",
                self.option_axes.len(),
                options.len()
            )));
        }
        for axis in &self.option_axes {
            match options.get(&axis.name) {
                Some(v) if axis.values.iter().any(|x| x == v) => {}
                Some(v) => return Err(bad(format!("`{v}` is not an entry of axis `{}`", axis.name))),
                None => return Err(bad(format!("missing axis `{}`", axis.name))),
            }
        }
        Ok(())
    }

    /// Expands the template into an argument vector.
    pub fn render_command(&self, options: &OptionSet, input: &Path, output: &Path) -> Vec<String> {
        let input = input.to_string_lossy();
        let output = output.to_string_lossy();
        let mut argv = Vec::with_capacity(self.command_template.len() + options.len());
        for arg in &self.command_template {
            if arg == OPTIONS_PLACEHOLDER {
                for axis in &self.option_axes {
                    if let Some(value) = options.get(&axis.name) {
                        argv.extend(value.split_whitespace().map(str::to_string));
                    }
                }
                continue;
            }
            argv.push(
                arg.replace(INPUT_PLACEHOLDER, &input)
                    .replace(OUTPUT_PLACEHOLDER, &output),
            );
        }
        argv
    }

    pub(crate) fn compiled_crash_patterns(&self) -> Vec<Regex> {
        self.crash_patterns.iter().filter_map(|p| Regex::new(p).ok()).collect()
    }
}

/// A configuration file holding several profiles.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ToolSet {
    pub tools: Vec<ToolProfile>,
}

impl ToolSet {
    pub fn from_json(text: &str) -> Result<Self, ToolchainError> {
        let set: ToolSet = serde_json::from_str(text).map_err(|e| ToolchainError::Config(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), ToolchainError> {
        let mut ids = std::collections::BTreeSet::new();
        for tool in &self.tools {
            tool.validate()?;
            if !ids.insert(tool.id.as_str()) {
                return Err(ToolchainError::Config(format!("duplicate tool id `{}`", tool.id)));
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ToolProfile> {
        self.tools.iter().find(|t| t.id == id)
    }
}

/// One chosen entry per option axis.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OptionSet {
    choices: BTreeMap<String, String>,
}

impl OptionSet {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        OptionSet {
            choices: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    pub fn get(&self, axis: &str) -> Option<&str> {
        self.choices.get(axis).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.choices.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// `axis=value` pairs in axis-name order joined by `;`. `\`, `=` and `;`
    /// inside names or values are backslash-escaped, so distinct choices never
    /// share a key.
    pub fn canonical_key(&self) -> String {
        let mut key = String::new();
        for (i, (axis, value)) in self.choices.iter().enumerate() {
            if i > 0 {
                key.push(';');
            }
            escape_into(&mut key, axis);
            key.push('=');
            escape_into(&mut key, value);
        }
        key
    }

    /// Inverse of [`OptionSet::canonical_key`].
    pub fn parse_key(key: &str) -> Result<Self, ToolchainError> {
        let mut choices = BTreeMap::new();
        if key.is_empty() {
            return Ok(OptionSet { choices });
        }
        let mut fields = vec![String::new()];
        let mut seps = Vec::new();
        let mut chars = key.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some(n) => fields.last_mut().unwrap().push(n),
                    None => return Err(ToolchainError::Config(format!("dangling escape in `{key}`"))),
                },
                '=' | ';' => {
                    seps.push(c);
                    fields.push(String::new());
                }
                _ => fields.last_mut().unwrap().push(c),
            }
        }
        if fields.len() % 2 != 0
            || seps
                .iter()
                .enumerate()
                .any(|(i, s)| *s != if i % 2 == 0 { '=' } else { ';' })
        {
            return Err(ToolchainError::Config(format!("malformed option key `{key}`")));
        }
        let mut it = fields.into_iter();
        while let (Some(axis), Some(value)) = (it.next(), it.next()) {
            choices.insert(axis, value);
        }
        Ok(OptionSet { choices })
    }
}

fn escape_into(out: &mut String, text: &str) {
    for c in text.chars() {
        if matches!(c, '\\' | '=' | ';') {
            out.push('\\');
        }
        out.push(c);
    }
}

impl fmt::Display for OptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_key())
    }
}
