//! Merges single-`main` test files into one program: each `main` is renamed
//! to a unit function, a header declares them all, and a driver calls them in
//! order. The expected output of the whole is the concatenation of the
//! per-file expectations.

mod lexer;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::execdiff::{extract_block, read_source, strip_block};
use lexer::{tokenize, Kind, Token};

pub const HEADER_FILE: &str = "combined.h";
pub const DRIVER_FILE: &str = "combined_main.c";
pub const EXPECTED_FILE: &str = "expected.txt";
pub const UNIT_FAILED_MARKER: &str = "UNIT-FAILED";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CombineError {
    #[error("no file-scope definition of main")]
    MainNotFound,
    #[error("parameterized main")]
    ParameterizedMain,
}

/// `test_main_` plus the basename with every non-alphanumeric byte
/// replaced by `_`.
pub fn base_unit_name(path: &Path) -> String {
    let base = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    let mut name = String::from("test_main_");
    name.extend(base.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }));
    name
}

/// Assigns unique unit names in list order; later collisions get `_2`,
/// `_3`, and so on. The same path listed twice gets the same name.
pub fn unit_names(paths: &[PathBuf]) -> Vec<String> {
    let mut by_path: HashMap<&Path, String> = HashMap::new();
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        if let Some(n) = by_path.get(p.as_path()) {
            out.push(n.clone());
            continue;
        }
        let base = base_unit_name(p);
        let mut name = base.clone();
        let mut k = 2;
        while taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        taken.insert(name.clone());
        by_path.insert(p, name.clone());
        out.push(name);
    }
    out
}

/// Name for `path` given the paths that precede it in scan order.
pub fn unit_name_for(path: &Path, earlier: &[PathBuf]) -> String {
    let mut all = earlier.to_vec();
    all.push(path.to_path_buf());
    unit_names(&all).pop().unwrap_or_default()
}

fn matching_paren(toks: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (k, t) in toks.iter().enumerate().skip(open) {
        match t.kind {
            Kind::Punct(b'(') => depth += 1,
            Kind::Punct(b')') => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

/// Renames the file-scope definition of `main` to `unit_name`. `main()` is
/// normalized to `(void)`; a `main` taking parameters is refused.
pub fn rename_main(source: &str, unit_name: &str) -> Result<String, CombineError> {
    let toks = tokenize(source);
    let mut brace = 0usize;
    let mut paren = 0usize;
    for (k, t) in toks.iter().enumerate() {
        match t.kind {
            Kind::Punct(b'{') => brace += 1,
            Kind::Punct(b'}') => brace = brace.saturating_sub(1),
            Kind::Punct(b'(') => paren += 1,
            Kind::Punct(b')') => paren = paren.saturating_sub(1),
            Kind::Ident if brace == 0 && paren == 0 && t.text(source) == "main" => {
                if toks.get(k + 1).map(|n| n.kind) != Some(Kind::Punct(b'(')) {
                    continue;
                }
                let Some(close) = matching_paren(&toks, k + 1) else {
                    continue;
                };
                // a prototype ends in `;`, a definition opens a body
                if toks.get(close + 1).map(|n| n.kind) != Some(Kind::Punct(b'{')) {
                    continue;
                }
                let params: Vec<&str> = toks[k + 2..close].iter().map(|p| p.text(source)).collect();
                if !(params.is_empty() || params == ["void"]) {
                    return Err(CombineError::ParameterizedMain);
                }
                let mut out = String::with_capacity(source.len() + unit_name.len());
                out.push_str(&source[..t.start]);
                out.push_str(unit_name);
                out.push_str("(void)");
                out.push_str(&source[toks[close].end..]);
                return Ok(out);
            }
            _ => {}
        }
    }
    Err(CombineError::MainNotFound)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub path: PathBuf,
    pub unit_name: String,
    pub source: String,
}

impl Unit {
    pub fn file_name(&self) -> String {
        format!("{}.c", self.unit_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedSuite {
    pub units: Vec<Unit>,
    pub header_text: String,
    pub driver_text: String,
    #[serde(with = "crate::toolchain::bytes_lossy")]
    pub combined_expected: Vec<u8>,
    pub skipped: Vec<Skipped>,
}

/// One file to merge. `output_free` inputs need no expected block and
/// contribute nothing to the combined expectation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombineInput {
    pub path: PathBuf,
    pub output_free: bool,
}

impl CombineInput {
    pub fn annotated(path: impl Into<PathBuf>) -> Self {
        CombineInput {
            path: path.into(),
            output_free: false,
        }
    }

    pub fn output_free(path: impl Into<PathBuf>) -> Self {
        CombineInput {
            path: path.into(),
            output_free: true,
        }
    }
}

fn prepare(input: &CombineInput, unit_name: &str) -> Result<(String, Vec<u8>), String> {
    let text = read_source(&input.path).map_err(|e| e.to_string())?;
    let expected = match extract_block(&text).map_err(|e| e.to_string())? {
        Some(b) if b.exit_code.unwrap_or(0) != 0 => {
            return Err(format!("expected exit status {}", b.exit_code.unwrap_or(0)))
        }
        Some(b) => b.output,
        None if input.output_free => Vec::new(),
        None => return Err("no expected-output block".into()),
    };
    let source = rename_main(strip_block(&text), unit_name).map_err(|e| e.to_string())?;
    Ok((source, expected))
}

/// Builds the combined suite. Inputs that cannot take part are recorded in
/// `skipped` with a reason; nothing here is fatal.
pub fn combine(inputs: &[CombineInput]) -> CombinedSuite {
    let paths: Vec<PathBuf> = inputs.iter().map(|i| i.path.clone()).collect();
    let names = unit_names(&paths);
    let mut units = Vec::new();
    let mut skipped = Vec::new();
    let mut combined_expected = Vec::new();
    let mut seen = BTreeSet::new();
    for (input, name) in inputs.iter().zip(names) {
        if !seen.insert(input.path.clone()) {
            skipped.push(Skipped {
                path: input.path.clone(),
                reason: "listed more than once".into(),
            });
            continue;
        }
        match prepare(input, &name) {
            Ok((source, expected)) => {
                combined_expected.extend_from_slice(&expected);
                units.push(Unit {
                    path: input.path.clone(),
                    unit_name: name,
                    source,
                });
            }
            Err(reason) => skipped.push(Skipped {
                path: input.path.clone(),
                reason,
            }),
        }
    }
    CombinedSuite {
        header_text: render_header(&units),
        driver_text: render_driver(&units),
        units,
        combined_expected,
        skipped,
    }
}

fn render_header(units: &[Unit]) -> String {
    let mut h = String::from("#ifndef DIFFHARNESS_COMBINED_H\n#define DIFFHARNESS_COMBINED_H\n\n");
    for u in units {
        let _ = writeln!(h, "int {}(void);", u.unit_name);
    }
    h.push_str("\n#endif\n");
    h
}

fn render_driver(units: &[Unit]) -> String {
    let mut d = format!(
        "#include <stdio.h>\n#include \"{HEADER_FILE}\"\n\n\
         /* Called after every unit. Define it to restore stream state that a\n   \
         unit may have changed (locale, buffering, C++ manipulators). */\n\
         #ifndef DIFFHARNESS_RESET_STREAMS\n#define DIFFHARNESS_RESET_STREAMS() ((void)0)\n#endif\n\n\
         static void run_unit(int (*unit)(void), const char *name)\n{{\n    \
         if (unit() != 0) {{\n        fflush(stdout);\n        printf(\"{UNIT_FAILED_MARKER} %s\\n\", name);\n    }}\n    \
         fflush(stdout);\n    DIFFHARNESS_RESET_STREAMS();\n}}\n\nint main(void)\n{{\n"
    );
    for u in units {
        let _ = writeln!(d, "    run_unit({0}, \"{0}\");", u.unit_name);
    }
    d.push_str("    return 0;\n}\n");
    d
}

impl CombinedSuite {
    /// Writes units, header, driver, and `expected.txt` into `dir`. Returns
    /// the C sources to compile, driver last.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut sources = Vec::with_capacity(self.units.len() + 1);
        for u in &self.units {
            let p = dir.join(u.file_name());
            std::fs::write(&p, &u.source)?;
            sources.push(p);
        }
        std::fs::write(dir.join(HEADER_FILE), &self.header_text)?;
        let driver = dir.join(DRIVER_FILE);
        std::fs::write(&driver, &self.driver_text)?;
        sources.push(driver);
        std::fs::write(dir.join(EXPECTED_FILE), &self.combined_expected)?;
        Ok(sources)
    }
}

/// Reads an input list: one path per line, `#` starts a comment. Relative
/// paths resolve against the list's directory. A trailing ` output-free`
/// marks a file that needs no expected block.
pub fn read_input_list(list: &Path) -> std::io::Result<Vec<CombineInput>> {
    let text = std::fs::read_to_string(list)?;
    let base = list.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let (p, free) = match l.strip_suffix("output-free") {
                Some(rest) if rest.ends_with(char::is_whitespace) => (rest.trim_end(), true),
                _ => (l, false),
            };
            CombineInput {
                path: base.join(p),
                output_free: free,
            }
        })
        .collect())
}

/// Duplicate-definition patterns for GNU ld / gold, lld, and ld64. Each has
/// one capture group for the symbol name.
pub fn default_collision_patterns() -> Vec<Regex> {
    [
        r"multiple definition of [`'‘]([^'’`]+)['’]",
        r"duplicate symbol: ([^\s]+)",
        r"duplicate symbol '?_([^'\s]+)'? in",
    ]
    .iter()
    .map(|p| Regex::new(p).expect("built-in pattern"))
    .collect()
}

/// Symbols a failed combined link defined more than once, sorted and
/// deduplicated.
pub fn link_collision_report(diagnostics: &str, patterns: &[Regex]) -> Vec<String> {
    let mut found = BTreeSet::new();
    for re in patterns {
        for cap in re.captures_iter(diagnostics) {
            if let Some(m) = cap.get(1) {
                found.insert(m.as_str().to_string());
            }
        }
    }
    found.into_iter().collect()
}
