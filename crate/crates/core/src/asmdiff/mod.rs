//! Machine-code comparison between assemblers: translate dialects, assemble,
//! pull the code section out of the ELF object, mask fields that may
//! legitimately differ, and compare word by word.
//!
//! Baseline files let one side be recorded where its assembler is available
//! and compared elsewhere. Layout, byte for byte:
//!
//! ```text
//! ASMBASE1\n
//! <one line of JSON metadata, no interior newlines>\n
//! <masked section bytes, exactly `length` of them, to end of file>
//! ```

mod elf;
mod mask;
mod translate;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::content_hash;
use crate::toolchain::{classify, invoke, tool_version, OptionSet, Status, ToolKind, ToolProfile, ToolchainError};

pub use elf::{extract_code, relocation_length, relocation_name, CodeSection, RelocSpan};
pub use mask::{mask, Endianness, MaskEntry, MaskStats, MaskTable, Masked, WordFormat};
pub use translate::{translate, CommentSyntax, CompiledRules, DialectRuleSet, RewriteRule, SkippedLine, Translation};

pub const BASELINE_MAGIC: &[u8] = b"ASMBASE1\n";

#[derive(Debug, Error)]
pub enum AsmDiffError {
    #[error("unsupported object container: {0}")]
    UnsupportedContainer(String),
    #[error("section {0} not found")]
    SectionMissing(String),
    #[error("{length} bytes is not a multiple of the {word_size}-byte word size")]
    AlignmentError { length: usize, word_size: usize },
    #[error("units declare different word formats")]
    FormatMismatch,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed baseline {path}: {reason}")]
    BadBaseline { path: PathBuf, reason: String },
    #[error("assembling {path} failed ({status}): {diagnostics}")]
    AssembleFailed {
        path: PathBuf,
        status: Status,
        diagnostics: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AsmDiffError {
    let path = path.to_path_buf();
    move |source| AsmDiffError::Io { path, source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsmUnit {
    pub source: String,
    pub translated: String,
    #[serde(skip)]
    pub code: Vec<u8>,
    pub format: WordFormat,
    pub relocations: Vec<RelocSpan>,
    pub skipped: Vec<SkippedLine>,
}

impl AsmUnit {
    /// A unit from raw code bytes, with no source attached.
    pub fn from_code(code: Vec<u8>, format: WordFormat, relocations: Vec<RelocSpan>) -> Self {
        AsmUnit {
            source: String::new(),
            translated: String::new(),
            code,
            format,
            relocations,
            skipped: Vec::new(),
        }
    }

    pub fn from_object(object: &Path, section: &str, format: WordFormat) -> Result<Self, AsmDiffError> {
        let bytes = std::fs::read(object).map_err(io_err(object))?;
        let code = extract_code(&bytes, section)?;
        Ok(Self::from_code(code.bytes, format, code.relocations))
    }
}

/// Translates `source` (if rules are given), assembles it, and extracts
/// `section` from the resulting object.
pub fn assemble_unit(
    source: &Path,
    rules: Option<&CompiledRules>,
    assembler: &ToolProfile,
    cell: &OptionSet,
    section: &str,
    format: WordFormat,
) -> Result<AsmUnit, AsmDiffError> {
    if assembler.kind != ToolKind::Assembler && assembler.kind != ToolKind::Compiler {
        return Err(ToolchainError::WrongKind {
            profile: assembler.id.clone(),
            expected: ToolKind::Assembler,
            actual: assembler.kind,
        }
        .into());
    }
    let text = std::fs::read_to_string(source).map_err(io_err(source))?;
    let translation = match rules {
        Some(r) => r.translate(&text),
        None => Translation {
            text: text.clone(),
            skipped: Vec::new(),
        },
    };
    let dir = crate::toolchain::fresh_workdir().map_err(io_err(source))?;
    let input = dir.path().join(source.file_name().unwrap_or("input.s".as_ref()));
    std::fs::write(&input, &translation.text).map_err(io_err(&input))?;
    let inv = invoke(assembler, cell, &input)?;
    let verdict = classify(&inv.record, assembler);
    let object = match (&verdict.status, &inv.record.artifact) {
        (Status::Accept, Some(p)) => p.clone(),
        _ => {
            return Err(AsmDiffError::AssembleFailed {
                path: source.to_path_buf(),
                status: verdict.status,
                diagnostics: verdict.diagnostics,
            })
        }
    };
    let mut unit = AsmUnit::from_object(&object, section, format)?;
    unit.source = text;
    unit.translated = translation.text;
    unit.skipped = translation.skipped;
    Ok(unit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsmVerdict {
    Equal,
    Differ,
    LengthMismatch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareStats {
    pub words_compared: usize,
    pub words_masked: usize,
    pub relocation_bytes_zeroed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsmDiffReport {
    pub verdict: AsmVerdict,
    /// Byte offset of the first differing word.
    pub first_diff_offset: Option<u64>,
    pub word_a: Option<String>,
    pub word_b: Option<String>,
    pub masked_a: bool,
    pub masked_b: bool,
    pub length_a: usize,
    pub length_b: usize,
    pub stats: CompareStats,
}

/// Masks each unit with its own relocations and the shared table, then
/// compares.
pub fn compare(a: &AsmUnit, b: &AsmUnit, table: &MaskTable) -> Result<AsmDiffReport, AsmDiffError> {
    compare_with(a, b, table, true)
}

/// Byte comparison with no masking at all.
pub fn compare_unmasked(a: &AsmUnit, b: &AsmUnit) -> Result<AsmDiffReport, AsmDiffError> {
    compare_with(a, b, &MaskTable::default(), false)
}

fn compare_with(a: &AsmUnit, b: &AsmUnit, table: &MaskTable, use_relocs: bool) -> Result<AsmDiffReport, AsmDiffError> {
    if a.format != b.format {
        return Err(AsmDiffError::FormatMismatch);
    }
    table.validate()?;
    let f = a.format;
    let relocs = |u: &AsmUnit| if use_relocs { u.relocations.clone() } else { Vec::new() };
    let ma = mask(&a.code, f, table, &relocs(a))?;
    let mb = mask(&b.code, f, table, &relocs(b))?;
    let words_compared = ma.changed.len().min(mb.changed.len());
    let mut report = AsmDiffReport {
        verdict: AsmVerdict::Equal,
        first_diff_offset: None,
        word_a: None,
        word_b: None,
        masked_a: false,
        masked_b: false,
        length_a: a.code.len(),
        length_b: b.code.len(),
        stats: CompareStats {
            words_compared,
            words_masked: ma.stats.words_masked + mb.stats.words_masked,
            relocation_bytes_zeroed: ma.stats.relocation_bytes_zeroed + mb.stats.relocation_bytes_zeroed,
        },
    };
    let first = ma
        .bytes
        .chunks(f.size)
        .zip(mb.bytes.chunks(f.size))
        .position(|(x, y)| x != y);
    if let Some(i) = first {
        let word = |m: &Masked| f.hex(&m.bytes[i * f.size..(i + 1) * f.size]);
        report.verdict = AsmVerdict::Differ;
        report.first_diff_offset = Some((i * f.size) as u64);
        report.word_a = Some(word(&ma));
        report.word_b = Some(word(&mb));
        report.masked_a = ma.changed[i];
        report.masked_b = mb.changed[i];
    }
    if a.code.len() != b.code.len() {
        report.verdict = AsmVerdict::LengthMismatch;
        if report.first_diff_offset.is_none() {
            report.first_diff_offset = Some((words_compared * f.size) as u64);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineMeta {
    pub section: String,
    pub format: WordFormat,
    pub length: usize,
    pub tool_id: String,
    pub tool_version: Option<String>,
    pub rules_digest: String,
    pub mask_digest: String,
    pub source_digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Baseline {
    pub meta: BaselineMeta,
    /// Already masked.
    pub bytes: Vec<u8>,
}

impl Baseline {
    /// Masks `unit` and records it together with its provenance.
    pub fn record(
        unit: &AsmUnit,
        section: &str,
        table: &MaskTable,
        rules: &DialectRuleSet,
        tool: Option<&ToolProfile>,
    ) -> Result<Self, AsmDiffError> {
        let masked = mask(&unit.code, unit.format, table, &unit.relocations)?;
        Ok(Baseline {
            meta: BaselineMeta {
                section: section.to_string(),
                format: unit.format,
                length: masked.bytes.len(),
                tool_id: tool.map(|t| t.id.clone()).unwrap_or_default(),
                tool_version: tool.and_then(tool_version),
                rules_digest: rules.digest(),
                mask_digest: table.digest(),
                source_digest: content_hash(unit.source.as_bytes()),
            },
            bytes: masked.bytes,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = BASELINE_MAGIC.to_vec();
        // serde_json never emits raw newlines in compact form
        out.extend(serde_json::to_vec(&self.meta).expect("metadata serializes"));
        out.push(b'\n');
        out.extend_from_slice(&self.bytes);
        out
    }

    pub fn parse(data: &[u8], path: &Path) -> Result<Self, AsmDiffError> {
        let bad = |reason: &str| AsmDiffError::BadBaseline {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let rest = data
            .strip_prefix(BASELINE_MAGIC)
            .ok_or_else(|| bad("missing ASMBASE1 header"))?;
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing metadata line"))?;
        let meta: BaselineMeta = serde_json::from_slice(&rest[..nl]).map_err(|e| bad(&e.to_string()))?;
        let bytes = rest[nl + 1..].to_vec();
        if bytes.len() != meta.length {
            return Err(bad(&format!(
                "expected {} code bytes, found {}",
                meta.length,
                bytes.len()
            )));
        }
        Ok(Baseline { meta, bytes })
    }

    pub fn write(&self, path: &Path) -> Result<(), AsmDiffError> {
        let mut f = std::fs::File::create(path).map_err(io_err(path))?;
        f.write_all(&self.to_bytes()).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, AsmDiffError> {
        let data = std::fs::read(path).map_err(io_err(path))?;
        Self::parse(&data, path)
    }

    /// The recorded bytes as a unit; masking them again is a no-op.
    pub fn to_unit(&self) -> AsmUnit {
        AsmUnit::from_code(self.bytes.clone(), self.meta.format, Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LE: WordFormat = WordFormat::ARM32;

    fn unit(code: &[u8]) -> AsmUnit {
        AsmUnit::from_code(code.to_vec(), LE, Vec::new())
    }

    #[test]
    fn identical_units_are_equal() {
        let u = unit(&[0, 0, 0xa0, 0xe1, 0, 0, 0, 0xea]);
        let r = compare(&u, &u, &MaskTable::arm_branches()).unwrap();
        assert_eq!(r.verdict, AsmVerdict::Equal);
        assert_eq!(r.first_diff_offset, None);
        assert_eq!(r.stats.words_compared, 2);
    }

    #[test]
    fn branch_targets_masked_or_not() {
        let a = unit(&[0, 0, 0xa0, 0xe1, 0x00, 0, 0, 0xea, 0, 0, 0xa0, 0xe1]);
        let b = unit(&[0, 0, 0xa0, 0xe1, 0x0e, 0, 0, 0xea, 0, 0, 0xa0, 0xe1]);
        assert_eq!(
            compare(&a, &b, &MaskTable::arm_branches()).unwrap().verdict,
            AsmVerdict::Equal
        );
        let raw = compare_unmasked(&a, &b).unwrap();
        assert_eq!(raw.verdict, AsmVerdict::Differ);
        assert_eq!(raw.first_diff_offset, Some(4));
        assert_eq!(raw.word_a.as_deref(), Some("ea000000"));
        assert_eq!(raw.word_b.as_deref(), Some("ea00000e"));
        assert!(!raw.masked_a && !raw.masked_b);
    }

    #[test]
    fn length_mismatch() {
        let r = compare(&unit(&[0; 8]), &unit(&[0; 12]), &MaskTable::default()).unwrap();
        assert_eq!(r.verdict, AsmVerdict::LengthMismatch);
        assert_eq!((r.length_a, r.length_b), (8, 12));
        assert_eq!(r.first_diff_offset, Some(8));
    }

    #[test]
    fn format_mismatch() {
        let mut b = unit(&[0; 4]);
        b.format.endianness = Endianness::Big;
        assert!(matches!(
            compare(&unit(&[0; 4]), &b, &MaskTable::default()),
            Err(AsmDiffError::FormatMismatch)
        ));
    }

    #[test]
    fn baseline_round_trip() {
        let mut u = unit(&[1, 2, 3, 4, 0x0e, 0, 0, 0xea, 1, 2, 3, 4]);
        u.relocations.push(RelocSpan {
            offset: 0,
            length: 4,
            kind: "R_ARM_ABS32".into(),
        });
        let b = Baseline::record(
            &u,
            ".text",
            &MaskTable::arm_branches(),
            &DialectRuleSet::default(),
            None,
        )
        .unwrap();
        assert_eq!(b.bytes, [0, 0, 0, 0, 0, 0, 0, 0xea, 1, 2, 3, 4]);
        let bytes = b.to_bytes();
        assert!(bytes.starts_with(b"ASMBASE1\n{"));
        let back = Baseline::parse(&bytes, Path::new("b")).unwrap();
        assert_eq!(back, b);
        let r = compare(&u, &back.to_unit(), &MaskTable::arm_branches()).unwrap();
        assert_eq!(r.verdict, AsmVerdict::Equal);
    }

    #[test]
    fn malformed_baselines() {
        let p = Path::new("x");
        assert!(Baseline::parse(b"ASMBASE2\n{}\n", p).is_err());
        assert!(Baseline::parse(b"ASMBASE1\nnot json\n", p).is_err());
        let b = Baseline::record(
            &unit(&[0; 4]),
            ".text",
            &MaskTable::default(),
            &DialectRuleSet::default(),
            None,
        )
        .unwrap();
        let mut bytes = b.to_bytes();
        bytes.push(0);
        assert!(Baseline::parse(&bytes, p).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_reflexive(x in prop::collection::vec(any::<[u8; 4]>(), 0..8), y in prop::collection::vec(any::<[u8; 4]>(), 0..8)) {
            let (a, b) = (unit(&x.concat()), unit(&y.concat()));
            let t = MaskTable::arm_branches();
            let ab = compare(&a, &b, &t).unwrap();
            let ba = compare(&b, &a, &t).unwrap();
            prop_assert_eq!(ab.verdict, ba.verdict);
            prop_assert_eq!(ab.first_diff_offset, ba.first_diff_offset);
            prop_assert_eq!(&ab.word_a, &ba.word_b);
            prop_assert_eq!(compare(&a, &a, &t).unwrap().verdict, AsmVerdict::Equal);
            if x.len() == y.len() {
                prop_assert_eq!(compare(&a, &b, &MaskTable::clear_all()).unwrap().verdict, AsmVerdict::Equal);
            }
            if ab.verdict == AsmVerdict::Differ {
                prop_assert_ne!(&ab.word_a, &ab.word_b);
            }
        }
    }
}
