use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::elf::RelocSpan;
use super::AsmDiffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

impl std::str::FromStr for Endianness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "little" | "le" => Ok(Endianness::Little),
            "big" | "be" => Ok(Endianness::Big),
            other => Err(format!("unknown endianness `{other}`")),
        }
    }
}

/// Instruction word layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFormat {
    /// Bytes per word: 1, 2, 4, or 8.
    pub size: usize,
    pub endianness: Endianness,
}

impl WordFormat {
    pub const ARM32: WordFormat = WordFormat {
        size: 4,
        endianness: Endianness::Little,
    };

    pub fn validate(&self) -> Result<(), AsmDiffError> {
        if matches!(self.size, 1 | 2 | 4 | 8) {
            Ok(())
        } else {
            Err(AsmDiffError::Config(format!("unsupported word size {}", self.size)))
        }
    }

    pub fn read(&self, b: &[u8]) -> u64 {
        let fold = |acc: u64, &x: &u8| (acc << 8) | x as u64;
        match self.endianness {
            Endianness::Big => b.iter().fold(0, fold),
            Endianness::Little => b.iter().rev().fold(0, fold),
        }
    }

    pub fn write(&self, value: u64, out: &mut [u8]) {
        let n = out.len();
        for (i, byte) in out.iter_mut().enumerate() {
            let shift = match self.endianness {
                Endianness::Little => 8 * i,
                Endianness::Big => 8 * (n - 1 - i),
            };
            *byte = (value >> shift) as u8;
        }
    }

    /// Word value as fixed-width hex.
    pub fn hex(&self, b: &[u8]) -> String {
        format!("{:0width$x}", self.read(b), width = 2 * b.len())
    }
}

mod hex_u64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:#010x}"))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(u64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(n) => Ok(n),
            Repr::Str(s) => {
                let t = s.trim();
                let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
                    Some(h) => u64::from_str_radix(&h.replace('_', ""), 16),
                    None => t.parse(),
                };
                parsed.map_err(|e| serde::de::Error::custom(format!("bad mask value `{s}`: {e}")))
            }
        }
    }
}

/// A word `w` with `w & match_mask == match_value` becomes `w & !clear_mask`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(with = "hex_u64")]
    pub match_value: u64,
    #[serde(with = "hex_u64")]
    pub match_mask: u64,
    #[serde(with = "hex_u64")]
    pub clear_mask: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskTable {
    pub entries: Vec<MaskEntry>,
}

impl MaskEntry {
    pub fn new(match_value: u64, match_mask: u64, clear_mask: u64) -> Self {
        MaskEntry {
            name: None,
            match_value,
            match_mask,
            clear_mask,
        }
    }

    pub fn applies(&self, w: u64) -> bool {
        w & self.match_mask == self.match_value
    }
}

impl MaskTable {
    /// ARM (A32) `B`/`BL`: the condition field is ignored, bits 27..25 are
    /// `101`, and the 24-bit offset is cleared.
    pub fn arm_branches() -> Self {
        MaskTable {
            entries: vec![MaskEntry {
                name: Some("arm-b-bl".into()),
                match_value: 0x0A00_0000,
                match_mask: 0x0E00_0000,
                clear_mask: 0x00FF_FFFF,
            }],
        }
    }

    /// Clears every bit of every word.
    pub fn clear_all() -> Self {
        MaskTable {
            entries: vec![MaskEntry::new(0, 0, u64::MAX)],
        }
    }

    pub fn from_json(text: &str) -> Result<Self, AsmDiffError> {
        let t: MaskTable = serde_json::from_str(text).map_err(|e| AsmDiffError::Config(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    /// Classifying bits may never be cleared, and `match_value` must lie
    /// within `match_mask`.
    pub fn validate(&self) -> Result<(), AsmDiffError> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.clear_mask & e.match_mask != 0 {
                return Err(AsmDiffError::Config(format!(
                    "mask entry {i}: clear_mask overlaps match_mask"
                )));
            }
            if e.match_value & !e.match_mask != 0 {
                return Err(AsmDiffError::Config(format!(
                    "mask entry {i}: match_value outside match_mask"
                )));
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        crate::corpus::content_hash(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }

    /// Applies entries until no entry changes the word.
    pub fn apply(&self, mut w: u64) -> u64 {
        loop {
            let before = w;
            for e in &self.entries {
                if e.applies(w) {
                    w &= !e.clear_mask;
                }
            }
            if w == before {
                return w;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskStats {
    pub words: usize,
    pub words_masked: usize,
    pub relocation_bytes_zeroed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masked {
    pub bytes: Vec<u8>,
    /// Per word: whether masking changed it.
    pub changed: Vec<bool>,
    pub stats: MaskStats,
}

/// Zeroes every relocation span, then applies the table to each word.
pub fn mask(
    bytes: &[u8],
    format: WordFormat,
    table: &MaskTable,
    relocations: &[RelocSpan],
) -> Result<Masked, AsmDiffError> {
    format.validate()?;
    if !bytes.len().is_multiple_of(format.size) {
        return Err(AsmDiffError::AlignmentError {
            length: bytes.len(),
            word_size: format.size,
        });
    }
    let mut out = bytes.to_vec();
    let mut covered = vec![false; out.len()];
    for span in relocations {
        let start = (span.offset as usize).min(out.len());
        let end = (span.offset.saturating_add(span.length) as usize).min(out.len());
        out[start..end].fill(0);
        covered[start..end].fill(true);
    }
    let zeroed = covered.iter().filter(|&&c| c).count();
    let mut words_masked = 0;
    for chunk in out.chunks_mut(format.size) {
        let w = format.read(chunk);
        let m = table.apply(w);
        if m != w {
            format.write(m, chunk);
        }
    }
    let changed: Vec<bool> = bytes
        .chunks(format.size)
        .zip(out.chunks(format.size))
        .map(|(a, b)| a != b)
        .inspect(|&c| words_masked += c as usize)
        .collect();
    Ok(Masked {
        stats: MaskStats {
            words: changed.len(),
            words_masked,
            relocation_bytes_zeroed: zeroed,
        },
        bytes: out,
        changed,
    })
}
