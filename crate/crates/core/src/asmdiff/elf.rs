//! Section and relocation reading for ELF relocatable objects.

use serde::{Deserialize, Serialize};

use super::AsmDiffError;

const ET_REL: u16 = 1;
const SHT_RELA: u32 = 4;
const SHT_NOBITS: u32 = 8;
const SHT_REL: u32 = 9;
const SHN_XINDEX: u16 = 0xffff;

pub const EM_386: u16 = 3;
pub const EM_ARM: u16 = 40;
pub const EM_X86_64: u16 = 62;
pub const EM_AARCH64: u16 = 183;

/// Bytes of the section a relocation may rewrite.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelocSpan {
    pub offset: u64,
    pub length: u64,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSection {
    pub machine: u16,
    pub big_endian: bool,
    pub bytes: Vec<u8>,
    pub relocations: Vec<RelocSpan>,
}

struct Reader<'a> {
    data: &'a [u8],
    is64: bool,
    big: bool,
}

impl Reader<'_> {
    fn bytes(&self, off: u64, len: u64) -> Result<&[u8], AsmDiffError> {
        let start = usize::try_from(off).map_err(|_| truncated())?;
        let len = usize::try_from(len).map_err(|_| truncated())?;
        let end = start.checked_add(len).ok_or_else(truncated)?;
        self.data.get(start..end).ok_or_else(truncated)
    }

    fn uint(&self, off: u64, size: usize) -> Result<u64, AsmDiffError> {
        let b = self.bytes(off, size as u64)?;
        let mut v = 0u64;
        for i in 0..size {
            let byte = if self.big { b[i] } else { b[size - 1 - i] };
            v = (v << 8) | byte as u64;
        }
        Ok(v)
    }

    fn u16(&self, off: u64) -> Result<u16, AsmDiffError> {
        Ok(self.uint(off, 2)? as u16)
    }

    fn u32(&self, off: u64) -> Result<u32, AsmDiffError> {
        Ok(self.uint(off, 4)? as u32)
    }

    /// Address-sized field.
    fn addr(&self, off: u64) -> Result<u64, AsmDiffError> {
        self.uint(off, if self.is64 { 8 } else { 4 })
    }
}

fn truncated() -> AsmDiffError {
    AsmDiffError::UnsupportedContainer("truncated or malformed ELF file".into())
}

#[derive(Debug, Clone, Copy)]
struct Section {
    name: u32,
    kind: u32,
    offset: u64,
    size: u64,
    link: u32,
    info: u32,
    entsize: u64,
}

fn section_header(r: &Reader, at: u64) -> Result<Section, AsmDiffError> {
    if r.is64 {
        Ok(Section {
            name: r.u32(at)?,
            kind: r.u32(at + 4)?,
            offset: r.uint(at + 24, 8)?,
            size: r.uint(at + 32, 8)?,
            link: r.u32(at + 40)?,
            info: r.u32(at + 44)?,
            entsize: r.uint(at + 56, 8)?,
        })
    } else {
        Ok(Section {
            name: r.u32(at)?,
            kind: r.u32(at + 4)?,
            offset: r.u32(at + 16)? as u64,
            size: r.u32(at + 20)? as u64,
            link: r.u32(at + 24)?,
            info: r.u32(at + 28)?,
            entsize: r.u32(at + 36)? as u64,
        })
    }
}

fn c_string(table: &[u8], at: u32) -> &[u8] {
    let rest = table.get(at as usize..).unwrap_or(&[]);
    let end = rest.iter().position(|&b| b == 0).unwrap_or(rest.len());
    &rest[..end]
}

/// Raw bytes of `section_name` plus every relocation that targets it, with
/// section-relative offsets.
pub fn extract_code(object: &[u8], section_name: &str) -> Result<CodeSection, AsmDiffError> {
    if object.len() < 16 || &object[..4] != b"\x7fELF" {
        return Err(AsmDiffError::UnsupportedContainer("not an ELF file".into()));
    }
    let is64 = match object[4] {
        1 => false,
        2 => true,
        c => return Err(AsmDiffError::UnsupportedContainer(format!("unknown ELF class {c}"))),
    };
    let big = match object[5] {
        1 => false,
        2 => true,
        d => {
            return Err(AsmDiffError::UnsupportedContainer(format!(
                "unknown ELF data encoding {d}"
            )))
        }
    };
    let r = Reader {
        data: object,
        is64,
        big,
    };
    let e_type = r.u16(16)?;
    if e_type != ET_REL {
        return Err(AsmDiffError::UnsupportedContainer(format!(
            "ELF type {e_type} is not a relocatable object"
        )));
    }
    let machine = r.u16(18)?;
    let (shoff, shentsize, mut shnum, mut shstrndx) = if is64 {
        (r.uint(40, 8)?, r.u16(58)?, r.u16(60)? as u32, r.u16(62)? as u32)
    } else {
        (r.u32(32)? as u64, r.u16(46)?, r.u16(48)? as u32, r.u16(50)? as u32)
    };
    if shoff == 0 {
        return Err(AsmDiffError::SectionMissing(section_name.to_string()));
    }
    let first = section_header(&r, shoff)?;
    if shnum == 0 {
        shnum = u32::try_from(first.size).map_err(|_| truncated())?;
    }
    if shstrndx == SHN_XINDEX as u32 {
        shstrndx = first.link;
    }
    let sections = (0..shnum)
        .map(|i| section_header(&r, shoff + i as u64 * shentsize as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let strtab = sections.get(shstrndx as usize).ok_or_else(truncated)?;
    let names = r.bytes(strtab.offset, strtab.size)?;
    let (index, target) = sections
        .iter()
        .enumerate()
        .find(|(_, s)| c_string(names, s.name) == section_name.as_bytes())
        .ok_or_else(|| AsmDiffError::SectionMissing(section_name.to_string()))?;
    let bytes = if target.kind == SHT_NOBITS {
        vec![0; target.size as usize]
    } else {
        r.bytes(target.offset, target.size)?.to_vec()
    };
    let mut relocations = Vec::new();
    for s in sections
        .iter()
        .filter(|s| (s.kind == SHT_REL || s.kind == SHT_RELA) && s.info as usize == index)
    {
        let word = if is64 { 8 } else { 4 };
        let default_size = if s.kind == SHT_RELA { 3 * word } else { 2 * word };
        let entsize = if s.entsize == 0 { default_size } else { s.entsize };
        for k in 0..s.size / entsize {
            let at = s.offset + k * entsize;
            let offset = r.addr(at)?;
            let info = r.addr(at + word)?;
            let rtype = if is64 {
                (info & 0xffff_ffff) as u32
            } else {
                (info & 0xff) as u32
            };
            let length = relocation_length(machine, rtype);
            if length == 0 || offset >= target.size {
                continue;
            }
            relocations.push(RelocSpan {
                offset,
                length: length.min(target.size - offset),
                kind: relocation_name(machine, rtype),
            });
        }
    }
    relocations.sort();
    Ok(CodeSection {
        machine,
        big_endian: big,
        bytes,
        relocations,
    })
}

/// Width of the field a relocation type patches. Unknown types default to 4.
pub fn relocation_length(machine: u16, rtype: u32) -> u64 {
    match (machine, rtype) {
        (_, 0) => 0,
        // ABS16, ABS8, THM_PC8, THM_JUMP11, THM_JUMP8
        (EM_ARM, 5) => 2,
        (EM_ARM, 8) => 1,
        (EM_ARM, 11 | 102 | 103) => 2,
        // ABS64, ABS16, PREL64, PREL16
        (EM_AARCH64, 257 | 260) => 8,
        (EM_AARCH64, 259 | 262) => 2,
        (EM_X86_64, 1 | 24 | 25 | 33) => 8,
        (EM_X86_64, 12 | 13) => 2,
        (EM_X86_64, 14 | 15) => 1,
        (EM_386, 20 | 21) => 2,
        (EM_386, 22 | 23) => 1,
        _ => 4,
    }
}

pub fn relocation_name(machine: u16, rtype: u32) -> String {
    let known = match (machine, rtype) {
        (EM_ARM, 2) => "R_ARM_ABS32",
        (EM_ARM, 3) => "R_ARM_REL32",
        (EM_ARM, 5) => "R_ARM_ABS16",
        (EM_ARM, 8) => "R_ARM_ABS8",
        (EM_ARM, 10) => "R_ARM_THM_CALL",
        (EM_ARM, 28) => "R_ARM_CALL",
        (EM_ARM, 29) => "R_ARM_JUMP24",
        (EM_ARM, 30) => "R_ARM_THM_JUMP24",
        (EM_ARM, 43) => "R_ARM_MOVW_ABS_NC",
        (EM_ARM, 44) => "R_ARM_MOVT_ABS",
        (EM_ARM, 102) => "R_ARM_THM_JUMP11",
        (EM_AARCH64, 257) => "R_AARCH64_ABS64",
        (EM_AARCH64, 258) => "R_AARCH64_ABS32",
        (EM_AARCH64, 275) => "R_AARCH64_ADR_PREL_PG_HI21",
        (EM_AARCH64, 277) => "R_AARCH64_ADD_ABS_LO12_NC",
        (EM_AARCH64, 282) => "R_AARCH64_JUMP26",
        (EM_AARCH64, 283) => "R_AARCH64_CALL26",
        (EM_X86_64, 1) => "R_X86_64_64",
        (EM_X86_64, 2) => "R_X86_64_PC32",
        (EM_X86_64, 4) => "R_X86_64_PLT32",
        (EM_X86_64, 10) => "R_X86_64_32",
        (EM_X86_64, 11) => "R_X86_64_32S",
        _ => "",
    };
    if known.is_empty() {
        format!("machine {machine} type {rtype}")
    } else {
        known.to_string()
    }
}
