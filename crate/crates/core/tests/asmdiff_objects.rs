mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::fixtures;
use diffharness::asmdiff::{
    assemble_unit, compare, compare_unmasked, extract_code, AsmUnit, AsmVerdict, Baseline, DialectRuleSet, MaskTable,
    WordFormat,
};
use diffharness::toolchain::{OptionSet, ToolKind, ToolProfile};

const ARM: WordFormat = WordFormat::ARM32;

fn asm(name: &str) -> PathBuf {
    fixtures().join("asm").join(name)
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn unit(name: &str) -> AsmUnit {
    AsmUnit::from_object(&asm(name), ".text", ARM).unwrap()
}

/// Section contents as printed by `readelf -x`.
fn readelf_bytes(object: &Path, section: &str) -> Vec<u8> {
    let out = Command::new("readelf")
        .arg("-x")
        .arg(section)
        .arg(object)
        .output()
        .expect("readelf");
    let text = String::from_utf8(out.stdout).unwrap();
    let mut bytes = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| l.starts_with("0x")) {
        for group in line.split_whitespace().skip(1).take(4) {
            if group.len() % 2 != 0 || !group.chars().all(|c| c.is_ascii_hexdigit()) {
                break;
            }
            bytes.extend(hex::decode(group).unwrap());
        }
    }
    bytes
}

/// (offset, type name) pairs from `readelf -r`.
fn readelf_relocs(object: &Path) -> Vec<(u64, String)> {
    let out = Command::new("readelf").arg("-r").arg(object).output().expect("readelf");
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let off = u64::from_str_radix(f.first()?, 16).ok()?;
            Some((off, f.get(2)?.to_string()))
        })
        .collect()
}

#[test]
fn extraction_agrees_with_readelf() {
    for name in ["branch_near.o", "branch_far.o", "call_ext.o", "gnu_style.o"] {
        let obj = std::fs::read(asm(name)).unwrap();
        let code = extract_code(&obj, ".text").unwrap();
        assert_eq!(code.bytes, readelf_bytes(&asm(name), ".text"), "{name}");
        let ours: Vec<(u64, String)> = code.relocations.iter().map(|r| (r.offset, r.kind.clone())).collect();
        assert_eq!(ours, readelf_relocs(&asm(name)), "{name}");
    }
}

#[test]
fn call_has_one_four_byte_span() {
    let u = unit("call_ext.o");
    assert_eq!(u.code.len(), 8);
    assert_eq!(u.relocations.len(), 1);
    assert_eq!((u.relocations[0].offset, u.relocations[0].length), (4, 4));
}

#[test]
fn empty_code_section() {
    let u = unit("empty.o");
    assert!(u.code.is_empty() && u.relocations.is_empty());
}

#[test]
fn branch_fixtures_mask_equal_and_differ_raw() {
    let (a, b) = (unit("branch_near.o"), unit("branch_far.o"));
    let table =
        MaskTable::from_json(&std::fs::read_to_string(configs().join("arm_branch_mask.json")).unwrap()).unwrap();
    assert_eq!(compare(&a, &b, &table).unwrap().verdict, AsmVerdict::Equal);
    let raw = compare_unmasked(&a, &b).unwrap();
    assert_eq!(raw.verdict, AsmVerdict::Differ);
    let (x, y) = (
        readelf_bytes(&asm("branch_near.o"), ".text"),
        readelf_bytes(&asm("branch_far.o"), ".text"),
    );
    let first_byte = x.iter().zip(&y).position(|(p, q)| p != q).unwrap();
    assert_eq!(raw.first_diff_offset, Some((first_byte - first_byte % 4) as u64));
    assert_eq!(raw.first_diff_offset, Some(4));
}

#[test]
fn relocated_call_differs_only_through_relocation() {
    let u = unit("call_ext.o");
    let mut other = u.clone();
    other.code[4..8].copy_from_slice(&[0x11, 0x22, 0x33, 0xeb]);
    assert_eq!(
        compare(&u, &other, &MaskTable::default()).unwrap().verdict,
        AsmVerdict::Equal
    );
    let raw = compare_unmasked(&u, &other).unwrap();
    assert_eq!(raw.first_diff_offset, Some(4));
}

fn clang_arm() -> ToolProfile {
    ToolProfile::new(
        "clang-arm",
        ToolKind::Assembler,
        [
            "clang",
            "--target=arm-none-eabi",
            "{options}",
            "-c",
            "{input}",
            "-o",
            "{output}",
        ]
        .map(String::from)
        .to_vec(),
    )
    .with_axis("opt", &["-O0", "-O3"])
    .with_timeout(30.0)
}

#[test]
fn one_assembler_two_option_sets_equal() {
    let p = clang_arm();
    let lo = assemble_unit(
        &asm("gnu_style.s"),
        None,
        &p,
        &OptionSet::from_pairs([("opt", "-O0")]),
        ".text",
        ARM,
    )
    .unwrap();
    let hi = assemble_unit(
        &asm("gnu_style.s"),
        None,
        &p,
        &OptionSet::from_pairs([("opt", "-O3")]),
        ".text",
        ARM,
    )
    .unwrap();
    let r = compare(&lo, &hi, &MaskTable::arm_branches()).unwrap();
    assert_eq!(r.verdict, AsmVerdict::Equal);
    assert_eq!(
        lo.code,
        std::fs::read(asm("gnu_style.o"))
            .map(|o| extract_code(&o, ".text").unwrap().bytes)
            .unwrap()
    );
}

#[test]
fn translated_dialect_matches_native_source() {
    let rules =
        DialectRuleSet::from_json(&std::fs::read_to_string(configs().join("ads_to_gnu.json")).unwrap()).unwrap();
    let compiled = rules.compile().unwrap();
    let cell = OptionSet::from_pairs([("opt", "-O0")]);
    let ads = assemble_unit(&asm("ads_style.s"), Some(&compiled), &clang_arm(), &cell, ".text", ARM).unwrap();
    let gnu = assemble_unit(&asm("gnu_style.s"), None, &clang_arm(), &cell, ".text", ARM).unwrap();
    let skipped: Vec<usize> = ads.skipped.iter().map(|s| s.line).collect();
    assert_eq!(skipped, [4, 20]);
    let r = compare(&ads, &gnu, &MaskTable::arm_branches()).unwrap();
    assert_eq!(r.verdict, AsmVerdict::Equal, "{r:?}\n{}", ads.translated);
    assert_eq!(ads.code.len(), 44);
}

#[test]
fn baseline_file_compares_across_machines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("near.asmbase");
    let near = unit("branch_near.o");
    let table = MaskTable::arm_branches();
    Baseline::record(&near, ".text", &table, &DialectRuleSet::default(), Some(&clang_arm()))
        .unwrap()
        .write(&path)
        .unwrap();
    let raw = std::fs::read(&path).unwrap();
    assert!(raw.starts_with(b"ASMBASE1\n"));
    let back = Baseline::read(&path).unwrap();
    assert!(back.meta.tool_version.as_deref().unwrap_or("").contains("clang"));
    let far = unit("branch_far.o");
    assert_eq!(
        compare(&far, &back.to_unit(), &table).unwrap().verdict,
        AsmVerdict::Equal
    );
}
