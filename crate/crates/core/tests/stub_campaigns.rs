mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use common::{stub, stub_with_grid, write};
use diffharness::corpus::{assess, crash_sweep, partition, scan, CorpusError, Ledger, ScanFilter};
use diffharness::matrix::{build_matrix, run_matrix, MatrixMode};
use diffharness::toolchain::{OptionSet, Status, ToolKind, ToolProfile};

#[test]
fn assess_always_accept() {
    let dir = tempfile::tempdir().unwrap();
    for n in ["a.c", "b.c", "c.c"] {
        write(dir.path(), n, "int x;\n");
    }
    let files = scan(dir.path(), &ScanFilter::extensions(["c"])).unwrap();
    let a = assess(&files, &stub("REF"), &OptionSet::default(), None).unwrap();
    assert_eq!(a.verdicts.len(), 3);
    assert!(a.verdicts.values().all(|v| v.status == Status::Accept));
}

#[test]
fn assess_mixed_reject_and_crash() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ok.c", "int x;\n");
    write(dir.path(), "xfail.c", "// STUB * reject\n");
    write(dir.path(), "boom.c", "// STUB * crash\n");
    let files = scan(dir.path(), &ScanFilter::extensions(["c"])).unwrap();
    let a = assess(&files, &stub("REF"), &OptionSet::default(), None).unwrap();
    let status = |n: &str| a.verdicts[&dir.path().join(n)].status;
    assert_eq!(status("ok.c"), Status::Accept);
    assert_eq!(status("xfail.c"), Status::Reject);
    assert_eq!(status("boom.c"), Status::Crash);
}

#[test]
fn missing_tool_aborts_campaign_once() {
    let dir = tempfile::tempdir().unwrap();
    for n in ["a.c", "b.c"] {
        write(dir.path(), n, "");
    }
    let files = scan(dir.path(), &ScanFilter::default()).unwrap();
    let ghost = ToolProfile::new(
        "ghost",
        ToolKind::Compiler,
        vec!["/nonexistent/ghost-cc".into(), "{input}".into()],
    );
    let err = assess(&files, &ghost, &OptionSet::default(), None).unwrap_err();
    assert!(matches!(err, CorpusError::Toolchain(ref e) if e.is_environment()));
}

#[test]
fn ledger_replay_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "src/a.c", "int x;\n");
    write(dir.path(), "src/b.c", "// STUB * reject\n");
    let files = scan(&dir.path().join("src"), &ScanFilter::default()).unwrap();
    let ledger = Ledger::open(&dir.path().join("ledger.jsonl")).unwrap();
    assess(&files, &stub("REF"), &OptionSet::default(), Some(&ledger)).unwrap();
    assess(&files, &stub("REF"), &OptionSet::default(), Some(&ledger)).unwrap();
    let entries = Ledger::read(ledger.path()).unwrap();
    assert_eq!(entries.len(), 4);
    assert_eq!(entries[0].content_hash, entries[2].content_hash);
    assert_eq!(entries[0].status, entries[2].status);
    assert_eq!(entries[1].status, entries[3].status);
    assert_eq!(entries[1].status, Status::Reject);
}

#[test]
fn partition_from_two_stubs() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.c", "int a;\n");
    write(dir.path(), "b.c", "// STUB * reject\n");
    write(dir.path(), "c.c", "// STUB SUBJ reject\n");
    write(dir.path(), "d.c", "// STUB REF reject\n");
    write(dir.path(), "e.c", "// STUB SUBJ crash\n");
    let files = scan(dir.path(), &ScanFilter::default()).unwrap();
    let cell = OptionSet::default();
    let r = assess(&files, &stub("REF"), &cell, None).unwrap();
    let s = assess(&files, &stub("SUBJ"), &cell, None).unwrap();
    let p = partition(&r, &s).unwrap();
    let set = |names: &[&str]| names.iter().map(|n| dir.path().join(n)).collect::<BTreeSet<PathBuf>>();
    assert_eq!(p.both_accept, set(&["a.c"]));
    assert_eq!(p.both_reject, set(&["b.c"]));
    assert_eq!(p.ref_only_accept, set(&["c.c", "e.c"]));
    assert_eq!(p.subject_only_accept, set(&["d.c"]));
    assert_eq!(p.crash_files(), set(&["e.c"]));
}

#[test]
fn sweep_clean_corpus_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.c", "int a;\n");
    write(dir.path(), "bad.c", "// STUB * reject\nint (;\n");
    let files = scan(dir.path(), &ScanFilter::default()).unwrap();
    let p = stub_with_grid("SUBJ");
    let cells = build_matrix(&p, MatrixMode::Compromise).unwrap();
    assert!(crash_sweep(&files, &p, &cells, None).unwrap().is_empty());
}

#[test]
fn sweep_finds_highest_opt_crash() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.c", "int a;\n");
    write(dir.path(), "hot.c", "// STUB * crash -O4\n");
    let files = scan(dir.path(), &ScanFilter::default()).unwrap();
    let p = stub_with_grid("SUBJ");
    let cells = build_matrix(&p, MatrixMode::Minmax).unwrap();
    let hits = crash_sweep(&files, &p, &cells, None).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].path, dir.path().join("hot.c"));
    assert_eq!(hits[0].cell.get("opt"), Some("-O4"));
    assert_eq!(hits[0].verdict.status, Status::Crash);
}

#[test]
fn sweep_reports_timeouts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "slow.c", "// STUB * hang\n");
    let files = scan(dir.path(), &ScanFilter::default()).unwrap();
    let p = stub("SUBJ").with_timeout(0.5);
    let hits = crash_sweep(&files, &p, &[OptionSet::default()], None).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].verdict.status, Status::Timeout);
}

#[test]
fn matrix_uniform_accept() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.c", "int a;\n");
    let p = stub_with_grid("SUBJ");
    let cells = build_matrix(&p, MatrixMode::Compromise).unwrap();
    let r = run_matrix(&f, &p, &cells).unwrap();
    assert_eq!(r.cells.len(), 6);
    assert_eq!(r.baseline_status, Some(Status::Accept));
    assert!(r.discrepancies.is_empty());
}

#[test]
fn matrix_flags_reject_at_o4_and_crash_at_o2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.c", "// STUB * reject -O4\n// STUB * crash -O2\n");
    let p = stub_with_grid("SUBJ");
    let cells = build_matrix(&p, MatrixMode::Full).unwrap();
    let r = run_matrix(&f, &p, &cells).unwrap();
    assert_eq!(r.baseline_status, Some(Status::Accept));
    let flagged: BTreeSet<(String, Status)> = r.discrepancies.iter().map(|d| (d.cell.clone(), d.status)).collect();
    let mut expected = BTreeSet::new();
    for dbg in ["-g0", "-g", "-ginline"] {
        expected.insert((format!("debug={dbg};opt=-O4"), Status::Reject));
        expected.insert((format!("debug={dbg};opt=-O2"), Status::Crash));
    }
    assert_eq!(flagged, expected);
}

#[test]
fn matrix_issues_one_invocation_per_cell_and_is_order_independent() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "a.c", "// STUB * reject -O4\n");
    let count = dir.path().join("count.txt");
    let mut p = stub_with_grid("SUBJ");
    p.env.insert("STUBCC_COUNT".into(), count.display().to_string());
    let cells = build_matrix(&p, MatrixMode::Full).unwrap();
    let r1 = run_matrix(&f, &p, &cells).unwrap();
    assert_eq!(std::fs::read_to_string(&count).unwrap().lines().count(), 15);
    let mut reversed = cells.clone();
    reversed.reverse();
    let r2 = run_matrix(&f, &p, &reversed).unwrap();
    assert_eq!(r1.discrepancies, r2.discrepancies);
    assert_eq!(
        r1.cells.iter().map(|(k, v)| (k.clone(), v.status)).collect::<Vec<_>>(),
        r2.cells.iter().map(|(k, v)| (k.clone(), v.status)).collect::<Vec<_>>()
    );
}
