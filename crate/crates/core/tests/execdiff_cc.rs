mod common;

use common::{host_cc, native_runner, write};
use diffharness::execdiff::{
    capture_reference, extract_block, extract_expected, self_check, verify, DiffVerdict, ExecDiffError, VerifyOptions,
};
use diffharness::toolchain::OptionSet;

const HELLO: &str = "#include <stdio.h>\nint main(void) { printf(\"hello\\n\"); return 0; }\n";

fn o0() -> OptionSet {
    OptionSet::from_pairs([("opt", "-O0")])
}

#[test]
fn capture_hello_world() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "hello.c", HELLO);
    let a = capture_reference(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    assert_eq!(a.expected_output.as_deref(), Some(&b"hello\n"[..]));
    assert!(a.text().starts_with(HELLO));
}

#[test]
fn capture_silent_program() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "quiet.c", "int main(void) { return 0; }\n");
    let a = capture_reference(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    assert_eq!(extract_expected(&a.text()).unwrap(), Some(vec![]));
}

#[test]
fn capture_rejected_source_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.c", "int main(void) { return 0 }\n");
    let err = capture_reference(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap_err();
    assert!(matches!(err, ExecDiffError::ReferenceBuildFailed { .. }));
}

#[test]
fn capture_records_nonzero_exit_as_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "exit3.c",
        "#include <stdio.h>\nint main(void) { puts(\"out\"); return 3; }\n",
    );
    let a = capture_reference(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    let block = extract_block(&a.text()).unwrap().unwrap();
    assert_eq!(block.exit_code, Some(3));
    assert_eq!(block.output, b"out\n");
    let annotated = write(dir.path(), "exit3.annotated.c", &a.text());
    // stdout-only by default, with the ignored status flagged
    let r = verify(
        &annotated,
        &host_cc("gcc", "gcc"),
        &native_runner(),
        &o0(),
        VerifyOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, DiffVerdict::Match);
    assert!(!r.exit_status_ignored);
}

#[test]
fn verify_match_mismatch_and_build_failure() {
    let dir = tempfile::tempdir().unwrap();
    let gcc = host_cc("gcc", "gcc");
    let runner = native_runner();
    let src = "#include <stdio.h>\nint main(void) { printf(\"1\\n3\\n\"); return 0; }\n";
    let f = write(
        dir.path(),
        "t.c",
        &format!("{src}/* DIFFHARNESS-EXPECTED-OUTPUT v1\n:1\n:2\nDIFFHARNESS-EXPECTED-OUTPUT-END */\n"),
    );
    let r = verify(&f, &gcc, &runner, &o0(), VerifyOptions::default()).unwrap();
    assert_eq!(r.verdict, DiffVerdict::Mismatch);
    assert_eq!(r.first_diff_line, Some(2));
    assert_eq!(r.expected_line.as_deref(), Some("2"));
    assert_eq!(r.actual_line.as_deref(), Some("3"));

    let a = capture_reference(&f, &gcc, &runner, &o0()).unwrap();
    std::fs::write(&f, a.text()).unwrap();
    let r = verify(&f, &gcc, &runner, &o0(), VerifyOptions::default()).unwrap();
    assert_eq!(r.verdict, DiffVerdict::Match);

    let mut picky = gcc.clone();
    picky.command_template.insert(1, "-DSUBJECT_REJECTS".into());
    let g = write(
        dir.path(),
        "r.c",
        &format!("#ifdef SUBJECT_REJECTS\n#error rejected\n#endif\n{HELLO}"),
    );
    let a = capture_reference(&g, &gcc, &runner, &o0()).unwrap();
    std::fs::write(&g, a.text()).unwrap();
    let r = verify(&g, &picky, &runner, &o0(), VerifyOptions::default()).unwrap();
    assert_eq!(r.verdict, DiffVerdict::BuildFailure);
    assert!(r.diagnostics.unwrap().contains("rejected"));
}

#[test]
fn verify_needs_expected_block() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "hello.c", HELLO);
    let err = verify(
        &f,
        &host_cc("gcc", "gcc"),
        &native_runner(),
        &o0(),
        VerifyOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, ExecDiffError::NoExpectedBlock(_)));
}

#[test]
fn verify_exit_comparison_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let src = "#include <stdio.h>\nint main(void) { puts(\"x\"); return 4; }\n";
    let f = write(
        dir.path(),
        "e.c",
        &format!("{src}/* DIFFHARNESS-EXPECTED-OUTPUT v1\n:x\nDIFFHARNESS-EXPECTED-OUTPUT-END */\n"),
    );
    let (gcc, runner) = (host_cc("gcc", "gcc"), native_runner());
    let r = verify(&f, &gcc, &runner, &o0(), VerifyOptions::default()).unwrap();
    assert_eq!(r.verdict, DiffVerdict::Match);
    assert!(r.exit_status_ignored);
    let r = verify(&f, &gcc, &runner, &o0(), VerifyOptions { compare_exit: true }).unwrap();
    assert_eq!(r.verdict, DiffVerdict::RunFailure);
}

fn annotate(dir: &std::path::Path, name: &str, src: &str) -> std::path::PathBuf {
    let f = write(dir, name, src);
    let a = capture_reference(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    std::fs::write(&f, a.text()).unwrap();
    f
}

#[test]
fn self_check_deterministic_program_matches() {
    let dir = tempfile::tempdir().unwrap();
    let f = annotate(dir.path(), "hello.c", HELLO);
    let c = self_check(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    assert!(!c.quarantined);
    assert_eq!(c.report.verdict, DiffVerdict::Match);
}

#[test]
fn self_check_quarantines_timestamp_printer() {
    let dir = tempfile::tempdir().unwrap();
    let src = "#define _POSIX_C_SOURCE 199309L\n#include <stdio.h>\n#include <time.h>\n\
               int main(void) { struct timespec t; clock_gettime(CLOCK_REALTIME, &t);\n\
               printf(\"%ld.%09ld\\n\", (long)t.tv_sec, t.tv_nsec); return 0; }\n";
    let f = annotate(dir.path(), "clock.c", src);
    let c = self_check(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    assert!(c.quarantined);
    assert_eq!(c.report.verdict, DiffVerdict::Mismatch);
}

#[test]
fn self_check_quarantines_own_path_printer() {
    let dir = tempfile::tempdir().unwrap();
    let src =
        "#include <stdio.h>\nint main(int argc, char **argv) { (void)argc; printf(\"%s\\n\", argv[0]); return 0; }\n";
    let f = annotate(dir.path(), "path.c", src);
    // two runs observably differ: the binary lives in a fresh directory each time
    let first = extract_expected(&std::fs::read_to_string(&f).unwrap())
        .unwrap()
        .unwrap();
    let again = capture_reference(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    assert_ne!(first, again.expected_output.unwrap());
    let c = self_check(&f, &host_cc("gcc", "gcc"), &native_runner(), &o0()).unwrap();
    assert!(c.quarantined);
}
