use std::fmt::Write as _;
use std::path::Path;

use diffharness::reducer::{default_output_path, reduce_file, Granularity, ReduceError, TestCommand};

fn two_hundred_lines(dir: &Path) -> std::path::PathBuf {
    let mut text = String::new();
    for i in 0..200 {
        if i == 137 {
            text.push_str("    trigger_ice(x);\n");
        } else {
            writeln!(text, "    int v{i} = {i} * 3;").unwrap();
        }
    }
    let p = dir.join("crash.c");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn single_statement_survives() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_hundred_lines(dir.path());
    let out = default_output_path(&input);
    let test = TestCommand::new("grep -q 'trigger_ice'");
    let s = reduce_file(&input, &out, &test, Granularity::Line, None).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "    trigger_ice(x);\n");
    assert_eq!((s.original_units, s.reduced_units), (200, 1));
    assert!(s.minimal);
    assert!(s.calls <= 200);
    assert!(s.ratio() < 0.01);
}

#[test]
fn reducing_a_minimal_file_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("min.c");
    std::fs::write(&input, "a();\nb();\n").unwrap();
    let out = dir.path().join("out.c");
    let test = TestCommand::new("grep -q 'a()' \"$1\" && grep -q 'b()'");
    reduce_file(&input, &out, &test, Granularity::Line, None).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&input).unwrap());
}

#[test]
fn non_reproducing_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_hundred_lines(dir.path());
    let test = TestCommand::new("grep -q 'absent_symbol'");
    let err = reduce_file(&input, &dir.path().join("o.c"), &test, Granularity::Line, None).unwrap_err();
    assert!(matches!(err, ReduceError::NotReproducible));
}

#[test]
fn exit_125_is_unresolved() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "keep\nx\ny\nneed\n").unwrap();
    let out = dir.path().join("out.txt");
    // candidates without `need` cannot be judged
    let test = TestCommand::new("sh -c 'grep -q need \"$0\" || exit 125; grep -q keep \"$0\"'");
    let s = reduce_file(&input, &out, &test, Granularity::Line, None).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "keep\nneed\n");
    assert!(s.minimal);
}

#[test]
fn block_granularity_keeps_whole_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.c");
    std::fs::write(&input, "int a;\nint b;\n\nvoid f(void)\n{\n  boom();\n}\n\nint c;\n").unwrap();
    let out = dir.path().join("out.c");
    let s = reduce_file(
        &input,
        &out,
        &TestCommand::new("grep -q boom"),
        Granularity::BlankLineBlock,
        None,
    )
    .unwrap();
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "void f(void)\n{\n  boom();\n}\n\n"
    );
    assert_eq!(s.original_units, 3);
}

#[test]
fn budget_exhaustion_writes_best_so_far() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_hundred_lines(dir.path());
    let out = dir.path().join("partial.c");
    let s = reduce_file(
        &input,
        &out,
        &TestCommand::new("grep -q trigger_ice"),
        Granularity::Line,
        Some(5),
    )
    .unwrap();
    assert!(!s.minimal);
    assert_eq!(s.calls, 5);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("trigger_ice"));
    assert!(s.reduced_units < 200);
}
