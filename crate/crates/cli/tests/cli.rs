//! End-to-end runs of the `defsimp` binary: exit codes, stdout
//! determinism, certificate files, and error reporting.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn defsimp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defsimp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Copy a suite book into a scratch directory so certificate files land
/// there and never next to the originals.
fn stage(dir: &Path, book: &str) -> PathBuf {
    let src = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../books")
        .join(book);
    let dst = dir.join(book);
    fs::copy(src, &dst).unwrap();
    dst
}

fn write_book(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_is_deterministic_and_writes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    stage(dir.path(), "intro.sx");

    let first = defsimp(&["check", "intro.sx", "--no-difftest"], dir.path());
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("(DEFUN F{1} (X)"));

    let cert = dir.path().join("F{1}.cert.sx");
    let bytes_first = fs::read(&cert).unwrap();

    let second = defsimp(&["check", "intro.sx", "--no-difftest"], dir.path());
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout, "stdout must be byte-identical");
    assert_eq!(bytes_first, fs::read(&cert).unwrap());

    for name in ["F{1}", "F1{1}", "G{1}", "FOO{1}"] {
        assert!(dir.path().join(format!("{name}.cert.sx")).exists(), "{name}");
    }
}

#[test]
fn verify_accepts_genuine_and_rejects_tampered() {
    let dir = tempfile::tempdir().unwrap();
    stage(dir.path(), "intro.sx");
    let checked = defsimp(&["check", "intro.sx", "--no-difftest"], dir.path());
    assert!(checked.status.success());

    let ok = defsimp(
        &["verify", "F{1}.cert.sx", "--world", "intro.sx"],
        dir.path(),
    );
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("accepted"));

    // Swap the cited rule for a different one; the replay must fail.
    let cert = dir.path().join("F{1}.cert.sx");
    let text = fs::read_to_string(&cert).unwrap();
    assert!(text.contains("FOLD-CONSTS-IN-+"));
    fs::write(&cert, text.replacen("FOLD-CONSTS-IN-+", "CAR-CONS", 1)).unwrap();

    let bad = defsimp(
        &["verify", "F{1}.cert.sx", "--world", "intro.sx"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("rejected"), "{}", stderr(&bad));
}

#[test]
fn show_only_prints_certificates_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    stage(dir.path(), "intro.sx");

    let out = defsimp(&["check", "intro.sx", "--show-only"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("(CERTIFICATE"));

    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".cert.sx"))
        .collect();
    assert!(leftovers.is_empty(), "unexpected files: {leftovers:?}");
}

#[test]
fn unsupported_option_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    write_book(
        dir.path(),
        "bad.sx",
        "(defun h (x) (car (cons x x)))\n(simplify-defun h :verbose t)\n",
    );

    let out = defsimp(&["check", "bad.sx"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("bad.sx:2"), "{err}");
    assert!(err.contains("unsupported option"), "{err}");
    assert!(err.contains(":VERBOSE"), "{err}");
}

#[test]
fn a_body_that_does_not_simplify_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_book(
        dir.path(),
        "stuck.sx",
        "(defun h (x) x)\n(simplify-defun h)\n",
    );

    let out = defsimp(&["check", "stuck.sx"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("did not simplify"), "{}", stderr(&out));
}

#[test]
fn missing_book_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = defsimp(&["check", "no-such-book.sx"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
}

#[test]
fn sampling_flags_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    stage(dir.path(), "chaining.sx");

    let out = defsimp(
        &[
            "check",
            "chaining.sx",
            "--seed",
            "7",
            "--samples",
            "50",
            "--fuel",
            "20000",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));

    let fast = defsimp(
        &["check", "chaining.sx", "--no-difftest"],
        dir.path(),
    );
    assert!(fast.status.success(), "{}", stderr(&fast));
    assert_eq!(out.stdout, fast.stdout);
}
