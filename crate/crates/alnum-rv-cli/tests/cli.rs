#[path = "../../alnum-rv/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alnum-rv")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_hash_from_file_is_charset_valid_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let payload = dir.path().join("payload.bin");
    fs::write(&payload, alnum_rv::payload::hello_world()).unwrap();
    let out = dir.path().join("out.txt");
    let o = cli(&["gen", "--variant", "hash", path(&payload), "-o", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let bytes = text.trim_end().as_bytes();
    assert!(bytes.iter().all(|&b| b.is_ascii_alphanumeric() || b == b'#'));
    assert!(String::from_utf8_lossy(&o.stderr).contains("data_pool"));
    let o = cli(&["verify", "--variant", "hash", path(&out), "--payload", path(&payload)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("\"Hello world!\""));
}

#[test]
fn missing_payload_is_an_error() {
    let o = cli(&["gen", "--variant", "hash", "/nonexistent/payload.bin"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
    let o = cli(&["gen", "--variant", "alnum"]);
    assert!(!o.status.success());
}

#[test]
fn tick_gen_is_deterministic() {
    let run = || {
        let o = cli(&["gen", "--variant", "tick", "--seed", "42"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn binary_and_annotated_formats() {
    let o = cli(&["gen", "--variant", "slash", "--format", "bin", "--no-verify"]);
    assert!(o.status.success());
    assert!(o.stdout.starts_with(b"ySySo/0/"));
    let o = cli(&["gen", "--variant", "tick", "--format", "annotated", "--fpu-gadget"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("[fpu_gadget]") && s.contains("fmadd.d"));
}

#[test]
fn truncated_image_fails() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img.bin");
    let o = cli(&["gen", "--variant", "hash", "--format", "bin", "-o", path(&img)]);
    assert!(o.status.success());
    let bytes = fs::read(&img).unwrap();
    fs::write(&img, &bytes[..bytes.len() / 2]).unwrap();
    let o = cli(&["verify", "--variant", "hash", "--format", "bin", path(&img)]);
    assert!(!o.status.success());
    assert!(stdout(&o).contains("failure:"));
}

#[test]
fn listing_fixture_prints_its_greeting() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("listing.bin");
    fs::write(&img, common::hash_listing()).unwrap();
    let o = cli(&["verify", "--variant", "hash", "--format", "bin", "--expect-serial", "Hello,\\x20world!\\x0a", path(&img)]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = cli(&["verify", "--variant", "hash", "--format", "bin", "--expect-serial", "Hello world!", path(&img)]);
    assert!(!o.status.success());
}

#[test]
fn stats_counts_lui() {
    let o = cli(&["stats", "--variant", "alnum"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().any(|l| l.starts_with("lui 238719 ")));
    assert!(!stdout(&o).contains("\nsd "));
}

#[test]
fn table_build_and_coverage() {
    let dir = tempfile::tempdir().unwrap();
    for (v, want) in [("hash", 63448), ("slash", 58174)] {
        let f = dir.path().join(format!("{v}.tbl"));
        let o = cli(&["--jobs", "4", "table", "build", "--variant", v, "-o", path(&f)]);
        assert!(o.status.success());
        assert!(stdout(&o).contains(&format!("coverage {want} of 65536")));
        let o = cli(&["table", "coverage", path(&f)]);
        assert!(stdout(&o).contains(&format!("{v} coverage {want}")));
    }
    let f = dir.path().join("hash.tbl");
    let o = cli(&["gen", "--variant", "hash", "--table", path(&f)]);
    assert!(o.status.success());
    let o = cli(&["gen", "--variant", "slash", "--table", path(&f)]);
    assert!(!o.status.success());
}

#[test]
fn solve_tick_prints_the_pool() {
    let o = cli(&["solve-tick", "--count", "128"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("instance 1494865\n"));
    assert!(s.contains("b    4839424242424242 BBBBBB9H"));
    assert_eq!(s.lines().filter(|l| l.starts_with('c')).count(), 7);
    assert!(String::from_utf8_lossy(&o.stderr).contains("memo hits"));
}

#[test]
fn encode_payload_doubles_the_length() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.bin");
    fs::write(&p, [0u8, 0xff, b'A']).unwrap();
    let o = cli(&["encode-payload", path(&p)]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.trim_end().len(), 6);
    assert!(s.trim_end().bytes().all(|b| b.is_ascii_alphanumeric()));
}
