//! The `hblu` binary: output formats, sequence mode and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

use hblu::gen::grid5;
use hblu::sparse::{mm_write, CscMatrix};

fn hblu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hblu")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn csv_report_has_header_and_one_row() {
    let o = hblu(&["--gen", "grid", "--size", "400", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], hblu::bench::CSV_HEADER);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), 13);
    assert_eq!(fields[0], "grid20x20");
    assert_eq!(fields[1], "400");
    assert!(fields[10].parse::<f64>().unwrap() <= 1e-10);
    assert!(stderr(&o).contains("checksum "));
}

#[test]
fn json_report_carries_every_field() {
    let o = hblu(&["--gen", "blockrich", "--size", "500", "--out", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in hblu::bench::CSV_HEADER.split(',') {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["btf_blocks"].as_u64().unwrap() >= 10);
}

#[test]
fn checksum_is_stable_across_threads_with_fixed_leaves() {
    let sum = |t: &str| {
        let o = hblu(&["--gen", "grid", "--size", "2500", "--nd-threshold", "100", "--nd-leaves", "4", "--threads", t]);
        assert_eq!(o.status.code(), Some(0));
        stderr(&o).lines().find(|l| l.starts_with("checksum")).unwrap().to_string()
    };
    assert_eq!(sum("1"), sum("4"));
}

#[test]
fn explicit_rhs_file_is_used() {
    let dir = scratch("rhs");
    let a = grid5(5, 2);
    let m = dir.join("a.mtx");
    mm_write(&m, &a).unwrap();
    let b = dir.join("b.txt");
    let mut text = String::from("%%MatrixMarket matrix array real general\n25 1\n");
    for i in 0..25 {
        text.push_str(&format!("{}\n", i as f64 - 3.5));
    }
    std::fs::write(&b, text).unwrap();
    let o = hblu(&["--matrix", m.to_str().unwrap(), "--rhs", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    std::fs::write(&b, "1\n2\n").unwrap();
    let o = hblu(&["--matrix", m.to_str().unwrap(), "--rhs", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_2() {
    assert_eq!(hblu(&[]).status.code(), Some(2));
    assert_eq!(hblu(&["--matrix", "/nonexistent/a.mtx"]).status.code(), Some(2));
    assert_eq!(hblu(&["--gen", "grid", "--nd-leaves", "3"]).status.code(), Some(2));
    assert_eq!(hblu(&["--gen", "nope"]).status.code(), Some(2));

    let dir = scratch("bad");
    let m = dir.join("bad.mtx");
    std::fs::write(&m, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap();
    let o = hblu(&["--matrix", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error"));
}

#[test]
fn singular_matrices_exit_with_3() {
    let dir = scratch("singular");
    // Structurally singular: two columns share their only row.
    let a = CscMatrix::from_dense(2, 2, &[1.0, 1.0, 0.0, 0.0]);
    let m = dir.join("s.mtx");
    mm_write(&m, &a).unwrap();
    assert_eq!(hblu(&["--matrix", m.to_str().unwrap()]).status.code(), Some(3));

    // Numerically singular: a full pattern of equal values.
    let a = CscMatrix::from_dense(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    mm_write(&m, &a).unwrap();
    assert_eq!(hblu(&["--matrix", m.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn sequence_of_identical_matrices_repeats_the_checksum() {
    let dir = scratch("seq");
    let a = grid5(12, 3);
    for k in 0..10 {
        mm_write(dir.join(format!("m{k:02}.mtx")), &a).unwrap();
    }
    let o = hblu(&["--seq", dir.to_str().unwrap(), "--out", "json", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["symbolic_runs"], 1);
    assert_eq!(v["runs"].as_array().unwrap().len(), 10);
    let err = stderr(&o);
    let line = err.lines().find(|l| l.starts_with("checksum first")).unwrap();
    let parts: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(parts[2], parts[4], "{line}");
}

#[test]
fn sequence_with_a_foreign_pattern_exits_with_4() {
    let dir = scratch("seq_mismatch");
    mm_write(dir.join("a.mtx"), &grid5(6, 1)).unwrap();
    mm_write(dir.join("b.mtx"), &grid5(6, 1)).unwrap();
    mm_write(dir.join("c.mtx"), &CscMatrix::identity(36)).unwrap();
    let o = hblu(&["--seq", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("c.mtx"));
}

#[test]
fn empty_sequence_directory_is_an_input_error() {
    let dir = scratch("seq_empty");
    assert_eq!(hblu(&["--seq", dir.to_str().unwrap()]).status.code(), Some(2));
}
