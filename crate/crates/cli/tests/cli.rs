//! End-to-end tests of the `fkf` binary: exit codes, golden values, seeded
//! determinism and the report formats.

use std::process::{Command, Output};

fn fkf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn domain_counts() {
    let out = fkf(&["domain", "-w", "2", "-h", "2"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).trim(),
        "2x2: 4 vertices, 4 edges, 16 corners, 4 mid-edges, 1 + 8 dual vertices"
    );
    let dump = fkf(&["domain", "-w", "3", "-h", "3", "--dump"]);
    let text = stdout(&dump);
    assert!(text.contains("\"corners\": 36"));
    assert!(text.contains("\"corner_table\""));
}

#[test]
fn loops_json_round_trip() {
    let out = fkf(&["loops", "--config", "0xf", "-w", "2", "-h", "2", "--json"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\"loop_count\": 2"));
    assert!(text.contains("\"config\": \"0xf\""));
}

#[test]
fn fermion_exact_golden() {
    let out = fkf(&[
        "fermion",
        "-w",
        "2",
        "-h",
        "2",
        "--critical",
        "--corners",
        "0,0,NE;1,1,SW",
        "--exact",
        "--json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    // f = -1/3 exactly (up to the deterministic rounding of the reduction)
    assert!(
        text.contains("\"value_re\": -3.3333333333333320e-1"),
        "unexpected value in {text}"
    );
    assert!(text.contains("\"schema_version\": 1"));
    assert!(text.contains("\"mode\": \"exact\""));
}

#[test]
fn odd_corner_count_is_usage_error() {
    let out = fkf(&[
        "fermion",
        "-w",
        "2",
        "-h",
        "2",
        "--corners",
        "0,0,NE;1,1,SW;0,1,NE",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let allowed = fkf(&[
        "fermion",
        "-w",
        "2",
        "-h",
        "2",
        "--corners",
        "0,0,NE;1,1,SW;0,1,NE",
        "--allow-odd",
        "--json",
    ]);
    assert!(allowed.status.success());
    assert!(stdout(&allowed).contains("\"value_re\": 0.0000000000000000e0"));
}

#[test]
fn enumeration_cap_is_resource_refusal() {
    let out = fkf(&[
        "fermion",
        "-w",
        "9",
        "-h",
        "9",
        "--corners",
        "0,0,NE;8,8,SW",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mc_runs_are_seed_deterministic() {
    let args = [
        "fermion",
        "-w",
        "2",
        "-h",
        "2",
        "--critical",
        "--corners",
        "0,0,NE;1,1,SW",
        "--mc",
        "--sweeps",
        "20000",
        "--seed",
        "7",
        "--json",
    ];
    let strip = |s: String| -> String {
        s.lines()
            .filter(|l| !l.contains("wall_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip(stdout(&fkf(&args)));
    let b = strip(stdout(&fkf(&args)));
    assert_eq!(a, b);
    assert!(a.contains("\"mode\": \"monte-carlo\""));
    assert!(a.contains("\"seed\": 7"));
}

#[test]
fn verify_exit_codes() {
    let pass = fkf(&["verify", "lemma-loop", "-w", "2", "-h", "2"]);
    assert_eq!(pass.status.code(), Some(0));
    assert!(stdout(&pass).contains("overall: PASS"));
    // negative control: s-holomorphicity fails off criticality by design
    let fail = fkf(&["verify", "sholo", "-w", "3", "-h", "3", "--p", "0.4"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(stdout(&fail).contains("FAIL"));
    let unknown = fkf(&["verify", "no-such-suite", "-w", "2", "-h", "2"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn table_row_counts_and_csv_header() {
    let out = fkf(&[
        "table",
        "-w",
        "2",
        "-h",
        "2",
        "--corners",
        "0,0,NE;1,1,SW",
        "--points",
        "11",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 12); // header + 11 rows
    assert_eq!(
        lines[0],
        "name,value_re,value_im,stderr,residual,tolerance,pass"
    );
    let empty = fkf(&[
        "table",
        "-w",
        "2",
        "-h",
        "2",
        "--corners",
        "0,0,NE;1,1,SW",
        "--points",
        "0",
    ]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn winding_command() {
    let out = fkf(&[
        "winding", "--config", "0xf", "-w", "2", "-h", "2", "--from", "0,0,NE", "--to", "1,1,SW",
        "--json",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\"quarter_turns\": 2"));
    assert!(text.contains("\"phase\": -1"));
    // corners on different loops
    let err = fkf(&[
        "winding", "--config", "0x0", "-w", "2", "-h", "2", "--from", "0,0,NE", "--to", "1,1,SW",
    ]);
    assert_eq!(err.status.code(), Some(2));
}
