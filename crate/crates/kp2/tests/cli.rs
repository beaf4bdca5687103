use std::path::Path;
use std::process::Command;

use kp2::io::read_field;
use kp2_core::profiles::soliton;

fn kp2(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kp2")).args(args).env("KP2_THREADS", "1").output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 4] = ["--nx", "128", "--ny", "64"];

#[test]
fn three_line_spec_value_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("y.tau");
    std::fs::write(&spec, "M=3\nN=1\nlambdas=-1 0 1\nA=\n1 1 1\n").unwrap();
    let out = dir.path().join("y.kpf");
    let r = kp2(&[&["gen-multisoliton", "--spec", s(&spec), "--t", "0", "--out", s(&out)][..], &SMALL].concat());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let f = read_field(&out).unwrap();
    let g = f.grid;
    let (i, j) = (g.row_of(0.0).unwrap(), g.col_of(0.0).unwrap());
    assert!((f.at(i, j) + 4.0 / 3.0).abs() < 1e-12, "{}", f.at(i, j));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("classification=(2, 1)"));
}

#[test]
fn soliton_from_zero_forcing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.kpf");
    let r = kp2(&[&["backlund-add", "--u", "zero", "--gamma0", "0", "--out", s(&out)][..], &SMALL].concat());
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let f = read_field(&out).unwrap();
    for i in 0..f.grid.ny {
        for j in 0..f.grid.nx {
            assert!((f.at(i, j) - soliton(1.0, f.grid.x(j))).abs() < 1e-9);
        }
    }
    let manifest = std::fs::read_to_string(dir.path().join("s.kpf.manifest")).unwrap();
    for key in ["command=backlund-add", "nx=128", "gamma0=0", "guard=0.1", "l2="] {
        assert!(manifest.contains(key), "{key}");
    }
    assert!(dir.path().join("s.alpha.csv").exists());
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.kpf");
    let b = dir.path().join("b.kpf");
    for out in [&a, &b] {
        let r = kp2(
            &[
                &["evolve", "--u", "gauss:0.01,2", "--T", "0.02", "--save-every", "10", "--out", s(out)][..],
                &SMALL,
            ]
            .concat(),
        );
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let norms = std::fs::read_to_string(dir.path().join("a.norms.csv")).unwrap();
    assert_eq!(norms.lines().count(), 1 + 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.kpf");
    // guard trip is a regime failure
    let r = kp2(&[&["backlund-add", "--u", "gauss:0.5,2", "--out", s(&out)][..], &SMALL].concat());
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("smallness guard"));
    // missing spec file and malformed spec are precondition failures
    let r = kp2(&["gen-multisoliton", "--spec", "/nonexistent.tau", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    let bad = dir.path().join("bad.tau");
    std::fs::write(&bad, "M=2\nN=1\nlambdas=-1 1\nA=\n1 -1\n").unwrap();
    let r = kp2(&["gen-multisoliton", "--spec", s(&bad), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    let r = kp2(&["no-such-command"]);
    assert_ne!(r.status.code(), Some(0));
    let r = kp2(&["verify", "--suite", "huge"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn phi_seminorm_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("s.kpf");
    let r = kp2(&[&["backlund-add", "--u", "zero", "--gamma0", "0.5", "--out", s(&sol)][..], &SMALL].concat());
    assert!(r.status.success());
    let r = kp2(&["seminorm", "--u", s(&sol)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let line = String::from_utf8_lossy(&r.stdout).lines().find(|l| l.starts_with("seminorm=")).unwrap().to_string();
    let v: f64 = line["seminorm=".len()..].parse().unwrap();
    assert!(v < 1e-6, "{v}");
    let r = kp2(&[&["phi", "--u", "zero"][..], &SMALL].concat());
    assert!(r.status.success());
    let out = String::from_utf8_lossy(&r.stdout).to_string();
    let phi: f64 = out.lines().find_map(|l| l.strip_prefix("phi=")).unwrap().parse().unwrap();
    assert_eq!(phi, 0.0);
    let csv = dir.path().join("s.csv");
    let r = kp2(&["export-csv", "--u", s(&sol), "--out", s(&csv)]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 128 * 64);
    assert!(text.starts_with("x,y,value\n"));
}

#[test]
fn verify_single_criterion() {
    let r = kp2(&["verify", "--suite", "quick", "--only", "5"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stdout));
    let out = String::from_utf8_lossy(&r.stdout);
    assert!(out.contains(" 5 PASS"));
}
