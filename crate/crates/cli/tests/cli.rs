use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mchd(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mchd"))
        .current_dir(dir)
        .args(args.split_whitespace())
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &str) -> String {
    let out = mchd(dir, args);
    assert!(
        out.status.success(),
        "mchd {args} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = r#"
seed = 5
variants = ["2C", "MC", "MCr"]
output = "res"

[data]
manifest = "prep/manifest.json"
factor = 1

[encoding]
dim = 1024
levels = 20
window_seconds = 4
step_seconds = 1
"#;

#[test]
fn end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        d,
        "--seed 3 --out syn synth --subject s1 --seizures 3 --nonseizure-modes 2 --seizure-modes 1 --factor 1",
    );
    assert!(d.join("syn/s1/s1_01.edf").exists());
    assert_eq!(
        fs::read_to_string(d.join("syn/annotations.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );

    let out = ok(
        d,
        "--seed 3 --out prep prepare --recordings syn --annotations syn/annotations.csv --factor 1",
    );
    assert!(out.contains("s1/2"));

    fs::write(d.join("exp.toml"), CONFIG).unwrap();
    let out = ok(d, "--config exp.toml --threads 2 crossval");
    assert!(out.contains("MCr"));
    let scores = fs::read_to_string(d.join("res/scores.csv")).unwrap();
    // 3 folds x 3 variants x raw/smoothed
    assert_eq!(scores.lines().count(), 1 + 18);
    for f in [
        "subclasses.csv",
        "reduction_trace.csv",
        "summary.csv",
        "subjects.csv",
        "config.toml",
    ] {
        assert!(d.join("res").join(f).exists(), "{f}");
    }

    ok(d, "--config exp.toml --out m.mchd train --exclude 2");
    let out = ok(d, "--config exp.toml reduce --model m.mchd --exclude 2");
    assert!(out.contains("accepted"));
    assert!(d.join("m_removal.mchd").exists());

    let out = ok(d, "inspect m_removal.mchd");
    assert!(out.contains("dim 1024"));
    assert!(out.contains("seizure"));

    let out = ok(d, "classify --model m.mchd --manifest prep/manifest.json --file s1/2");
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "window,start_seconds,subclass,distance,raw,label,reference"
    );
    assert!(lines.count() > 10);

    ok(
        d,
        "--out pred.csv classify --model m.mchd syn/s1/s1_03.edf --annotations syn/annotations.csv",
    );
    assert!(fs::read_to_string(d.join("pred.csv")).unwrap().lines().count() > 100);

    let out = ok(d, "inspect prep/manifest.json");
    assert!(out.contains("3 files"));

    // the same seizures given as a CHB-MIT style summary file
    let csv = fs::read_to_string(d.join("syn/annotations.csv")).unwrap();
    let mut summary = String::from("Data Sampling Rate: 128 Hz\n\n");
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        summary += &format!(
            "File Name: {}.edf\nNumber of Seizures in File: 1\nSeizure Start Time: {} seconds\nSeizure End Time: {} seconds\n\n",
            f[1], f[2], f[3]
        );
    }
    fs::write(d.join("syn/s1/s1-summary.txt"), summary).unwrap();
    ok(
        d,
        "--seed 3 --out prep2 prepare --recordings syn --chbmit-summaries --factor 1",
    );
    assert_eq!(fs::read_to_string(d.join("prep2/annotations.csv")).unwrap(), csv);
    assert_eq!(
        fs::read_to_string(d.join("prep2/manifest.json")).unwrap(),
        fs::read_to_string(d.join("prep/manifest.json")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let code = |args: &str| mchd(d, args).status.code().unwrap();

    assert_eq!(code("--help"), 0);
    assert_eq!(code("no-such-command"), 1);
    assert_eq!(code("crossval"), 1);
    assert_eq!(code("--config missing.toml crossval"), 1);

    fs::write(d.join("bad.toml"), "seed = 1\n[encoding]\ndim = 1000\n").unwrap();
    assert_eq!(code("--config bad.toml crossval"), 1);

    // valid config pointing at data that is not there
    fs::write(d.join("nodata.toml"), "[data]\nmanifest = \"gone.json\"\n").unwrap();
    assert_eq!(code("--config nodata.toml crossval"), 2);

    fs::write(d.join("junk.mchd"), b"not a model").unwrap();
    assert_eq!(code("inspect junk.mchd"), 2);
}
