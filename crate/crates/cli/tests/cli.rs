use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn voxguide(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voxguide"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn voxguide")
}

fn ok(args: &[&str], dir: &Path) {
    let out = voxguide(args, dir);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "mixed", "3", "-o", "a.wav", "--seed", "5"], d);
    ok(&["gen", "mixed", "3", "-o", "b.wav", "--seed", "5"], d);
    assert_eq!(
        fs::read(d.join("a.wav")).unwrap(),
        fs::read(d.join("b.wav")).unwrap()
    );
    let labels = fs::read_to_string(d.join("a.labels.csv")).unwrap();
    for class in ["speech", "music", "noise"] {
        assert!(labels.contains(class), "{class} missing");
    }
}

#[test]
fn chained_stages_match_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let seed = "11";
    ok(
        &[
            "gen",
            "speech_like",
            "4",
            "-o",
            "in.wav",
            "--seed",
            seed,
            "--noise",
            "car",
            "--snr",
            "10",
        ],
        d,
    );
    ok(&["encode", "in.wav", "-o", "in.gvf"], d);
    ok(
        &[
            "decode",
            "in.gvf",
            "-o",
            "dec.wav",
            "--states",
            "states.csv",
        ],
        d,
    );
    ok(
        &[
            "enhance",
            "dec.wav",
            "-o",
            "guided.wav",
            "--mode",
            "guided",
            "--states",
            "states.csv",
            "--modules",
            "nr",
        ],
        d,
    );
    ok(
        &[
            "enhance",
            "dec.wav",
            "-o",
            "unguided.wav",
            "--mode",
            "unguided",
            "--modules",
            "nr",
        ],
        d,
    );
    ok(
        &[
            "compare",
            "--signal",
            "speech_like",
            "--duration",
            "4",
            "--seed",
            seed,
            "--noises",
            "car",
            "--out-dir",
            "cmp",
        ],
        d,
    );
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("in.wav"), read("cmp/car_input.wav"));
    assert_eq!(read("dec.wav"), read("cmp/car_decoded.wav"));
    assert_eq!(read("guided.wav"), read("cmp/car_guided.wav"));
    assert_eq!(read("unguided.wav"), read("cmp/car_unguided.wav"));
    assert_ne!(read("guided.wav"), read("unguided.wav"));
}

#[test]
fn enhance_from_stream_matches_state_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        &[
            "gen",
            "speech_like",
            "3",
            "-o",
            "in.wav",
            "--noise",
            "pink",
            "--snr",
            "10",
        ],
        d,
    );
    ok(&["encode", "in.wav", "-o", "in.gvf"], d);
    ok(
        &[
            "decode",
            "in.gvf",
            "-o",
            "dec.wav",
            "--states",
            "states.csv",
        ],
        d,
    );
    ok(
        &[
            "enhance",
            "dec.wav",
            "-o",
            "a.wav",
            "--mode",
            "guided",
            "--states",
            "states.csv",
        ],
        d,
    );
    ok(
        &[
            "enhance", "dec.wav", "-o", "b.wav", "--mode", "guided", "--stream", "in.gvf",
        ],
        d,
    );
    assert_eq!(
        fs::read(d.join("a.wav")).unwrap(),
        fs::read(d.join("b.wav")).unwrap()
    );
}

#[test]
fn compare_writes_one_row_per_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = voxguide(
        &[
            "compare",
            "--duration",
            "3",
            "--noises",
            "white,pink",
            "--snr",
            "10",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[0].starts_with("noise_type"));
    assert!(lines[1].starts_with("white,"));
    assert!(lines[2].starts_with("pink,"));
}

#[test]
fn guided_without_states_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "speech_like", "1", "-o", "in.wav"], d);
    let out = voxguide(
        &["enhance", "in.wav", "-o", "out.wav", "--mode", "guided"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("out.wav").exists());
}

#[test]
fn unguided_runs_on_any_wav() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "music_like", "1", "-o", "in.wav"], d);
    ok(
        &["enhance", "in.wav", "-o", "out.wav", "--mode", "unguided"],
        d,
    );
    assert!(d.join("out.wav").exists());
}

#[test]
fn errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let missing = voxguide(&["encode", "nope.wav", "-o", "x.gvf"], d);
    assert_eq!(missing.status.code(), Some(3));

    fs::write(d.join("junk.wav"), b"definitely not RIFF").unwrap();
    let junk = voxguide(&["encode", "junk.wav", "-o", "x.gvf"], d);
    assert_eq!(junk.status.code(), Some(4));

    ok(&["gen", "speech_like", "1", "-o", "short.wav"], d);
    ok(&["gen", "speech_like", "2", "-o", "long.wav"], d);
    ok(&["encode", "short.wav", "-o", "short.gvf"], d);
    ok(
        &[
            "decode",
            "short.gvf",
            "-o",
            "short_dec.wav",
            "--states",
            "short.csv",
        ],
        d,
    );
    let misaligned = voxguide(
        &[
            "enhance",
            "long.wav",
            "-o",
            "x.wav",
            "--mode",
            "guided",
            "--states",
            "short.csv",
        ],
        d,
    );
    assert_eq!(misaligned.status.code(), Some(5));

    fs::write(d.join("bad.cfg"), "nr.bias = -1\n").unwrap();
    let bad = voxguide(
        &[
            "enhance", "long.wav", "-o", "x.wav", "--mode", "unguided", "--config", "bad.cfg",
        ],
        d,
    );
    assert_eq!(bad.status.code(), Some(6));
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);
}
