use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use affinemc::frame::{count_yuv420_frames, read_yuv420};
use affinemc::synth::read_sidecar;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_affinemc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn filters_dump() {
    let out = ok(&["filters", "--taps", "8"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 64);
    assert_eq!(rows[0], "0,0,0,0,64,0,0,0,0");
    assert_eq!(rows[32], "32,-1,4,-11,40,40,-11,4,-1");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chroma.csv");
    ok(&["filters", "--taps", "4", "--out", s(&path)]);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert_eq!(text.lines().nth(1), Some("0,0,64,0,0"));

    assert_eq!(run(&["filters", "--taps", "6"]).status.code(), Some(2));
}

#[test]
fn synth_identity_repeats_base() {
    let dir = tempfile::tempdir().unwrap();
    let yuv = dir.path().join("id.yuv");
    ok(&["synth", "--width", "32", "--height", "32", "--count", "4", "--out", s(&yuv)]);
    assert_eq!(count_yuv420_frames(&yuv, 32, 32).unwrap(), 4);
    let base = read_yuv420(&yuv, 32, 32, 0).unwrap();
    for k in 1..4 {
        let f = read_yuv420(&yuv, 32, 32, k).unwrap();
        assert_eq!(f.to_i420(), base.to_i420());
    }
}

#[test]
fn synth_sidecar_records_compounded_zoom() {
    let dir = tempfile::tempdir().unwrap();
    let yuv = dir.path().join("zoom.yuv");
    ok(&["synth", "--width", "32", "--height", "32", "--rho", "1.02", "--count", "10", "--out", s(&yuv)]);
    let entries = read_sidecar(dir.path().join("zoom.yuv.txt")).unwrap();
    assert_eq!(entries.len(), 10);
    for (k, e) in entries.iter().enumerate() {
        assert_eq!(e.poc, k);
        assert!((e.warp.rho - 1.02f64.powi(k as i32)).abs() < 1e-12, "frame {k}: {}", e.warp.rho);
        assert_eq!(e.warp.theta, 0.0);
    }
}

fn zoom_input(dir: &Path) -> std::path::PathBuf {
    let yuv = dir.join("in.yuv");
    ok(&["synth", "--width", "64", "--height", "64", "--rho", "1.03", "--theta", "1", "--count", "3", "--seed", "4", "--out", s(&yuv)]);
    yuv
}

fn predict(input: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["predict", "--input", s(input), "--width", "64", "--height", "64", "--range", "8", "--out", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn predict_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let input = zoom_input(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(predict(&input, &a, &[]).status.success());
    assert!(predict(&input, &b, &[]).status.success());
    for name in ["stats.csv", "pus.csv", "prediction.yuv", "modes_0001.pgm", "modes_0002.pgm"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let stats = fs::read_to_string(a.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 3);
    assert_eq!(count_yuv420_frames(a.join("prediction.yuv"), 64, 64).unwrap(), 2);
    assert!(fs::read(a.join("modes_0001.pgm")).unwrap().starts_with(b"P5\n64 64\n255\n"));
}

fn modes(pus_csv: &Path) -> Vec<String> {
    fs::read_to_string(pus_csv).unwrap().lines().skip(1).map(|l| l.split(',').nth(4).unwrap().to_string()).collect()
}

#[test]
fn translational_baseline_and_pixel_mc_arms() {
    let dir = tempfile::tempdir().unwrap();
    let input = zoom_input(dir.path());
    let base = dir.path().join("trans");
    assert!(predict(&input, &base, &["--no-affine"]).status.success());
    assert!(modes(&base.join("pus.csv")).iter().all(|m| m == "translational"));

    let (block, pixel) = (dir.path().join("block"), dir.path().join("pixel"));
    assert!(predict(&input, &block, &[]).status.success());
    assert!(predict(&input, &pixel, &["--pixel-mc"]).status.success());
    assert_eq!(fs::read(block.join("pus.csv")).unwrap(), fs::read(pixel.join("pus.csv")).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = zoom_input(dir.path());
    let out = dir.path().join("cfg");
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!("input={}\nwidth=64\nheight=64\nrange=8\nno-affine=true\nout={}\n", s(&input), s(&out)),
    )
    .unwrap();
    ok(&["predict", "--config", s(&cfg)]);
    assert!(modes(&out.join("pus.csv")).iter().all(|m| m == "translational"));

    // A flag wins over the file.
    let out2 = dir.path().join("cfg2");
    ok(&["predict", "--config", s(&cfg), "--out", s(&out2), "--frames", "2"]);
    assert_eq!(fs::read_to_string(out2.join("stats.csv")).unwrap().lines().count(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let missing = dir.path().join("missing.yuv");
    assert_eq!(predict(&missing, &out, &[]).status.code(), Some(3));

    let input = zoom_input(dir.path());
    assert_eq!(predict(&input, &out, &["--qp", "60"]).status.code(), Some(2));
    assert_eq!(predict(&input, &out, &["--frames", "2:9"]).status.code(), Some(2));
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "colour=blue\n").unwrap();
    assert_eq!(run(&["predict", "--config", s(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["predict", "--width", "64"]).status.code(), Some(2));
}
