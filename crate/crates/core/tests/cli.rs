use std::path::Path;
use std::process::{Command, Output};

use relume::demo::{write_demo_scene, SunSky};
use relume::image::{LinearImage, SrgbImage};
use relume::io::{read_exr, read_png, write_exr, write_png};
use relume::panorama::{resample_faces, CubeFace};

fn relume(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relume"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&relume(dir.path(), &[])), 2);
    assert_eq!(code(&relume(dir.path(), &["fuse", "--bracket", "no-ev-here"])), 2);
    assert_eq!(code(&relume(dir.path(), &["composite", "--r0", "a.exr"])), 2);
}

#[test]
fn scene_errors_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = relume(dir.path(), &["pipeline", s(&dir.path().join("absent.json"))]);
    assert_eq!(code(&out), 10, "{}", stderr(&out));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"lightsabers\": 1}").unwrap();
    let out = relume(dir.path(), &["render", s(&bad)]);
    assert_eq!(code(&out), 11);
    assert!(stderr(&out).contains("lightsabers"));
}

#[test]
fn oracle_brackets_then_fuse() {
    let dir = tempfile::tempdir().unwrap();
    let hdr = dir.path().join("sky.exr");
    write_exr(&hdr, SunSky::default().render(128, 2).unwrap().image()).unwrap();
    let out = relume(dir.path(), &["oracle-brackets", "--hdr", s(&hdr), "--ev", "0", "--ev", "-3", "--ev", "-6"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let listed: Vec<String> = String::from_utf8_lossy(&out.stdout).lines().map(String::from).collect();
    assert_eq!(listed.len(), 3);

    let mut args = vec!["fuse".to_string()];
    for l in &listed {
        args.extend(["--bracket".to_string(), l.clone()]);
    }
    args.extend(["--out".into(), "fused.exr".into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = relume(dir.path(), &refs);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("stops"));
    let fused = read_exr(&dir.path().join("fused.exr")).unwrap();
    assert_eq!(fused.dimensions(), (128, 64));
    assert!(fused.data().iter().fold(0.0f32, |m, &v| m.max(v)) > 8.0);
}

#[test]
fn fuse_reports_missing_bracket_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = relume(dir.path(), &["fuse", "--bracket", "/nowhere/ev-3.png:-3"]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("/nowhere/ev-3.png"));
}

#[test]
fn stitch_png_faces() {
    let dir = tempfile::tempdir().unwrap();
    let sky = SunSky::default().render(256, 1).unwrap();
    let faces = resample_faces(&sky, 32).unwrap();
    let mut args = vec!["stitch".to_string()];
    for f in CubeFace::ALL {
        let p = dir.path().join(format!("{}.png", f.name()));
        write_png(&p, faces.face(f)).unwrap();
        args.extend([format!("--{}", f.name()), p.to_str().unwrap().to_string()]);
    }
    args.extend(["--width".into(), "64".into(), "--out".into(), "pano.png".into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = relume(dir.path(), &refs);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read_png(&dir.path().join("pano.png")).unwrap().dimensions(), (64, 32));
    // odd width is rejected as invalid input
    let mut bad = refs.clone();
    let i = bad.iter().position(|a| *a == "64").unwrap();
    bad[i] = "63";
    assert_eq!(code(&relume(dir.path(), &bad)), 3);
}

#[test]
fn composite_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    write_exr(&p("r0.exr"), &LinearImage::filled(16, 12, 3, 0.5).unwrap()).unwrap();
    write_exr(&p("r1.exr"), &LinearImage::filled(16, 12, 3, 0.25).unwrap()).unwrap();
    write_exr(&p("o.exr"), &LinearImage::filled(16, 12, 4, 0.0).unwrap()).unwrap();
    write_png(&p("bg.png"), &SrgbImage::filled(16, 12, 3, 0.6).unwrap()).unwrap();
    let out = relume(
        dir.path(),
        &[
            "composite", "--r0", s(&p("r0.exr")), "--r1", s(&p("r1.exr")), "--object", s(&p("o.exr")),
            "--background", s(&p("bg.png")), "--out", "comp.png", "--shadow-strength", "1", "--shadow-gamma", "1",
            "--shadow-min", "0",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let comp = read_png(&p("comp.png")).unwrap();
    let expect = (0.6f64.powf(2.4) * 0.5).powf(1.0 / 2.4);
    assert!((comp.data()[0] as f64 - expect).abs() <= 0.5 / 255.0 + 1e-6);

    // missing alpha on the object layer
    let out = relume(
        dir.path(),
        &["composite", "--r0", s(&p("r0.exr")), "--r1", s(&p("r1.exr")), "--object", s(&p("r0.exr")), "--background", s(&p("bg.png"))],
    );
    assert_eq!(code(&out), 3);

    std::fs::create_dir_all(p("pred")).unwrap();
    std::fs::create_dir_all(p("ref")).unwrap();
    std::fs::copy(p("comp.png"), p("pred/a.png")).unwrap();
    std::fs::copy(p("comp.png"), p("ref/a.png")).unwrap();
    std::fs::copy(p("bg.png"), p("pred/b.png")).unwrap();
    std::fs::copy(p("comp.png"), p("ref/b.png")).unwrap();
    let out = relume(
        dir.path(),
        &["eval", "--pred", s(&p("pred")), "--ref", s(&p("ref")), "--pos-score", "3", "--neg-score", "1", "--out", "report.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(p("report.json")).unwrap()).unwrap();
    assert_eq!(report["pairs"].as_array().unwrap().len(), 2);
    assert_eq!(report["pairs"][0]["psnr"], 99.0);
    assert_eq!(report["vqa_ratio"], 0.75);
}

#[test]
fn render_and_pipeline_on_demo_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_demo_scene(&dir.path().join("scene")).unwrap();
    let out = relume(&dir.path().join("render"), &["--seed", "3", "render", s(&scene), "--spp", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let o = read_exr(&dir.path().join("render/cam0_O.exr")).unwrap();
    assert_eq!(o.channels(), 4);
    assert!(dir.path().join("render/cam0_R0.exr").is_file());

    let run = dir.path().join("run");
    let out = relume(&run, &["pipeline", s(&scene)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["bracket_mode"], "oracle");

    // external mode with the oracle brackets of the first run
    let ext = dir.path().join("ext");
    let b3 = run.join("brackets/ev-3.png");
    let b6 = run.join("brackets/ev-6.png");
    let out = relume(
        &ext,
        &["pipeline", s(&scene), "--mode", "external", "--bracket", &format!("{}:-3", s(&b3)), "--bracket", &format!("{}:-6", s(&b6))],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        std::fs::read(ext.join("fused_hdr.exr")).unwrap(),
        std::fs::read(run.join("fused_hdr.exr")).unwrap()
    );

    let out = relume(&ext, &["pipeline", s(&scene), "--mode", "external", "--bracket", "/nowhere/x.png:-3"]);
    assert_eq!(code(&out), 4);
    let msg = stderr(&out);
    assert!(msg.contains("fuse") && msg.contains("/nowhere/x.png"), "{msg}");
}
