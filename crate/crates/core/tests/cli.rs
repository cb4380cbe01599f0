mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::{config, run, snapshot, write_tree};
use maskpost::cli::{
    cmd_evaluate, cmd_fuse, cmd_make_fixtures, cmd_postprocess, cmd_transform, ExitStatus, FixtureOptions,
    TransformOptions,
};
use maskpost::metrics::{evaluate_sequence, FrameExclusion};
use maskpost::{read_mask_file, BoundaryParams, LabelMap, ScoreReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maskpost"))
}

fn small_fixtures(root: &Path, seed: u64) {
    let mut cfg = config(2);
    cfg.output_root = Some(root.to_path_buf());
    cfg.seed = seed;
    let opts = FixtureOptions {
        sequences: 3,
        frames: 4,
        width: 48,
        height: 32,
    };
    let (r, _) = run(|o| cmd_make_fixtures(&cfg, &opts, o));
    r.unwrap();
}

#[test]
fn postprocess_mirrors_the_tree() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 1);
    let out = dir.path().join("post");
    let mut cfg = config(2);
    cfg.input_roots = vec![dir.path().join("pred")];
    cfg.output_root = Some(out.clone());
    let (r, text) = run(|o| cmd_postprocess(&cfg, o));
    r.unwrap();
    let before: Vec<_> = snapshot(&dir.path().join("pred")).into_keys().collect();
    let after: Vec<_> = snapshot(&out).into_keys().collect();
    assert_eq!(before, after);
    assert!(text.contains("gap-channel: 4 frames, 2 objects, 1 adjacent pairs"), "{text}");
}

#[test]
fn postprocess_radius_zero_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 2);
    let out = dir.path().join("post");
    let mut cfg = config(3);
    cfg.input_roots = vec![dir.path().join("pred")];
    cfg.output_root = Some(out.clone());
    cfg.kernel_radius = 0;
    run(|o| cmd_postprocess(&cfg, o)).0.unwrap();
    assert_eq!(snapshot(&dir.path().join("pred")), snapshot(&out));
}

#[test]
fn postprocess_rerun_overwrites_identically() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 3);
    let out = dir.path().join("post");
    let mut cfg = config(2);
    cfg.input_roots = vec![dir.path().join("pred")];
    cfg.output_root = Some(out.clone());
    run(|o| cmd_postprocess(&cfg, o)).0.unwrap();
    let first = snapshot(&out);
    run(|o| cmd_postprocess(&cfg, o)).0.unwrap();
    assert_eq!(first, snapshot(&out));
}

#[test]
fn nonexistent_root_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["postprocess", "--input"])
        .arg(dir.path().join("nope"))
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unreadable_mask_exits_3_and_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("in/seq");
    fs::create_dir_all(&seq).unwrap();
    fs::write(seq.join("00000.png"), b"not a png").unwrap();
    let output = bin()
        .args(["postprocess", "--input"])
        .arg(dir.path().join("in"))
        .arg("--output")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&output.stderr).contains("00000.png"));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(bin().args(["postprocess", "--kernel-radius", "-1"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["frobnicate"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["evaluate", "--se-shape", "hexagon"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["--help"]).status().unwrap().code(), Some(0));
}

fn map(rows: &[&[u8]]) -> LabelMap {
    LabelMap::from_rows(rows).unwrap()
}

#[test]
fn fuse_single_member_equals_member_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = vec![map(&[&[0, 1, 2], &[2, 2, 0]]), map(&[&[1, 1, 1], &[0, 0, 0]])];
    write_tree(&dir.path().join("m0"), &[("s", a)]);
    fs::write(dir.path().join("manifest.txt"), "id m0\n").unwrap();
    let mut cfg = config(2);
    cfg.manifest = Some(dir.path().join("manifest.txt"));
    cfg.output_root = Some(dir.path().join("fused"));
    run(|o| cmd_fuse(&cfg, o)).0.unwrap();
    assert_eq!(snapshot(&dir.path().join("m0")), snapshot(&dir.path().join("fused")));
}

#[test]
fn fuse_three_members_takes_the_plurality() {
    let dir = tempfile::tempdir().unwrap();
    let base = map(&[&[1, 1, 0], &[0, 2, 2]]);
    let mut b = base.clone();
    b.set(2, 0, 3);
    let mut c = base.clone();
    c.set(2, 0, 3);
    c.set(0, 1, 2);
    write_tree(&dir.path().join("a"), &[("s", vec![base.clone()])]);
    // member b was predicted on a horizontally flipped frame
    write_tree(&dir.path().join("b"), &[("s", vec![maskpost::apply_transform(&b, &maskpost::TtaTransform::HFlip)])]);
    write_tree(&dir.path().join("c"), &[("s", vec![c])]);
    fs::write(dir.path().join("manifest.txt"), "# members\nscale:1 a\nhflip b\nid c\n").unwrap();
    let mut cfg = config(1);
    cfg.manifest = Some(dir.path().join("manifest.txt"));
    cfg.output_root = Some(dir.path().join("fused"));
    let (r, text) = run(|o| cmd_fuse(&cfg, o));
    r.unwrap();
    let fused = read_mask_file(dir.path().join("fused/s/00000.png")).unwrap();
    // (2,0): votes 0,3,3 -> 3. (0,1): votes 0,0,2 -> 0.
    assert_eq!(fused, map(&[&[1, 1, 3], &[0, 2, 2]]));
    assert!(text.contains("s: 1 frames, 1 pixels differ"), "{text}");
}

#[test]
fn fuse_restores_rescaled_members() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 4);
    let mut cfg = config(4);
    cfg.manifest = Some(dir.path().join("manifest.txt"));
    cfg.output_root = Some(dir.path().join("fused"));
    run(|o| cmd_fuse(&cfg, o)).0.unwrap();
    let fused = snapshot(&dir.path().join("fused"));
    let pred = snapshot(&dir.path().join("pred"));
    assert_eq!(fused.keys().collect::<Vec<_>>(), pred.keys().collect::<Vec<_>>());
    let f = read_mask_file(dir.path().join("fused/gap-channel/00000.png")).unwrap();
    assert_eq!(f.dims(), (48, 32));
}

#[test]
fn fuse_reports_missing_directory_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    write_tree(&dir.path().join("a"), &[("s", vec![map(&[&[1]]), map(&[&[1]])])]);
    write_tree(&dir.path().join("b"), &[("s", vec![map(&[&[1]])])]);
    fs::write(dir.path().join("m1.txt"), "id a\nrot90 gone\n").unwrap();
    let out = bin()
        .arg("fuse")
        .arg("--manifest")
        .arg(dir.path().join("m1.txt"))
        .arg("--output")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone"));

    fs::write(dir.path().join("m2.txt"), "id a\nid b\n").unwrap();
    let mut cfg = config(1);
    cfg.manifest = Some(dir.path().join("m2.txt"));
    cfg.output_root = Some(dir.path().join("o"));
    let e = run(|o| cmd_fuse(&cfg, o)).0.unwrap_err();
    assert_eq!(e.status, ExitStatus::MalformedData);
    assert!(e.message.contains("missing frames 00001.png"), "{}", e.message);
    assert!(!dir.path().join("o").exists());

    fs::write(dir.path().join("m3.txt"), "id a\nrot45 b\n").unwrap();
    cfg.manifest = Some(dir.path().join("m3.txt"));
    let e = run(|o| cmd_fuse(&cfg, o)).0.unwrap_err();
    assert_eq!(e.status, ExitStatus::BadArguments);
    assert!(e.message.contains("m3.txt:2"), "{}", e.message);
}

#[test]
fn evaluate_self_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 5);
    let mut cfg = config(2);
    cfg.input_roots = vec![dir.path().join("gt")];
    cfg.gt_root = Some(dir.path().join("gt"));
    cfg.report = Some(dir.path().join("r/report.json"));
    let (r, text) = run(|o| cmd_evaluate(&cfg, o));
    r.unwrap();
    let report = ScoreReport::from_json(&fs::read_to_string(dir.path().join("r/report.json")).unwrap()).unwrap();
    assert_eq!((report.global.j, report.global.f, report.global.jf), (1.0, 1.0, 1.0));
    assert!(text.contains("Overall"));
}

#[test]
fn evaluate_matches_unit_metric_calls() {
    let dir = tempfile::tempdir().unwrap();
    let gt = vec![
        map(&[&[0, 0, 0, 0], &[0, 1, 1, 0], &[0, 1, 1, 0], &[0, 0, 0, 0]]),
        map(&[&[1, 1, 0, 0], &[1, 1, 0, 0], &[0, 0, 2, 2], &[0, 0, 2, 2]]),
        map(&[&[1, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 0, 2], &[0, 0, 2, 2]]),
    ];
    let pred = vec![
        LabelMap::zeros(4, 4).unwrap(),
        map(&[&[1, 1, 1, 0], &[1, 1, 0, 0], &[0, 0, 0, 2], &[0, 0, 2, 2]]),
        map(&[&[0, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 2, 2], &[0, 0, 2, 2]]),
    ];
    write_tree(&dir.path().join("gt"), &[("s", gt.clone())]);
    write_tree(&dir.path().join("pred"), &[("s", pred.clone())]);
    let mut cfg = config(1);
    cfg.input_roots = vec![dir.path().join("pred")];
    cfg.gt_root = Some(dir.path().join("gt"));
    cfg.output_root = Some(dir.path().join("eval"));
    run(|o| cmd_evaluate(&cfg, o)).0.unwrap();
    let report = ScoreReport::from_json(&fs::read_to_string(dir.path().join("eval/scores.json")).unwrap()).unwrap();

    let scores = evaluate_sequence(&pred, &gt, &[1, 2], &BoundaryParams::default(), &FrameExclusion::default()).unwrap();
    let mean = |id: u8, pick: fn(&maskpost::FrameScore) -> f64| {
        let v: Vec<f64> = scores.iter().filter(|s| s.object_id == id).map(pick).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let j = (mean(1, |s| s.j) + mean(2, |s| s.j)) / 2.0;
    let f = (mean(1, |s| s.f) + mean(2, |s| s.f)) / 2.0;
    let r4 = |x: f64| maskpost::metrics::round_half_even(x, 4);
    assert_eq!(report.global.j, r4(j));
    assert_eq!(report.global.f, r4(f));
    assert_eq!(report.global.jf, r4((j + f) / 2.0));
}

#[test]
fn evaluate_flags_missing_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let one = map(&[&[1, 1], &[0, 0]]);
    write_tree(&dir.path().join("gt"), &[("a", vec![one.clone(), one.clone()]), ("b", vec![one.clone(), one.clone()])]);
    write_tree(&dir.path().join("pred"), &[("a", vec![one.clone(), one.clone()])]);
    let mut cfg = config(2);
    cfg.input_roots = vec![dir.path().join("pred")];
    cfg.gt_root = Some(dir.path().join("gt"));
    cfg.report = Some(dir.path().join("report.json"));
    run(|o| cmd_evaluate(&cfg, o)).0.unwrap();
    let report = ScoreReport::from_json(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.missing_sequences, vec!["b".to_string()]);
    let b = report.per_sequence.iter().find(|s| s.name == "b").unwrap();
    assert!(b.missing_prediction);
    assert_eq!((b.score.j, b.score.f), (0.0, 0.0));
    assert_eq!(report.global.jf, 0.5);
}

#[test]
fn evaluate_lists_missing_frames() {
    let dir = tempfile::tempdir().unwrap();
    let one = map(&[&[1]]);
    write_tree(&dir.path().join("gt"), &[("a", vec![one.clone(), one.clone(), one.clone()])]);
    write_tree(&dir.path().join("pred"), &[("a", vec![one.clone()])]);
    let out = bin()
        .arg("evaluate")
        .arg("--input")
        .arg(dir.path().join("pred"))
        .arg("--gt")
        .arg(dir.path().join("gt"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("00001.png, 00002.png"));
}

#[test]
fn transform_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 6);
    let pred = dir.path().join("pred");
    for t in ["rot90", "rot270", "hflip", "rot180"] {
        let fwd = dir.path().join(format!("fwd-{t}"));
        let back = dir.path().join(format!("back-{t}"));
        let s = bin().args(["transform", "--transform", t, "--input"]).arg(&pred).arg("--output").arg(&fwd).status().unwrap();
        assert!(s.success());
        let s = bin()
            .args(["transform", "--inverse", "--transform", t, "--input"])
            .arg(&fwd)
            .arg("--output")
            .arg(&back)
            .status()
            .unwrap();
        assert!(s.success());
        assert_eq!(snapshot(&pred), snapshot(&back), "{t}");
    }
}

#[test]
fn transform_rescale_inverse_uses_original_size() {
    let dir = tempfile::tempdir().unwrap();
    write_tree(&dir.path().join("in"), &[("s", vec![map(&[&[1, 2, 3], &[4, 5, 6]])])]);
    let mut cfg = config(1);
    cfg.input_roots = vec![dir.path().join("in")];
    cfg.output_root = Some(dir.path().join("up"));
    let up = TransformOptions::parse("scale:1.5", false, None, false).unwrap();
    run(|o| cmd_transform(&cfg, &up, o)).0.unwrap();
    assert_eq!(read_mask_file(dir.path().join("up/s/00000.png")).unwrap().dims(), (5, 3));
    cfg.input_roots = vec![dir.path().join("up")];
    cfg.output_root = Some(dir.path().join("down"));
    let down = TransformOptions::parse("scale:1.5", true, Some("3x2"), false).unwrap();
    run(|o| cmd_transform(&cfg, &down, o)).0.unwrap();
    assert_eq!(read_mask_file(dir.path().join("down/s/00000.png")).unwrap().dims(), (3, 2));
    assert!(TransformOptions::parse("scale:1.5", true, Some("3by2"), false).is_err());
}

#[test]
fn transform_rgb_frames() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("frames/s");
    fs::create_dir_all(&seq).unwrap();
    let img = image::RgbImage::from_fn(6, 4, |x, y| image::Rgb([x as u8 * 40, y as u8 * 60, 7]));
    img.save(seq.join("00000.jpg")).unwrap();
    img.save(seq.join("00001.png")).unwrap();
    let s = bin()
        .args(["transform", "--rgb", "--transform", "rot90", "--input"])
        .arg(dir.path().join("frames"))
        .arg("--output")
        .arg(dir.path().join("rot"))
        .status()
        .unwrap();
    assert!(s.success());
    let out = image::open(dir.path().join("rot/s/00001.png")).unwrap().to_rgb8();
    assert_eq!(out.dimensions(), (4, 6));
    assert_eq!(out.get_pixel(3, 0), img.get_pixel(0, 0));
    let s = bin()
        .args(["transform", "--rgb", "--transform", "scale:1.5", "--input"])
        .arg(dir.path().join("frames"))
        .arg("--output")
        .arg(dir.path().join("big"))
        .status()
        .unwrap();
    assert!(s.success());
    assert_eq!(image::image_dimensions(dir.path().join("big/s/00000.jpg")).unwrap(), (9, 6));
}

#[test]
fn make_fixtures_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(&dir.path().join("a"), 11);
    small_fixtures(&dir.path().join("b"), 11);
    small_fixtures(&dir.path().join("c"), 12);
    assert_eq!(snapshot(&dir.path().join("a")), snapshot(&dir.path().join("b")));
    assert_ne!(snapshot(&dir.path().join("a")), snapshot(&dir.path().join("c")));
}

#[test]
fn config_file_is_read_by_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    small_fixtures(dir.path(), 7);
    let cfg_path = dir.path().join("run.toml");
    fs::write(
        &cfg_path,
        format!(
            "input = [{:?}]\noutput = {:?}\nkernel-radius = 0\nworkers = 2\n",
            dir.path().join("pred"),
            dir.path().join("post")
        ),
    )
    .unwrap();
    let s = bin().args(["postprocess", "--config"]).arg(&cfg_path).status().unwrap();
    assert!(s.success());
    assert_eq!(snapshot(&dir.path().join("pred")), snapshot(&dir.path().join("post")));
}

#[test]
fn bench_prints_a_row_per_shape_and_radius() {
    let out = bin().args(["bench", "--width", "96", "--height", "64", "--iterations", "1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("square") || l.starts_with("disk")).collect();
    assert_eq!(rows.len(), 8, "{text}");
}
