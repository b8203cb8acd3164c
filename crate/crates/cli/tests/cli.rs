use std::path::Path;
use std::process::{Command, Output};

fn lod2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lod2"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path) {
    let out = lod2(&["synth", "--out", path(dir), "--size", "256", "--per-kind", "1", "--seed", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn run(scene: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--ortho",
        path(&scene.join("ortho.ppm")),
        "--dsm",
        path(&scene.join("dsm.asc")),
        "--classmap",
        path(&scene.join("classmap.pgm")),
        "--worldfile",
        path(&scene.join("scene.tfw")),
        "--out",
        path(out),
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    lod2(&refs)
}

#[test]
fn synth_run_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene);
    let out = tmp.path().join("out");
    let r = run(&scene, &out, &[]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(summary["buildings"], 5);
    assert!(out.join("scene.obj").exists());
    assert!(out.join("mesh_000005.obj").exists());

    let csv = tmp.path().join("metrics.csv");
    let e = lod2(&[
        "eval",
        "--pred-mask",
        path(&out.join("model_mask.pgm")),
        "--ref-mask",
        path(&scene.join("truth_mask.pgm")),
        "--pred-dsm",
        path(&out.join("model_dsm.asc")),
        "--ref-dsm",
        path(&scene.join("truth_dsm.asc")),
        "--ground",
        "100",
        "--name",
        "synthetic",
        "--out",
        path(&csv),
    ]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scene,iou2,iou3"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "synthetic");
    assert!(row[1].parse::<f64>().unwrap() > 0.9);
    assert!(row[2].parse::<f64>().unwrap() > 0.8);
}

#[test]
fn out_of_range_threshold_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene);
    let r = run(&scene, &tmp.path().join("out"), &["--td", "25"]);
    assert!(!r.status.success());
    let stderr = String::from_utf8_lossy(&r.stderr);
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], "config_out_of_range");
    assert!(v["message"].as_str().unwrap().contains("[6, 20]"));
}

#[test]
fn roads_need_a_world_file() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene);
    let roads = tmp.path().join("roads.wkt");
    std::fs::write(&roads, "LINESTRING (500000 4400000, 500100 4400000)\n").unwrap();
    let r = lod2(&[
        "run",
        "--ortho",
        path(&scene.join("ortho.ppm")),
        "--dsm",
        path(&scene.join("dsm.asc")),
        "--roads",
        path(&roads),
        "--out",
        path(&tmp.path().join("out")),
    ]);
    assert!(!r.status.success());
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains(r#""error":"missing_georef""#), "{stderr}");
}

#[test]
fn worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&scene, &a, &["--workers", "1"]).status.success());
    assert!(run(&scene, &b, &["--workers", "3"]).status.success());
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 30);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}
