mod support;

use std::fs;
use std::path::Path;

use owkit_core::dataset::DatasetManifest;
use serde_json::Value;
use support::{build, owkit};

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn no_subcommand_is_a_usage_error() {
    assert_eq!(owkit::<&str>(&[]).code, 2);
    assert_eq!(owkit(&["--workers", "2"]).code, 2);
    assert_eq!(owkit(&["frobnicate"]).code, 2);
}

#[test]
fn help_json_lists_every_command() {
    let r = owkit(&["--help-json"]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let subs = v["subcommands"].as_object().unwrap();
    for name in ["saliency", "merge", "relabel", "split", "evaluate", "import-kitti"] {
        assert!(subs.contains_key(name), "{name} missing");
    }
    assert_eq!(subs["relabel"]["flags"]["--alpha"]["default"], "0.3");
    assert_eq!(v["flags"]["--workers"]["global"], true);
    let modes = subs["split"]["flags"]["--mode"]["choices"].as_array().unwrap();
    assert_eq!(modes.len(), 3);
}

#[test]
fn missing_image_keeps_other_outputs_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 4, 1);
    fs::remove_file(data.images_dir.join("000002.png")).unwrap();
    let out = tmp.path().join("sal");
    let r = owkit(&["saliency", "--manifest", &s(&data.manifest), "--out", &s(&out)]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("000002"));
    let index = json(&out.join("index.json"));
    assert_eq!(index["maps"].as_object().unwrap().len(), 3);
    assert_eq!(index["failures"][0]["image_id"], "000002");
    assert!(out.join("000001.salf").exists() && !out.join("000002.salf").exists());

    let merged = tmp.path().join("merged");
    let r = owkit(&[
        "merge",
        "--manifest",
        &s(&data.manifest),
        "--saliency",
        &s(&out.join("index.json")),
        "--out",
        &s(&merged),
    ]);
    assert_eq!(r.code, 2);
    assert_eq!(json(&merged.join("index.json"))["images"].as_object().unwrap().len(), 3);
}

#[test]
fn images_mode_uses_file_stems() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 2, 2);
    let out = tmp.path().join("sal");
    let a = data.images_dir.join("000000.png");
    let b = data.images_dir.join("000001.png");
    let r = owkit(&["saliency", "--images", &s(&a), &s(&b), "--format", "png", "--out", &s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let index = json(&out.join("index.json"));
    assert_eq!(index["maps"]["000001"], "000001.png");
    assert_eq!(index["mode"], "full");
}

#[test]
fn invalid_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 3, 3);
    let m = s(&data.manifest);
    let out = s(&tmp.path().join("o"));

    let r = owkit(&["relabel", "--manifest", &m, "--proposals", &s(&data.proposals), "--alpha", "1.5", "--out", &out]);
    assert_eq!(r.code, 2);
    let r = owkit(&["split", "--manifest", &m, "--mode", "openworld", "--out", &out]);
    assert_eq!(r.code, 2);
    let r = owkit(&["split", "--manifest", &m, "--mode", "openworld", "--preset", "kitti", "--task", "9", "--out", &out]);
    assert_eq!(r.code, 2);
    let r = owkit(&["split", "--manifest", &m, "--mode", "closeset", "--preset", "nope", "--out", &out]);
    assert_eq!(r.code, 2);
    let r = owkit(&["evaluate", "--manifest", &m, "--detections", "/nonexistent.jsonl", "--mode", "closeset", "--out", &out]);
    assert_eq!(r.code, 2);

    let dets = tmp.path().join("stray.jsonl");
    fs::write(&dets, "{\"image_id\":\"nope\",\"bbox\":[0,0,5,5],\"category_id\":1,\"score\":0.5}\n").unwrap();
    let r = owkit(&["evaluate", "--manifest", &m, "--detections", &s(&dets), "--mode", "closeset", "--out", &out]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("nope"));

    fs::write(&dets, "{\"image_id\":\"000000\",\"bbox\":[0,0,-5,5],\"category_id\":1,\"score\":0.5}\n").unwrap();
    let r = owkit(&["evaluate", "--manifest", &m, "--detections", &s(&dets), "--mode", "closeset", "--out", &out]);
    assert_eq!(r.code, 2);
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 2, 4);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let r = owkit(&[
        "evaluate",
        "--manifest",
        &s(&data.manifest),
        "--detections",
        &s(&data.detections),
        "--mode",
        "closeset",
        "--out",
        &s(&blocker.join("sub")),
    ]);
    assert_eq!(r.code, 1, "{}", r.stderr);
}

#[test]
fn reports_use_six_decimals() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 5, 5);
    let out = tmp.path().join("eval");
    let r = owkit(&[
        "evaluate",
        "--manifest",
        &s(&data.manifest),
        "--detections",
        &s(&data.detections),
        "--mode",
        "closeset",
        "--out",
        &s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(text.contains("\"ap_all\": 1.000000"), "{text}");
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("1.000"));
}

#[test]
fn relabel_then_openworld_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 10, 6);
    let relabeled = tmp.path().join("relabeled.json");
    let r = owkit(&[
        "relabel",
        "--manifest",
        &s(&data.manifest),
        "--proposals",
        &s(&data.proposals),
        "--out",
        &s(&relabeled),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = DatasetManifest::load(&relabeled).unwrap();
    assert_eq!(m.count_of("unknown"), data.planted.len());
    assert_eq!(m.info["relabel"]["counts"]["deduped"], data.near_duplicates);

    let split = tmp.path().join("val");
    let r = owkit(&[
        "split", "--manifest", &s(&relabeled), "--mode", "openworld", "--preset", "kitti", "--task", "3", "--split", "val",
        "--out", &s(&split),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let view = DatasetManifest::load(split.join("view.json")).unwrap();
    assert_eq!(view.count_of("unknown"), data.planted.len());
    assert_eq!(view.info["task"], 3);

    let out = tmp.path().join("eval");
    let r = owkit(&[
        "evaluate", "--manifest", &s(&split.join("view.json")), "--detections", &s(&data.detections), "--mode",
        "openworld", "--preset", "kitti", "--task", "3", "--out", &s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = json(&out.join("report.json"));
    assert_eq!(report["known"]["ap_all"], 1.0);
    assert_eq!(report["a_ose"]["a_ose"], 0);
    assert_eq!(report["wilderness"]["wi"], 0.0);
    assert_eq!(report["task"], 3);
}

#[test]
fn import_kitti_round_trips_the_synthetic_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let data = build(tmp.path(), 6, 7);
    let out = tmp.path().join("kitti.json");
    let r = owkit(&[
        "import-kitti",
        "--labels",
        &s(&data.labels_dir),
        "--images",
        &s(&data.images_dir),
        "--out",
        &s(&out),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let m = DatasetManifest::load(&out).unwrap();
    assert_eq!(m.images.len(), 6);
    assert_eq!(m.annotations.len(), data.truth.annotations.len());
    for (a, b) in m.annotations.iter().zip(&data.truth.annotations) {
        assert_eq!(m.category_name(a.category_id), data.truth.category_name(b.category_id));
        assert_eq!(a.bbox, b.bbox);
    }
}
