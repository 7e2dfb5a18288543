//! Per-command contracts, driven through the built binary.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use common::*;
use warpeval_core::bias::BiasSplit;
use warpeval_core::perturb::{apply_perturbation, class_mask, PerturbScheme};
use warpeval_core::raster::{
    label_boundary_edges, load_label_map, save_image, save_label_map, LabelMap,
};
use warpeval_core::rng::derive_seed;
use warpeval_core::tps::{warp_augment_full, WarpConfig};

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn warp_zero_shift_copies_inputs_and_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 3);

    let frozen = dir.path().join("frozen");
    warpeval_ok(&[
        "warp",
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&frozen),
        "--max-shift",
        "0",
    ]);
    for k in 0..3 {
        let name = format!("img{k}.png");
        let input = std::fs::read(labels.join(&name)).unwrap();
        let output = std::fs::read(frozen.join(&name)).unwrap();
        assert!(
            input == output,
            "{name}: zero-shift warp must copy the input bytes"
        );
    }

    let once = dir.path().join("once");
    let again = dir.path().join("again");
    for out in [&once, &again] {
        warpeval_ok(&[
            "warp",
            "--labels",
            path_str(&labels),
            "--out",
            path_str(out),
            "--seed",
            "21",
        ]);
    }
    assert_trees_equal(&once, &again, &[]);
}

#[test]
fn warp_outputs_equal_per_file_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 3);
    let out = dir.path().join("out");
    warpeval_ok(&[
        "warp",
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&out),
        "--seed",
        "33",
    ]);

    let manifest = json(&out.join("manifest.json"));
    let entries = manifest["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for (index, entry) in entries.iter().enumerate() {
        let label = synthetic_label(index);
        let edge = label_boundary_edges(&label);
        let cfg = WarpConfig {
            seed: derive_seed(33, index as u64),
            ..WarpConfig::default()
        };
        let expected = warp_augment_full(&label, &edge, &cfg).unwrap();

        let name = format!("img{index}.png");
        let warped = load_label_map(out.join(&name), None, None).unwrap();
        assert_eq!(
            warped.data(),
            expected.warped.data(),
            "{name}: warped bytes differ from the library call"
        );
        assert_eq!(entry["file"], name.as_str());
        assert_eq!(entry["seed"].as_u64().unwrap(), cfg.seed);
        assert_eq!(
            entry["keypoints"].as_u64().unwrap() as usize,
            expected.stats.keypoints
        );
        // Tolerance instead of equality: the binary and this test harness are
        // separately compiled consumers of the RNG float path, which may
        // round the last bit differently.
        let recorded = entry["max_displacement"].as_f64().unwrap();
        let library = expected.stats.max_displacement;
        assert!(
            (recorded - library).abs() <= 1e-12 * library.max(1.0),
            "{name}: manifest displacement {recorded} differs from library stats {library}"
        );
    }
}

#[test]
fn warp_per_file_failures_exit_nonzero_but_keep_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 2);
    let out = dir.path().join("out");
    // Ignore-fill needs an ignore id; these maps declare none.
    let output = warpeval(&[
        "warp",
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&out),
        "--border",
        "ignore-fill",
    ]);
    assert!(
        !output.status.success(),
        "per-file failures must fail the run"
    );
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 0);
    assert_eq!(manifest["errors"].as_array().unwrap().len(), 2);
    assert!(
        stderr_of(&output).contains("ignore id"),
        "stderr was: {}",
        stderr_of(&output)
    );
}

#[test]
fn perturb_copies_images_whose_class_is_absent() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (dir.path().join("images"), dir.path().join("labels"));
    write_images(&images, 2);
    std::fs::create_dir_all(&labels).unwrap();
    for k in 0..2 {
        let data: Vec<u8> = (0..32 * 32).map(|i| u8::from(i % 32 >= 16)).collect();
        let map = LabelMap::new(32, 32, 3, None, data).unwrap();
        save_label_map(&map, labels.join(format!("img{k}.png"))).unwrap();
    }
    let out = dir.path().join("out");
    warpeval_ok(&[
        "perturb",
        "--images",
        path_str(&images),
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&out),
        "--class-id",
        "2",
        "--scheme",
        "constant",
        "--n-classes",
        "3",
    ]);
    for k in 0..2 {
        let name = format!("img{k}.png");
        let input = std::fs::read(images.join(&name)).unwrap();
        let output = std::fs::read(out.join(&name)).unwrap();
        assert!(
            input == output,
            "{name}: absent class must copy the image bytes"
        );
    }
    let manifest = json(&out.join("manifest.json"));
    for entry in manifest["entries"].as_array().unwrap() {
        assert_eq!(entry["status"], "absent");
        assert_eq!(entry["masked_pixels"], 0);
    }
}

#[test]
fn perturb_single_image_equals_the_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (dir.path().join("images"), dir.path().join("labels"));
    write_images(&images, 1);
    write_labels(&labels, 1);
    let image = warpeval_core::raster::load_image(images.join("img0.png")).unwrap();
    let label = synthetic_label(0);
    let mask = class_mask(&label, 1).unwrap();

    let out_constant = dir.path().join("constant");
    warpeval_ok(&[
        "perturb",
        "--images",
        path_str(&images),
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&out_constant),
        "--class-id",
        "1",
        "--scheme",
        "constant",
        "--c0",
        "77.5",
    ]);
    let expected =
        apply_perturbation(&image, &mask, &PerturbScheme::Constant { value: 77.5 }).unwrap();
    let oracle_path = dir.path().join("oracle_constant.png");
    save_image(&expected, &oracle_path).unwrap();
    assert!(
        std::fs::read(out_constant.join("img0.png")).unwrap()
            == std::fs::read(&oracle_path).unwrap(),
        "constant-scheme output differs from the direct library call"
    );

    let out_lognormal = dir.path().join("lognormal");
    warpeval_ok(&[
        "perturb",
        "--images",
        path_str(&images),
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&out_lognormal),
        "--class-id",
        "1",
        "--scheme",
        "lognormal",
        "--seed",
        "9",
    ]);
    let item_seed = derive_seed(derive_seed(9, 1), 0);
    let expected =
        apply_perturbation(&image, &mask, &PerturbScheme::Lognormal { seed: item_seed }).unwrap();
    let oracle_path = dir.path().join("oracle_lognormal.png");
    save_image(&expected, &oracle_path).unwrap();
    assert!(
        std::fs::read(out_lognormal.join("img0.png")).unwrap()
            == std::fs::read(&oracle_path).unwrap(),
        "lognormal-scheme output differs from the seeded library call"
    );
}

#[test]
fn perturb_all_classes_fans_out_one_tree_per_class_and_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (dir.path().join("images"), dir.path().join("labels"));
    write_images(&images, 2);
    write_labels(&labels, 2);
    let out = dir.path().join("out");
    warpeval_ok(&[
        "perturb",
        "--images",
        path_str(&images),
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&out),
        "--all-classes",
        "--sigma0",
        "1.5",
    ]);
    for class in 0..3 {
        for scheme in ["constant", "average", "blur", "lognormal"] {
            for k in 0..2 {
                let path = out.join(format!("class_{class}/{scheme}/img{k}.png"));
                assert!(path.is_file(), "missing output {}", path.display());
            }
        }
    }
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["inputs"], serde_json::json!(["img0", "img1"]));
    let entries = manifest["entries"].as_array().unwrap();
    assert_eq!(
        entries.len(),
        3 * 4 * 2,
        "one entry per class, scheme and image"
    );
    let mut seen = std::collections::BTreeSet::new();
    for entry in entries {
        assert!(
            seen.insert(entry["file"].as_str().unwrap().to_string()),
            "duplicate manifest entry {}",
            entry["file"]
        );
    }
}

#[test]
fn evaluate_scores_perfect_predictions_as_ones() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 3);
    let out = dir.path().join("out");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&labels),
        "--out",
        path_str(&out),
    ]);
    let report = json(&out.join("metrics.json"));
    assert_eq!(report["aggregate"]["pa_overall"], 1.0);
    assert_eq!(report["aggregate"]["ma"], 1.0);
    assert_eq!(report["aggregate"]["miou"], 1.0);
    assert_eq!(report["n_classes"], 3);
}

#[test]
fn evaluate_matches_a_hand_built_confusion() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, pred) = (dir.path().join("gt"), dir.path().join("pred"));
    std::fs::create_dir_all(&gt).unwrap();
    std::fs::create_dir_all(&pred).unwrap();
    let write = |dir: &Path, name: &str, ids: [u8; 4]| {
        let map = LabelMap::new(2, 2, 2, None, ids.to_vec()).unwrap();
        save_label_map(&map, dir.join(name)).unwrap();
    };
    write(&gt, "a.png", [0, 0, 1, 1]);
    write(&pred, "a.png", [0, 1, 1, 1]);
    write(&gt, "b.png", [0, 1, 0, 1]);
    write(&pred, "b.png", [0, 1, 1, 1]);
    // Combined counts: gt 0 -> pred {0: 2, 1: 2}; gt 1 -> pred {1: 4}.
    let out = dir.path().join("out");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&gt),
        "--pred",
        path_str(&pred),
        "--out",
        path_str(&out),
    ]);
    let report = json(&out.join("metrics.json"));
    let rows = report["per_class"].as_array().unwrap();
    assert_eq!(rows[0]["pa"], 0.5);
    assert_eq!(rows[0]["iou"], 0.5);
    assert_eq!(rows[1]["pa"], 1.0);
    assert_eq!(rows[1]["iou"].as_f64().unwrap(), 4.0 / 6.0);
    assert_eq!(report["aggregate"]["pa_overall"], 0.75);
    assert_eq!(report["aggregate"]["ma"], 0.75);
    assert_eq!(
        report["aggregate"]["miou"].as_f64().unwrap(),
        (0.5 + 4.0 / 6.0) / 2.0
    );
}

fn full_split(n: usize) -> BiasSplit {
    BiasSplit {
        schema_version: 1,
        delta: 2.0 / 3.0,
        biased: (0..n).collect(),
        unbiased: Vec::new(),
        provenance: BTreeMap::new(),
        excluded: Vec::new(),
        schemes_present: Vec::new(),
    }
}

#[test]
fn evaluate_with_an_all_class_split_mirrors_the_overall_means() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 2);
    let split_path = dir.path().join("split.json");
    full_split(3).to_path(&split_path).unwrap();
    let out = dir.path().join("out");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&labels),
        "--out",
        path_str(&out),
        "--split",
        path_str(&split_path),
    ]);
    let report = json(&out.join("metrics.json"));
    assert_eq!(
        report["splits"]["biased"]["miou"], report["aggregate"]["miou"],
        "a split holding every class must reproduce the overall mean"
    );
    assert_eq!(
        report["splits"]["biased"]["ma"], report["aggregate"]["ma"],
        "a split holding every class must reproduce the overall mean"
    );
    assert_eq!(report["splits"]["unbiased"]["empty"], true);
    assert_eq!(report["splits"]["unbiased"]["ma"], serde_json::Value::Null);
}

#[test]
fn bias_split_marks_every_positive_class_when_perturbed_equals_real() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    let corrupt = dir.path().join("corrupt");
    write_labels(&labels, 3);
    write_corrupted_labels(&corrupt, 3);
    let eval_out = dir.path().join("eval");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&corrupt),
        "--out",
        path_str(&eval_out),
    ]);
    let metrics = eval_out.join("metrics.json");
    for row in json(&metrics)["per_class"].as_array().unwrap() {
        assert!(
            row["pa"].as_f64().unwrap() > 0.0,
            "fixture should score every class"
        );
    }

    let out = dir.path().join("split");
    let output = warpeval_ok(&[
        "bias-split",
        "--real",
        path_str(&metrics),
        "--perturbed",
        &format!("constant={}", metrics.display()),
        "--out",
        path_str(&out),
    ]);
    assert!(
        stderr_of(&output).contains("no metrics for scheme average"),
        "missing schemes must be warned about, stderr: {}",
        stderr_of(&output)
    );
    let split = json(&out.join("bias_split.json"));
    assert_eq!(split["biased"], serde_json::json!([0, 1, 2]));
    assert_eq!(split["unbiased"], serde_json::json!([]));
    assert_eq!(split["schemes_present"], serde_json::json!(["constant"]));
}

#[test]
fn bias_split_bundled_unknown_dataset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = warpeval(&["bias-split", "--bundled", "kitti", "--out", path_str(&out)]);
    assert!(!output.status.success());
    assert!(
        stderr_of(&output).contains("unknown dataset"),
        "stderr was: {}",
        stderr_of(&output)
    );
}

#[test]
fn report_without_split_renders_three_metric_columns() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 2);
    let eval_out = dir.path().join("eval");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&labels),
        "--out",
        path_str(&eval_out),
    ]);
    let output = warpeval_ok(&[
        "report",
        "--metrics",
        &format!("model={}", eval_out.join("metrics.json").display()),
    ]);
    let text = stdout_of(&output);
    let header: Vec<&str> = text.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["model", "PA", "MA", "mIoU"], "table was:\n{text}");
    assert_eq!(
        text.lines().count(),
        2,
        "one header and one model row:\n{text}"
    );
}

#[test]
fn report_delta_row_subtracts_the_first_model_from_the_second() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    let corrupt = dir.path().join("corrupt");
    write_labels(&labels, 3);
    write_corrupted_labels(&corrupt, 3);
    let base_out = dir.path().join("base");
    let aug_out = dir.path().join("aug");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&corrupt),
        "--out",
        path_str(&base_out),
    ]);
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&labels),
        "--out",
        path_str(&aug_out),
    ]);
    let output = warpeval_ok(&[
        "report",
        "--metrics",
        &format!("baseline={}", base_out.join("metrics.json").display()),
        "--metrics",
        &format!("augmented={}", aug_out.join("metrics.json").display()),
        "--fid",
        "baseline=40",
        "--fid",
        "augmented=30.5",
        "--format",
        "csv",
    ]);
    let text = stdout_of(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,pa,ma,miou,fid");
    assert_eq!(lines.len(), 4, "header, two models, delta:\n{text}");

    let base = json(&base_out.join("metrics.json"));
    let aug = json(&aug_out.join("metrics.json"));
    let delta: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(delta[0], "delta");
    for (cell, key) in delta[1..4].iter().zip(["pa_overall", "ma", "miou"]) {
        let expected =
            aug["aggregate"][key].as_f64().unwrap() - base["aggregate"][key].as_f64().unwrap();
        assert_eq!(*cell, format!("{expected}"), "column {key}");
    }
    assert_eq!(delta[4], format!("{}", 30.5 - 40.0));
}

#[test]
fn report_omits_the_fid_column_when_no_values_are_given() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 2);
    let eval_out = dir.path().join("eval");
    warpeval_ok(&[
        "evaluate",
        "--gt",
        path_str(&labels),
        "--pred",
        path_str(&labels),
        "--out",
        path_str(&eval_out),
    ]);
    let metrics_arg = format!("model={}", eval_out.join("metrics.json").display());
    let without = warpeval_ok(&["report", "--metrics", &metrics_arg, "--format", "csv"]);
    assert_eq!(
        stdout_of(&without).lines().next().unwrap(),
        "model,pa,ma,miou"
    );
    let with = warpeval_ok(&[
        "report",
        "--metrics",
        &metrics_arg,
        "--fid",
        "model=12.5",
        "--format",
        "csv",
    ]);
    assert_eq!(
        stdout_of(&with).lines().next().unwrap(),
        "model,pa,ma,miou,fid"
    );
}

#[test]
fn rerunning_from_the_dumped_effective_config_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 3);
    let first = dir.path().join("first");
    warpeval_ok(&[
        "warp",
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&first),
        "--seed",
        "5",
        "--max-shift",
        "3",
        "--n-keypoints",
        "24",
    ]);
    let second = dir.path().join("second");
    warpeval_ok(&[
        "warp",
        "--labels",
        path_str(&labels),
        "--out",
        path_str(&second),
        "--config",
        path_str(&first.join("effective_config.toml")),
    ]);
    // The replay must reproduce everything, the config dump included.
    assert_trees_equal(&first, &second, &[]);
}

#[test]
fn worker_count_never_changes_output_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (dir.path().join("images"), dir.path().join("labels"));
    write_images(&images, 4);
    write_labels(&labels, 4);
    let serial = dir.path().join("serial");
    let parallel = dir.path().join("parallel");
    for (out, workers) in [(&serial, "1"), (&parallel, "8")] {
        warpeval_ok(&[
            "perturb",
            "--images",
            path_str(&images),
            "--labels",
            path_str(&labels),
            "--out",
            path_str(out),
            "--all-classes",
            "--sigma0",
            "1.5",
            "--workers",
            workers,
        ]);
    }
    // The config dump records the differing worker count; data must not.
    assert_trees_equal(&serial, &parallel, &["effective_config.toml"]);
}

#[test]
fn worker_count_is_settable_through_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels");
    write_labels(&labels, 2);
    let out = dir.path().join("out");
    let ok = Command::new(bin())
        .args([
            "warp",
            "--labels",
            path_str(&labels),
            "--out",
            path_str(&out),
        ])
        .env("WARPEVAL_WORKERS", "3")
        .output()
        .unwrap();
    assert!(
        ok.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let effective = std::fs::read_to_string(out.join("effective_config.toml")).unwrap();
    assert!(
        effective.contains("workers = 3"),
        "config was:\n{effective}"
    );

    let bad = Command::new(bin())
        .args([
            "warp",
            "--labels",
            path_str(&labels),
            "--out",
            path_str(&dir.path().join("out2")),
        ])
        .env("WARPEVAL_WORKERS", "a-lot")
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(
        String::from_utf8_lossy(&bad.stderr).contains("WARPEVAL_WORKERS"),
        "stderr: {}",
        String::from_utf8_lossy(&bad.stderr)
    );
}
