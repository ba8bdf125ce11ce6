mod common;

use std::fs;

use common::{code, path_str, run, stderr, stdout, tree_hash, write_dataset};
use serde_json::Value;
use tempfile::tempdir;

#[test]
fn augment_writes_tree_and_summary() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 4, 24, 20);
    let out = tmp.path().join("aug");
    let o = run(&["augment", "--in", path_str(&low), "--gt", path_str(&high), "--out", path_str(&out), "--seed", "7", "--copies", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["written"], 8);
    assert_eq!(summary["failed"], 0);
    for dir in ["input", "target", "mask", "provenance"] {
        assert_eq!(fs::read_dir(out.join(dir)).unwrap().count(), 8, "{dir}");
    }
    let prov: Value =
        serde_json::from_str(&fs::read_to_string(out.join("provenance/0002_1.json")).unwrap()).unwrap();
    assert_eq!(prov["master_seed"], 7);
    assert_eq!(prov["strategy"], "copy_blend");
}

#[test]
fn augment_is_repeatable_and_seed_sensitive() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 3, 16, 16);
    let hash_for = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = run(&["augment", "--in", path_str(&low), "--gt", path_str(&high), "--out", path_str(&out), "--seed", seed]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        tree_hash(&out)
    };
    let a = hash_for("a", "5");
    assert_eq!(a, hash_for("b", "5"));
    assert_ne!(a, hash_for("c", "6"));
}

#[test]
fn missing_gt_is_a_usage_error() {
    let tmp = tempdir().unwrap();
    let (low, _) = write_dataset(tmp.path(), 1, 8, 8);
    let o = run(&["augment", "--in", path_str(&low), "--out", path_str(&tmp.path().join("o")), "--seed", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--gt"), "{}", stderr(&o));
}

#[test]
fn missing_seed_is_rejected() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 1, 8, 8);
    let o = run(&["augment", "--in", path_str(&low), "--gt", path_str(&high), "--out", path_str(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn unwritable_out_dir_is_an_io_error() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 1, 8, 8);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let o = run(&["augment", "--in", path_str(&low), "--gt", path_str(&high), "--out", path_str(&blocker.join("sub")), "--seed", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("file"), "{}", stderr(&o));
}

#[test]
fn bad_config_reports_the_field() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 1, 8, 8);
    let cfg = tmp.path().join("cb.json");
    fs::write(&cfg, "{\n  \"mask\": {\n    \"mp_max\": \"big\"\n  }\n}\n").unwrap();
    let o = run(&["augment", "--config", path_str(&cfg), "--in", path_str(&low), "--gt", path_str(&high), "--out", path_str(&tmp.path().join("o")), "--seed", "1"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("mask.mp_max") && err.contains("line 3"), "{err}");
}

#[test]
fn flags_override_set_which_overrides_file() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 2, 12, 12);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"strategy": "cut_out", "fill_value": 0.5, "seed": 1, "copies_per_sample": 3}"#).unwrap();
    let out = tmp.path().join("o");
    let o = run(&[
        "augment", "--config", path_str(&cfg), "--set", "fill_value=0.25", "--set", "seed=2",
        "--seed", "9", "--copies", "1",
        "--in", path_str(&low), "--gt", path_str(&high), "--out", path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["written"], 2);
    let prov: Value =
        serde_json::from_str(&fs::read_to_string(out.join("provenance/0000_0.json")).unwrap()).unwrap();
    assert_eq!(prov["master_seed"], 9);
    assert_eq!(prov["strategy"], "cut_out");
    assert_eq!(prov["config"]["fill_value"], 0.25);
}

#[test]
fn workers_env_is_a_fallback_only() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 1, 16, 16);
    let o = common::bin()
        .env("PATCHFORGE_WORKERS", "0")
        .args(["stats", "--in", path_str(&low), "--gt", path_str(&high)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    let o = common::bin()
        .env("PATCHFORGE_WORKERS", "0")
        .args(["--workers", "2", "stats", "--in", path_str(&low), "--gt", path_str(&high)])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn sweep_single_cell_gives_one_csv_row() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 3, 24, 24);
    let out = tmp.path().join("sw");
    let o = run(&[
        "sweep", "--in", path_str(&low), "--gt", path_str(&high), "--scales", "0.2",
        "--strategies", "copy_blend", "--samples", "4", "--seed", "1", "--out", path_str(&out), "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 1);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("strategy,scale,"));
    assert!(out.join("sweep.json").exists());
}

#[test]
fn sweep_rejects_bad_scale_lists() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 1, 8, 8);
    for scales in ["0.3,0.2", "0.1,abc", "", "0.1,1.5"] {
        let o = run(&["sweep", "--in", path_str(&low), "--gt", path_str(&high), "--scales", scales, "--strategies", "cut_blur", "--seed", "1"]);
        assert_eq!(code(&o), 1, "{scales:?}");
    }
    let o = run(&["sweep", "--in", path_str(&low), "--gt", path_str(&high), "--scales", "0.1", "--strategies", "blur", "--seed", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn metrics_on_identical_dirs_reports_inf() {
    let tmp = tempdir().unwrap();
    let (_, high) = write_dataset(tmp.path(), 3, 20, 20);
    let o = run(&["metrics", "--in", path_str(&high), "--gt", path_str(&high)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("inf / 1.00"), "{}", stdout(&o));
    let o = run(&["--json", "metrics", "--in", path_str(&high), "--gt", path_str(&high)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["psnr_db"], "inf");
    assert_eq!(v["ssim"], 1.0);
    assert_eq!(v["count"], 3);
}

#[test]
fn metrics_lists_orphans_and_rejects_empty_dirs() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 2, 12, 12);
    fs::copy(high.join("0000.png"), high.join("extra.png")).unwrap();
    let o = run(&["metrics", "--in", path_str(&low), "--gt", path_str(&high)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("extra.png"), "{}", stderr(&o));

    let (e1, e2) = (tmp.path().join("e1"), tmp.path().join("e2"));
    fs::create_dir_all(&e1).unwrap();
    fs::create_dir_all(&e2).unwrap();
    assert_eq!(code(&run(&["metrics", "--in", path_str(&e1), "--gt", path_str(&e2)])), 1);
}

#[test]
fn subsample_is_deterministic() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 10, 16, 16);
    let make = |name: &str| {
        let out = tmp.path().join(name);
        let o = run(&["subsample", "--in", path_str(&low), "--gt", path_str(&high), "--fraction", "0.2", "--seed", "3", "--out", path_str(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read_to_string(out).unwrap()
    };
    let a = make("a.json");
    assert_eq!(a, make("b.json"));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);

    // the written manifest is itself a valid data source
    let o = run(&["--json", "stats", "--manifest", path_str(&tmp.path().join("a.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stats: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(stats["count"], 2);
}

#[test]
fn validate_reports_corrupt_files() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 3, 8, 8);
    let o = run(&["validate", "--in", path_str(&low), "--gt", path_str(&high)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    fs::write(low.join("0001.png"), b"\x89PNG\r\n\x1a\ntruncated").unwrap();
    let o = run(&["validate", "--in", path_str(&low), "--gt", path_str(&high)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("0001.png"), "{}", stderr(&o));

    let o = run(&["--json", "validate", "--in", path_str(&low), "--gt", path_str(&high)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pairs"], 2);
    assert_eq!(v["excluded"].as_array().unwrap().len(), 1);
}

#[test]
fn json_flag_yields_parseable_stdout() {
    let tmp = tempdir().unwrap();
    let (low, high) = write_dataset(tmp.path(), 2, 16, 16);
    let (l, h) = (path_str(&low), path_str(&high));
    let cases: Vec<Vec<&str>> = vec![
        vec!["--json", "stats", "--in", l, "--gt", h],
        vec!["--json", "metrics", "--in", l, "--gt", h],
        vec!["--json", "validate", "--in", l, "--gt", h],
        vec!["--json", "subsample", "--in", l, "--gt", h, "--fraction", "0.5", "--seed", "1"],
        vec!["--json", "sweep", "--in", l, "--gt", h, "--scales", "0.1,0.2", "--strategies", "mixup", "--samples", "2", "--seed", "1"],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        serde_json::from_str::<Value>(&stdout(&o)).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    }
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("augment"));
    assert_eq!(code(&run(&["frobnicate"])), 1);
}
