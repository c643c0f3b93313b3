use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn glocalsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glocalsync"))
        .args(args)
        .env_remove("GLOCALSYNC_OUT")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_accepts_fixtures_and_names_problems() {
    let net = fixture("five_site_network.json");
    let out = glocalsync(&[
        "validate",
        "--network",
        p(&net),
        "--catalog",
        p(&fixture("five_site_catalog.json")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = glocalsync(&[
        "validate",
        "--network",
        p(&fixture("invalid/network_region_orphan.json")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("NP"));

    let out = glocalsync(&[
        "validate",
        "--network",
        p(&net),
        "--catalog",
        p(&fixture("invalid/catalog_unknown_origin.json")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("brochure-de"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&glocalsync(&["frobnicate"])), 2);
    assert_eq!(code(&glocalsync(&["audit"])), 2);
    assert_eq!(code(&glocalsync(&["--help"])), 0);
}

#[test]
fn scope_lists_replicas_per_component() {
    let out = glocalsync(&[
        "scope",
        "annual-report",
        "--network",
        p(&fixture("five_site_network.json")),
        "--catalog",
        p(&fixture("five_site_catalog.json")),
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# component local-contacts\nUK\ten\n# component summary\n"));
    assert!(text.contains("# union\n"));
    assert_eq!(text.matches("NP\tnp").count(), 2);

    let out = glocalsync(&[
        "scope",
        "no-such-item",
        "--network",
        p(&fixture("five_site_network.json")),
        "--catalog",
        p(&fixture("five_site_catalog.json")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn audit_exit_codes() {
    let net = fixture("three_site_network.json");
    let catalog = fixture("three_site_catalog.json");
    let run = |log: &str| {
        glocalsync(&[
            "audit",
            "--network",
            p(&net),
            "--catalog",
            p(&catalog),
            "--log",
            p(&fixture(log)),
        ])
    };
    assert_eq!(code(&run("three_site.log")), 1);
    assert_eq!(code(&run("three_site_synced.log")), 0);
    let bad = run("invalid/truncated.log");
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 3"));
}

#[test]
fn audit_of_rewritten_log_is_a_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let net = fixture("three_site_network.json");
    let catalog = fixture("three_site_catalog.json");
    let a = glocalsync(&[
        "audit",
        "--network",
        p(&net),
        "--catalog",
        p(&catalog),
        "--log",
        p(&fixture("three_site.log")),
        "--out",
        p(&first),
    ]);
    assert_eq!(code(&a), 1);
    let b = glocalsync(&[
        "audit",
        "--network",
        p(&net),
        "--catalog",
        p(&catalog),
        "--log",
        p(&first.join("log.ndjson")),
        "--out",
        p(&second),
    ]);
    assert_eq!(code(&b), 1);
    assert_eq!(a.stdout, b.stdout);
    for name in ["audit.json", "audit.txt", "log.ndjson"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_glocalsync"))
        .args([
            "plan",
            "--network",
            p(&fixture("three_site_network.json")),
            "--catalog",
            p(&fixture("three_site_catalog.json")),
            "--log",
            p(&fixture("three_site.log")),
        ])
        .env("GLOCALSYNC_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let plan = read_json(&dir.path().join("plan.json"));
    assert_eq!(plan.as_array().unwrap().len(), 3);
}

#[test]
fn analyze_writes_reports_and_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = glocalsync(&[
        "analyze",
        "--dataset",
        p(&fixture("complete_graph.tsv")),
        "--pairs",
        p(&fixture("pairwise.tsv")),
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let report = read_json(&dir.path().join("analysis.json"));
    let labels = report["labels"].as_array().unwrap();
    let got: Vec<(&str, &str)> = labels
        .iter()
        .map(|l| {
            (
                l["scale"].as_str().unwrap(),
                l["coupling"].as_str().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        got,
        [
            ("global", "high"),
            ("local_and_regional", "neutral"),
            ("local", "low")
        ]
    );
    assert!(dir.path().join("analysis.txt").exists());

    let bad = glocalsync(&[
        "analyze",
        "--dataset",
        p(&fixture("invalid/asymmetric.tsv")),
    ]);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("prod-IN-AU-01"));
    assert_eq!(
        code(&glocalsync(&[
            "analyze",
            "--dataset",
            p(&fixture("invalid/empty.tsv"))
        ])),
        2
    );
    assert_eq!(code(&glocalsync(&["analyze"])), 2);
}

#[test]
fn thresholds_change_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = glocalsync(&[
        "--out",
        p(dir.path()),
        "analyze",
        "--dataset",
        p(&fixture("complete_graph.tsv")),
        "--pairs",
        p(&fixture("pairwise.tsv")),
        "--theta-global",
        "60",
    ]);
    assert_eq!(code(&out), 0);
    let report = read_json(&dir.path().join("analysis.json"));
    assert_eq!(report["thresholds"]["global"], 60);
    assert_eq!(report["labels"][0]["scale"], "local_and_regional");
}

/// Every record is repeated three times under fresh webpage ids.
fn tripled(path: &Path, dest: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let mut out = String::from(lines.next().unwrap());
    out.push('\n');
    let rows: Vec<&str> = lines.collect();
    for copy in 0..3 {
        for row in &rows {
            let mut cols: Vec<String> = row.split('\t').map(str::to_string).collect();
            cols[2] = format!("{}-x{copy}", cols[2]);
            out.push_str(&cols.join("\t"));
            out.push('\n');
        }
    }
    fs::write(dest, out).unwrap();
}

fn percentages(v: &Value) -> Vec<Value> {
    let mut out = Vec::new();
    for sec in v["complete_graph"].as_array().unwrap() {
        let t = &sec["summary"]["tally"];
        out.push(serde_json::json!([
            t["pct_all"],
            t["pct_some"],
            t["pct_none"]
        ]));
    }
    for row in v["coupling"].as_array().unwrap() {
        out.push(serde_json::json!([
            row["counts"]["yes_pct"],
            row["counts"]["no_pct"]
        ]));
    }
    out.push(v["labels"].clone());
    out
}

#[test]
fn tripled_dataset_gives_identical_percentages() {
    let dir = tempfile::tempdir().unwrap();
    let complete = dir.path().join("complete.tsv");
    let pairs = dir.path().join("pairs.tsv");
    tripled(&fixture("complete_graph.tsv"), &complete);
    tripled(&fixture("pairwise.tsv"), &pairs);
    let a_dir = dir.path().join("a");
    let b_dir = dir.path().join("b");
    let a = glocalsync(&[
        "analyze",
        "--dataset",
        p(&fixture("complete_graph.tsv")),
        "--pairs",
        p(&fixture("pairwise.tsv")),
        "--out",
        p(&a_dir),
    ]);
    let b = glocalsync(&[
        "analyze",
        "--dataset",
        p(&complete),
        "--pairs",
        p(&pairs),
        "--out",
        p(&b_dir),
    ]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    let a = read_json(&a_dir.join("analysis.json"));
    let b = read_json(&b_dir.join("analysis.json"));
    assert_eq!(percentages(&a), percentages(&b));
    assert_eq!(
        b["complete_graph_total"]["total"].as_u64(),
        a["complete_graph_total"]["total"].as_u64().map(|n| n * 3)
    );
}

#[test]
fn simulate_writes_metrics_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = glocalsync(&[
        "simulate",
        p(&fixture("scenario_mixed.json")),
        "--baseline",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "metrics.json",
        "metrics.txt",
        "events.ndjson",
        "baseline.json",
        "comparison.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let policy = read_json(&dir.path().join("metrics.json"));
    let base = read_json(&dir.path().join("baseline.json"));
    for (x, y) in policy["categories"]
        .as_array()
        .unwrap()
        .iter()
        .zip(base["categories"].as_array().unwrap())
    {
        assert!(y["total_window"].as_u64() >= x["total_window"].as_u64());
    }

    let reseeded = glocalsync(&[
        "simulate",
        p(&fixture("scenario_mixed.json")),
        "--seed",
        "99",
    ]);
    assert_eq!(code(&reseeded), 0);
    assert_ne!(
        reseeded.stdout,
        glocalsync(&["simulate", p(&fixture("scenario_mixed.json"))]).stdout
    );

    assert_eq!(
        code(&glocalsync(&["simulate", p(&fixture("three_site.log"))])),
        2
    );
}
