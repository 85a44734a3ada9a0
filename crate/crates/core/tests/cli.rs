use std::path::PathBuf;

use qenet::cli::{run, EXIT_CONCLUSIVE, EXIT_ERROR, EXIT_UNKNOWN};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn qenet(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("qenet").chain(args.iter().copied());
    let code = run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn report(args: &[&str]) -> (i32, serde_json::Value) {
    let mut full = args.to_vec();
    full.extend(["--report", "-", "--workers", "1"]);
    let (code, text) = qenet(&full);
    let start = text.find("{\n").expect("json report");
    (code, serde_json::from_str(&text[start..]).unwrap())
}

#[test]
fn range_over_a_box() {
    let small = fixture("small.nnet");
    let (code, text) = qenet(&["range", "--net", &small, "--box", "-1,1;-1,1"]);
    assert_eq!(code, EXIT_CONCLUSIVE, "{text}");
    assert!(text.contains("y0: [-1/2, 3/2]"), "{text}");

    let (code, v) = report(&["range", "--net", &small, "--box", "-1,1;-1,1", "--partition", "2"]);
    assert_eq!(code, EXIT_CONCLUSIVE);
    let out = &v["result"]["outputs"][0];
    assert_eq!(out["lower"]["exact"], "-1/2");
    assert_eq!(out["upper"]["decimal"], "1.50000000");
    assert_eq!(v["result"]["subspaces"].as_array().unwrap().len(), 4);
    assert_eq!(v["query"]["command"], "range");
}

#[test]
fn robustness_verdicts_and_exit_codes() {
    let five = fixture("five.nnet");
    let (code, text) = qenet(&["delta-robust", "--net", &five, "--x0", "-0.5,-0.5", "--delta", "0.1"]);
    assert_eq!(code, EXIT_CONCLUSIVE, "{text}");
    assert!(text.starts_with("Robust: COC   precise: yes"), "{text}");

    let (code, text) = qenet(&["delta-robust", "--net", &five, "--x0", "0,0", "--delta", "1", "--mode", "over"]);
    assert_eq!(code, EXIT_UNKNOWN, "{text}");
    assert!(text.starts_with("UNKNOWN"), "{text}");
}

#[test]
fn epsilon_and_delta_mappings() {
    let small = fixture("small.nnet");
    let (code, text) = qenet(&["delta-to-eps", "--net", &small, "--x0", "0,0", "--delta", "1"]);
    assert_eq!(code, EXIT_CONCLUSIVE, "{text}");
    assert!(text.contains("epsilon = 1.00000000"), "{text}");

    let (code, text) = qenet(&["eps-to-delta", "--net", &small, "--x0", "0,0", "--delta0", "1", "--eps", "0.5"]);
    assert_eq!(code, EXIT_CONCLUSIVE, "{text}");
    assert!(text.contains("delta* = 0.50000000000 (sound)"), "{text}");

    let (code, text) = qenet(&["eps-to-delta", "--net", &small, "--x0", "0,0", "--delta0", "1", "--eps", "2"]);
    assert_eq!(code, EXIT_ERROR, "{text}");
}

#[test]
fn property_files() {
    let dir = tempfile::tempdir().unwrap();
    let five = fixture("five.nnet");
    let write = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    };
    // COC = relu(x0) + relu(x1) <= 2, raw 2 * COC + 1 <= 5
    let holds = write("holds.prop", "[input]\n-1,1\n-1,1\n[output raw]\nCOC <= 5\n");
    let (code, text) = qenet(&["property", "--net", &five, "--property", &holds]);
    assert_eq!(code, EXIT_CONCLUSIVE, "{text}");
    assert!(text.starts_with("Holds"), "{text}");

    let tight = write("tight.prop", "[input]\n-1,1\n-1,1\n[output raw]\nCOC <= 4\n");
    let (code, v) = report(&["property", "--net", &five, "--property", &tight]);
    assert_eq!(code, EXIT_UNKNOWN);
    assert_eq!(v["result"]["verdict"], "unknown");
    assert_eq!(v["result"]["violations"][0]["slack"][0]["supremum"]["exact"], "1");

    let either = write("or.prop", "[input]\n-1,1\n-1,1\n[output]\nCOC <= 0.5\n[or]\nCOC >= 1.5\n");
    let (code, _) = qenet(&["property", "--net", &five, "--property", &either, "--partition", "2"]);
    assert_eq!(code, EXIT_UNKNOWN);

    let broken = write("broken.prop", "[input]\n-1,1\n[output]\nCOC <= 1\n");
    let (code, text) = qenet(&["property", "--net", &five, "--property", &broken]);
    assert_eq!(code, EXIT_ERROR);
    assert!(text.contains("property file"), "{text}");
}

#[test]
fn sampling_stays_inside_computed_ranges() {
    let small = fixture("small.nnet");
    let (code, v) = report(&["sample", "--net", &small, "--box", "-1,1;-1,1", "--samples", "500", "--seed", "7"]);
    assert_eq!(code, EXIT_CONCLUSIVE);
    let observed = &v["result"]["outputs"][0]["observed"];
    let lo: f64 = observed["lower"]["decimal"].as_str().unwrap().parse().unwrap();
    let hi: f64 = observed["upper"]["decimal"].as_str().unwrap().parse().unwrap();
    assert!((-0.5..=1.5).contains(&lo) && (-0.5..=1.5).contains(&hi) && lo < hi);
}

#[test]
fn errors_exit_with_two() {
    let small = fixture("small.nnet");
    assert_eq!(qenet(&["range"]).0, EXIT_ERROR);
    assert_eq!(qenet(&["range", "--net", "/nonexistent.nnet"]).0, EXIT_ERROR);
    assert_eq!(qenet(&["range", "--net", &small, "--mode", "fuzzy"]).0, EXIT_ERROR);
    assert_eq!(qenet(&["range", "--net", &small, "--heuristic", "nope"]).0, EXIT_ERROR);
    assert_eq!(qenet(&["range", "--net", &small, "--box", "0,1"]).0, EXIT_ERROR);
    assert_eq!(qenet(&["range", "--net", &small, "--partition", "64,64"]).0, EXIT_ERROR);
    assert_eq!(qenet(&["delta-robust", "--net", &small, "--x0", "0,0", "--delta", "0"]).0, EXIT_ERROR);
}

#[test]
fn reports_are_reproducible() {
    let five = fixture("five.nnet");
    let args = ["range", "--net", &five, "--box", "-1,1;-1,1", "--mode", "over", "--budget", "1", "--partition", "2,2"];
    let (_, a) = qenet(&[&args[..], &["--report", "-", "--workers", "1"]].concat());
    let (_, b) = qenet(&[&args[..], &["--report", "-", "--workers", "1"]].concat());
    assert_eq!(a, b);
    let (_, c) = report(&args);
    let mut full = args.to_vec();
    full.extend(["--report", "-", "--workers", "3"]);
    let (_, text) = qenet(&full);
    let d: serde_json::Value = serde_json::from_str(&text[text.find("{\n").unwrap()..]).unwrap();
    assert_eq!(c["result"], d["result"]);
}
