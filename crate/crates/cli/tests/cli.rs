use std::path::Path;
use std::process::{Command, Output};

fn detdiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detdiag"))
        .args(args)
        .env_remove("DETDIAG_THREADS")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, seed: &str, profile: &str) {
    let out = detdiag(&["synth", "--seed", seed, "--profile", profile, "--out", p(dir), "--images", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn inputs(dir: &Path) -> [String; 3] {
    ["gt.json", "det.json", "taxonomy.json"].map(|f| dir.join(f).to_string_lossy().into_owned())
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "11", "jittered");
    synth(&b, "11", "jittered");
    for f in ["gt.json", "det.json", "taxonomy.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analyze_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "3", "confused");
    let [gt, det, tax] = inputs(&data);
    let out = tmp.path().join("out");
    let run = detdiag(&["analyze", "--gt", &gt, "--det", &det, "--taxonomy", &tax, "--out", p(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["report.json", "fp_types.csv", "sensitivity.csv", "fp_distribution.svg", "sensitivity.svg"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(String::from_utf8_lossy(&run.stdout).contains("false positives: Loc"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "4", "jittered");
    let [gt, det, tax] = inputs(&data);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tp_iou": 0.7, "n_ref": 3, "ap_mode": "11point"}"#).unwrap();
    let out = tmp.path().join("out");
    let run = detdiag(&[
        "analyze", "--gt", &gt, "--det", &det, "--taxonomy", &tax, "--out", p(&out), "--config", p(&cfg), "--n-ref",
        "5",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["tp_iou"], 0.7);
    assert_eq!(report["config"]["n_ref"], 5.0);
    assert_eq!(report["config"]["ap_mode"], "11point");
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "5", "noisy-bg");
    let [gt, det, tax] = inputs(&data);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("out{threads}"));
        let run = Command::new(env!("CARGO_BIN_EXE_detdiag"))
            .args(["analyze", "--gt", &gt, "--det", &det, "--taxonomy", &tax, "--out", p(&out)])
            .env("DETDIAG_THREADS", threads)
            .output()
            .unwrap();
        assert!(run.status.success());
        outputs.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn compare_and_fpviz() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    synth(&a, "6", "jittered");
    let [gt, det_a, tax] = inputs(&a);
    // detector B: the same boxes with every other score lowered
    let mut dets: serde_json::Value = serde_json::from_slice(&std::fs::read(&det_a).unwrap()).unwrap();
    let list = dets["detections"].as_array_mut().unwrap();
    for d in list.iter_mut().step_by(2) {
        let s = d["score"].as_f64().unwrap();
        d["score"] = (s / 4.0).into();
    }
    let det_b = tmp.path().join("det_b.json");
    std::fs::write(&det_b, serde_json::to_vec(&dets).unwrap()).unwrap();
    let out = tmp.path().join("cmp");
    let run = detdiag(&[
        "compare", "--gt", &gt, "--det-a", &det_a, "--det-b", p(&det_b), "--taxonomy", &tax, "--out", p(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("comparison.json").is_file());
    assert!(out.join("a").join("report.json").is_file());
    assert!(out.join("b").join("report.json").is_file());

    let viz = tmp.path().join("viz");
    let run = detdiag(&[
        "fpviz", "--gt", &gt, "--det", &det_a, "--taxonomy", &tax, "--out", p(&viz), "--score-threshold", "0.3",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let svgs = std::fs::read_dir(&viz).unwrap().count();
    assert!(svgs > 0);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "7", "perfect");
    let [gt, det, tax] = inputs(&data);
    let out = tmp.path().join("out");
    let code = |args: &[&str]| detdiag(args).status.code();

    // usage
    assert_eq!(code(&["analyze", "--gt", &gt]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
    // missing input file
    let missing = tmp.path().join("nope.json");
    assert_eq!(code(&["analyze", "--gt", p(&missing), "--det", &det, "--taxonomy", &tax, "--out", p(&out)]), Some(2));
    // malformed input
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(code(&["analyze", "--gt", &gt, "--det", p(&bad), "--taxonomy", &tax, "--out", p(&out)]), Some(1));
    // out-of-range parameter
    assert_eq!(
        code(&["analyze", "--gt", &gt, "--det", &det, "--taxonomy", &tax, "--out", p(&out), "--n-ref", "0"]),
        Some(1)
    );
    // schedule longer than the available false positives
    assert_eq!(
        code(&["analyze", "--gt", &gt, "--det", &det, "--taxonomy", &tax, "--out", p(&out), "--schedule", "5,10"]),
        Some(1)
    );
    // output location is a file
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let nested = blocker.join("out");
    assert_eq!(code(&["analyze", "--gt", &gt, "--det", &det, "--taxonomy", &tax, "--out", p(&nested)]), Some(2));
}
