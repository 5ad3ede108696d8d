use std::process::{Command, Output};

fn qchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qchain"))
        .args(args)
        .output()
        .expect("spawn qchain")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const SCTP3: &[&str] = &[
    "simulate",
    "--protocol",
    "sctp",
    "--steps",
    "3",
    "--a0",
    ".5",
    "--a1",
    ".6",
    "--a2",
    ".6244997998",
];

#[test]
fn simulate_sctp_matches_exact_value() {
    let mut args = SCTP3.to_vec();
    args.extend(["--trials", "100000", "--seed", "7"]);
    let out = qchain(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert_eq!(r["schema_version"], 1);
    let exact = r["exact_probability"].as_f64().unwrap();
    assert!((exact - 0.421875).abs() < 1e-9, "exact {exact}");
    assert!(r["z_score"].as_f64().unwrap().abs() < 3.0);
    assert!((r["mean_fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let mut args = SCTP3.to_vec();
    args.extend(["--trials", "2000", "--seed", "11"]);
    let a = qchain(&args);
    let b = qchain(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn maximal_entanglement_always_succeeds() {
    let out = qchain(&[
        "simulate",
        "--protocol",
        "gctp4",
        "--a0",
        ".57735",
        "--a1",
        ".57735",
        "--a2",
        "auto",
        "--trials",
        "1000",
        "--seed",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert_eq!(r["successes"], 1000);
    let classes: u64 = r["class_counts"]
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(classes, 1000);
}

#[test]
fn invalid_channel_exits_with_code_2() {
    // |sum - 1| is about 9e-7, outside the input tolerance
    let out = qchain(&[
        "simulate",
        "--protocol",
        "gctp4",
        "--a0",
        ".57735",
        "--a1",
        ".57735",
        "--a2",
        ".57735",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--a2 auto"));

    let unordered = qchain(&[
        "simulate",
        "--protocol",
        "sctp",
        "--a0",
        ".6",
        "--a1",
        ".5",
        "--a2",
        "auto",
    ]);
    assert_eq!(unordered.status.code(), Some(2));
    let no_trials = qchain(&[
        "simulate",
        "--protocol",
        "sctp",
        "--a0",
        ".5",
        "--a1",
        ".6",
        "--a2",
        "auto",
        "--trials",
        "0",
    ]);
    assert_eq!(no_trials.status.code(), Some(2));
    let bad_state = qchain(&[
        "simulate",
        "--protocol",
        "sctp",
        "--a0",
        ".5",
        "--a1",
        ".6",
        "--a2",
        "auto",
        "--state",
        "1,0,0",
    ]);
    assert_eq!(bad_state.status.code(), Some(2));
}

#[test]
fn enumerate_gctp4_lists_ten_classes_summing_to_one() {
    let out = qchain(&[
        "enumerate",
        "--protocol",
        "gctp4",
        "--a0",
        ".5",
        "--a1",
        ".6",
        "--a2",
        "auto",
        "--state",
        "0.3,0.1,-0.5,0.2,0.4,-0.6",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    let classes = r["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 10);
    let total: f64 = classes
        .iter()
        .map(|c| c["probability"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    let exact = r["total_success_probability"].as_f64().unwrap();
    let closed = r["closed_form_success_probability"].as_f64().unwrap();
    assert!((exact - closed).abs() < 1e-10);
    assert!((exact - 0.67935).abs() < 1e-10);
}

#[test]
fn enumerate_single_step_and_two_segments() {
    let one = json(&qchain(&[
        "enumerate",
        "--protocol",
        "sctp",
        "--steps",
        "1",
        "--a0",
        ".5",
        "--a1",
        ".6",
        "--a2",
        "auto",
    ]));
    assert!((one["total_success_probability"].as_f64().unwrap() - 0.75).abs() < 1e-12);

    let two = json(&qchain(&[
        "enumerate",
        "--protocol",
        "pgctp",
        "--segments",
        "2",
        "--a0",
        ".5",
        "--a1",
        ".6",
        "--a2",
        "auto",
    ]));
    let p = two["total_success_probability"].as_f64().unwrap();
    assert!((p - 0.67935f64.powi(2)).abs() < 1e-10, "{p}");
}

#[test]
fn enumerate_csv_has_header_and_total_row() {
    let out = qchain(&[
        "enumerate",
        "--protocol",
        "gctp4",
        "--a0",
        ".5",
        "--a1",
        ".6",
        "--a2",
        "auto",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "segment,class,probability,success_probability");
    assert_eq!(lines.len(), 12);
    assert!(lines[11].starts_with(",total,"));
}

#[test]
fn sweep_contains_quoted_row_for_five_segments() {
    let out = qchain(&["sweep", "--segments", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a0,envelope,n_segments,p_s,p_pg,ratio"));
    let row: Vec<&str> = lines
        .find(|l| l.contains(",max,"))
        .expect("max row")
        .split(',')
        .collect();
    let a0: f64 = row[0].parse().unwrap();
    let p_s: f64 = row[3].parse().unwrap();
    let p_pg: f64 = row[4].parse().unwrap();
    assert_eq!(a0, 0.5);
    assert!((p_s - 0.013363461010158062).abs() < 1e-15);
    assert!((p_pg - 0.14505957972141914).abs() < 1e-15);
    // 17 significant digits in scientific notation
    assert_eq!(row[3].split('e').next().unwrap().len(), 18);
}

#[test]
fn sweep_endpoint_for_one_segment_is_one_and_rerun_is_identical() {
    let a = qchain(&["sweep", "--segments", "1", "--points", "64"]);
    let b = qchain(&["sweep", "--segments", "1", "--points", "64"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .filter_map(|f| f.parse().ok())
        .collect();
    // a0, n_segments, p_s, p_pg, ratio
    assert!((last[2] - 1.0).abs() < 1e-12);
    assert!((last[3] - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_writes_to_output_path() {
    let path = std::env::temp_dir().join(format!("qchain-sweep-{}.csv", std::process::id()));
    let out = qchain(&["sweep", "--points", "3", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(text.lines().count(), 1 + 2 * 3);
}

#[test]
fn verify_with_injected_fault_exits_nonzero() {
    let out = qchain(&["verify", "--inject-kraus-fault", "--trials", "2000"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["passed"], false);
    let failed: Vec<u64> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert!(!failed.is_empty());
}

#[test]
fn verify_default_run_passes() {
    let out = qchain(&["verify"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert_eq!(r["checks"].as_array().unwrap().len(), 10);
    assert_eq!(r["passed"], true);
}
