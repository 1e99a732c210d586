//! End-to-end tests of the `shiftlab` binary: exit codes, report schema,
//! determinism, and certificate replay.

use serde_json::Value;
use std::process::{Command, Output};

fn shiftlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftlab"))
        .args(args)
        .env_remove("SHIFTLAB_BUDGET")
        .output()
        .expect("binary runs")
}

fn shiftlab_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftlab"))
        .args(args)
        .env_remove("SHIFTLAB_BUDGET")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Runs with --json and parses the report document.
fn report(args: &[&str]) -> (Value, i32) {
    let mut full = args.to_vec();
    full.push("--json");
    let out = shiftlab(&full);
    let doc: Value = serde_json::from_str(&stdout(&out))
        .unwrap_or_else(|e| panic!("report is JSON ({e}); stderr: {}", stderr(&out)));
    (doc, code(&out))
}

#[test]
fn polygon_certifies_the_triangle_and_its_double() {
    let out = shiftlab(&[
        "polygon",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(1,0),(0,1)",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("coding polygon: true"));

    let (doc, exit) = report(&[
        "polygon",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(2,0),(0,2)",
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["certified"], Value::Bool(true));
}

#[test]
fn uncertified_polygon_exits_two_with_witness() {
    let (doc, exit) = report(&[
        "polygon",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(1,1)",
    ]);
    assert_eq!(exit, 2);
    assert_eq!(doc["result"]["certified"], Value::Bool(false));
    let vertices = doc["result"]["vertices"].as_array().unwrap();
    assert!(vertices
        .iter()
        .any(|v| v["status"] == "not-forced-locally"));
}

#[test]
fn rays_reports_the_three_nonexpansive_candidates() {
    let (doc, exit) = report(&["rays", "--builtin", "ledrappier"]);
    assert_eq!(exit, 0);
    let expected: Value = serde_json::json!([[1, 0], [-1, 1], [0, -1]]);
    assert_eq!(doc["result"]["candidates"], expected);
    assert!(!doc["result"]["expansive"].as_array().unwrap().is_empty());
}

#[test]
fn directional_entropy_matches_ln_two() {
    let (doc, exit) = report(&["entropy", "--builtin", "ledrappier", "--dir", "1,0"]);
    assert_eq!(exit, 0);
    let value = doc["result"]["value"].as_f64().unwrap();
    assert!((value - std::f64::consts::LN_2).abs() < 0.02, "{value}");
    assert_eq!(doc["result"]["converged"], Value::Bool(true));
    assert_eq!(doc["result"]["method"], "exact-linear");
}

#[test]
fn polygonal_entropy_diverges_on_the_full_shift() {
    let (doc, exit) = report(&[
        "entropy",
        "--builtin",
        "full2",
        "--vertices",
        "(0,0),(1,0),(0,1),(1,1)",
        "--n-max",
        "10",
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "divergent");
}

#[test]
fn closing_ray_verdicts() {
    let (doc, exit) = report(&["closing", "--builtin", "ledrappier", "--ray", "1,0"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "closing");
    assert_eq!(doc["result"]["n"], 1);

    // Expansive rays are outside the closing question's domain.
    let out = shiftlab(&["closing", "--builtin", "ledrappier", "--ray", "1,1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("expansive"));
}

#[test]
fn codes_verdicts_and_certificate_replay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("codes.json");

    let (doc, exit) = report(&[
        "codes",
        "--builtin",
        "ledrappier",
        "--sources",
        "(0,0),(1,0)",
        "--target",
        "0,1",
        "--radius",
        "4",
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "forced");
    assert_eq!(doc["result"]["certificate"]["target"], serde_json::json!([0, 1]));
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();

    let out = shiftlab(&[
        "codes",
        "--builtin",
        "ledrappier",
        "--replay",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("all forced"));

    // A single cell does not force its neighbor: witness pair, exit 2.
    let (doc, exit) = report(&[
        "codes",
        "--builtin",
        "ledrappier",
        "--sources",
        "(0,0)",
        "--target",
        "0,1",
        "--radius",
        "3",
    ]);
    assert_eq!(exit, 2);
    assert_eq!(doc["result"]["status"], "not-forced-locally");
    assert!(doc["result"]["witness"].is_object());
}

#[test]
fn rays_certificates_replay_through_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rays.json");
    let (doc, exit) = report(&["rays", "--builtin", "ledrappier", "--height", "1"]);
    assert_eq!(exit, 0);
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = shiftlab(&[
        "codes",
        "--builtin",
        "ledrappier",
        "--replay",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn count_rectangles_and_words() {
    let (doc, exit) = report(&["count", "--builtin", "ledrappier", "--rect", "3,3"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["count"], "32");
    assert_eq!(doc["result"]["cells"], 9);

    let (doc, exit) = report(&[
        "count",
        "--builtin",
        "einsiedler-restriction",
        "--words",
        "4",
    ]);
    assert_eq!(exit, 0);
    let cli_count: u64 = doc["result"]["count"].as_str().unwrap().parse().unwrap();
    let lib_count = shiftlab_core::lang1d::count_words_1d(
        &shiftlab_core::lang1d::einsiedler_restriction(),
        4,
        1 << 20,
    )
    .unwrap();
    assert_eq!(cli_count, lib_count);
    assert!((4..=16).contains(&cli_count));
}

#[test]
fn count_scaled_thickened_polygon() {
    let (doc, exit) = report(&[
        "count",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(1,0),(0,1)",
        "--scale",
        "2",
    ]);
    assert_eq!(exit, 0);
    // 2T has 6 lattice points and hosts 3 independent rule instances.
    assert_eq!(doc["result"]["count"], "8");
    assert_eq!(doc["result"]["cells"], 6);
}

#[test]
fn composite_modulus_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"alphabet": {"modulus": 4}, "rule": {"type": "linear", "terms": [{"offset": [0,0], "coeff": 1}], "constant": 0}}"#,
    )
    .unwrap();
    let out = shiftlab(&["count", path.to_str().unwrap(), "--rect", "2,2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("modulus must be prime"), "{}", stderr(&out));
    assert!(stderr(&out).contains("/alphabet/modulus"), "{}", stderr(&out));
}

#[test]
fn unknown_builtin_lists_the_corpus() {
    let out = shiftlab(&["count", "--builtin", "nonsense", "--rect", "2,2"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("ledrappier"), "{}", stderr(&out));
}

#[test]
fn argument_errors_exit_one() {
    // Missing region selector.
    let out = shiftlab(&["count", "--builtin", "ledrappier"]);
    assert_eq!(code(&out), 1);
    // Unknown flag (a clap error).
    let out = shiftlab(&["count", "--builtin", "ledrappier", "--bogus"]);
    assert_eq!(code(&out), 1);
    // --help still exits 0.
    let out = shiftlab(&["--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn reports_are_deterministic_modulo_wall_clock() {
    let strip = |args: &[&str]| {
        let (mut doc, exit) = report(args);
        assert_eq!(exit, 0);
        doc.as_object_mut().unwrap().remove("wall_clock_ms");
        serde_json::to_string_pretty(&doc).unwrap()
    };
    let args = ["rays", "--builtin", "ledrappier"];
    assert_eq!(strip(&args), strip(&args));
    let args = ["entropy", "--builtin", "ledrappier", "--dir", "1,1"];
    assert_eq!(strip(&args), strip(&args));
}

#[test]
fn nivat_bound_verdicts() {
    let (doc, exit) = report(&["nivat", "--builtin", "ledrappier"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "bound-fails");
    assert_eq!(doc["result"]["count"], "8");
    assert_eq!(doc["result"]["bound"], "4");

    let (doc, exit) = report(&["nivat", "--builtin", "one-letter"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "bound-holds");
}

#[test]
fn product_config_counts_multiply() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prod.json");
    let out = shiftlab(&[
        "product",
        "ledrappier",
        "ledrappier",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let (doc, exit) = report(&["count", path.to_str().unwrap(), "--rect", "2,2"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["count"], "64");
}

#[test]
fn lightcone_levels_and_slopes() {
    let (doc, exit) = report(&["lightcone", "--builtin", "ledrappier-spacetime"]);
    assert_eq!(exit, 0);
    let levels = doc["result"]["levels"].as_array().unwrap();
    let at = |n: i64| {
        levels
            .iter()
            .find(|l| l["n"] == serde_json::json!(n))
            .unwrap()
            .clone()
    };
    assert_eq!(at(3)["lo"], -3);
    assert_eq!(at(3)["hi"], 0);
    assert_eq!(at(-3)["lo"], 0);
    assert_eq!(at(-3)["hi"], 3);
    assert_eq!(doc["result"]["alpha_plus"]["numer"], 0);
    assert_eq!(doc["result"]["alpha_minus"]["numer"], -1);
    assert_eq!(doc["result"]["alpha_minus"]["denom"], 1);
    assert_eq!(doc["result"]["alpha_plus_exact"], Value::Bool(true));
    assert_eq!(doc["result"]["alpha_minus_exact"], Value::Bool(true));
}

#[test]
fn normalize_round_trips_through_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("norm.json");
    let (doc, exit) = report(&[
        "normalize",
        "--builtin",
        "ledrappier-spacetime",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "normalized");
    // The emitted config parses and still has exact slopes 0 and -1.
    let (doc, exit) = report(&["lightcone", path.to_str().unwrap()]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["alpha_plus"]["numer"], 0);
    assert_eq!(doc["result"]["alpha_minus"]["numer"], -1);
}

#[test]
fn sphere_is_the_expected_hexagon() {
    let (doc, exit) = report(&[
        "sphere",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(1,0),(0,1)",
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["verified"], Value::Bool(true));
    let mut edges: Vec<(i64, i64)> = doc["result"]["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e[0].as_i64().unwrap(), e[1].as_i64().unwrap()))
        .collect();
    edges.sort();
    let mut expected = vec![(1, 0), (-1, 1), (0, -1), (-1, 0), (1, -1), (0, 1)];
    expected.sort();
    assert_eq!(edges, expected);
    let scale = doc["result"]["scale"].as_f64().unwrap();
    let target = 1.0 / std::f64::consts::LN_2;
    assert!((scale - target).abs() / target < 0.03, "{scale}");
}

#[test]
fn sphere_of_a_trivial_shift_reports_trivial_norm() {
    let out = shiftlab(&[
        "sphere",
        "--builtin",
        "one-letter",
        "--vertices",
        "(0,0),(1,0),(0,1)",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("entropy norm is trivial"));
}

#[test]
fn girth_check_is_consistent_along_the_diagonal() {
    let (doc, exit) = report(&[
        "girth-check",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(1,0),(0,1)",
        "--dir",
        "1,1",
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["status"], "consistent");
    let predicted = doc["result"]["predicted"].as_f64().unwrap();
    assert!((predicted - 2.0 * std::f64::consts::LN_2).abs() < 0.1);
}

#[test]
fn recode_counts_satisfy_the_window_union_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.json");
    let out = shiftlab(&[
        "recode",
        "--builtin",
        "ledrappier",
        "--window",
        "(0,0),(1,0)",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("recoded alphabet: 4 letters"));

    // count(recoded, [0,2)²) = count(source, [0,3)×[0,2)) = 2^(3+2-1).
    let (doc, exit) = report(&["count", path.to_str().unwrap(), "--rect", "2,2"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["count"], "16");
}

#[test]
fn scale_down_produces_a_verifying_unit_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.json");
    let (doc, exit) = report(&[
        "scale-down",
        "--builtin",
        "ledrappier",
        "--vertices",
        "(0,0),(2,0),(0,2)",
        "--scale",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit, 0);
    assert_eq!(
        doc["result"]["polygon"],
        serde_json::json!([[0, 0], [1, 0], [0, 1]])
    );

    let out = shiftlab(&[
        "polygon",
        path.to_str().unwrap(),
        "--vertices",
        "(0,0),(1,0),(0,1)",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("coding polygon: true"));
}

#[test]
fn polygon_from_rays_finds_the_unit_triangle() {
    let (doc, exit) = report(&["polygon-from-rays", "--builtin", "ledrappier"]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["scale"], 1);
    assert_eq!(
        doc["result"]["polygon"],
        serde_json::json!([[0, 0], [1, 0], [0, 1]])
    );
}

#[test]
fn budget_limits_are_honored() {
    let out = shiftlab_env(
        &["rays", "--builtin", "ledrappier", "--json"],
        "SHIFTLAB_BUDGET",
        "10",
    );
    assert_eq!(code(&out), 2);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["result"]["status"], "budget-exceeded");
    assert_eq!(doc["parameters"]["budget_limit"], 10);

    // The flag takes precedence over the environment.
    let out = shiftlab_env(
        &["rays", "--builtin", "ledrappier", "--budget", "10000000"],
        "SHIFTLAB_BUDGET",
        "10",
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = shiftlab(&["rays", "--builtin", "ledrappier", "--budget", "10"]);
    assert_eq!(code(&out), 2);

    let out = shiftlab_env(
        &["rays", "--builtin", "ledrappier"],
        "SHIFTLAB_BUDGET",
        "not-a-number",
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn spacetime_configs_feed_shift_commands() {
    // The induced shift of the XOR spacetime is the three-dot system.
    let (doc, exit) = report(&[
        "count",
        "--builtin",
        "ledrappier-spacetime",
        "--rect",
        "3,3",
    ]);
    assert_eq!(exit, 0);
    assert_eq!(doc["result"]["count"], "32");

    let out = shiftlab(&["lightcone", "--builtin", "ledrappier"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("spacetime"), "{}", stderr(&out));
}
