use std::fs;
use std::path::Path;

use sdde_chart::cli::{main_with_args, EXIT_CHECK_FAILED, EXIT_CONFIG_INVALID, EXIT_IO, EXIT_OK};
use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["sdde-chart".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    main_with_args(argv)
}

fn report(out: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap()
}

#[test]
fn prop4_with_sine_reports_missing_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["scenario", "prop4"]), EXIT_OK);
    let r = report(dir.path(), "scenario-prop4");
    assert_eq!(r["metrics"]["hypothesis"], "hypothesis (7) not satisfied");
    assert!(dir.path().join("prop4.csv").exists());
}

#[test]
fn prop4_with_square_grows_linearly() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["scenario", "prop4", "--set", "f.preset=\"square\""]), EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("prop4.csv")).unwrap();
    assert!(csv.lines().nth(3).unwrap().starts_with("3,6.0,6.0"), "{csv}");
}

#[test]
fn missing_delta_parameter_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[delay]\npreset = \"integral\"\n[delay.delta]\nkind = \"scaled-logistic\"\nshift = 0.0\n[delay.v]\nkind = \"log-ramp\"\nscale = 1.0\n",
    )
    .unwrap();
    let code = run(dir.path(), &["find-point", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG_INVALID);
    let err = sdde_chart::cli::load_config(&fs::read_to_string(&cfg).unwrap(), &[]).unwrap_err();
    assert!(err.to_string().contains("delay.delta.rate"), "{err}");
}

#[test]
fn invalid_values_and_unknown_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["find-point", "--set", "grid.nodes=4"]), EXIT_CONFIG_INVALID);
    assert_eq!(run(dir.path(), &["find-point", "--set", "tolerances.fd_rel=0"]), EXIT_CONFIG_INVALID);
    assert_eq!(run(dir.path(), &["find-point", "--set", "nonsense=1"]), EXIT_CONFIG_INVALID);
}

#[test]
fn unreadable_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(dir.path(), &["chart", "--input", missing.to_str().unwrap()]), EXIT_IO);
    assert_eq!(run(dir.path(), &["find-point", "--config", missing.to_str().unwrap()]), EXIT_IO);
}

#[test]
fn reports_are_byte_identical_for_identical_configs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["verify-transversal", "--seed", "5", "--set", "counts.transversal=100"]), EXIT_OK);
    let first = fs::read(dir.path().join("verify-transversal.json")).unwrap();
    let table = fs::read(dir.path().join("transversal.csv")).unwrap();
    assert_eq!(run(dir.path(), &["verify-transversal", "--seed", "5", "--set", "counts.transversal=100"]), EXIT_OK);
    assert_eq!(fs::read(dir.path().join("verify-transversal.json")).unwrap(), first);
    assert_eq!(fs::read(dir.path().join("transversal.csv")).unwrap(), table);
    assert_eq!(report(dir.path(), "verify-transversal")["seed"], 5);
}

#[test]
fn chart_files_feed_the_inverse() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["chart", "--set", "seed=3"]), EXIT_OK);
    let psi = dir.path().join("psi.json");
    let phi = fs::read_to_string(dir.path().join("phi.json")).unwrap();
    assert_eq!(run(dir.path(), &["invert-chart", "--input", psi.to_str().unwrap()]), EXIT_OK);
    let back: sdde_chart::IntervalFunction = serde_json::from_str(&fs::read_to_string(dir.path().join("phi.json")).unwrap()).unwrap();
    let orig: sdde_chart::IntervalFunction = serde_json::from_str(&phi).unwrap();
    assert!(back.distance_c1(&orig).unwrap() <= 1e-8);
    let log = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(log.starts_with("k,r,step"));
}

#[test]
fn roundtrip_find_point_and_integrate_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["roundtrip", "--seed", "9"]), EXIT_OK);
    assert_eq!(run(dir.path(), &["find-point", "--set", "f.preset=\"constant\"", "--set", "f.value=0.3"]), EXIT_OK);
    assert_eq!(run(dir.path(), &["integrate", "--set", "integrate.t_end=0.5"]), EXIT_OK);
    assert!(dir.path().join("trajectory.csv").exists());
    assert!(dir.path().join("bisection.csv").exists());
}

#[test]
fn prop5_and_prop6_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["scenario", "prop5"]), EXIT_OK);
    assert_eq!(run(dir.path(), &["scenario", "prop6"]), EXIT_OK);
    assert!(report(dir.path(), "scenario-prop6")["metrics"]["gap"].as_f64().unwrap() > 1e-12);
}

#[test]
fn numerical_errors_are_reported_as_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let steep = sdde_chart::IntervalFunction::fit(1.0, Default::default(), |t| 2.0 * t, |_| 2.0).unwrap();
    let input = dir.path().join("steep.json");
    fs::write(&input, serde_json::to_string(&steep).unwrap()).unwrap();
    assert_eq!(run(dir.path(), &["chart", "--input", input.to_str().unwrap()]), EXIT_CHECK_FAILED);
    let r = report(dir.path(), "chart");
    assert_eq!(r["passed"], false);
    assert!(r["error"].as_str().unwrap().contains("U_b"));
}

#[test]
fn selftest_lists_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(
        dir.path(),
        &[
            "selftest",
            "--set",
            "counts = { transversal = 50, diffeo = 50, contraction = 50, roundtrip = 20, perturbations = 4, derivative = 10 }",
        ],
    );
    let r = report(dir.path(), "selftest");
    let names: Vec<&str> = r["suites"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        [
            "transversal",
            "diffeomorphism",
            "contraction",
            "roundtrip",
            "manifold-chart",
            "derivative-oracles",
            "scenarios",
            "integrator"
        ]
    );
    let all_passed = r["passed"].as_bool().unwrap();
    assert_eq!(code, if all_passed { EXIT_OK } else { EXIT_CHECK_FAILED });
}
