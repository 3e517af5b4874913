use std::process::Command;

use objectify_cli::scenario::{sample_times, ScenarioFile};
use objectify_cli::{bundled, run, CliError, LoadOptions, RunOptions, RunReport, Scenario, BUNDLED};

fn load(name: &str) -> Scenario {
    Scenario::from_json(bundled(name).unwrap().json, name, &LoadOptions::default()).unwrap()
}

fn run_default(sc: &Scenario) -> RunReport {
    run(sc, &RunOptions::default()).unwrap()
}

fn file(name: &str) -> ScenarioFile {
    serde_json::from_str(bundled(name).unwrap().json).unwrap()
}

fn violations(text: &str, opts: &LoadOptions) -> Vec<String> {
    match Scenario::from_json(text, "test", opts) {
        Err(CliError::Validation { violations, .. }) => violations,
        other => panic!("expected a validation failure, got {other:?}"),
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_objectify"))
}

#[test]
fn bundled_scenarios_load_and_run() {
    for b in BUNDLED {
        let sc = Scenario::from_json(b.json, b.name, &LoadOptions::default()).unwrap();
        assert_eq!(sc.name, b.name);
        let report = run_default(&sc);
        assert!(report.energetics.first_law_residual.abs() < 1e-10, "{}", b.name);
    }
}

#[test]
fn povm_exceeding_identity_reports_completeness_magnitude() {
    let mut f = file("identity_coupling");
    let point_six = objectify_cli::scenario::Scalar::Real(0.6);
    let zero = objectify_cli::scenario::Scalar::Real(0.0);
    let effect = vec![vec![point_six, zero], vec![zero, point_six]];
    f.z.as_mut().unwrap().effects = vec![effect.clone(), effect];
    let v = violations(&serde_json::to_string(&f).unwrap(), &LoadOptions::default());
    assert_eq!(v.len(), 1, "{v:?}");
    assert!(v[0].starts_with("z:") && v[0].contains("completeness") && v[0].contains("2.000e-1"), "{}", v[0]);
}

#[test]
fn every_violation_is_listed() {
    let mut f = file("identity_coupling");
    f.rho[0][0] = objectify_cli::scenario::Scalar::Real(1.7);
    f.h_s[0][1] = objectify_cli::scenario::Scalar::Complex([0.5, 0.25]);
    f.alpha = Some(vec![0.5, 1.0]);
    f.g = Some(vec![1.0, 1.0]);
    let v = violations(&serde_json::to_string(&f).unwrap(), &LoadOptions::default());
    for field in ["rho:", "h_s:", "alpha:", "g:"] {
        assert!(v.iter().any(|m| m.starts_with(field)), "{field} missing from {v:?}");
    }
    let rho = v.iter().find(|m| m.starts_with("rho:") && m.contains("unit trace")).unwrap();
    assert!(rho.contains("1.000e0"), "{rho}");
}

#[test]
fn shape_and_pointer_errors_name_the_field() {
    let mut f = file("identity_coupling");
    f.xi = Some(vec![vec![objectify_cli::scenario::Scalar::Real(1.0)]]);
    let v = violations(&serde_json::to_string(&f).unwrap(), &LoadOptions::default());
    assert!(v.iter().any(|m| m.starts_with("xi: shape")), "{v:?}");

    // Lüders instrument of an unsharp pointer is not repeatable.
    let mut f = file("identity_coupling");
    let z = f.z.as_mut().unwrap();
    z.effects[0][0][0] = objectify_cli::scenario::Scalar::Real(0.6);
    z.effects[1][0][0] = objectify_cli::scenario::Scalar::Real(0.4);
    let v = violations(&serde_json::to_string(&f).unwrap(), &LoadOptions::default());
    assert!(v.iter().any(|m| m.starts_with("j:") && m.contains("not repeatable")), "{v:?}");
}

#[test]
fn tolerance_is_configurable() {
    let mut f = file("identity_coupling");
    f.rho[0][0] = objectify_cli::scenario::Scalar::Real(0.7 + 1e-7);
    let text = serde_json::to_string(&f).unwrap();
    assert!(Scenario::from_json(&text, "t", &LoadOptions::default()).is_err());
    let loose = LoadOptions {
        tol: 1e-6,
        ..LoadOptions::default()
    };
    assert!(Scenario::from_json(&text, "t", &loose).is_ok());
}

#[test]
fn malformed_json_is_a_parse_error() {
    let err = Scenario::from_json("{\"system_dim\": 2", "t", &LoadOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::Parse { .. }));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn synthesized_coupling_is_unitary() {
    for name in ["luders_qubit", "unsharp_qubit"] {
        assert!(load(name).scheme.u().unitarity_defect() <= 1e-10);
    }
}

#[test]
fn qubit_case_study_values() {
    let report = run_default(&load("luders_qubit"));
    let e = &report.energetics;
    assert!((e.work - 0.5).abs() < 1e-9);
    assert!((e.outcomes[0].heat + 1.0).abs() < 1e-9 && (e.outcomes[1].heat - 1.0).abs() < 1e-9);
    assert!(e.mean_heat.abs() < 1e-9);
    for v in &report.variance {
        assert!((v.var_q - 1.0).abs() < 1e-9 && v.delta_v_qu.abs() < 1e-9);
    }
    let cond = report.conditional.as_ref().unwrap();
    assert!((cond.mean_work - cond.work).abs() < 1e-10);
    assert!(report.fixed_point.holds && report.yanase.holds);
}

#[test]
fn trivial_coupling_does_no_work_and_releases_no_heat() {
    let report = run_default(&load("identity_coupling"));
    assert!(report.energetics.work.abs() < 1e-12);
    assert!(report.energetics.outcomes.iter().all(|o| o.heat.abs() < 1e-12));
}

#[test]
fn depolarising_counterexample() {
    let report = run_default(&load("depolarising_counterexample"));
    assert!(!report.fixed_point.holds);
    let half = objectify::ComplexMatrix::identity(2).scale_real(0.5);
    assert!(report.fixed_point.image.distance(&half) < 1e-10);
    assert!((report.energetics.mean_heat - 0.5).abs() < 1e-10);
    assert!(report.notes.iter().any(|n| n.contains("fixed point")));
}

#[test]
fn yanase_violation_is_reported() {
    let report = run_default(&load("yanase_violation"));
    assert!(!report.yanase.holds);
    assert!(report.conditional.is_none());
    assert!(report.variance.iter().all(|v| v.delta_v_qu > 1e-3));
    assert!(report.info.iter().all(|i| i.report.entropy_gap < -1e-3));
}

#[test]
fn reports_round_trip_and_are_deterministic() {
    for b in BUNDLED {
        let sc = Scenario::from_json(b.json, b.name, &LoadOptions::default()).unwrap();
        let report = run_default(&sc);
        let text = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report, "{}", b.name);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(serde_json::to_string(&run_default(&sc)).unwrap(), text);
    }
}

#[test]
fn timing_is_opt_in() {
    let sc = load("luders_qubit");
    assert!(run_default(&sc).timing.is_none());
    let timed = run(&sc, &RunOptions { alphas: vec![], timing: true }).unwrap();
    assert!(timed.timing.unwrap().seconds >= 0.0);
}

#[test]
fn alpha_override_replaces_the_scenario_list() {
    let report = run(&load("luders_qubit"), &RunOptions { alphas: vec![0.1, 0.9], timing: false }).unwrap();
    let alphas: Vec<f64> = report.variance.iter().map(|v| v.alpha).collect();
    assert_eq!(alphas, [0.1, 0.9]);
    assert_eq!(report.info.len(), 2);
}

#[test]
fn missing_times_come_from_the_seed() {
    let mut f = file("luders_qubit");
    f.g = None;
    f.seed = Some(11);
    let sc = Scenario::from_file(&f, "t", &LoadOptions::default()).unwrap();
    assert!(sc.times_sampled);
    assert_eq!(sc.times, sample_times(11, 2));
    f.seed = None;
    let opts = LoadOptions {
        default_seed: 11,
        ..LoadOptions::default()
    };
    assert_eq!(Scenario::from_file(&f, "t", &opts).unwrap().times, sc.times);
}

#[test]
fn binary_commands_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("qubit.json");

    let out = bin().args(["example", "luders_qubit"]).output().unwrap();
    assert!(out.status.success());
    std::fs::write(&scenario, &out.stdout).unwrap();

    let out = bin().arg("validate").arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let report = dir.path().join("report.json");
    let out = bin().arg("run").arg(&scenario).args(["--alpha", "0.5", "--out"]).arg(&report).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: RunReport = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert!((parsed.energetics.work - 0.5).abs() < 1e-9);

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, String::from_utf8(out.stdout).unwrap() + "{").unwrap();
    let out = bin().arg("validate").arg(&broken).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().arg("run").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin().args(["example", "no_such_scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn suite_output_is_byte_identical() {
    let args = ["suite", "--seed", "3", "--dims", "2,3", "--schemes", "12", "--block-states", "6"];
    let first = bin().args(args).output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let second = bin().args(args).args(["--threads", "2"]).output().unwrap();
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("classicality_without_yanase") && text.contains("fired as expected"));
}
