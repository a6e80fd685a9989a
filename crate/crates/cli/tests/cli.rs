use ldplab_cli::report::{Manifest, Summary};
use ldplab_core::io::CsvTable;
use ldplab_core::ldp::richardson;
use ldplab_core::stats::fit_slope;
use std::path::{Path, PathBuf};
use std::process::Command;

fn ldplab(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ldplab"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(experiment: &str, config: &Path, out: &Path) -> i32 {
    ldplab(&[
        experiment,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn summary(out: &Path) -> Summary {
    serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn manifest(out: &Path) -> Manifest {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn table(out: &Path, name: &str) -> CsvTable {
    CsvTable::read(out.join(name)).unwrap()
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"experiment":"basis_check"}"#,
        r#"{"experiment":"basis_check","seed":1,"extra":true}"#,
        r#"{"experiment":"kato_sweep","seed":1,"epsilons":[0.1]}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), text);
        assert_eq!(
            ldplab(&["validate", "--config", cfg.to_str().unwrap()]),
            2,
            "{text}"
        );
        let out = dir.path().join(format!("out{i}"));
        assert_eq!(run("basis_check", &cfg, &out), 2, "{text}");
        assert!(!out.exists(), "validation must abort before writing");
    }
    assert_eq!(ldplab(&["validate", "--config", "/nonexistent.json"]), 2);
}

#[test]
fn command_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"basis_check","seed":1}"#,
    );
    assert_eq!(ldplab(&["validate", "--config", cfg.to_str().unwrap()]), 0);
    assert_eq!(run("laplace", &cfg, &dir.path().join("o")), 2);
}

#[test]
fn basis_check_flags_are_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"basis_check","seed":1,"noise":{"k":8}}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(run("basis_check", &cfg, &out), 0);
    let s = summary(&out);
    assert!(s.pass);
    let t = table(&out, "basis.csv");
    assert_eq!(t.rows.len(), 8);
    for c in &s.checks {
        let col = c.source.rsplit(':').next().unwrap();
        let max = t.column(col).unwrap().into_iter().fold(0.0, f64::max);
        assert_eq!(max, c.value, "{}", c.name);
        assert_eq!(c.window.contains(max), c.pass);
    }
    let m = manifest(&out);
    assert_eq!(m.status, "pass");
    assert_eq!(m.seed, 1);
    assert_eq!(m.files.len(), 2);
    for f in &m.files {
        let bytes = std::fs::read(out.join(&f.name)).unwrap();
        assert_eq!(ldplab_cli::report::sha256_hex(&bytes), f.sha256);
    }
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"inviscid_sweep","seed":3,"model":{"horizon":0.1,"n_steps":64},
            "noise":{"k":8},"initial":"zero","n_samples":200}"#,
    );
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    assert_eq!(
        run("inviscid_sweep", &cfg, &a),
        run("inviscid_sweep", &cfg, &b)
    );
    for f in ["inviscid.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
    assert_eq!(manifest(&a).config_sha256, manifest(&b).config_sha256);

    ldplab(&[
        "inviscid_sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_eq!(manifest(&c).seed, 4);
    assert_ne!(manifest(&c).config_sha256, manifest(&a).config_sha256);
    assert_ne!(
        std::fs::read(a.join("inviscid.csv")).unwrap(),
        std::fs::read(c.join("inviscid.csv")).unwrap()
    );

    let t = table(&a, "inviscid.csv");
    assert_eq!(t.rows.len(), 4);
    let s = summary(&a);
    let slope = fit_slope(
        &t.column("epsilon").unwrap(),
        &t.column("mean_sup_sq_error").unwrap(),
    )
    .unwrap()
    .slope;
    let check = s.checks.iter().find(|c| c.name == "noise_slope").unwrap();
    assert_eq!(check.value, slope);
    assert_eq!(check.pass, check.window.contains(slope));
}

#[test]
fn rare_event_summary_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"rare_event","seed":21,"model":{"n_steps":1},
            "noise":{"k":1,"amplitudes":[1.0]},"initial":"zero",
            "epsilons":[0.04,0.02,0.01,0.005],"n_samples":2000}"#,
    );
    let out = dir.path().join("o");
    let code = run("rare_event", &cfg, &out);
    let s = summary(&out);
    assert_eq!(code, if s.pass { 0 } else { 1 });
    let t = table(&out, "rare_event.csv");
    let eps = t.column("epsilon").unwrap();
    let v = t.column("neg_eps_log_p").unwrap();
    let n = eps.len();
    let extrapolated = richardson(eps[n - 2], v[n - 2], eps[n - 1], v[n - 1]);
    let c = s
        .checks
        .iter()
        .find(|c| c.name == "richardson_vs_rate")
        .unwrap();
    assert_eq!(c.value, extrapolated);
    let oracle = table(&out, "rare_event_oracle.csv")
        .column("exact_neg_eps_log_p")
        .unwrap();
    let c = s
        .checks
        .iter()
        .find(|c| c.name == "smallest_eps_vs_exact")
        .unwrap();
    assert_eq!(c.value, v[n - 1]);
    assert!(c.window.contains(v[n - 1]) == c.pass);
    assert!((oracle[n - 1] - 0.14558).abs() < 1e-4);
}

#[test]
fn failed_window_exits_with_1_and_still_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"laplace","seed":31,"model":{"epsilon":0.02,"n_steps":1},
            "noise":{"k":1,"amplitudes":[1.0]},"n_samples":20000}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(run("laplace", &cfg, &out), 1);
    let m = manifest(&out);
    assert_eq!(m.status, "fail");
    let t = table(&out, "laplace.csv");
    let value = t.column("value").unwrap()[0];
    let exact = t.column("exact_finite_eps").unwrap()[0];
    let se = t.column("std_error").unwrap()[0];
    assert!((value - exact).abs() < 4.0 * se, "{value} vs {exact}");
}
