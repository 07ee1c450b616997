use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use smms::identities::IDENTITY_IDS;
use smms::models::{ModelSpec, MODEL_NAMES};
use smms::weighted::FieldSpec;
use smms_cli::output::{csv, json, render, Format, CSV_HEADER};
use smms_cli::scenario::GridSpec;
use smms_cli::{run, Mode, Scenario};

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn cookbook() -> Vec<(String, Scenario)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let s = Scenario::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), s)
        })
        .collect()
}

fn load(name: &str) -> Scenario {
    Scenario::load(&scenario_dir().join(format!("{name}.toml"))).unwrap()
}

#[test]
fn every_identity_and_model_is_exercised() {
    let book = cookbook();
    let ids: BTreeSet<&str> = book.iter().flat_map(|(_, s)| s.identity_ids()).collect();
    let models: BTreeSet<&str> = book.iter().map(|(_, s)| s.model.name.as_str()).collect();
    for id in IDENTITY_IDS {
        assert!(ids.contains(id), "no scenario runs {id}");
    }
    for m in MODEL_NAMES {
        assert!(models.contains(m), "no scenario uses {m}");
    }
}

#[test]
fn scenario_names_match_file_names() {
    for (file, s) in cookbook() {
        assert_eq!(file, s.scenario);
    }
}

#[test]
fn every_shipped_scenario_passes() {
    for (file, s) in cookbook() {
        let r = run(&s, Mode::Run).unwrap();
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.pass).collect();
        assert!(r.pass, "{file}: {failed:#?}");
        assert!(!r.checks.is_empty(), "{file} runs nothing");
    }
}

#[test]
fn hemisphere_config_round_trips() {
    let s = load("hemisphere-area");
    let expected = Scenario {
        scenario: "hemisphere-area".into(),
        model: ModelSpec::named("hemisphere"),
        density: FieldSpec::kind("zero"),
        potential: Some(FieldSpec::linear(vec![1.0, 0.0, 0.0])),
        checks: smms_cli::scenario::ChecksSpec {
            identities: vec!["kernel-consequence".into(), "traceless-static".into()],
            adjoint_kernel: true,
            boundary: ["surface-gravity", "boundary-area", "weighted-divergence", "pohozaev-schoen", "gauss-reduction"]
                .map(String::from)
                .to_vec(),
            ..Default::default()
        },
        solver: None,
        grid: GridSpec {
            nodes: 5,
            quadrature: 32,
            boundary: 32,
        },
        tolerances: Default::default(),
        seed: 3,
    };
    assert_eq!(s, expected);
    let echoed = toml::to_string(&s).unwrap();
    assert_eq!(Scenario::parse(&echoed).unwrap(), s);
}

#[test]
fn json_report_schema() {
    let r = run(&load("gaussian-example"), Mode::Run).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json(&r)).unwrap();
    for key in ["schema_version", "tool_version", "scenario", "checks", "solver", "wall_ms", "pass"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["schema_version"], 1);
    for key in ["eigenvalues", "kernel_dim", "min_singular_value"] {
        assert!(v["solver"].get(key).is_some(), "missing solver.{key}");
    }
    for key in ["identity_id", "sup_residual", "mean_residual", "convergence_order", "masked_fraction", "pass"] {
        assert!(v["checks"][0].get(key).is_some(), "missing checks[].{key}");
    }
    assert_eq!(v["solver"]["kernel_dim"], 2);
}

#[test]
fn csv_has_one_row_per_check() {
    let r = run(&load("weighted-sphere-example"), Mode::Verify).unwrap();
    let text = csv(&r);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len() - 1, r.checks.len());
    for (line, c) in lines[1..].iter().zip(&r.checks) {
        let sup: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(sup, c.sup_residual);
    }
}

#[test]
fn empty_scenario_reports_zero_checks() {
    let s = Scenario::parse("scenario = \"empty\"\nmodel = \"interval\"\n").unwrap();
    let r = run(&s, Mode::Run).unwrap();
    assert!(r.pass && r.checks.is_empty());
    assert_eq!(csv(&r).lines().count(), 1);
    assert!(render(&r, Format::Text).ends_with("PASS\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for name in ["weighted-sphere-example", "sphere-duality", "hemisphere-area"] {
        let s = load(name);
        let a = json(&run(&s, Mode::Run).unwrap());
        let b = json(&run(&s, Mode::Run).unwrap());
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn seed_changes_random_draws() {
    let mut s = load("sphere-duality");
    let a = run(&s, Mode::Verify).unwrap();
    s.seed += 1;
    let b = run(&s, Mode::Verify).unwrap();
    assert_ne!(a.checks[0].sup_residual, b.checks[0].sup_residual);
}

#[test]
fn area_estimate_fails_on_static_hemisphere() {
    let s = Scenario::parse(
        "scenario = \"estimate\"\nmodel = \"hemisphere\"\npotential = { kind = \"linear\", v = [1.0, 0.0, 0.0] }\n[checks]\nboundary = [\"area-estimate\"]\n",
    )
    .unwrap();
    let r = run(&s, Mode::Verify).unwrap();
    let c = &r.checks[0];
    assert!(!c.pass);
    assert!((c.diagnostics["lhs"] - 4.0 * std::f64::consts::PI).abs() < 1e-6, "{c:?}");
    assert!(c.diagnostics["rhs"].abs() < 1e-6, "{c:?}");
    assert_eq!(r.exit_code(), 1);
}

fn smms(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_smms")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = std::env::temp_dir().join(format!("smms-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let pass = scenario_dir().join("hemisphere-static-probe.toml");
    assert_eq!(smms(&["run", pass.to_str().unwrap()]).status.code(), Some(0));

    let tight = dir.join("tight.toml");
    std::fs::write(
        &tight,
        "scenario = \"tight\"\nmodel = \"circle\"\n[solver]\nbasis = \"fourier-circle\"\nsize = 4\neigen = 3\noracle_cells = 64\n[tolerances]\noracle = 1e-12\n",
    )
    .unwrap();
    assert_eq!(smms(&["solve", tight.to_str().unwrap()]).status.code(), Some(1));

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "scenario = \"bad\"\nmodel = \"circle\"\n[checks]\nidentities = [\"bianchi\"]\n").unwrap();
    let out = smms(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("weighted-bianchi"));

    let typo = dir.join("typo.toml");
    std::fs::write(&typo, "scenario = \"typo\"\nmodel = \"circle\"\n[tolerances]\nidentiy = 1e-3\n").unwrap();
    assert_eq!(smms(&["verify", typo.to_str().unwrap()]).status.code(), Some(2));

    let numeric = dir.join("numeric.toml");
    std::fs::write(
        &numeric,
        "scenario = \"numeric\"\nmodel = \"hemisphere\"\npotential = { kind = \"constant\", value = 1.0 }\n[checks]\nboundary = [\"surface-gravity\"]\n",
    )
    .unwrap();
    assert_eq!(smms(&["verify", numeric.to_str().unwrap()]).status.code(), Some(3));

    assert_eq!(smms(&["verify", dir.join("missing.toml").to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn cli_flags_and_outputs() {
    let dir = std::env::temp_dir().join(format!("smms-cli-flags-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = scenario_dir().join("stereo-sphere.toml");
    let out = dir.join("report.csv");
    let status = smms(&[
        "verify",
        path.to_str().unwrap(),
        "--resolution",
        "3",
        "--tolerance",
        "1e-7",
        "--seed",
        "4",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(CSV_HEADER));

    let a = smms(&["verify", path.to_str().unwrap(), "--resolution", "3"]).stdout;
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["scenario"]["grid"]["nodes"], 3);
    assert_eq!(v["checks"][0]["grid_size"], 9);
    assert!(v["wall_ms"].is_null());
    let b = smms(&["verify", "--scenario", path.to_str().unwrap(), "--resolution", "3"]).stdout;
    assert_eq!(a, b);

    let timed = smms(&["verify", path.to_str().unwrap(), "--resolution", "3", "--timing"]).stdout;
    let v: serde_json::Value = serde_json::from_slice(&timed).unwrap();
    assert!(v["wall_ms"].is_u64());

    let list = String::from_utf8(smms(&["list"]).stdout).unwrap();
    for name in IDENTITY_IDS.iter().chain(&MODEL_NAMES) {
        assert!(list.contains(name), "{name}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
