use std::collections::BTreeSet;
use std::fs;
use std::process::Command;

use parest::experiment::{run, write_outputs, ExperimentConfig, ExperimentKind};
use parest::Error;

fn parest() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parest"))
}

fn config_error(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(Error::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn defaults_fill_every_section() {
    let cfg = ExperimentConfig::parse("experiment = \"identity_suite\"").unwrap();
    assert_eq!(cfg.threads, 1);
    assert_eq!(cfg.mesh.dim, 1);
    assert_eq!(cfg.reference.space_refinement, 4);
    assert_eq!(cfg.flux_degree(), cfg.mesh.degree + 1);
}

#[test]
fn shipped_schema_parses_to_the_defaults() {
    let cfg = ExperimentConfig::parse(parest::experiment::config::SCHEMA).unwrap();
    let dflt = ExperimentConfig::parse("experiment = \"estimator_report\"").unwrap();
    assert_eq!(serde_json::to_value(&cfg).unwrap(), serde_json::to_value(&dflt).unwrap());
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut kinds = BTreeSet::new();
    for entry in fs::read_dir(dir).unwrap() {
        let cfg = ExperimentConfig::from_file(&entry.unwrap().path()).unwrap();
        kinds.insert(cfg.experiment.name());
    }
    assert_eq!(kinds.len(), ExperimentKind::ALL.len());
}

#[test]
fn parse_errors_name_the_location() {
    let msg = config_error("experiment = \"identity_suite\"\n[mesh]\nresolutoin = 4\n");
    assert!(msg.contains("line 3") && msg.contains("resolutoin"), "{msg}");
    let msg = config_error("experiment = \"nope\"");
    assert!(msg.contains("nope"), "{msg}");
}

#[test]
fn validation_errors_name_the_key() {
    let cases = [
        ("[mesh]\ndim = 3", "mesh.dim"),
        ("[mesh]\nresolution = 0", "mesh.resolution"),
        ("[time]\nsteps = 0", "time.steps"),
        ("[estimator]\nflux_degree = 1", "estimator.flux_degree"),
        ("[problem]\nkind = \"fourier_2d\"", "problem.kind"),
        ("[study]\norder_min = 2.0", "study.order_min"),
    ];
    for (body, key) in cases {
        let msg = config_error(&format!("experiment = \"identity_suite\"\n{body}"));
        assert!(msg.starts_with(key), "{body}: {msg}");
    }
    let msg = config_error("experiment = \"hypercircle_check\"\n[reference]\nspace_refinement = 2");
    assert!(msg.starts_with("reference"), "{msg}");
}

#[test]
fn manifest_lists_each_assertion_once() {
    let cfg = ExperimentConfig::parse("experiment = \"identity_suite\"\n[study]\nsamples = 3").unwrap();
    let out = run(&cfg).unwrap();
    let m = &out.manifest;
    let names: BTreeSet<_> = m.assertions.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names.len(), m.assertions.len());
    assert!(m.passed);
    assert_eq!(m.passed, m.assertions.iter().all(|a| a.passed));
    assert_eq!(m.outputs, vec!["estimators.csv".to_string()]);
    let t = &out.tables[0];
    assert_eq!(t.header, ["cell_id", "interval_index", "eta_J_sq", "eta_F_sq", "osc_sq"]);
    assert_eq!(t.rows.len(), cfg.mesh.resolution * cfg.time.steps);
}

#[test]
fn convergence_table_has_one_row_per_level() {
    let cfg = ExperimentConfig::parse(
        "experiment = \"convergence_study\"\n[mesh]\nresolution = 4\n[time]\nsteps = 4\n[study]\nlevels = 2\norder_min = 0.0\norder_max = 5.0",
    )
    .unwrap();
    let out = run(&cfg).unwrap();
    let t = &out.tables[0];
    assert_eq!(t.rows.len(), 2);
    for col in ["h", "tau", "error_X", "error_Y", "error_E", "eta_J", "eta_F", "effectivity_Y", "effectivity_E"] {
        assert!(t.column(col).is_some(), "{col}");
    }
    assert!(out.manifest.passed);
}

#[test]
fn outputs_are_written_without_leftovers() {
    let cfg = ExperimentConfig::parse("experiment = \"inefficiency_study\"").unwrap();
    let out = run(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&out, dir.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["inefficiency.csv", "manifest.json"]);
    assert_eq!(written.len(), 2);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "inefficiency_study");
    assert_eq!(manifest["config"]["problem"]["lambdas"].as_array().unwrap().len(), 7);
    assert!(manifest["tolerances"]["identity"].is_number());
}

#[test]
fn cli_lists_experiments_and_prints_schema() {
    let out = parest().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for k in ExperimentKind::ALL {
        assert!(text.contains(k.name()));
    }
    let out = parest().arg("schema").output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), parest::experiment::config::SCHEMA);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };

    let bad = write("bad.toml", "experiment = \"identity_suite\"\n[mesh]\ndim = 7\n");
    let status = parest().arg("run").arg(&bad).arg("--output").arg(&out_dir).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    assert!(!out_dir.exists(), "no output on a config error");

    let ok = write("ok.toml", "experiment = \"inefficiency_study\"\n");
    let status = parest().arg("run").arg(&ok).arg("--output").arg(&out_dir).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert!(out_dir.join("inefficiency.csv").exists());

    // Assertions that cannot hold: no window contains the observed orders.
    let fail = write(
        "fail.toml",
        "experiment = \"convergence_study\"\n[mesh]\nresolution = 4\n[time]\nsteps = 4\n[study]\nlevels = 2\norder_min = 3.0\norder_max = 4.0\n",
    );
    let fail_dir = dir.path().join("fail");
    let status = parest().arg("run").arg(&fail).arg("--output").arg(&fail_dir).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(fail_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], false);

    let status = parest()
        .arg("run")
        .arg(&ok)
        .arg("--output")
        .arg(&out_dir)
        .env("PAREST_THREADS", "zero")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn thread_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "experiment = \"identity_suite\"\n[study]\nsamples = 2\n").unwrap();
    let status = parest()
        .arg("run")
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path())
        .env("PAREST_THREADS", "3")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 3);
}
