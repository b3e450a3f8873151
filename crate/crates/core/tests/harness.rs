use std::path::{Path, PathBuf};

use fogcfg_core::harness::{self, summarize, ExperimentConfig, Manifest, Preset, RunStatus, ScenarioBase};
use fogcfg_core::metrics::TRACE_SCHEMA;
use fogcfg_core::scenario::ScenarioSnapshot;
use fogcfg_core::{Error, Scenario, ScenarioConfig};

fn desk(preset: Preset, horizon: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_preset(preset);
    cfg.scenario_base = ScenarioBase::Desk;
    cfg.scenario = ScenarioConfig::desk();
    cfg.seeds = vec![2];
    cfg.controller.horizon = horizon;
    cfg
}

#[test]
fn manifest_lists_every_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk(Preset::RuntimeComparison, 10);
    let outcome = harness::run(&cfg, dir.path()).unwrap();
    let manifest = Manifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest, outcome.manifest);
    assert_eq!(manifest.status, RunStatus::Complete);
    assert_eq!(manifest.config_hash, cfg.hash());

    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    let listed: Vec<String> = manifest.files.iter().map(|e| e.path.clone()).collect();
    assert_eq!(on_disk, listed);
    // one trace and one summary per strategy, plus config and runs table
    assert_eq!(listed.len(), 2 * 4 + 2);
    assert!(manifest.files.iter().all(|e| e.config_hash == cfg.hash()));
    assert_eq!(outcome.summaries.len(), 4);
}

#[test]
fn failed_run_is_marked_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = desk(Preset::RuntimeComparison, 5);
    cfg.scenario_file = Some(dir.path().join("missing.json"));
    let err = harness::run(&cfg, dir.path());
    assert!(err.is_err());
    let manifest = Manifest::load(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.status, RunStatus::Failed);
    assert!(manifest.error.unwrap().contains("missing.json"));
    assert!(manifest.files.iter().any(|e| e.path == "config.toml"));
}

#[test]
fn saved_config_reproduces_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = desk(Preset::VSweep, 5);
    cfg.sweep.v = vec![10.0, 1e3];
    harness::run(&cfg, dir.path()).unwrap();
    let reloaded = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(reloaded.hash(), cfg.hash());
    assert_eq!(harness::plan(&reloaded).len(), 2);
}

#[test]
fn snapshot_pins_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = Scenario::generate(&ScenarioConfig::desk(), 9).unwrap();
    let path = dir.path().join("scenario.json");
    ScenarioSnapshot::new(scenario.clone(), Some(9)).save(&path).unwrap();
    let mut cfg = desk(Preset::RuntimeComparison, 3);
    cfg.scenario_file = Some(path);
    cfg.seeds = vec![1, 2];
    for seed in [1, 2] {
        assert_eq!(harness::scenario_for(&cfg, seed).unwrap(), scenario);
    }
}

#[test]
fn convergence_preset_writes_sampler_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = desk(Preset::Convergence, 1);
    cfg.seeds = vec![1];
    let outcome = harness::run(&cfg, dir.path()).unwrap();
    assert_eq!(outcome.convergence.len(), 2);
    let traces: Vec<&str> = outcome
        .manifest
        .files
        .iter()
        .filter(|e| e.kind == "sampler_trace")
        .map(|e| e.path.as_str())
        .collect();
    assert_eq!(traces.len(), 2);
    for t in traces {
        let text = std::fs::read_to_string(dir.path().join(t)).unwrap();
        assert!(text.starts_with("# fogcfg-sampler-trace/1"));
        assert!(text.lines().nth(1).unwrap().starts_with("round,sweep,sigma,objective,active"));
    }
}

fn traces(dir: &Path) -> Vec<PathBuf> {
    let m = Manifest::load(&dir.join("manifest.json")).unwrap();
    m.files
        .iter()
        .filter(|e| e.kind == "trace")
        .map(|e| dir.join(&e.path))
        .collect()
}

#[test]
fn summarize_reproduces_run_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk(Preset::DemandAllocation, 12);
    let outcome = harness::run(&cfg, dir.path()).unwrap();
    let paths = traces(dir.path());
    let cmp = summarize::load(&paths).unwrap();
    assert_eq!(cmp.summaries.len(), outcome.summaries.len());
    for s in &cmp.summaries {
        let original = outcome
            .summaries
            .iter()
            .find(|r| r.summary.strategy == s.strategy)
            .unwrap();
        assert_eq!(&original.summary, s);
    }
    let curves = cmp.curves_csv();
    assert_eq!(curves.lines().count(), 13);
    assert!(curves.lines().next().unwrap().contains(":deficit_wh"));
    let out = dir.path().join("cmp");
    cmp.write(&out).unwrap();
    assert!(out.join("curves.csv").exists() && out.join("summary.csv").exists());
}

#[test]
fn summarize_pads_shorter_traces() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut short = desk(Preset::VSweep, 4);
    short.sweep.v = vec![100.0];
    let mut long = short.clone();
    long.controller.horizon = 6;
    harness::run(&short, a.path()).unwrap();
    harness::run(&long, b.path()).unwrap();
    let mut paths = traces(a.path());
    paths.extend(traces(b.path()));
    let cmp = summarize::load(&paths).unwrap();
    assert_eq!(cmp.labels[1], format!("{}#2", cmp.labels[0]));
    let csv = cmp.curves_csv();
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with("5,,,,,"));
}

#[test]
fn summarize_refuses_mixed_or_unknown_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = desk(Preset::VSweep, 3);
    harness::run(&cfg, dir.path()).unwrap();
    let good = traces(dir.path()).remove(0);
    let text = std::fs::read_to_string(&good).unwrap();
    let old = dir.path().join("old.csv");
    std::fs::write(&old, text.replacen(TRACE_SCHEMA, "fogcfg-trace/0", 1)).unwrap();

    match summarize::load(&[good, old.clone()]) {
        Err(Error::Schema(msg)) => assert!(msg.contains("mix")),
        other => panic!("expected schema error, got {other:?}"),
    }
    match summarize::load(&[old]) {
        Err(Error::Schema(msg)) => assert!(msg.contains("not supported")),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn config_errors_name_the_fields() {
    let text = "preset = \"v_sweep\"\nseeds = []\n[controller]\nv = -1.0\n";
    match ExperimentConfig::from_toml_str(text, Path::new("bad.toml")) {
        Err(Error::Config(fields)) => {
            let joined = fields.join("\n");
            assert!(joined.contains("seeds"), "{joined}");
            assert!(joined.contains("controller.v"), "{joined}");
        }
        other => panic!("expected config error, got {other:?}"),
    }
    assert!(matches!(
        ExperimentConfig::from_toml_str("no_such_key = 1\n", Path::new("bad.toml")),
        Err(Error::Parse { .. })
    ));
}
