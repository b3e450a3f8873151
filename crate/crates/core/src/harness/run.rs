//! Preset execution and on-disk artifacts.
//!
//! A run directory holds `config.toml` (the resolved config), one trace CSV
//! and one summary JSON per simulated run, a `runs.csv` table of terminal
//! summaries, and `manifest.json`. The convergence preset writes sampler
//! traces instead of slot traces. The manifest is rewritten after every run
//! with status `partial` and becomes `complete` only after the last one, so
//! an interrupted directory is recognizable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Preset, Strategy};
use crate::baselines::{baseline_policy, BaselineKind};
use crate::error::{Error, Result};
use crate::lyapunov::{bound_report, simulate, Afc, BoundReport, ControllerConfig, SlotPolicy};
use crate::metrics::{MetricsTrace, Summary, TRACE_SCHEMA};
use crate::model::SlotProblem;
use crate::rng::{self, Domain};
use crate::scenario::{Scenario, ScenarioSnapshot, SNAPSHOT_SCHEMA};
use crate::solver::{Cpgs, P2Solver, SequentialGibbs, SolveStats, TraceRow};

pub const MANIFEST_SCHEMA: &str = "fogcfg-manifest/1";
pub const SUMMARY_SCHEMA: &str = "fogcfg-summary/1";
pub const SAMPLER_TRACE_SCHEMA: &str = "fogcfg-sampler-trace/1";

/// Columns of `runs.csv`.
pub const RUNS_COLUMNS: [&str; 11] = [
    "strategy",
    "seed",
    "v",
    "capacity",
    "slots",
    "time_avg_delay_s",
    "time_avg_deficit_wh",
    "mean_node_deficit_wh",
    "total_budget_wh",
    "fog_share",
    "trace",
];

/// One simulated run of a preset grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub strategy: Strategy,
    pub seed: u64,
    pub v: f64,
    pub capacity: usize,
}

impl RunSpec {
    pub fn stem(&self) -> String {
        format!(
            "{}_v{}_c{}_s{}",
            self.strategy.name(),
            self.v,
            self.capacity,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub config_hash: String,
    pub run: RunSpec,
    pub summary: Summary,
    /// `½ Σ (E^max − Q)²`, Wh².
    pub b_wh2: f64,
    pub delay_bound_term: f64,
    /// Present when the config supplies `bound.epsilon` and
    /// `bound.reference_delay_s`.
    pub bound: Option<BoundReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Partial,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: String,
    pub kind: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub capacity: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub tool_version: String,
    pub config_version: u32,
    pub config_hash: String,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub scenario_schema: String,
    pub trace_schema: String,
    pub status: RunStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::Schema(format!(
                "{}: manifest schema {:?}, expected {MANIFEST_SCHEMA:?}",
                path.display(),
                m.schema
            )));
        }
        Ok(m)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("manifest.json"), &(serde_json::to_string_pretty(self)? + "\n"))
    }

    fn add(&mut self, entry: ManifestEntry) {
        self.files.retain(|e| e.path != entry.path);
        self.files.push(entry);
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
    }
}

/// What `run` produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub summaries: Vec<RunSummary>,
    pub convergence: Vec<ConvergenceSummary>,
}

/// Outcome of one sampler on one scenario for the convergence preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub schema: String,
    pub config_hash: String,
    pub solver: String,
    pub seed: u64,
    pub fog_nodes: usize,
    pub colors: usize,
    pub objective: f64,
    pub stats: SolveStats,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// The scenario a seed runs on.
pub fn scenario_for(cfg: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    match &cfg.scenario_file {
        Some(path) => Ok(ScenarioSnapshot::load(path)?.scenario),
        None => Scenario::generate(&cfg.scenario, cfg.scenario_seed.unwrap_or(seed)),
    }
}

/// The grid of simulated runs, in output order.
pub fn plan(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let vs = match cfg.preset {
        Preset::VSweep => cfg.sweep.v.clone(),
        _ => vec![cfg.controller.v],
    };
    let caps = match cfg.preset {
        Preset::CapacitySweep => cfg.sweep.capacity.clone(),
        _ => vec![cfg.scenario.capacity],
    };
    let mut out = Vec::new();
    for &seed in &cfg.seeds {
        for &v in &vs {
            for &capacity in &caps {
                for strategy in cfg.strategies() {
                    out.push(RunSpec {
                        strategy,
                        seed,
                        v,
                        capacity,
                    });
                }
            }
        }
    }
    out
}

pub fn build_solver(cfg: &ExperimentConfig) -> Box<dyn P2Solver> {
    cfg.solver.kind.build(&cfg.solver.schedule, cfg.solver.order)
}

pub fn build_policy(
    strategy: Strategy,
    scenario: &Scenario,
    solver: Box<dyn P2Solver>,
) -> Result<Box<dyn SlotPolicy>> {
    match strategy {
        Strategy::Afc => Ok(Box::new(Afc::new(solver))),
        Strategy::DOptimal => baseline_policy(BaselineKind::DOptimal, scenario, solver),
        Strategy::Ncop => baseline_policy(BaselineKind::Ncop, scenario, solver),
        Strategy::Ssc => baseline_policy(BaselineKind::Ssc, scenario, solver),
    }
}

/// Simulates one run and returns its trace and summary.
pub fn execute(cfg: &ExperimentConfig, spec: &RunSpec) -> Result<(MetricsTrace, RunSummary)> {
    let scenario = scenario_for(cfg, spec.seed)?.with_capacity(spec.capacity);
    let controller = ControllerConfig {
        v: spec.v,
        ..cfg.controller.clone()
    };
    let mut policy = build_policy(spec.strategy, &scenario, build_solver(cfg))?;
    let trace = simulate(&scenario, policy.as_mut(), &controller, spec.seed)?;
    let summary = summarize_run(cfg, spec, &scenario, &controller, &trace);
    Ok((trace, summary))
}

fn summarize_run(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    scenario: &Scenario,
    controller: &ControllerConfig,
    trace: &MetricsTrace,
) -> RunSummary {
    let b_wh2 = 0.5
        * scenario
            .fog_nodes
            .iter()
            .map(|f| (f.energy_cap_wh - f.budget_wh).powi(2))
            .sum::<f64>();
    let bound = match (cfg.bound.epsilon, cfg.bound.reference_delay_s) {
        (Some(eps), Some(d_ref)) => {
            let d_max = controller.delay_cap_s.unwrap_or_else(|| {
                mean_all_cloud_delay(scenario, controller.horizon, spec.seed)
            });
            Some(bound_report(&scenario.fog_nodes, spec.v, d_max, d_ref, eps))
        }
        _ => None,
    };
    RunSummary {
        schema: SUMMARY_SCHEMA.into(),
        config_hash: cfg.hash(),
        run: spec.clone(),
        summary: trace.summary(),
        b_wh2,
        delay_bound_term: b_wh2 / spec.v,
        bound,
    }
}

/// Average over the horizon of each slot's all-cloud delay, the default
/// per-slot delay cap.
fn mean_all_cloud_delay(scenario: &Scenario, horizon: usize, seed: u64) -> f64 {
    let q = vec![0.0; scenario.fog_count()];
    (0..horizon)
        .map(|t| {
            let ctx = scenario.generate_slot(t, seed);
            SlotProblem::new(scenario, &ctx, &q, 1.0).all_cloud_delay()
        })
        .sum::<f64>()
        / horizon.max(1) as f64
}

/// Runs the configured preset into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let hash = cfg.hash();
    let mut manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_version: cfg.version,
        config_hash: hash.clone(),
        preset: cfg.preset,
        seeds: cfg.seeds.clone(),
        scenario_schema: SNAPSHOT_SCHEMA.into(),
        trace_schema: TRACE_SCHEMA.into(),
        status: RunStatus::Partial,
        error: None,
        files: Vec::new(),
    };
    write_file(&out_dir.join("config.toml"), &cfg.to_toml_string())?;
    manifest.add(entry("config.toml", "config", &hash));
    manifest.save(out_dir)?;
    let manifest = Mutex::new(manifest);

    let result = if cfg.preset == Preset::Convergence {
        run_convergence(cfg, out_dir, &manifest).map(|c| (Vec::new(), c))
    } else {
        run_grid(cfg, out_dir, &manifest).map(|s| (s, Vec::new()))
    };

    let mut manifest = manifest.into_inner().expect("manifest lock");
    match result {
        Ok((summaries, convergence)) => {
            manifest.status = RunStatus::Complete;
            manifest.save(out_dir)?;
            Ok(RunOutcome {
                manifest,
                summaries,
                convergence,
            })
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            manifest.save(out_dir)?;
            Err(e)
        }
    }
}

fn entry(path: &str, kind: &str, hash: &str) -> ManifestEntry {
    ManifestEntry {
        path: path.into(),
        kind: kind.into(),
        config_hash: hash.into(),
        strategy: None,
        seed: None,
        v: None,
        capacity: None,
    }
}

fn run_grid(cfg: &ExperimentConfig, out_dir: &Path, manifest: &Mutex<Manifest>) -> Result<Vec<RunSummary>> {
    let hash = cfg.hash();
    let specs = plan(cfg);
    let summaries: Vec<RunSummary> = specs
        .par_iter()
        .map(|spec| -> Result<RunSummary> {
            let (trace, summary) = execute(cfg, spec)?;
            let stem = spec.stem();
            let csv_name = format!("{stem}.csv");
            let json_name = format!("{stem}.summary.json");
            trace.write_csv(&out_dir.join(&csv_name))?;
            write_file(
                &out_dir.join(&json_name),
                &(serde_json::to_string_pretty(&summary)? + "\n"),
            )?;
            let mut m = manifest.lock().expect("manifest lock");
            for (name, kind) in [(csv_name, "trace"), (json_name, "summary")] {
                m.add(ManifestEntry {
                    strategy: Some(spec.strategy.name().into()),
                    seed: Some(spec.seed),
                    v: Some(spec.v),
                    capacity: Some(spec.capacity),
                    ..entry(&name, kind, &hash)
                });
            }
            m.save(out_dir)?;
            Ok(summary)
        })
        .collect::<Result<_>>()?;

    write_file(&out_dir.join("runs.csv"), &runs_table(&summaries))?;
    let mut m = manifest.lock().expect("manifest lock");
    m.add(entry("runs.csv", "runs_table", &hash));
    Ok(summaries)
}

/// `runs.csv`: one line per run with its terminal summary.
pub fn runs_table(summaries: &[RunSummary]) -> String {
    let mut out = RUNS_COLUMNS.join(",") + "\n";
    for s in summaries {
        let x = &s.summary;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}.csv",
            s.run.strategy.name(),
            s.run.seed,
            s.run.v,
            s.run.capacity,
            x.slots,
            x.time_avg_delay_s,
            x.time_avg_deficit_wh,
            x.mean_node_deficit_wh,
            x.total_budget_wh,
            x.fog_share,
            s.run.stem()
        )
        .unwrap();
    }
    out
}

/// Solves slot 0 with empty queues using both samplers and records their
/// per-round traces.
pub fn convergence_runs(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<(ConvergenceSummary, Vec<TraceRow>)>> {
    let scenario = scenario_for(cfg, seed)?;
    let ctx = scenario.generate_slot(0, seed);
    let q = vec![0.0; scenario.fog_count()];
    let mut problem = SlotProblem::new(&scenario, &ctx, &q, cfg.controller.v);
    if let Some(cap) = cfg.controller.delay_cap_s {
        problem = problem.with_delay_cap(cap);
    }
    let solvers: [Box<dyn P2Solver>; 2] = [
        Box::new(Cpgs {
            schedule: cfg.solver.schedule.clone(),
            order: cfg.solver.order,
            record_trace: true,
            ..Cpgs::default()
        }),
        Box::new(SequentialGibbs {
            schedule: cfg.solver.schedule.clone(),
            record_trace: true,
        }),
    ];
    solvers
        .iter()
        .map(|solver| {
            let mut rng = rng::stream(seed, Domain::Solver, 0);
            let sol = solver.solve(&problem, &mut rng)?;
            Ok((
                ConvergenceSummary {
                    schema: SUMMARY_SCHEMA.into(),
                    config_hash: cfg.hash(),
                    solver: solver.name().into(),
                    seed,
                    fog_nodes: scenario.fog_count(),
                    colors: scenario.topology.num_colors,
                    objective: sol.objective,
                    stats: sol.stats,
                },
                sol.trace,
            ))
        })
        .collect()
}

/// Sampler trace CSV: `round,sweep,sigma,objective,active` with the active
/// node ids joined by `;`.
pub fn sampler_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = format!("# {SAMPLER_TRACE_SCHEMA}\nround,sweep,sigma,objective,active\n");
    for r in rows {
        let active: Vec<String> = r.active.iter().map(|n| n.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.round,
            r.sweep,
            r.sigma,
            r.objective,
            active.join(";")
        )
        .unwrap();
    }
    out
}

fn run_convergence(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    manifest: &Mutex<Manifest>,
) -> Result<Vec<ConvergenceSummary>> {
    let hash = cfg.hash();
    let per_seed: Vec<Vec<ConvergenceSummary>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ConvergenceSummary>> {
            let runs = convergence_runs(cfg, seed)?;
            let mut out = Vec::new();
            for (summary, rows) in runs {
                let stem = format!("convergence_{}_s{seed}", summary.solver);
                let csv_name = format!("{stem}.csv");
                let json_name = format!("{stem}.summary.json");
                write_file(&out_dir.join(&csv_name), &sampler_trace_csv(&rows))?;
                write_file(
                    &out_dir.join(&json_name),
                    &(serde_json::to_string_pretty(&summary)? + "\n"),
                )?;
                let mut m = manifest.lock().expect("manifest lock");
                for (name, kind) in [(csv_name, "sampler_trace"), (json_name, "sampler_summary")] {
                    m.add(ManifestEntry {
                        strategy: Some(summary.solver.clone()),
                        seed: Some(seed),
                        ..entry(&name, kind, &hash)
                    });
                }
                m.save(out_dir)?;
                out.push(summary);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

/// Output paths listed in a manifest, resolved against its directory.
pub fn manifest_paths(dir: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    manifest.files.iter().map(|e| dir.join(&e.path)).collect()
}
