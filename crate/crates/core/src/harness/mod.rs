//! Experiment presets, configuration files and output artifacts.

pub mod config;
pub mod run;
pub mod summarize;

use std::fmt::Write as _;

pub use config::{ExperimentConfig, Preset, ScenarioBase, Strategy, CONFIG_VERSION};
pub use run::{
    execute, plan, run, runs_table, scenario_for, Manifest, ManifestEntry, RunOutcome, RunSpec,
    RunStatus, RunSummary, MANIFEST_SCHEMA,
};
pub use summarize::Comparison;

use crate::scenario::Scenario;

/// Human-readable description of a scenario.
pub fn describe(scenario: &Scenario) -> String {
    let topo = &scenario.topology;
    let mut out = String::new();
    writeln!(
        out,
        "fog nodes {}, sensors {}, services {}, capacity {}",
        scenario.fog_count(),
        scenario.sensor_count(),
        scenario.catalog.len(),
        scenario.config.capacity
    )
    .unwrap();
    writeln!(
        out,
        "fog graph edges {}, conflict edges {}, colors {}",
        topo.fog_edge_count(),
        topo.conflict_edge_count(),
        topo.num_colors
    )
    .unwrap();
    for (c, set) in topo.colorsets.iter().enumerate() {
        writeln!(out, "  color {c}: {set:?}").unwrap();
    }
    for (k, s) in scenario.catalog.services.iter().enumerate() {
        writeln!(
            out,
            "service {k}: {:.3} MB/task, {:.1} Mcycles/task",
            s.input_bits / crate::scenario::BITS_PER_MEGABYTE,
            s.cpu_cycles / 1e6
        )
        .unwrap();
    }
    for f in &scenario.fog_nodes {
        writeln!(
            out,
            "fog {:>2} at ({:>6.1}, {:>6.1}): {} sensors, neighbors {:?}",
            f.id,
            f.position[0],
            f.position[1],
            topo.coverage[f.id].len(),
            topo.fog_adjacency[f.id]
        )
        .unwrap();
    }
    out
}
