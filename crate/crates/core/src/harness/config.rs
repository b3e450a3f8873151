//! Experiment configuration files.
//!
//! A config is a TOML document. Every key is optional; omitted keys take the
//! defaults of the chosen preset. The `[scenario]` table overrides fields of
//! the base named by `scenario_base`.
//!
//! ```toml
//! version = 1
//! preset = "v_sweep"            # runtime_comparison | demand_allocation | v_sweep
//!                               # | capacity_sweep | convergence
//! seeds = [1, 2, 3, 4, 5]
//! # scenario_seed = 7           # pin one scenario for every seed
//! # scenario_file = "scn.json"  # or replay a saved snapshot
//! strategies = ["afc"]          # afc | d_optimal | ncop | ssc
//! scenario_base = "desk"        # plant | desk
//!
//! [scenario]
//! expected_sensors = 24
//!
//! [controller]
//! v = 1000.0
//! horizon = 500
//! # delay_cap_s = 250.0
//!
//! [solver]
//! kind = "cpgs"                 # cpgs | sequential | brute_force
//! order = "round_robin"         # round_robin | random
//!
//! [solver.schedule]
//! max_sweeps = 300
//!
//! [sweep]
//! v = [10.0, 100.0, 1000.0, 10000.0]
//! capacity = [1, 2, 3, 4]
//!
//! [bound]
//! # epsilon = 5.0
//! # reference_delay_s = 30.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lyapunov::ControllerConfig;
use crate::scenario::ScenarioConfig;
use crate::solver::{AnnealSchedule, ColorOrder, SolverKind};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    RuntimeComparison,
    DemandAllocation,
    VSweep,
    CapacitySweep,
    Convergence,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::RuntimeComparison,
        Preset::DemandAllocation,
        Preset::VSweep,
        Preset::CapacitySweep,
        Preset::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::RuntimeComparison => "runtime_comparison",
            Preset::DemandAllocation => "demand_allocation",
            Preset::VSweep => "v_sweep",
            Preset::CapacitySweep => "capacity_sweep",
            Preset::Convergence => "convergence",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Strategies run when the config names none.
    pub fn default_strategies(self) -> Vec<Strategy> {
        match self {
            Preset::RuntimeComparison => Strategy::ALL.to_vec(),
            Preset::DemandAllocation | Preset::CapacitySweep => vec![Strategy::Afc, Strategy::Ncop],
            Preset::VSweep | Preset::Convergence => vec![Strategy::Afc],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Afc,
    DOptimal,
    Ncop,
    Ssc,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Afc, Strategy::DOptimal, Strategy::Ncop, Strategy::Ssc];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Afc => "afc",
            Strategy::DOptimal => "d_optimal",
            Strategy::Ncop => "ncop",
            Strategy::Ssc => "ssc",
        }
    }

    pub fn from_name(name: &str) -> Option<Strategy> {
        Strategy::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioBase {
    #[default]
    Plant,
    Desk,
}

impl ScenarioBase {
    pub fn config(self) -> ScenarioConfig {
        match self {
            ScenarioBase::Plant => ScenarioConfig::plant(),
            ScenarioBase::Desk => ScenarioConfig::desk(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub order: ColorOrder,
    pub schedule: AnnealSchedule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: SolverKind::Cpgs,
            order: ColorOrder::RoundRobin,
            schedule: AnnealSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub v: Vec<f64>,
    pub capacity: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            v: vec![10.0, 100.0, 1000.0, 10000.0],
            capacity: vec![1, 2, 3, 4],
        }
    }
}

/// Inputs to the bound report that the simulator cannot derive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    /// Energy slack of some stationary policy, Wh.
    pub epsilon: Option<f64>,
    /// Reference long-run delay, s.
    pub reference_delay_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    /// When set, every seed runs on the scenario generated from this seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_seed: Option<u64>,
    /// When set, every seed runs on this saved scenario snapshot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<Strategy>>,
    pub scenario_base: ScenarioBase,
    pub scenario: ScenarioConfig,
    pub controller: ControllerConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub bound: BoundConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::for_preset(Preset::RuntimeComparison)
    }
}

impl ExperimentConfig {
    pub fn for_preset(preset: Preset) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            preset,
            seeds: vec![1],
            scenario_seed: None,
            scenario_file: None,
            strategies: None,
            scenario_base: ScenarioBase::Plant,
            scenario: ScenarioConfig::plant(),
            controller: ControllerConfig::default(),
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            bound: BoundConfig::default(),
        }
    }

    /// Parses a config document. The `[scenario]` table is layered over the
    /// base scenario; everything is then validated field by field.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |e: toml::de::Error| Error::Parse {
            path: origin.into(),
            message: e.to_string().trim_end().to_string(),
        };
        let mut doc: toml::Table = text.parse().map_err(parse_err)?;
        let base: ScenarioBase = match doc.get("scenario_base") {
            Some(v) => v.clone().try_into().map_err(parse_err)?,
            None => ScenarioBase::default(),
        };
        let mut scenario = toml::Table::try_from(base.config()).map_err(|e| Error::Parse {
            path: origin.into(),
            message: e.to_string(),
        })?;
        match doc.remove("scenario") {
            Some(toml::Value::Table(overrides)) => scenario.extend(overrides),
            Some(_) => {
                return Err(Error::Config(vec!["scenario must be a table".into()]));
            }
            None => {}
        }
        doc.insert("scenario".into(), toml::Value::Table(scenario));
        let cfg: ExperimentConfig = doc.try_into().map_err(parse_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn strategies(&self) -> Vec<Strategy> {
        self.strategies
            .clone()
            .unwrap_or_else(|| self.preset.default_strategies())
    }

    /// Every problem in the config, each prefixed with its key path.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.version != CONFIG_VERSION {
            errs.push(format!(
                "version: unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            ));
        }
        if self.seeds.is_empty() {
            errs.push("seeds: at least one seed is required".into());
        }
        if let Some(s) = &self.strategies {
            if s.is_empty() {
                errs.push("strategies: at least one strategy is required".into());
            }
        }
        if let Err(Error::Config(e)) = self.scenario.validate() {
            errs.extend(e.into_iter().map(|m| format!("scenario.{m}")));
        }
        if let Err(e) = self.controller.validate() {
            errs.extend(e.into_iter().map(|m| format!("controller.{m}")));
        }
        if let Err(e) = self.solver.schedule.validate() {
            errs.extend(e.into_iter().map(|m| format!("solver.schedule.{m}")));
        }
        if self.preset == Preset::VSweep {
            if self.sweep.v.is_empty() {
                errs.push("sweep.v: at least one value is required".into());
            }
            for v in &self.sweep.v {
                if !(*v > 0.0 && v.is_finite()) {
                    errs.push(format!("sweep.v: values must be positive, got {v}"));
                }
            }
        }
        if self.preset == Preset::CapacitySweep {
            if self.sweep.capacity.is_empty() {
                errs.push("sweep.capacity: at least one value is required".into());
            }
            if self.sweep.capacity.contains(&0) {
                errs.push("sweep.capacity: values must be at least 1".into());
            }
        }
        if let Some(e) = self.bound.epsilon {
            if !(e > 0.0) {
                errs.push(format!("bound.epsilon must be positive, got {e}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// The resolved config as TOML. Deterministic for a given config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment config serializes to TOML")
    }

    /// Hex SHA-256 of the resolved TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_document_is_the_default_preset() {
        assert_eq!(parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn scenario_overrides_layer_over_the_base() {
        let cfg = parse("scenario_base = \"desk\"\n[scenario]\nexpected_sensors = 24\n").unwrap();
        assert_eq!(cfg.scenario.grid_cols, 3);
        assert_eq!(cfg.scenario.expected_sensors, 24.0);
        assert_eq!(cfg.scenario.radius_m, 120.0);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let err = parse("[controller]\nvv = 3\n").unwrap_err().to_string();
        assert!(err.contains("vv"), "{err}");
        let err = parse("[scenario]\nradius = 3\n").unwrap_err().to_string();
        assert!(err.contains("radius"), "{err}");
    }

    #[test]
    fn every_invalid_field_is_reported() {
        let err = parse(
            "version = 2\nseeds = []\n[controller]\nv = -1.0\n[scenario]\nbudget_wh = 1.0\n",
        )
        .unwrap_err();
        let Error::Config(msgs) = err else {
            panic!("expected config error")
        };
        assert!(msgs.iter().any(|m| m.starts_with("version")));
        assert!(msgs.iter().any(|m| m.starts_with("seeds")));
        assert!(msgs.iter().any(|m| m.starts_with("controller.v")));
        assert!(msgs.iter().any(|m| m.starts_with("scenario.budget_wh")));
    }

    #[test]
    fn resolved_form_round_trips_and_hashes_stably() {
        let cfg = parse("preset = \"v_sweep\"\nseeds = [3, 4]\nscenario_base = \"desk\"\n").unwrap();
        let again = parse(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.seeds.push(5);
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
        for s in Strategy::ALL {
            assert_eq!(Strategy::from_name(s.name()), Some(s));
        }
    }
}
