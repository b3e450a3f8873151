use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BITS_PER_MEGABYTE: f64 = 8.0e6;
pub const BITS_PER_MEGABIT: f64 = 1.0e6;

/// How per-slot demand rates evolve over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandPattern {
    /// `d ~ Uniform[0, demand_max]`, i.i.d. across slots and sensors.
    Uniform,
    /// Each sensor follows `mean · (1 + amplitude · sin(2πt/period + phase))`
    /// with a per-sensor phase, and the slot draw is uniform on
    /// `[0, 2 · mean_t]`.
    Sinusoidal { period_slots: f64, amplitude: f64 },
}

/// Scenario parameters in the units people write them in. Converted to
/// bits, cycles, seconds and Wh when the scenario is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub radius_m: f64,
    /// Mean of the Poisson sensor count.
    pub expected_sensors: f64,
    pub services: usize,
    /// Services a fog node can host at once.
    pub capacity: usize,
    /// Per-task input size range, MB.
    pub input_size_mb: [f64; 2],
    /// Per-task CPU demand range, megacycles.
    pub cpu_demand_mcycles: [f64; 2],
    pub fog_cpu_ghz: f64,
    pub cloud_cpu_ghz: f64,
    pub unit_energy_wh_per_cycle: f64,
    pub static_energy_wh: f64,
    pub budget_wh: f64,
    /// Per-slot energy cap. Defaults to twice the budget.
    pub energy_cap_wh: Option<f64>,
    pub backbone_rate_mbps: [f64; 2],
    pub rtt_s: f64,
    pub demand_max: f64,
    pub demand: DemandPattern,
    pub shadowing_std_db: f64,
    /// Redraw shadowing every slot; otherwise one draw per scenario.
    pub redraw_channels: bool,
    /// Also draw Poisson task counts per slot (reported, never optimized on).
    pub poisson_realizations: bool,
    pub max_retries: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::plant()
    }
}

impl ScenarioConfig {
    /// 16 fog nodes on a 4x4 mesh over a 500 m square plant, 52 sensors on
    /// average, six services.
    pub fn plant() -> Self {
        ScenarioConfig {
            area_width_m: 500.0,
            area_height_m: 500.0,
            grid_cols: 4,
            grid_rows: 4,
            radius_m: 120.0,
            expected_sensors: 52.0,
            services: 6,
            capacity: 2,
            input_size_mb: [0.5, 1.0],
            cpu_demand_mcycles: [50.0, 200.0],
            fog_cpu_ghz: 2.0,
            cloud_cpu_ghz: 4.0,
            unit_energy_wh_per_cycle: 6.0e-9,
            static_energy_wh: 2.0,
            budget_wh: 10.0,
            energy_cap_wh: None,
            backbone_rate_mbps: [2.0, 6.0],
            rtt_s: 0.2,
            demand_max: 10.0,
            demand: DemandPattern::Uniform,
            shadowing_std_db: 4.0,
            redraw_channels: true,
            poisson_realizations: false,
            max_retries: 100,
        }
    }

    /// 3x3 mesh with the same spacing and radius, about 20 sensors. Small
    /// enough for CI-length horizons.
    pub fn desk() -> Self {
        ScenarioConfig {
            area_width_m: 375.0,
            area_height_m: 375.0,
            grid_cols: 3,
            grid_rows: 3,
            expected_sensors: 20.0,
            ..Self::plant()
        }
    }

    pub fn fog_count(&self) -> usize {
        self.grid_cols * self.grid_rows
    }

    pub fn energy_cap(&self) -> f64 {
        self.energy_cap_wh.unwrap_or(2.0 * self.budget_wh)
    }

    /// Field-level validation. Collects every problem instead of stopping at
    /// the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be a positive finite number, got {v}"));
            }
        };
        positive("area_width_m", self.area_width_m);
        positive("area_height_m", self.area_height_m);
        positive("radius_m", self.radius_m);
        positive("expected_sensors", self.expected_sensors);
        positive("fog_cpu_ghz", self.fog_cpu_ghz);
        positive("cloud_cpu_ghz", self.cloud_cpu_ghz);
        positive("unit_energy_wh_per_cycle", self.unit_energy_wh_per_cycle);
        positive("budget_wh", self.budget_wh);
        positive("demand_max", self.demand_max);
        for (name, range) in [
            ("input_size_mb", self.input_size_mb),
            ("cpu_demand_mcycles", self.cpu_demand_mcycles),
            ("backbone_rate_mbps", self.backbone_rate_mbps),
        ] {
            if !(range[0] > 0.0 && range[0] <= range[1] && range[1].is_finite()) {
                errs.push(format!(
                    "{name} must be an increasing range of positive numbers, got {range:?}"
                ));
            }
        }
        if self.grid_cols == 0 || self.grid_rows == 0 {
            errs.push("grid_cols and grid_rows must be at least 1".into());
        }
        if self.services == 0 || self.services > 64 {
            errs.push(format!("services must be in 1..=64, got {}", self.services));
        }
        if self.capacity == 0 {
            errs.push("capacity must be at least 1".into());
        }
        if !(self.static_energy_wh >= 0.0) {
            errs.push(format!(
                "static_energy_wh must be non-negative, got {}",
                self.static_energy_wh
            ));
        }
        if !(self.budget_wh > self.static_energy_wh) {
            errs.push(format!(
                "budget_wh ({}) must exceed static_energy_wh ({})",
                self.budget_wh, self.static_energy_wh
            ));
        }
        if !(self.energy_cap() >= self.budget_wh) {
            errs.push(format!(
                "energy_cap_wh ({}) must be at least budget_wh ({})",
                self.energy_cap(),
                self.budget_wh
            ));
        }
        if !(self.rtt_s >= 0.0) {
            errs.push(format!("rtt_s must be non-negative, got {}", self.rtt_s));
        }
        if !(self.shadowing_std_db >= 0.0) {
            errs.push(format!(
                "shadowing_std_db must be non-negative, got {}",
                self.shadowing_std_db
            ));
        }
        if let DemandPattern::Sinusoidal {
            period_slots,
            amplitude,
        } = self.demand
        {
            if !(period_slots > 0.0) {
                errs.push(format!("demand.period_slots must be positive, got {period_slots}"));
            }
            if !(0.0..=1.0).contains(&amplitude) {
                errs.push(format!("demand.amplitude must be in [0, 1], got {amplitude}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Non-fatal observations about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.cloud_cpu_ghz <= self.fog_cpu_ghz {
            out.push(format!(
                "cloud CPU ({} GHz) is not faster than fog CPU ({} GHz)",
                self.cloud_cpu_ghz, self.fog_cpu_ghz
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::plant().validate().unwrap();
        ScenarioConfig::desk().validate().unwrap();
        assert_eq!(ScenarioConfig::plant().fog_count(), 16);
        assert_eq!(ScenarioConfig::desk().fog_count(), 9);
        assert_eq!(ScenarioConfig::plant().energy_cap(), 20.0);
    }

    #[test]
    fn validation_reports_every_field() {
        let cfg = ScenarioConfig {
            radius_m: -1.0,
            capacity: 0,
            static_energy_wh: 12.0,
            ..ScenarioConfig::plant()
        };
        let Error::Config(errs) = cfg.validate().unwrap_err() else {
            panic!("expected config error");
        };
        assert!(errs.iter().any(|e| e.starts_with("radius_m")));
        assert!(errs.iter().any(|e| e.starts_with("capacity")));
        assert!(errs.iter().any(|e| e.starts_with("budget_wh")));
    }

    #[test]
    fn slow_cloud_is_a_warning_only() {
        let cfg = ScenarioConfig {
            cloud_cpu_ghz: 1.0,
            ..ScenarioConfig::plant()
        };
        cfg.validate().unwrap();
        assert_eq!(cfg.warnings().len(), 1);
    }
}
