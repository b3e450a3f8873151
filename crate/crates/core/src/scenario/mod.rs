//! Reproducible network instances and per-slot dynamics.

mod config;
mod topology;

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

pub use config::{DemandPattern, ScenarioConfig, BITS_PER_MEGABIT, BITS_PER_MEGABYTE};
pub use topology::{greedy_coloring, Topology};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub const SNAPSHOT_SCHEMA: &str = "fogcfg-scenario/1";

/// Carrier frequency used by the path-loss model, MHz.
pub const CARRIER_MHZ: f64 = 2400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub input_bits: f64,
    pub cpu_cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCatalog {
    pub services: Vec<Service>,
}

impl ServiceCatalog {
    pub fn new(services: Vec<Service>) -> Result<Self> {
        let mut errs = Vec::new();
        if services.is_empty() {
            errs.push("catalog needs at least one service".to_string());
        }
        for (k, s) in services.iter().enumerate() {
            if !(s.input_bits > 0.0 && s.cpu_cycles > 0.0) {
                errs.push(format!("service {k}: input size and CPU demand must be positive"));
            }
        }
        if errs.is_empty() {
            Ok(ServiceCatalog { services })
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn len(&self) -> usize {
        self.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.services.is_empty()
    }
}

impl std::ops::Index<usize> for ServiceCatalog {
    type Output = Service;
    fn index(&self, k: usize) -> &Service {
        &self.services[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogNodeSpec {
    pub id: usize,
    pub position: [f64; 2],
    pub cpu_hz: f64,
    /// Energy per CPU cycle, Wh.
    pub unit_energy_wh: f64,
    /// Energy drawn per slot while powered on, regardless of load.
    pub static_energy_wh: f64,
    /// Long-term per-slot budget.
    pub budget_wh: f64,
    /// Hard per-slot cap.
    pub energy_cap_wh: f64,
    pub capacity: usize,
    pub radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorNodeSpec {
    pub id: usize,
    pub position: [f64; 2],
    pub service: usize,
    /// Phase for the sinusoidal demand pattern, radians.
    pub demand_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub cpu_hz: f64,
}

/// A fully built network instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub catalog: ServiceCatalog,
    pub fog_nodes: Vec<FogNodeSpec>,
    pub sensors: Vec<SensorNodeSpec>,
    pub cloud: CloudSpec,
    pub topology: Topology,
}

/// Observables for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotContext {
    pub t: usize,
    /// Expected tasks per slot, per sensor.
    pub demand: Vec<f64>,
    pub backbone_bps: f64,
    pub rtt_s: f64,
    /// `channel[m][x]` is the gain (dB) from sensor `m` to fog node
    /// `topology.reachable[m][x]`.
    pub channel: Vec<Vec<f64>>,
    /// Poisson task counts, when enabled. Reporting only.
    pub realized_tasks: Option<Vec<u64>>,
}

impl SlotContext {
    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }
}

/// Free-space path loss in dB at the 2.4 GHz carrier.
pub fn path_loss_db(distance_m: f64) -> f64 {
    let d_km = distance_m.max(1.0) / 1000.0;
    42.6 + 26.0 * d_km.log10() + 20.0 * CARRIER_MHZ.log10()
}

/// Channel gain in dB: negated path loss plus log-normal shadowing with the
/// given standard deviation.
pub fn compute_channel<R: Rng + ?Sized>(distance_m: f64, shadowing_std_db: f64, rng: &mut R) -> f64 {
    let shadow = if shadowing_std_db > 0.0 {
        Normal::new(0.0, shadowing_std_db)
            .expect("finite std")
            .sample(rng)
    } else {
        0.0
    };
    -(path_loss_db(distance_m) + shadow)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Scenario {
    /// Builds the topology for explicit node placements and checks the
    /// invariants every scenario must satisfy.
    pub fn assemble(
        config: ScenarioConfig,
        catalog: ServiceCatalog,
        fog_nodes: Vec<FogNodeSpec>,
        sensors: Vec<SensorNodeSpec>,
        cloud: CloudSpec,
    ) -> Result<Scenario> {
        let mut errs = Vec::new();
        if fog_nodes.is_empty() {
            errs.push("at least one fog node is required".to_string());
        }
        for (i, f) in fog_nodes.iter().enumerate() {
            if f.id != i {
                errs.push(format!("fog node at index {i} has id {}", f.id));
            }
            if !(f.cpu_hz > 0.0 && f.unit_energy_wh > 0.0 && f.static_energy_wh >= 0.0) {
                errs.push(format!("fog node {i}: cpu, unit energy must be positive, static energy non-negative"));
            }
            if !(f.energy_cap_wh >= f.budget_wh && f.budget_wh > f.static_energy_wh) {
                errs.push(format!("fog node {i}: need energy_cap >= budget > static energy"));
            }
            if f.capacity == 0 {
                errs.push(format!("fog node {i}: capacity must be at least 1"));
            }
        }
        for (m, s) in sensors.iter().enumerate() {
            if s.id != m {
                errs.push(format!("sensor at index {m} has id {}", s.id));
            }
            if s.service >= catalog.len() {
                errs.push(format!("sensor {m}: service {} not in catalog", s.service));
            }
        }
        if !(cloud.cpu_hz > 0.0) {
            errs.push("cloud cpu must be positive".into());
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }

        let topology = Topology::build(fog_nodes.len(), sensors.len(), |n, m| {
            distance(fog_nodes[n].position, sensors[m].position) <= fog_nodes[n].radius_m
        });
        Ok(Scenario {
            config,
            catalog,
            fog_nodes,
            sensors,
            cloud,
            topology,
        })
    }

    /// Draws a scenario from `config`. Fog nodes sit on a regular mesh,
    /// the sensor count is Poisson and positions are uniform. A draw that
    /// leaves some sensor out of every radius is discarded and redrawn.
    pub fn generate(config: &ScenarioConfig, seed: u64) -> Result<Scenario> {
        config.validate()?;
        let attempts = config.max_retries.max(1);
        for attempt in 0..attempts {
            let mut rng = rng::stream(seed, Domain::Topology, attempt as u64);
            let scenario = Self::draw(config, &mut rng)?;
            if scenario.topology.reachable.iter().all(|r| !r.is_empty()) {
                return Ok(scenario);
            }
        }
        Err(Error::Scenario {
            attempts,
            reason: "some sensor is out of range of every fog node; radius too small for the layout"
                .into(),
        })
    }

    fn draw<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> Result<Scenario> {
        let k = config.services;
        let services = (0..k)
            .map(|_| Service {
                input_bits: uniform(rng, config.input_size_mb) * BITS_PER_MEGABYTE,
                cpu_cycles: uniform(rng, config.cpu_demand_mcycles) * 1.0e6,
            })
            .collect();
        let catalog = ServiceCatalog::new(services)?;

        let dx = config.area_width_m / config.grid_cols as f64;
        let dy = config.area_height_m / config.grid_rows as f64;
        let fog_nodes = (0..config.fog_count())
            .map(|id| {
                let (col, row) = (id % config.grid_cols, id / config.grid_cols);
                FogNodeSpec {
                    id,
                    position: [(col as f64 + 0.5) * dx, (row as f64 + 0.5) * dy],
                    cpu_hz: config.fog_cpu_ghz * 1.0e9,
                    unit_energy_wh: config.unit_energy_wh_per_cycle,
                    static_energy_wh: config.static_energy_wh,
                    budget_wh: config.budget_wh,
                    energy_cap_wh: config.energy_cap(),
                    capacity: config.capacity,
                    radius_m: config.radius_m,
                }
            })
            .collect();

        let count = Poisson::new(config.expected_sensors)
            .expect("positive mean")
            .sample(rng) as usize;
        let sensors = (0..count)
            .map(|id| SensorNodeSpec {
                id,
                position: [
                    rng.random::<f64>() * config.area_width_m,
                    rng.random::<f64>() * config.area_height_m,
                ],
                service: rng.random_range(0..k),
                demand_phase: rng.random::<f64>() * std::f64::consts::TAU,
            })
            .collect();

        Self::assemble(
            config.clone(),
            catalog,
            fog_nodes,
            sensors,
            CloudSpec {
                cpu_hz: config.cloud_cpu_ghz * 1.0e9,
            },
        )
    }

    pub fn fog_count(&self) -> usize {
        self.fog_nodes.len()
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    /// Distance between sensor `m` and fog node `n`.
    pub fn link_distance(&self, m: usize, n: usize) -> f64 {
        distance(self.sensors[m].position, self.fog_nodes[n].position)
    }

    fn draw_channels<R: Rng>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        let std = self.config.shadowing_std_db;
        self.topology
            .reachable
            .iter()
            .enumerate()
            .map(|(m, fogs)| {
                fogs.iter()
                    .map(|&n| compute_channel(self.link_distance(m, n), std, rng))
                    .collect()
            })
            .collect()
    }

    /// Observables of slot `t`. Depends only on `(self, t, seed)`.
    pub fn generate_slot(&self, t: usize, seed: u64) -> SlotContext {
        let cfg = &self.config;
        let mut rng = rng::stream(seed, Domain::Slot, t as u64);
        let demand: Vec<f64> = self
            .sensors
            .iter()
            .map(|s| match cfg.demand {
                DemandPattern::Uniform => rng.random::<f64>() * cfg.demand_max,
                DemandPattern::Sinusoidal {
                    period_slots,
                    amplitude,
                } => {
                    let phase = std::f64::consts::TAU * t as f64 / period_slots + s.demand_phase;
                    let mean = 0.5 * cfg.demand_max * (1.0 + amplitude * phase.sin());
                    rng.random::<f64>() * 2.0 * mean
                }
            })
            .collect();
        let backbone_bps = uniform(&mut rng, cfg.backbone_rate_mbps) * BITS_PER_MEGABIT;
        let channel = if cfg.redraw_channels {
            self.draw_channels(&mut rng)
        } else {
            self.draw_channels(&mut rng::stream(seed, Domain::FixedChannel, 0))
        };
        let realized_tasks = cfg.poisson_realizations.then(|| {
            demand
                .iter()
                .map(|&d| {
                    if d > 0.0 {
                        Poisson::new(d).expect("positive rate").sample(&mut rng) as u64
                    } else {
                        0
                    }
                })
                .collect()
        });
        SlotContext {
            t,
            demand,
            backbone_bps,
            rtt_s: cfg.rtt_s,
            channel,
            realized_tasks,
        }
    }

    /// Fresh copy with the per-node capacity replaced. The topology is
    /// unaffected.
    pub fn with_capacity(&self, capacity: usize) -> Scenario {
        let mut s = self.clone();
        s.config.capacity = capacity;
        for f in &mut s.fog_nodes {
            f.capacity = capacity;
        }
        s
    }

    /// Rebuilds the topology from the node placements and compares it with
    /// the stored one.
    pub fn verify(&self) -> Result<()> {
        let rebuilt = Scenario::assemble(
            self.config.clone(),
            self.catalog.clone(),
            self.fog_nodes.clone(),
            self.sensors.clone(),
            self.cloud,
        )?;
        if rebuilt.topology != self.topology {
            return Err(Error::Schema(
                "stored topology does not match node placements".into(),
            ));
        }
        if let Some((i, j)) = self.topology.coloring_violation() {
            return Err(Error::ImproperColoring(i, j, self.topology.coloring[i]));
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    range[0] + (range[1] - range[0]) * rng.random::<f64>()
}

/// Versioned JSON form of a scenario, for replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSnapshot {
    pub schema: String,
    pub seed: Option<u64>,
    pub scenario: Scenario,
}

impl ScenarioSnapshot {
    pub fn new(scenario: Scenario, seed: Option<u64>) -> Self {
        ScenarioSnapshot {
            schema: SNAPSHOT_SCHEMA.to_string(),
            seed,
            scenario,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let snap: ScenarioSnapshot = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        if snap.schema != SNAPSHOT_SCHEMA {
            return Err(Error::Schema(format!(
                "{}: schema {:?}, expected {SNAPSHOT_SCHEMA:?}",
                path.display(),
                snap.schema
            )));
        }
        snap.scenario.verify()?;
        Ok(snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_reference_points() {
        // 42.6 + 26 log10(0.12) + 20 log10(2400)
        assert!((path_loss_db(120.0) - 86.2628).abs() < 1e-3);
        assert!((path_loss_db(1000.0) - 110.2042).abs() < 1e-3);
        let mut rng = rng::stream(0, Domain::Slot, 0);
        assert!((compute_channel(120.0, 0.0, &mut rng) + 86.2628).abs() < 1e-3);
    }

    #[test]
    fn zero_distance_is_clamped_to_one_metre() {
        assert_eq!(path_loss_db(0.0), path_loss_db(1.0));
    }

    #[test]
    fn plant_mesh_has_overlapping_coverage() {
        let s = Scenario::generate(&ScenarioConfig::plant(), 11).unwrap();
        assert_eq!(s.fog_count(), 16);
        assert!(s.topology.fog_edge_count() > 0);
        assert!(s.topology.conflict_edge_count() >= s.topology.fog_edge_count());
        assert!(s.topology.reachable.iter().any(|r| r.len() > 1));
        assert!(s.topology.num_colors < 16);
        s.verify().unwrap();
    }

    #[test]
    fn single_node_single_sensor() {
        let cfg = ScenarioConfig {
            grid_cols: 1,
            grid_rows: 1,
            area_width_m: 100.0,
            area_height_m: 100.0,
            ..ScenarioConfig::plant()
        };
        let s = Scenario::assemble(
            cfg,
            ServiceCatalog::new(vec![Service {
                input_bits: 1.0,
                cpu_cycles: 1.0,
            }])
            .unwrap(),
            vec![FogNodeSpec {
                id: 0,
                position: [50.0, 50.0],
                cpu_hz: 2e9,
                unit_energy_wh: 6e-9,
                static_energy_wh: 1.0,
                budget_wh: 10.0,
                energy_cap_wh: 20.0,
                capacity: 1,
                radius_m: 120.0,
            }],
            vec![SensorNodeSpec {
                id: 0,
                position: [60.0, 50.0],
                service: 0,
                demand_phase: 0.0,
            }],
            CloudSpec { cpu_hz: 4e9 },
        )
        .unwrap();
        assert_eq!(s.topology.fog_edge_count(), 0);
        assert_eq!(s.topology.num_colors, 1);
    }

    #[test]
    fn unreachable_sensor_exhausts_retries() {
        let cfg = ScenarioConfig {
            radius_m: 1.0,
            max_retries: 3,
            ..ScenarioConfig::plant()
        };
        match Scenario::generate(&cfg, 1) {
            Err(Error::Scenario { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slot_defaults() {
        let s = Scenario::generate(&ScenarioConfig::desk(), 3).unwrap();
        let ctx = s.generate_slot(5, 9);
        assert_eq!(ctx, s.generate_slot(5, 9));
        assert_ne!(ctx, s.generate_slot(6, 9));
        assert_eq!(ctx.rtt_s, 0.2);
        assert!((2.0e6..=6.0e6).contains(&ctx.backbone_bps));
        for (m, row) in ctx.channel.iter().enumerate() {
            assert_eq!(row.len(), s.topology.reachable[m].len());
        }
        assert!(ctx.demand.iter().all(|&d| (0.0..=10.0).contains(&d)));
        assert!(ctx.realized_tasks.is_none());
    }

    #[test]
    fn fixed_channels_do_not_change_between_slots() {
        let cfg = ScenarioConfig {
            redraw_channels: false,
            ..ScenarioConfig::desk()
        };
        let s = Scenario::generate(&cfg, 3).unwrap();
        assert_eq!(s.generate_slot(0, 1).channel, s.generate_slot(7, 1).channel);
        assert_ne!(s.generate_slot(0, 1).demand, s.generate_slot(7, 1).demand);
    }

    #[test]
    fn long_run_demand_mean() {
        let s = Scenario::generate(&ScenarioConfig::desk(), 4).unwrap();
        let mut sum = 0.0;
        let mut n = 0usize;
        for t in 0..10_000 {
            let ctx = s.generate_slot(t, 21);
            sum += ctx.total_demand();
            n += ctx.demand.len();
        }
        let mean = sum / n as f64;
        assert!((mean - 5.0).abs() < 0.25, "mean {mean}");
    }

    #[test]
    fn sinusoidal_demand_stays_nonnegative() {
        let cfg = ScenarioConfig {
            demand: DemandPattern::Sinusoidal {
                period_slots: 24.0,
                amplitude: 1.0,
            },
            poisson_realizations: true,
            ..ScenarioConfig::desk()
        };
        let s = Scenario::generate(&cfg, 4).unwrap();
        for t in 0..48 {
            let ctx = s.generate_slot(t, 1);
            assert!(ctx.demand.iter().all(|&d| d >= 0.0));
            assert_eq!(ctx.realized_tasks.unwrap().len(), s.sensor_count());
        }
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = Scenario::generate(&ScenarioConfig::desk(), 8).unwrap();
        ScenarioSnapshot::new(s.clone(), Some(8)).save(&path).unwrap();
        let back = ScenarioSnapshot::load(&path).unwrap();
        assert_eq!(back.scenario, s);
        assert_eq!(back.seed, Some(8));
    }

    #[test]
    fn snapshot_with_tampered_topology_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let mut s = Scenario::generate(&ScenarioConfig::desk(), 8).unwrap();
        s.topology.coloring[0] = s.topology.coloring[1];
        ScenarioSnapshot::new(s, None).save(&path).unwrap();
        assert!(ScenarioSnapshot::load(&path).is_err());
    }
}
