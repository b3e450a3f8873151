//! Small hand-placed instances shared by the integration tests.
#![allow(dead_code)]

use fogcfg_core::scenario::*;
use fogcfg_core::SlotContext;
use rand::Rng;

pub fn fog(id: usize, x: f64, y: f64) -> FogNodeSpec {
    FogNodeSpec {
        id,
        position: [x, y],
        cpu_hz: 2e9,
        unit_energy_wh: 6e-9,
        static_energy_wh: 2.0,
        budget_wh: 10.0,
        energy_cap_wh: 20.0,
        capacity: 1,
        radius_m: 120.0,
    }
}

pub fn sensor(id: usize, x: f64, y: f64, service: usize) -> SensorNodeSpec {
    SensorNodeSpec {
        id,
        position: [x, y],
        service,
        demand_phase: 0.0,
    }
}

/// `k` services with input sizes and CPU demands spread over the default
/// ranges.
pub fn catalog(k: usize) -> ServiceCatalog {
    let services = (0..k)
        .map(|i| {
            let f = if k > 1 { i as f64 / (k - 1) as f64 } else { 0.5 };
            Service {
                input_bits: (0.5 + 0.5 * f) * BITS_PER_MEGABYTE,
                cpu_cycles: (50.0 + 150.0 * (1.0 - f)) * 1e6,
            }
        })
        .collect();
    ServiceCatalog::new(services).unwrap()
}

pub fn assemble(fogs: Vec<FogNodeSpec>, sensors: Vec<SensorNodeSpec>, k: usize) -> Scenario {
    Scenario::assemble(
        ScenarioConfig::default(),
        catalog(k),
        fogs,
        sensors,
        CloudSpec { cpu_hz: 4e9 },
    )
    .unwrap()
}

/// A slot with the given demand, a 4 Mb/s backbone and distance-only
/// channels.
pub fn slot(s: &Scenario, demand: Vec<f64>) -> SlotContext {
    let channel = s
        .topology
        .reachable
        .iter()
        .enumerate()
        .map(|(m, fogs)| fogs.iter().map(|&n| -path_loss_db(s.link_distance(m, n))).collect())
        .collect();
    SlotContext {
        t: 0,
        demand,
        backbone_bps: 4e6,
        rtt_s: 0.2,
        channel,
        realized_tasks: None,
    }
}

/// Two fog nodes 150 m apart sharing the sensors between them; two
/// services, one hosted at a time.
pub fn coupled_pair() -> Scenario {
    assemble(
        vec![fog(0, 0.0, 0.0), fog(1, 150.0, 0.0)],
        vec![
            sensor(0, 75.0, 0.0, 0),
            sensor(1, 70.0, 10.0, 1),
            sensor(2, -50.0, 0.0, 1),
            sensor(3, 200.0, 0.0, 0),
        ],
        2,
    )
}

/// Nodes 0 and 1 share sensors; node 2 is far away and isolated.
pub fn pair_plus_isolated() -> Scenario {
    assemble(
        vec![fog(0, 0.0, 0.0), fog(1, 150.0, 0.0), fog(2, 1000.0, 0.0)],
        vec![
            sensor(0, 75.0, 0.0, 0),
            sensor(1, 70.0, 10.0, 1),
            sensor(2, -50.0, 0.0, 1),
            sensor(3, 1000.0, 50.0, 0),
            sensor(4, 950.0, 0.0, 1),
        ],
        2,
    )
}

/// Four nodes on a line, consecutive pairs sharing a sensor.
pub fn path4() -> Scenario {
    let fogs = (0..4).map(|i| fog(i, 150.0 * i as f64, 0.0)).collect();
    let mut sensors = Vec::new();
    for i in 0..4 {
        sensors.push(sensor(sensors.len(), 150.0 * i as f64, 30.0, i % 2));
        if i < 3 {
            sensors.push(sensor(sensors.len(), 150.0 * i as f64 + 75.0, 0.0, (i + 1) % 2));
        }
    }
    assemble(fogs, sensors, 2)
}

/// A random instance with up to three nodes on a line, `k` services and
/// capacity `c`.
pub fn random_small<R: Rng>(rng: &mut R, k: usize, c: usize) -> Scenario {
    let n = rng.random_range(2..=3);
    let fogs: Vec<FogNodeSpec> = (0..n)
        .map(|i| FogNodeSpec {
            capacity: c,
            static_energy_wh: rng.random_range(0.0..4.0),
            ..fog(i, 150.0 * i as f64, 0.0)
        })
        .collect();
    let m = rng.random_range(3..=8);
    let sensors = (0..m)
        .map(|j| {
            let x = rng.random_range(-100.0..150.0 * (n - 1) as f64 + 100.0);
            let y = rng.random_range(-50.0..50.0);
            sensor(j, x, y, rng.random_range(0..k))
        })
        .filter(|s| {
            fogs.iter().any(|f| {
                ((f.position[0] - s.position[0]).powi(2) + (f.position[1] - s.position[1]).powi(2))
                    .sqrt()
                    <= f.radius_m
            })
        })
        .enumerate()
        .map(|(j, s)| SensorNodeSpec { id: j, ..s })
        .collect();
    assemble(fogs, sensors, k)
}
