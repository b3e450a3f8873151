//! Cost model of one slot: association, aggregated demand, energy, delay and
//! the drift-plus-penalty objective.
//!
//! A [`SlotProblem`] bundles everything that is fixed within a slot. Hosting
//! profiles are one bitmask of services per fog node.

use serde::{Deserialize, Serialize};

use crate::error::Infeasibility;
use crate::scenario::{Scenario, SlotContext};
use crate::solver::admission;

/// Services hosted by one fog node, bit `k` for service `k`.
pub type ServiceMask = u64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HostingProfile {
    masks: Vec<ServiceMask>,
}

impl HostingProfile {
    /// Nothing hosted anywhere; every profile's all-cloud baseline.
    pub fn empty(fog_count: usize) -> Self {
        HostingProfile {
            masks: vec![0; fog_count],
        }
    }

    pub fn from_masks(masks: Vec<ServiceMask>) -> Self {
        HostingProfile { masks }
    }

    /// Builds a profile from explicit service lists per fog node.
    pub fn from_services(services: &[&[usize]]) -> Self {
        HostingProfile {
            masks: services
                .iter()
                .map(|list| list.iter().fold(0, |m, &k| m | (1 << k)))
                .collect(),
        }
    }

    pub fn masks(&self) -> &[ServiceMask] {
        &self.masks
    }

    pub fn mask(&self, n: usize) -> ServiceMask {
        self.masks[n]
    }

    pub fn set(&mut self, n: usize, mask: ServiceMask) {
        self.masks[n] = mask;
    }

    pub fn hosts(&self, n: usize, k: usize) -> bool {
        self.masks[n] >> k & 1 == 1
    }

    pub fn services(&self, n: usize) -> Vec<usize> {
        (0..64).filter(|&k| self.hosts(n, k)).collect()
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn check_capacity(&self, scenario: &Scenario) -> Result<(), Infeasibility> {
        for (n, (&mask, spec)) in self.masks.iter().zip(&scenario.fog_nodes).enumerate() {
            let hosted = mask.count_ones();
            if hosted as usize > spec.capacity || mask >> scenario.catalog.len() != 0 {
                return Err(Infeasibility::Capacity {
                    node: n,
                    hosted,
                    capacity: spec.capacity,
                });
            }
        }
        Ok(())
    }
}

/// Fraction of received workload each fog node processes itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionProfile {
    pub fractions: Vec<f64>,
}

impl AdmissionProfile {
    pub fn uniform(fog_count: usize, b: f64) -> Self {
        AdmissionProfile {
            fractions: vec![b; fog_count],
        }
    }
}

/// Where each sensor's demand goes and what each fog node receives.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `None` means the cloud.
    pub server: Vec<Option<usize>>,
    /// `load[n][k]`: type-`k` tasks per slot received by fog node `n`.
    pub load: Vec<Vec<f64>>,
}

impl Assignment {
    /// Sum over services of CPU cycles per slot received by `n`.
    pub fn workload(&self, scenario: &Scenario, n: usize) -> f64 {
        cycles(&self.load[n], scenario)
    }

    pub fn fog_demand(&self) -> f64 {
        self.load.iter().flatten().sum()
    }
}

// Shared by the sampler's scratch path so both agree to the last bit.
fn cycles(load: &[f64], scenario: &Scenario) -> f64 {
    load.iter()
        .zip(&scenario.catalog.services)
        .map(|(&l, s)| l * s.cpu_cycles)
        .sum()
}

/// How sensors pick a fog node among those hosting their service.
#[derive(Debug, Clone, PartialEq)]
pub enum Association {
    /// Best uplink channel among reachable hosting nodes, ties to lower id.
    BestChannel,
    /// Each sensor is bound to one node (or none); it is served there only
    /// if that node hosts its service.
    Static(Vec<Option<usize>>),
}

/// Energy drawn by a fog node for a given received workload (cycles) and
/// admission fraction.
pub fn energy(spec: &crate::scenario::FogNodeSpec, workload_cycles: f64, admitted: f64) -> f64 {
    spec.static_energy_wh + spec.unit_energy_wh * admitted * workload_cycles
}

/// Everything derived from one hosting profile at the admission it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub assignment: Assignment,
    pub admission: AdmissionProfile,
    pub sensor_delay: Vec<f64>,
    pub energy: Vec<f64>,
    pub total_delay: f64,
    pub objective: f64,
    /// Whether the total delay respects the per-slot delay cap.
    pub delay_feasible: bool,
    /// Tasks per slot processed on fog nodes.
    pub fog_processed: f64,
}

/// Buffers reused across evaluations inside the samplers.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch {
    pub server: Vec<Option<usize>>,
    /// Flattened `[n][k]` received tasks.
    pub load: Vec<f64>,
    pub workload: Vec<f64>,
    pub gain: Vec<f64>,
    pub received: Vec<f64>,
    pub admitted: Vec<f64>,
    pub energy: Vec<f64>,
    pub delay: Vec<f64>,
}

/// One slot of problem P2: minimize `V·ΣD + Σ q·E` over hosting profiles.
#[derive(Debug, Clone)]
pub struct SlotProblem<'a> {
    pub scenario: &'a Scenario,
    pub ctx: &'a SlotContext,
    pub queues: &'a [f64],
    pub v: f64,
    /// Per-node ceiling on slot energy used when admitting work.
    pub energy_caps: Vec<f64>,
    pub delay_cap: f64,
    pub association: Association,
    /// Per-sensor fog nodes in association preference order.
    preference: Vec<Vec<usize>>,
    /// Per-task delay when sensor `m`'s task runs in the cloud.
    cloud_task_delay: Vec<f64>,
    all_cloud_delay: f64,
    candidates: Vec<Vec<ServiceMask>>,
}

impl<'a> SlotProblem<'a> {
    /// Default caps: per-node `E^max`, and the all-cloud delay of the slot as
    /// the delay cap.
    pub fn new(scenario: &'a Scenario, ctx: &'a SlotContext, queues: &'a [f64], v: f64) -> Self {
        assert_eq!(queues.len(), scenario.fog_count(), "one queue per fog node");
        assert_eq!(ctx.demand.len(), scenario.sensor_count(), "one demand per sensor");
        let cloud_task_delay: Vec<f64> = scenario
            .sensors
            .iter()
            .map(|s| {
                let svc = &scenario.catalog[s.service];
                svc.cpu_cycles / scenario.cloud.cpu_hz + svc.input_bits / ctx.backbone_bps + ctx.rtt_s
            })
            .collect();
        let all_cloud_delay = ctx
            .demand
            .iter()
            .zip(&cloud_task_delay)
            .map(|(d, c)| d * c)
            .sum();
        let candidates = scenario
            .fog_nodes
            .iter()
            .map(|f| capacity_masks(scenario.catalog.len(), f.capacity))
            .collect();
        let mut problem = SlotProblem {
            scenario,
            ctx,
            queues,
            v,
            energy_caps: scenario.fog_nodes.iter().map(|f| f.energy_cap_wh).collect(),
            delay_cap: all_cloud_delay,
            association: Association::BestChannel,
            preference: Vec::new(),
            cloud_task_delay,
            all_cloud_delay,
            candidates,
        };
        problem.preference = problem.build_preference();
        problem
    }

    pub fn with_energy_caps(mut self, caps: Vec<f64>) -> Self {
        assert_eq!(caps.len(), self.scenario.fog_count());
        self.energy_caps = caps;
        self
    }

    pub fn with_delay_cap(mut self, cap: f64) -> Self {
        self.delay_cap = cap;
        self
    }

    pub fn with_association(mut self, association: Association) -> Self {
        self.association = association;
        self.preference = self.build_preference();
        self
    }

    fn build_preference(&self) -> Vec<Vec<usize>> {
        let topo = &self.scenario.topology;
        match &self.association {
            Association::BestChannel => topo
                .reachable
                .iter()
                .zip(&self.ctx.channel)
                .map(|(fogs, gains)| {
                    let mut order: Vec<usize> = (0..fogs.len()).collect();
                    // fogs is ascending, so a stable sort keeps lower ids first on ties
                    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
                    order.into_iter().map(|x| fogs[x]).collect()
                })
                .collect(),
            Association::Static(bound) => bound.iter().map(|b| b.iter().copied().collect()).collect(),
        }
    }

    pub fn fog_count(&self) -> usize {
        self.scenario.fog_count()
    }

    /// Feasible hosting decisions of node `n`: every service set within
    /// capacity, ascending by mask value.
    pub fn candidates(&self, n: usize) -> &[ServiceMask] {
        &self.candidates[n]
    }

    /// Total delay if every sensor goes to the cloud.
    pub fn all_cloud_delay(&self) -> f64 {
        self.all_cloud_delay
    }

    pub(crate) fn delay_cap_can_bind(&self) -> bool {
        self.delay_cap < self.all_cloud_delay
    }

    pub fn cloud_task_delay(&self, m: usize) -> f64 {
        self.cloud_task_delay[m]
    }

    /// Association rule applied to a hosting profile.
    pub fn associate(&self, hosting: &HostingProfile) -> Assignment {
        let k = self.scenario.catalog.len();
        let mut load = vec![vec![0.0; k]; self.fog_count()];
        let server: Vec<Option<usize>> = (0..self.scenario.sensor_count())
            .map(|m| self.server_of(m, hosting.masks()))
            .collect();
        for (m, s) in server.iter().enumerate() {
            if let Some(n) = *s {
                load[n][self.scenario.sensors[m].service] += self.ctx.demand[m];
            }
        }
        Assignment { server, load }
    }

    #[inline]
    fn server_of(&self, m: usize, masks: &[ServiceMask]) -> Option<usize> {
        let bit = 1u64 << self.scenario.sensors[m].service;
        self.preference[m].iter().copied().find(|&n| masks[n] & bit != 0)
    }

    /// Delay of sensor `m` under an assignment and admission.
    pub fn delay(&self, m: usize, assignment: &Assignment, admission: &AdmissionProfile) -> f64 {
        let d = self.ctx.demand[m];
        let cloud = self.cloud_task_delay[m];
        match assignment.server[m] {
            None => d * cloud,
            Some(n) => {
                let b = admission.fractions[n];
                let fog = self.fog_task_delay(m, n);
                b * d * fog + (1.0 - b) * d * cloud
            }
        }
    }

    #[inline]
    fn fog_task_delay(&self, m: usize, n: usize) -> f64 {
        self.scenario.catalog[self.scenario.sensors[m].service].cpu_cycles
            / self.scenario.fog_nodes[n].cpu_hz
    }

    /// `V·ΣD + Σ q·E` at an arbitrary admission profile.
    pub fn objective(&self, hosting: &HostingProfile, admission: &AdmissionProfile) -> f64 {
        let assignment = self.associate(hosting);
        let delay: f64 = (0..self.scenario.sensor_count())
            .map(|m| self.delay(m, &assignment, admission))
            .sum();
        let penalty: f64 = (0..self.fog_count())
            .map(|n| {
                let w = assignment.workload(self.scenario, n);
                self.queues[n] * energy(&self.scenario.fog_nodes[n], w, admission.fractions[n])
            })
            .sum();
        self.v * delay + penalty
    }

    /// Full evaluation of a hosting profile at its optimal admission.
    pub fn evaluate(&self, hosting: &HostingProfile) -> Evaluation {
        let mut scratch = Scratch::default();
        let objective = self.evaluate_into(hosting.masks(), &mut scratch);
        let assignment = self.associate(hosting);
        let total_delay: f64 = scratch.delay.iter().sum();
        let fog_processed = scratch
            .received
            .iter()
            .zip(&scratch.admitted)
            .map(|(r, b)| r * b)
            .sum();
        Evaluation {
            assignment,
            admission: AdmissionProfile {
                fractions: scratch.admitted.clone(),
            },
            sensor_delay: scratch.delay.clone(),
            energy: scratch.energy.clone(),
            total_delay,
            objective,
            delay_feasible: total_delay <= self.delay_cap,
            fog_processed,
        }
    }

    /// The reduced objective `L(a)`: the P2 objective at the optimal
    /// admission for `hosting`.
    pub fn reduced_objective(&self, hosting: &HostingProfile) -> f64 {
        self.evaluate_into(hosting.masks(), &mut Scratch::default())
    }

    /// Fills `scratch` with association, optimal admission, energy and
    /// per-sensor delay, and returns the objective.
    pub(crate) fn evaluate_into(&self, masks: &[ServiceMask], scratch: &mut Scratch) -> f64 {
        let scenario = self.scenario;
        let n_fog = self.fog_count();
        let n_sen = scenario.sensor_count();
        scratch.server.clear();
        let k = scenario.catalog.len();
        scratch.load.clear();
        scratch.load.resize(n_fog * k, 0.0);
        scratch.workload.clear();
        scratch.gain.clear();
        scratch.gain.resize(n_fog, 0.0);
        scratch.received.clear();
        scratch.received.resize(n_fog, 0.0);

        for m in 0..n_sen {
            let server = self.server_of(m, masks);
            scratch.server.push(server);
            if let Some(n) = server {
                let d = self.ctx.demand[m];
                scratch.load[n * k + scenario.sensors[m].service] += d;
                scratch.gain[n] += d * (self.fog_task_delay(m, n) - self.cloud_task_delay[m]);
                scratch.received[n] += d;
            }
        }

        scratch.admitted.clear();
        scratch.energy.clear();
        let mut penalty = 0.0;
        for n in 0..n_fog {
            let spec = &scenario.fog_nodes[n];
            scratch
                .workload
                .push(cycles(&scratch.load[n * k..(n + 1) * k], scenario));
            let b = admission::admit_fraction(
                spec,
                scratch.workload[n],
                scratch.gain[n],
                self.queues[n],
                self.v,
                self.energy_caps[n],
            );
            let e = energy(spec, scratch.workload[n], b);
            scratch.admitted.push(b);
            scratch.energy.push(e);
            penalty += self.queues[n] * e;
        }

        scratch.delay.clear();
        let mut delay = 0.0;
        for m in 0..n_sen {
            let d = self.ctx.demand[m];
            let cloud = self.cloud_task_delay[m];
            let dm = match scratch.server[m] {
                None => d * cloud,
                Some(n) => {
                    let b = scratch.admitted[n];
                    b * d * self.fog_task_delay(m, n) + (1.0 - b) * d * cloud
                }
            };
            scratch.delay.push(dm);
            delay += dm;
        }
        self.v * delay + penalty
    }

    /// Admission and energy of node `n` under `masks`, computed from its own
    /// coverage only. Matches `evaluate_into` to the last bit.
    fn node_admission(&self, n: usize, masks: &[ServiceMask], load: &mut [f64]) -> (f64, f64) {
        let scenario = self.scenario;
        load.fill(0.0);
        let mut gain = 0.0;
        for &m in &scenario.topology.coverage[n] {
            if self.server_of(m, masks) == Some(n) {
                let d = self.ctx.demand[m];
                load[scenario.sensors[m].service] += d;
                gain += d * (self.fog_task_delay(m, n) - self.cloud_task_delay[m]);
            }
        }
        let spec = &scenario.fog_nodes[n];
        let workload = cycles(load, scenario);
        let b = admission::admit_fraction(
            spec,
            workload,
            gain,
            self.queues[n],
            self.v,
            self.energy_caps[n],
        );
        (b, energy(spec, workload, b))
    }

    /// `L_Ω(i)` under `masks`, touching only the nodes and sensors it
    /// depends on. Same value as `evaluate_into` followed by `local_from`.
    pub(crate) fn local_into(&self, i: usize, masks: &[ServiceMask], scratch: &mut Scratch) -> f64 {
        let scenario = self.scenario;
        let topo = &scenario.topology;
        let n_fog = self.fog_count();
        scratch.load.clear();
        scratch.load.resize(scenario.catalog.len(), 0.0);
        scratch.admitted.clear();
        scratch.admitted.resize(n_fog, f64::NAN);
        scratch.energy.clear();
        scratch.energy.resize(n_fog, f64::NAN);
        for &n in &topo.neighborhood[i] {
            let (b, e) = self.node_admission(n, masks, &mut scratch.load);
            scratch.admitted[n] = b;
            scratch.energy[n] = e;
        }
        let delay: f64 = topo.local_sensors[i]
            .iter()
            .map(|&m| {
                let d = self.ctx.demand[m];
                let cloud = self.cloud_task_delay[m];
                match self.server_of(m, masks) {
                    None => d * cloud,
                    Some(n) => {
                        if scratch.admitted[n].is_nan() {
                            let (b, e) = self.node_admission(n, masks, &mut scratch.load);
                            scratch.admitted[n] = b;
                            scratch.energy[n] = e;
                        }
                        let b = scratch.admitted[n];
                        b * d * self.fog_task_delay(m, n) + (1.0 - b) * d * cloud
                    }
                }
            })
            .sum();
        let penalty: f64 = topo.neighborhood[i]
            .iter()
            .map(|&n| self.queues[n] * scratch.energy[n])
            .sum();
        self.v * delay + penalty
    }

    /// Local objective of node `i` read from a filled scratch: delay of the
    /// sensors covered by its one-hop neighborhood plus the queue-weighted
    /// energy of that neighborhood.
    pub(crate) fn local_from(&self, i: usize, scratch: &Scratch) -> f64 {
        let topo = &self.scenario.topology;
        let delay: f64 = topo.local_sensors[i].iter().map(|&m| scratch.delay[m]).sum();
        let penalty: f64 = topo.neighborhood[i]
            .iter()
            .map(|&n| self.queues[n] * scratch.energy[n])
            .sum();
        self.v * delay + penalty
    }

    /// `L_Ω(i)` at the optimal admission for `hosting`.
    pub fn local_objective(&self, i: usize, hosting: &HostingProfile) -> f64 {
        let mut scratch = Scratch::default();
        self.evaluate_into(hosting.masks(), &mut scratch);
        self.local_from(i, &scratch)
    }

    /// Checks a proposed decision against capacity, admission range, the
    /// per-slot energy caps and the delay cap.
    pub fn check_feasible(
        &self,
        hosting: &HostingProfile,
        admission: &AdmissionProfile,
    ) -> Result<(), Infeasibility> {
        hosting.check_capacity(self.scenario)?;
        let assignment = self.associate(hosting);
        for (n, &b) in admission.fractions.iter().enumerate() {
            if !(0.0..=1.0).contains(&b) {
                return Err(Infeasibility::Admission { node: n, value: b });
            }
            let e = energy(
                &self.scenario.fog_nodes[n],
                assignment.workload(self.scenario, n),
                b,
            );
            if e > self.energy_caps[n] {
                return Err(Infeasibility::EnergyCap {
                    node: n,
                    energy_wh: e,
                    cap_wh: self.energy_caps[n],
                });
            }
        }
        let delay: f64 = (0..self.scenario.sensor_count())
            .map(|m| self.delay(m, &assignment, admission))
            .sum();
        if delay > self.delay_cap {
            return Err(Infeasibility::DelayCap {
                delay_s: delay,
                cap_s: self.delay_cap,
            });
        }
        Ok(())
    }
}

/// All service sets of size at most `capacity` over `services` services,
/// ascending by mask value.
pub fn capacity_masks(services: usize, capacity: usize) -> Vec<ServiceMask> {
    assert!(services <= 20, "candidate enumeration limited to 20 services");
    (0..1u64 << services)
        .filter(|m| m.count_ones() as usize <= capacity)
        .collect()
}
