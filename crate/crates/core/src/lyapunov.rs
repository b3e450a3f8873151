//! Online control with virtual energy-deficit queues.
//!
//! Each node's queue grows by its overshoot of the per-slot budget and
//! drains when it underspends. Every slot the controller minimizes
//! `V·ΣD + Σ q·E`, then updates the queues with the realized energy.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricsTrace, SlotRecord};
use crate::model::{energy, AdmissionProfile, Association, HostingProfile, SlotProblem};
use crate::rng::{self, Domain};
use crate::scenario::{FogNodeSpec, Scenario, SlotContext};
use crate::solver::P2Solver;

/// `max{q + E − Q, 0}`.
pub fn update_queue(queue: f64, energy_wh: f64, budget_wh: f64) -> f64 {
    (queue + energy_wh - budget_wh).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitQueues {
    values: Vec<f64>,
}

impl DeficitQueues {
    pub fn new(fog_count: usize) -> Self {
        DeficitQueues {
            values: vec![0.0; fog_count],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn update(&mut self, energy_wh: &[f64], budgets_wh: &[f64]) {
        for ((q, &e), &b) in self.values.iter_mut().zip(energy_wh).zip(budgets_wh) {
            *q = update_queue(*q, e, b);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Weight of delay against queue-weighted energy.
    pub v: f64,
    pub horizon: usize,
    /// Per-slot cap on total delay. `None` uses each slot's all-cloud
    /// delay, which every slot can meet.
    pub delay_cap_s: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            v: 1000.0,
            horizon: 500,
            delay_cap_s: None,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.v > 0.0 && self.v.is_finite()) {
            errs.push(format!("v must be positive, got {}", self.v));
        }
        if self.horizon == 0 {
            errs.push("horizon must be at least 1".into());
        }
        if let Some(d) = self.delay_cap_s {
            if !(d > 0.0) {
                errs.push(format!("delay_cap_s must be positive, got {d}"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// Constants of the delay and deficit bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `½ Σ_n (E^max_n − Q_n)²`, Wh².
    pub b: f64,
    pub v: f64,
    pub epsilon: f64,
    pub reference_delay_s: f64,
    pub delay_cap_s: f64,
    /// `B / V`: excess of long-run delay over the optimum.
    pub delay_bound_term: f64,
    /// `(B + V·(D^max − D_ref)) / ε`: bound on long-run deficit.
    pub deficit_bound_term: f64,
}

/// Bound constants for the given nodes. `epsilon` is the energy slack of
/// some stationary policy and must be supplied by the caller.
pub fn bound_report(
    specs: &[FogNodeSpec],
    v: f64,
    delay_cap_s: f64,
    reference_delay_s: f64,
    epsilon: f64,
) -> BoundReport {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let b = 0.5
        * specs
            .iter()
            .map(|f| (f.energy_cap_wh - f.budget_wh).powi(2))
            .sum::<f64>();
    BoundReport {
        b,
        v,
        epsilon,
        reference_delay_s,
        delay_cap_s,
        delay_bound_term: b / v,
        deficit_bound_term: (b + v * (delay_cap_s - reference_delay_s)) / epsilon,
    }
}

/// Supplies the demand rates the controller plans with.
pub trait DemandPredictor: Send {
    fn predict(&mut self, ctx: &SlotContext) -> Vec<f64>;
}

/// Plans with the generator's own rates.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPredictor;

impl DemandPredictor for IdentityPredictor {
    fn predict(&mut self, ctx: &SlotContext) -> Vec<f64> {
        ctx.demand.clone()
    }
}

/// What a policy commits to for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub hosting: HostingProfile,
    pub admission: AdmissionProfile,
    pub association: Association,
}

/// A per-slot decision rule driven by the simulation loop.
pub trait SlotPolicy {
    fn name(&self) -> &str;
    fn decide(
        &mut self,
        scenario: &Scenario,
        ctx: &SlotContext,
        queues: &[f64],
        config: &ControllerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision>;
}

/// The drift-plus-penalty controller with an injected per-slot solver.
pub struct Afc<S: P2Solver + ?Sized = dyn P2Solver> {
    pub predictor: Box<dyn DemandPredictor>,
    pub solver: Box<S>,
}

impl<S: P2Solver + ?Sized> Afc<S> {
    pub fn new(solver: Box<S>) -> Self {
        Afc {
            predictor: Box::new(IdentityPredictor),
            solver,
        }
    }
}

impl<S: P2Solver + ?Sized> SlotPolicy for Afc<S> {
    fn name(&self) -> &str {
        "afc"
    }

    fn decide(
        &mut self,
        scenario: &Scenario,
        ctx: &SlotContext,
        queues: &[f64],
        config: &ControllerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision> {
        let planned = SlotContext {
            demand: self.predictor.predict(ctx),
            ..ctx.clone()
        };
        let mut problem = SlotProblem::new(scenario, &planned, queues, config.v);
        if let Some(cap) = config.delay_cap_s {
            problem = problem.with_delay_cap(cap);
        }
        let solution = self.solver.solve(&problem, rng)?;
        Ok(Decision {
            hosting: solution.hosting,
            admission: solution.evaluation.admission,
            association: Association::BestChannel,
        })
    }
}

/// Runs `policy` for `config.horizon` slots. Slot `t` observes
/// `scenario.generate_slot(t, seed)` and the policy draws from solver stream
/// `t`, so any slot can be replayed alone. Every decision is checked for
/// capacity, the per-slot energy cap and the delay cap before its energy is
/// charged to the queues.
pub fn simulate(
    scenario: &Scenario,
    policy: &mut dyn SlotPolicy,
    config: &ControllerConfig,
    seed: u64,
) -> Result<MetricsTrace> {
    config.validate().map_err(Error::Config)?;
    let budgets: Vec<f64> = scenario.fog_nodes.iter().map(|f| f.budget_wh).collect();
    let mut trace = MetricsTrace::new(policy.name(), seed, budgets.clone());
    let mut queues = DeficitQueues::new(scenario.fog_count());

    for t in 0..config.horizon {
        let ctx = scenario.generate_slot(t, seed);
        let mut rng = rng::stream(seed, Domain::Solver, t as u64);
        let decision = policy.decide(scenario, &ctx, queues.values(), config, &mut rng)?;

        let mut problem = SlotProblem::new(scenario, &ctx, queues.values(), config.v)
            .with_association(decision.association.clone());
        if let Some(cap) = config.delay_cap_s {
            problem = problem.with_delay_cap(cap);
        }
        problem
            .check_feasible(&decision.hosting, &decision.admission)
            .map_err(|source| Error::Infeasible { slot: t, source })?;

        let assignment = problem.associate(&decision.hosting);
        let sum_delay_s: f64 = (0..scenario.sensor_count())
            .map(|m| problem.delay(m, &assignment, &decision.admission))
            .sum();
        let energy_wh: Vec<f64> = (0..scenario.fog_count())
            .map(|n| {
                energy(
                    &scenario.fog_nodes[n],
                    assignment.workload(scenario, n),
                    decision.admission.fractions[n],
                )
            })
            .collect();
        let fog_demand: f64 = assignment
            .load
            .iter()
            .zip(&decision.admission.fractions)
            .map(|(load, b)| b * load.iter().sum::<f64>())
            .sum();
        let cloud_demand = (ctx.total_demand() - fog_demand).max(0.0);

        queues.update(&energy_wh, &budgets);
        trace.rows.push(SlotRecord {
            t,
            sum_delay_s,
            energy_wh,
            queue_wh: queues.values().to_vec(),
            fog_demand,
            cloud_demand,
        });
    }
    Ok(trace)
}

/// The full controller with the given solver.
pub fn run_afc(
    scenario: &Scenario,
    solver: Box<dyn P2Solver>,
    config: &ControllerConfig,
    seed: u64,
) -> Result<MetricsTrace> {
    simulate(scenario, &mut Afc::new(solver), config, seed)
}
