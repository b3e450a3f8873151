//! Comparison strategies: delay-only optimization, non-cooperative hosting
//! and a hard per-slot energy cap.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{ControllerConfig, Decision, SlotPolicy};
use crate::model::{Association, HostingProfile, SlotProblem};
use crate::scenario::{path_loss_db, Scenario, SlotContext};
use crate::solver::P2Solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    DOptimal,
    Ncop,
    Ssc,
}

impl BaselineKind {
    pub fn label(self) -> &'static str {
        match self {
            BaselineKind::DOptimal => "d_optimal",
            BaselineKind::Ncop => "ncop",
            BaselineKind::Ssc => "ssc",
        }
    }
}

/// Minimizes delay alone: queues are ignored, only the structural per-slot
/// energy cap limits admission.
pub struct DOptimal {
    pub solver: Box<dyn P2Solver>,
}

impl SlotPolicy for DOptimal {
    fn name(&self) -> &str {
        BaselineKind::DOptimal.label()
    }

    fn decide(
        &mut self,
        scenario: &Scenario,
        ctx: &SlotContext,
        _queues: &[f64],
        config: &ControllerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision> {
        let zero = vec![0.0; scenario.fog_count()];
        let mut problem = SlotProblem::new(scenario, ctx, &zero, config.v);
        if let Some(cap) = config.delay_cap_s {
            problem = problem.with_delay_cap(cap);
        }
        let sol = self.solver.solve(&problem, rng)?;
        Ok(Decision {
            hosting: sol.hosting,
            admission: sol.evaluation.admission,
            association: Association::BestChannel,
        })
    }
}

/// Each sensor's node under distance-only channels: strongest mean gain
/// among reachable nodes, ties to the lower id. `None` for a sensor no node
/// reaches.
pub fn static_association(scenario: &Scenario) -> Vec<Option<usize>> {
    scenario
        .topology
        .reachable
        .iter()
        .enumerate()
        .map(|(m, fogs)| {
            fogs.iter().copied().reduce(|best, n| {
                let gain = -path_loss_db(scenario.link_distance(m, n));
                let best_gain = -path_loss_db(scenario.link_distance(m, best));
                if gain > best_gain {
                    n
                } else {
                    best
                }
            })
        })
        .collect()
}

/// Each node hosts the (at most) `capacity` services with the largest
/// demand among its own sensors, ties to the lower service id. Services
/// with no demand are not hosted.
pub fn ncop_hosting(scenario: &Scenario, demand: &[f64], bound: &[Option<usize>]) -> HostingProfile {
    let k = scenario.catalog.len();
    let mut per_node = vec![vec![0.0; k]; scenario.fog_count()];
    for (m, owner) in bound.iter().enumerate() {
        if let Some(n) = *owner {
            per_node[n][scenario.sensors[m].service] += demand[m];
        }
    }
    let masks = per_node
        .iter()
        .zip(&scenario.fog_nodes)
        .map(|(dem, spec)| {
            let mut order: Vec<usize> = (0..k).filter(|&s| dem[s] > 0.0).collect();
            order.sort_by(|&a, &b| dem[b].total_cmp(&dem[a]).then(a.cmp(&b)));
            order.iter().take(spec.capacity).fold(0u64, |mask, &s| mask | 1 << s)
        })
        .collect();
    HostingProfile::from_masks(masks)
}

/// Non-cooperative: every node serves a fixed set of sensors, hosts its
/// most demanded services and admits work against its own queue.
pub struct Ncop {
    bound: Vec<Option<usize>>,
}

impl Ncop {
    pub fn new(scenario: &Scenario) -> Self {
        Ncop {
            bound: static_association(scenario),
        }
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.bound
    }
}

impl SlotPolicy for Ncop {
    fn name(&self) -> &str {
        BaselineKind::Ncop.label()
    }

    fn decide(
        &mut self,
        scenario: &Scenario,
        ctx: &SlotContext,
        queues: &[f64],
        config: &ControllerConfig,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Decision> {
        let hosting = ncop_hosting(scenario, &ctx.demand, &self.bound);
        let association = Association::Static(self.bound.clone());
        let problem =
            SlotProblem::new(scenario, ctx, queues, config.v).with_association(association.clone());
        let admission = problem.evaluate(&hosting).admission;
        Ok(Decision {
            hosting,
            admission,
            association,
        })
    }
}

/// Delay minimization under the hard cap `E_n ≤ Q_n` in every slot.
pub struct Ssc {
    pub solver: Box<dyn P2Solver>,
}

impl Ssc {
    /// Rejects scenarios where some node's static draw already exceeds its
    /// budget, since the per-slot cap could never be met.
    pub fn new(scenario: &Scenario, solver: Box<dyn P2Solver>) -> Result<Self> {
        let errs: Vec<String> = scenario
            .fog_nodes
            .iter()
            .filter(|f| f.static_energy_wh > f.budget_wh)
            .map(|f| format!("fog node {}: static energy exceeds budget", f.id))
            .collect();
        if errs.is_empty() {
            Ok(Ssc { solver })
        } else {
            Err(Error::Config(errs))
        }
    }
}

impl SlotPolicy for Ssc {
    fn name(&self) -> &str {
        BaselineKind::Ssc.label()
    }

    fn decide(
        &mut self,
        scenario: &Scenario,
        ctx: &SlotContext,
        _queues: &[f64],
        config: &ControllerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision> {
        let zero = vec![0.0; scenario.fog_count()];
        let caps = scenario.fog_nodes.iter().map(|f| f.budget_wh).collect();
        let mut problem = SlotProblem::new(scenario, ctx, &zero, config.v).with_energy_caps(caps);
        if let Some(cap) = config.delay_cap_s {
            problem = problem.with_delay_cap(cap);
        }
        let sol = self.solver.solve(&problem, rng)?;
        Ok(Decision {
            hosting: sol.hosting,
            admission: sol.evaluation.admission,
            association: Association::BestChannel,
        })
    }
}

/// Builds the policy for a baseline.
pub fn baseline_policy(
    kind: BaselineKind,
    scenario: &Scenario,
    solver: Box<dyn P2Solver>,
) -> Result<Box<dyn SlotPolicy>> {
    Ok(match kind {
        BaselineKind::DOptimal => Box::new(DOptimal { solver }),
        BaselineKind::Ncop => Box::new(Ncop::new(scenario)),
        BaselineKind::Ssc => Box::new(Ssc::new(scenario, solver)?),
    })
}
