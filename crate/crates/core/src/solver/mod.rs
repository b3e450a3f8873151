//! Per-slot solvers for the hosting problem.
//!
//! Admission is solved in closed form for any hosting profile
//! ([`admission`]), which leaves a combinatorial search over hosting. The
//! samplers in [`gibbs`] anneal a Gibbs chain over that space; [`brute`]
//! enumerates it exactly for small instances.

pub mod admission;
pub mod brute;
pub mod gibbs;
pub mod schedule;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use admission::{admit_fraction, optimal_admission, AdmissionDecision};
pub use brute::{brute_force, search_space, DEFAULT_ENUMERATION_CAP};
pub use gibbs::{
    blanket_conditional, check_coloring, conditional_distribution, conditional_from_global,
    ColorOrder, Conditional, GibbsChain,
};
pub use schedule::{AnnealSchedule, Cooling, InitialTemperature};

use crate::error::Result;
use crate::model::{Evaluation, HostingProfile, SlotProblem};
use gibbs::Scan;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub sweeps: usize,
    /// Rounds of parallel time: one node update (sequential) or one
    /// colorset step (chromatic).
    pub rounds: usize,
    /// Individual node updates (for brute force: profiles visited).
    pub updates: usize,
    pub rounds_per_sweep: usize,
    /// Rounds until the objective stayed within tolerance of its final value.
    pub plateau_round: usize,
    pub plateau_sweep: usize,
    pub converged: bool,
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub stalled_updates: usize,
}

/// One row of a sampler's convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: usize,
    pub sweep: usize,
    pub sigma: f64,
    pub objective: f64,
    /// Nodes updated in this round.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub hosting: HostingProfile,
    pub objective: f64,
    /// Admission, energy and delay at `hosting`.
    pub evaluation: Evaluation,
    pub stats: SolveStats,
    pub trace: Vec<TraceRow>,
}

/// A solver for one slot's problem.
pub trait P2Solver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, problem: &SlotProblem<'_>, rng: &mut ChaCha8Rng) -> Result<Solution>;
}

/// Annealed sequential Gibbs sampling: nodes updated one at a time in id
/// order.
#[derive(Debug, Clone, Default)]
pub struct SequentialGibbs {
    pub schedule: AnnealSchedule,
    pub record_trace: bool,
}

pub fn sequential_gibbs(
    problem: &SlotProblem<'_>,
    schedule: &AnnealSchedule,
    rng: &mut ChaCha8Rng,
) -> Result<Solution> {
    SequentialGibbs {
        schedule: schedule.clone(),
        record_trace: false,
    }
    .solve(problem, rng)
}

impl P2Solver for SequentialGibbs {
    fn name(&self) -> &'static str {
        "sequential"
    }

    fn solve(&self, problem: &SlotProblem<'_>, rng: &mut ChaCha8Rng) -> Result<Solution> {
        gibbs::anneal(
            problem,
            &self.schedule,
            Scan::Sequential,
            HostingProfile::empty(problem.fog_count()),
            rng,
            self.record_trace,
        )
    }
}

/// Annealed chromatic parallel Gibbs sampling: all nodes of one colorset
/// update simultaneously from the previous iteration's decisions.
#[derive(Debug, Clone)]
pub struct Cpgs {
    pub schedule: AnnealSchedule,
    pub order: ColorOrder,
    /// Colorsets at least this large are updated on the rayon pool.
    pub parallel_min_colorset: usize,
    pub record_trace: bool,
}

impl Default for Cpgs {
    fn default() -> Self {
        Cpgs {
            schedule: AnnealSchedule::default(),
            order: ColorOrder::RoundRobin,
            parallel_min_colorset: 8,
            record_trace: false,
        }
    }
}

pub fn cpgs(
    problem: &SlotProblem<'_>,
    schedule: &AnnealSchedule,
    order: ColorOrder,
    rng: &mut ChaCha8Rng,
) -> Result<Solution> {
    Cpgs {
        schedule: schedule.clone(),
        order,
        ..Cpgs::default()
    }
    .solve(problem, rng)
}

impl P2Solver for Cpgs {
    fn name(&self) -> &'static str {
        "cpgs"
    }

    fn solve(&self, problem: &SlotProblem<'_>, rng: &mut ChaCha8Rng) -> Result<Solution> {
        gibbs::anneal(
            problem,
            &self.schedule,
            Scan::Chromatic {
                order: self.order,
                parallel_min_colorset: self.parallel_min_colorset,
            },
            HostingProfile::empty(problem.fog_count()),
            rng,
            self.record_trace,
        )
    }
}

/// Exhaustive search; refuses spaces larger than `cap` profiles.
#[derive(Debug, Clone)]
pub struct BruteForce {
    pub cap: f64,
}

impl Default for BruteForce {
    fn default() -> Self {
        BruteForce {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl P2Solver for BruteForce {
    fn name(&self) -> &'static str {
        "brute_force"
    }

    fn solve(&self, problem: &SlotProblem<'_>, _rng: &mut ChaCha8Rng) -> Result<Solution> {
        brute_force(problem, self.cap)
    }
}

/// Solver choice as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Cpgs,
    Sequential,
    BruteForce,
}

impl SolverKind {
    pub fn build(self, schedule: &AnnealSchedule, order: ColorOrder) -> Box<dyn P2Solver> {
        match self {
            SolverKind::Cpgs => Box::new(Cpgs {
                schedule: schedule.clone(),
                order,
                ..Cpgs::default()
            }),
            SolverKind::Sequential => Box::new(SequentialGibbs {
                schedule: schedule.clone(),
                record_trace: false,
            }),
            SolverKind::BruteForce => Box::new(BruteForce::default()),
        }
    }
}
