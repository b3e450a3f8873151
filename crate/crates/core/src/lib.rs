//! Adaptive service hosting and workload admission for cooperative fog
//! networks under long-term energy budgets.
//!
//! A slot-by-slot controller keeps one virtual energy-deficit queue per fog
//! node ([`lyapunov`]) and, every slot, solves a hosting/admission problem
//! ([`model`]) with an annealed Gibbs sampler ([`solver`]). Admission has a
//! closed form given hosting; hosting is searched by sampling, either one
//! node at a time or one colorset of the conflict graph at a time.
//!
//! ```
//! use fogcfg_core::{lyapunov, scenario, solver};
//!
//! let mut cfg = scenario::ScenarioConfig::desk();
//! cfg.expected_sensors = 8.0;
//! let scn = scenario::Scenario::generate(&cfg, 7).unwrap();
//! let ctl = lyapunov::ControllerConfig { horizon: 3, ..Default::default() };
//! let trace = lyapunov::run_afc(&scn, Box::new(solver::Cpgs::default()), &ctl, 7).unwrap();
//! assert_eq!(trace.rows.len(), 3);
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod harness;
pub mod lyapunov;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod solver;

pub use baselines::BaselineKind;
pub use error::{Error, Infeasibility, Result};
pub use lyapunov::{simulate, ControllerConfig, DeficitQueues, SlotPolicy};
pub use metrics::{MetricsTrace, SlotRecord, Summary};
pub use model::{AdmissionProfile, Association, Evaluation, HostingProfile, SlotProblem};
pub use scenario::{Scenario, ScenarioConfig, SlotContext};
pub use solver::{AnnealSchedule, ColorOrder, P2Solver, Solution, SolverKind};
