//! Gibbs samplers over hosting profiles: the conditional update, sequential
//! scans and the chromatic parallel scan, plus the annealing driver both
//! share.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::schedule::AnnealSchedule;
use super::{Solution, SolveStats, TraceRow};
use crate::error::{Error, Result};
use crate::model::{HostingProfile, Scratch, ServiceMask, SlotProblem};
use crate::scenario::Topology;

/// Distribution of node `i`'s next hosting decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub candidates: Vec<ServiceMask>,
    /// Local objective of each candidate.
    pub local: Vec<f64>,
    pub feasible: Vec<bool>,
    /// `None` when no candidate satisfies the delay cap.
    pub probabilities: Option<Vec<f64>>,
}

/// `p(a_i) ∝ exp(−L_Ω(a_i)/σ)` over the feasible candidates, with the
/// minimum subtracted before exponentiating. Infeasible candidates get
/// probability zero.
pub fn gibbs_weights(local: &[f64], feasible: &[bool], sigma: f64) -> Option<Vec<f64>> {
    let min = local
        .iter()
        .zip(feasible)
        .filter(|(_, &ok)| ok)
        .map(|(&l, _)| l)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = local
        .iter()
        .zip(feasible)
        .map(|(&l, &ok)| if ok { (-(l - min) / sigma).exp() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Some(w)
}

/// Inverse-CDF draw with a pre-drawn uniform in `[0, 1)`.
pub fn sample_index(probabilities: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (x, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = x;
        if u < acc {
            return x;
        }
    }
    last
}

/// Scores every candidate of node `i`.
///
/// `view` is the profile the node evaluates against; its entry `i` is
/// overwritten and restored. When the delay cap can bind, feasibility is
/// judged on `truth` (the full profile) instead of on the view.
fn score_candidates(
    problem: &SlotProblem<'_>,
    i: usize,
    view: &mut [ServiceMask],
    truth: Option<&mut [ServiceMask]>,
    scratch: &mut Scratch,
    local: &mut Vec<f64>,
    feasible: &mut Vec<bool>,
) {
    local.clear();
    feasible.clear();
    let saved = view[i];
    let check_delay = problem.delay_cap_can_bind();
    let mut truth = truth;
    for &cand in problem.candidates(i) {
        view[i] = cand;
        if !check_delay {
            local.push(problem.local_into(i, view, scratch));
            feasible.push(true);
            continue;
        }
        problem.evaluate_into(view, scratch);
        local.push(problem.local_from(i, scratch));
        let ok = if let Some(t) = truth.as_deref_mut() {
            let keep = t[i];
            t[i] = cand;
            problem.evaluate_into(t, scratch);
            t[i] = keep;
            scratch.delay.iter().sum::<f64>() <= problem.delay_cap
        } else {
            scratch.delay.iter().sum::<f64>() <= problem.delay_cap
        };
        feasible.push(ok);
    }
    view[i] = saved;
}

/// Conditional update distribution of node `i` given the rest of `hosting`,
/// from its local objective.
pub fn conditional_distribution(
    problem: &SlotProblem<'_>,
    i: usize,
    hosting: &HostingProfile,
    sigma: f64,
) -> Conditional {
    let mut view = hosting.masks().to_vec();
    let mut scratch = Scratch::default();
    let (mut local, mut feasible) = (Vec::new(), Vec::new());
    score_candidates(problem, i, &mut view, None, &mut scratch, &mut local, &mut feasible);
    let probabilities = gibbs_weights(&local, &feasible, sigma);
    Conditional {
        candidates: problem.candidates(i).to_vec(),
        local,
        feasible,
        probabilities,
    }
}

/// The same distribution computed from the full objective `L(a)` rather
/// than the local one. Used to cross-check the blanket property.
pub fn conditional_from_global(
    problem: &SlotProblem<'_>,
    i: usize,
    hosting: &HostingProfile,
    sigma: f64,
) -> Conditional {
    let mut view = hosting.masks().to_vec();
    let mut scratch = Scratch::default();
    let mut local = Vec::new();
    let mut feasible = Vec::new();
    for &cand in problem.candidates(i) {
        view[i] = cand;
        local.push(problem.evaluate_into(&view, &mut scratch));
        feasible.push(scratch.delay.iter().sum::<f64>() <= problem.delay_cap);
    }
    let probabilities = gibbs_weights(&local, &feasible, sigma);
    Conditional {
        candidates: problem.candidates(i).to_vec(),
        local,
        feasible,
        probabilities,
    }
}

/// The profile node `i` sees when only its own and its blanket's decisions
/// have been exchanged; every other node reads as hosting nothing.
pub fn blanket_view(topology: &Topology, i: usize, hosting: &[ServiceMask]) -> Vec<ServiceMask> {
    let mut view = vec![0; hosting.len()];
    view[i] = hosting[i];
    for &j in &topology.blanket[i] {
        view[j] = hosting[j];
    }
    view
}

/// Distribution node `i` computes in a chromatic step, from its blanket
/// view of `hosting`.
pub fn blanket_conditional(
    problem: &SlotProblem<'_>,
    i: usize,
    hosting: &HostingProfile,
    sigma: f64,
) -> Conditional {
    let mut view = blanket_view(&problem.scenario.topology, i, hosting.masks());
    let mut truth = hosting.masks().to_vec();
    let mut scratch = Scratch::default();
    let (mut local, mut feasible) = (Vec::new(), Vec::new());
    score_candidates(
        problem,
        i,
        &mut view,
        Some(&mut truth),
        &mut scratch,
        &mut local,
        &mut feasible,
    );
    let probabilities = gibbs_weights(&local, &feasible, sigma);
    Conditional {
        candidates: problem.candidates(i).to_vec(),
        local,
        feasible,
        probabilities,
    }
}

/// Colorset visiting order for chromatic sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorOrder {
    #[default]
    RoundRobin,
    Random,
}

/// Fails if two nodes of one colorset are in each other's blanket.
pub fn check_coloring(topology: &Topology) -> Result<()> {
    for (color, set) in topology.colorsets.iter().enumerate() {
        for &i in set {
            if let Some(&j) = topology.blanket[i].iter().find(|j| set.contains(j)) {
                return Err(Error::ImproperColoring(i.min(j), i.max(j), color));
            }
        }
    }
    Ok(())
}

/// A Markov chain over hosting profiles. Counts rounds of parallel time:
/// one sequential update or one chromatic step each.
pub struct GibbsChain<'p, 'a> {
    problem: &'p SlotProblem<'a>,
    state: HostingProfile,
    scratch: Scratch,
    local: Vec<f64>,
    feasible: Vec<bool>,
    /// Colorsets at or above this size are updated on the rayon pool.
    pub parallel_min_colorset: usize,
    pub rounds: usize,
    pub updates: usize,
    /// Updates skipped because no candidate met the delay cap.
    pub stalled: usize,
}

impl<'p, 'a> GibbsChain<'p, 'a> {
    pub fn new(problem: &'p SlotProblem<'a>, initial: HostingProfile) -> Self {
        assert_eq!(initial.len(), problem.fog_count());
        GibbsChain {
            problem,
            state: initial,
            scratch: Scratch::default(),
            local: Vec::new(),
            feasible: Vec::new(),
            parallel_min_colorset: usize::MAX,
            rounds: 0,
            updates: 0,
            stalled: 0,
        }
    }

    pub fn state(&self) -> &HostingProfile {
        &self.state
    }

    /// One sequential update of node `i` against the current full profile.
    pub fn update_node<R: Rng + ?Sized>(&mut self, i: usize, sigma: f64, rng: &mut R) {
        let mut masks = self.state.masks().to_vec();
        score_candidates(
            self.problem,
            i,
            &mut masks,
            None,
            &mut self.scratch,
            &mut self.local,
            &mut self.feasible,
        );
        let u: f64 = rng.random();
        match gibbs_weights(&self.local, &self.feasible, sigma) {
            Some(p) => self.state.set(i, self.problem.candidates(i)[sample_index(&p, u)]),
            None => self.stalled += 1,
        }
        self.rounds += 1;
        self.updates += 1;
    }

    /// Updates every node once, in id order.
    pub fn sequential_sweep<R: Rng + ?Sized>(&mut self, sigma: f64, rng: &mut R) {
        for i in 0..self.problem.fog_count() {
            self.update_node(i, sigma, rng);
        }
    }

    /// Updates all `members` simultaneously from a frozen snapshot, each
    /// seeing only its blanket. Uniforms are drawn up front in member order
    /// so the result does not depend on thread scheduling.
    pub fn color_step<R: Rng + ?Sized>(&mut self, members: &[usize], sigma: f64, rng: &mut R) {
        let snapshot = self.state.masks().to_vec();
        let uniforms: Vec<f64> = members.iter().map(|_| rng.random()).collect();
        let problem = self.problem;
        let topology = &problem.scenario.topology;
        let decide = |(&i, &u): (&usize, &f64), scratch: &mut Scratch| -> Option<ServiceMask> {
            let mut view = blanket_view(topology, i, &snapshot);
            let mut truth = snapshot.clone();
            let (mut local, mut feasible) = (Vec::new(), Vec::new());
            score_candidates(
                problem,
                i,
                &mut view,
                Some(&mut truth),
                scratch,
                &mut local,
                &mut feasible,
            );
            gibbs_weights(&local, &feasible, sigma).map(|p| problem.candidates(i)[sample_index(&p, u)])
        };
        let decisions: Vec<Option<ServiceMask>> = if members.len() >= self.parallel_min_colorset {
            members
                .par_iter()
                .zip(uniforms.par_iter())
                .map_init(Scratch::default, |scratch, pair| decide(pair, scratch))
                .collect()
        } else {
            let scratch = &mut self.scratch;
            members.iter().zip(&uniforms).map(|pair| decide(pair, scratch)).collect()
        };
        for (&i, decision) in members.iter().zip(decisions) {
            match decision {
                Some(mask) => self.state.set(i, mask),
                None => self.stalled += 1,
            }
        }
        self.rounds += 1;
        self.updates += members.len();
    }

    pub fn objective(&mut self) -> (f64, bool) {
        let obj = self.problem.evaluate_into(self.state.masks(), &mut self.scratch);
        let delay: f64 = self.scratch.delay.iter().sum();
        (obj, delay <= self.problem.delay_cap)
    }

    /// Largest spread of local objectives over any node's candidates at
    /// the current state; the scale for temperature calibration.
    pub fn local_spread(&mut self) -> f64 {
        let mut spread: f64 = 0.0;
        let mut masks = self.state.masks().to_vec();
        for i in 0..self.problem.fog_count() {
            score_candidates(
                self.problem,
                i,
                &mut masks,
                None,
                &mut self.scratch,
                &mut self.local,
                &mut self.feasible,
            );
            let (lo, hi) = self
                .local
                .iter()
                .zip(&self.feasible)
                .filter(|(_, &ok)| ok)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&l, _)| (lo.min(l), hi.max(l)));
            if hi > lo {
                spread = spread.max(hi - lo);
            }
        }
        spread
    }
}

/// Which scan an annealed run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Scan {
    Sequential,
    Chromatic {
        order: ColorOrder,
        parallel_min_colorset: usize,
    },
}

/// Runs a chain under `schedule` from `initial` until the stopping rule
/// fires or the sweep budget runs out, returning the best feasible profile
/// seen.
pub(crate) fn anneal(
    problem: &SlotProblem<'_>,
    schedule: &AnnealSchedule,
    scan: Scan,
    initial: HostingProfile,
    rng: &mut ChaCha8Rng,
    record_trace: bool,
) -> Result<Solution> {
    let topology = &problem.scenario.topology;
    if let Scan::Chromatic { .. } = scan {
        check_coloring(topology)?;
    }
    let mut chain = GibbsChain::new(problem, initial);
    if let Scan::Chromatic {
        parallel_min_colorset,
        ..
    } = scan
    {
        chain.parallel_min_colorset = parallel_min_colorset;
    }
    let sigma0 = schedule.initial_temperature(chain.local_spread());

    let (obj0, ok0) = chain.objective();
    let mut best: Option<(f64, HostingProfile)> = ok0.then(|| (obj0, chain.state().clone()));
    let mut round_objectives = Vec::new();
    let mut sweep_objectives = vec![obj0];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sigma = sigma0;
    let mut sweeps = 0;

    let mut after_round = |chain: &mut GibbsChain<'_, '_>,
                           sweep: usize,
                           sigma: f64,
                           active: &[usize],
                           best: &mut Option<(f64, HostingProfile)>| {
        let (obj, ok) = chain.objective();
        round_objectives.push(obj);
        if ok && best.as_ref().is_none_or(|(b, _)| obj < *b) {
            *best = Some((obj, chain.state().clone()));
        }
        if record_trace {
            trace.push(TraceRow {
                round: chain.rounds,
                sweep,
                sigma,
                objective: obj,
                active: active.to_vec(),
            });
        }
        obj
    };

    for sweep in 0..schedule.max_sweeps {
        sigma = schedule.temperature(sigma0, sweep);
        let mut last = f64::NAN;
        match scan {
            Scan::Sequential => {
                for i in 0..problem.fog_count() {
                    chain.update_node(i, sigma, rng);
                    last = after_round(&mut chain, sweep, sigma, &[i], &mut best);
                }
            }
            Scan::Chromatic { order, .. } => {
                for step in 0..topology.num_colors {
                    let color = match order {
                        ColorOrder::RoundRobin => step,
                        ColorOrder::Random => rng.random_range(0..topology.num_colors),
                    };
                    let members = &topology.colorsets[color];
                    chain.color_step(members, sigma, rng);
                    last = after_round(&mut chain, sweep, sigma, members, &mut best);
                }
            }
        }
        sweeps = sweep + 1;
        sweep_objectives.push(last);
        if schedule.converged(&sweep_objectives) {
            converged = true;
            break;
        }
    }

    let rounds_per_sweep = match scan {
        Scan::Sequential => problem.fog_count(),
        Scan::Chromatic { .. } => topology.num_colors,
    };
    let plateau_round = plateau(&round_objectives, schedule.tolerance);
    let (best_objective, hosting) = best.unwrap_or_else(|| (obj0, chain.state().clone()));
    let evaluation = problem.evaluate(&hosting);
    Ok(Solution {
        hosting,
        objective: best_objective,
        evaluation,
        stats: SolveStats {
            sweeps,
            rounds: chain.rounds,
            updates: chain.updates,
            rounds_per_sweep,
            plateau_round,
            plateau_sweep: plateau_round.div_ceil(rounds_per_sweep.max(1)),
            converged,
            initial_temperature: sigma0,
            final_temperature: sigma,
            stalled_updates: chain.stalled,
        },
        trace,
    })
}

/// Number of rounds after which the objective stays within `tolerance`
/// (relative) of its final value.
pub fn plateau(objectives: &[f64], tolerance: f64) -> usize {
    let Some(&last) = objectives.last() else {
        return 0;
    };
    let band = tolerance * last.abs();
    objectives
        .iter()
        .rposition(|&x| (x - last).abs() > band)
        .map_or(0, |r| r + 1)
}
