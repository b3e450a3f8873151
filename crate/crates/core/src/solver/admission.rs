//! Closed-form admission for a fixed hosting profile.
//!
//! With hosting fixed, the objective is affine in each `b_n` and the nodes
//! decouple. Node `n` has coefficient
//! `c_n = V·Σ_{m→n} d_m (μ/f_n − μ/f_0 − γ/r − h) + q_n κ_n W_n`;
//! it admits as much as its energy cap allows when `c_n < 0` and nothing
//! otherwise.

use crate::model::{energy, AdmissionProfile, HostingProfile, SlotProblem};
use crate::scenario::FogNodeSpec;

/// Optimal admission fraction of one node.
///
/// `workload` is the received CPU cycles per slot, `delay_gain` the change in
/// total delay per unit of admission (negative when the fog is faster).
pub fn admit_fraction(
    spec: &FogNodeSpec,
    workload: f64,
    delay_gain: f64,
    queue: f64,
    v: f64,
    energy_cap: f64,
) -> f64 {
    if workload <= 0.0 {
        return 0.0;
    }
    let coefficient = v * delay_gain + queue * spec.unit_energy_wh * workload;
    if !(coefficient < 0.0) {
        return 0.0;
    }
    let room = (energy_cap - spec.static_energy_wh) / (spec.unit_energy_wh * workload);
    let mut b = room.clamp(0.0, 1.0);
    // rounding in E° + κ·b·W can land one ulp above the cap
    while b > 0.0 && energy(spec, workload, b) > energy_cap {
        b = b.next_down().max(0.0);
    }
    b
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionDecision {
    pub admission: AdmissionProfile,
    pub total_delay: f64,
    /// False when even the optimal admission leaves total delay above the
    /// slot's delay cap; samplers treat such a hosting profile as excluded.
    pub delay_feasible: bool,
}

/// Optimal admission profile for `hosting`, plus the delay-cap verdict.
pub fn optimal_admission(problem: &SlotProblem<'_>, hosting: &HostingProfile) -> AdmissionDecision {
    let eval = problem.evaluate(hosting);
    AdmissionDecision {
        admission: eval.admission,
        total_delay: eval.total_delay,
        delay_feasible: eval.delay_feasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn favourable_fog_admits_fully() {
        // c = 2·(0.05 − 1.825) = −3.55; cap fraction ≈ 8.33
        let s = build(vec![fog(0, 0.0)], vec![sensor(0, 10.0, 0.0, 0)], 1);
        let mut spec = s.fog_nodes[0].clone();
        spec.static_energy_wh = 10.0;
        assert_eq!(admit_fraction(&spec, 2e8, 2.0 * (0.05 - 1.825), 0.0, 1.0, 20.0), 1.0);

        let ctx = slot(&s, vec![2.0], vec![vec![-60.0]]);
        let q = [0.0];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0);
        let dec = optimal_admission(&p, &HostingProfile::from_services(&[&[0]]));
        assert_eq!(dec.admission.fractions, vec![1.0]);
        assert!((dec.total_delay - 0.1).abs() < 1e-12);
        assert!(dec.delay_feasible);
    }

    #[test]
    fn huge_queue_rejects_work() {
        let s = build(vec![fog(0, 0.0)], vec![sensor(0, 10.0, 0.0, 0)], 1);
        let ctx = slot(&s, vec![2.0], vec![vec![-60.0]]);
        let q = [1e9];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0);
        let dec = optimal_admission(&p, &HostingProfile::from_services(&[&[0]]));
        assert_eq!(dec.admission.fractions, vec![0.0]);
    }

    #[test]
    fn no_workload_no_admission() {
        let s = build(vec![fog(0, 0.0)], vec![sensor(0, 10.0, 0.0, 0)], 1);
        let ctx = slot(&s, vec![2.0], vec![vec![-60.0]]);
        let q = [0.0];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0);
        let h = HostingProfile::empty(1);
        let eval = p.evaluate(&h);
        assert_eq!(eval.admission.fractions, vec![0.0]);
        assert_eq!(eval.energy, vec![s.fog_nodes[0].static_energy_wh]);
    }

    #[test]
    fn energy_cap_limits_admission_exactly() {
        let spec = fog(0, 0.0);
        // 7 tasks of 1e9 cycles would need 42 Wh; cap leaves 9 Wh of room
        let b = admit_fraction(&spec, 7e9, -10.0, 0.0, 1.0, 10.0);
        assert!(b < 1.0 && b > 0.2);
        assert!(energy(&spec, 7e9, b) <= 10.0);
    }

    #[test]
    fn cap_is_never_exceeded_by_rounding() {
        let spec = fog(0, 0.0);
        for i in 1..2000 {
            let w = 1.7e9 + 1.37e6 * i as f64;
            let cap = 1.0 + 0.01 * i as f64;
            let b = admit_fraction(&spec, w, -1.0, 0.0, 1.0, cap);
            assert!(energy(&spec, w, b) <= cap, "i={i}");
        }
    }

    #[test]
    fn delay_cap_below_optimum_is_flagged() {
        let s = build(vec![fog(0, 0.0)], vec![sensor(0, 10.0, 0.0, 0)], 1);
        let ctx = slot(&s, vec![2.0], vec![vec![-60.0]]);
        let q = [0.0];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0).with_delay_cap(0.05);
        assert!(!optimal_admission(&p, &HostingProfile::from_services(&[&[0]])).delay_feasible);
    }
}
