use super::{Solution, SolveStats};
use crate::error::{Error, Result};
use crate::model::{HostingProfile, Scratch, SlotProblem};

pub const DEFAULT_ENUMERATION_CAP: f64 = 1e6;

/// Size of the capacity-feasible hosting space.
pub fn search_space(problem: &SlotProblem<'_>) -> f64 {
    (0..problem.fog_count())
        .map(|n| problem.candidates(n).len() as f64)
        .product()
}

/// Exact minimizer of the reduced objective by enumeration. Profiles are
/// visited in lexicographic order and only a strictly better objective
/// replaces the incumbent, so ties resolve to the lexicographically first.
pub fn brute_force(problem: &SlotProblem<'_>, cap: f64) -> Result<Solution> {
    let size = search_space(problem);
    if size > cap {
        return Err(Error::SearchSpace { size, cap });
    }
    let n = problem.fog_count();
    let mut digits = vec![0usize; n];
    let mut masks: Vec<u64> = (0..n).map(|i| problem.candidates(i)[0]).collect();
    let mut scratch = Scratch::default();
    let mut best: Option<(f64, Vec<u64>)> = None;
    let mut visited = 0usize;
    loop {
        let obj = problem.evaluate_into(&masks, &mut scratch);
        visited += 1;
        let feasible = scratch.delay.iter().sum::<f64>() <= problem.delay_cap;
        if feasible && best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, masks.clone()));
        }
        // odometer with node n-1 as the fastest digit
        let mut pos = n;
        loop {
            if pos == 0 {
                let (objective, best_masks) = best.unwrap_or_else(|| {
                    let empty = vec![0; n];
                    (problem.evaluate_into(&empty, &mut scratch), empty)
                });
                let hosting = HostingProfile::from_masks(best_masks);
                let evaluation = problem.evaluate(&hosting);
                return Ok(Solution {
                    hosting,
                    objective,
                    evaluation,
                    stats: SolveStats {
                        updates: visited,
                        ..SolveStats::default()
                    },
                    trace: Vec::new(),
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < problem.candidates(pos).len() {
                masks[pos] = problem.candidates(pos)[digits[pos]];
                break;
            }
            digits[pos] = 0;
            masks[pos] = problem.candidates(pos)[0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;

    #[test]
    fn single_node_two_services_picks_the_cheapest_subset() {
        let mut f = fog(0, 0.0);
        f.capacity = 2;
        let s = build(vec![f], vec![sensor(0, 10.0, 0.0, 0), sensor(1, -10.0, 0.0, 1)], 2);
        let ctx = slot(&s, vec![2.0, 3.0], distance_channels(&s));
        let q = [0.0];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0);
        assert_eq!(search_space(&p), 4.0);
        let sol = brute_force(&p, 1e6).unwrap();
        let by_hand = [0u64, 1, 2, 3]
            .iter()
            .map(|&m| p.reduced_objective(&HostingProfile::from_masks(vec![m])))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(sol.objective, by_hand);
        assert_eq!(sol.hosting.masks(), &[3]);
        assert_eq!(sol.stats.updates, 4);
    }

    #[test]
    fn ties_go_to_the_lexicographically_first_profile() {
        // zero demand: every profile costs the same
        let s = build(vec![fog(0, 0.0), fog(1, 100.0)], vec![sensor(0, 50.0, 0.0, 0)], 2);
        let ctx = slot(&s, vec![0.0], distance_channels(&s));
        let q = [1.0, 1.0];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0);
        assert_eq!(brute_force(&p, 1e6).unwrap().hosting.masks(), &[0, 0]);
    }

    #[test]
    fn refuses_oversized_spaces() {
        let s = build(vec![fog(0, 0.0), fog(1, 100.0)], vec![sensor(0, 50.0, 0.0, 0)], 2);
        let ctx = slot(&s, vec![1.0], distance_channels(&s));
        let q = [0.0, 0.0];
        let p = SlotProblem::new(&s, &ctx, &q, 1.0);
        assert!(matches!(brute_force(&p, 8.0), Err(Error::SearchSpace { .. })));
    }
}
