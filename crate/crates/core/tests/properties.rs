mod common;

use fogcfg_core::lyapunov::{update_queue, DeficitQueues};
use fogcfg_core::model::{capacity_masks, energy};
use fogcfg_core::rng::{self, Domain};
use fogcfg_core::scenario::Topology;
use fogcfg_core::scenario::{Scenario, ScenarioConfig};
use fogcfg_core::solver::admit_fraction;
use fogcfg_core::{AdmissionProfile, HostingProfile, SlotProblem};
use proptest::prelude::*;
use rand::Rng;

fn reach_matrix() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..9, 0usize..16).prop_flat_map(|(n, m)| {
        proptest::collection::vec(any::<bool>(), n * m).prop_map(move |r| (n, m, r))
    })
}

fn distances(adj: &[Vec<usize>], from: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[from] = 0;
    let mut frontier = vec![from];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    dist
}

proptest! {
    #[test]
    fn queue_update_is_nonnegative_and_exact(q in 0.0..1e4f64, e in 0.0..50.0f64, b in 0.0..50.0f64) {
        let next = update_queue(q, e, b);
        prop_assert!(next >= 0.0);
        prop_assert_eq!(next, (q + e - b).max(0.0));
    }

    #[test]
    fn queues_stay_nonnegative_over_a_run(steps in proptest::collection::vec(proptest::collection::vec(0.0..30.0f64, 3), 1..50)) {
        let mut queues = DeficitQueues::new(3);
        for e in &steps {
            queues.update(e, &[10.0, 5.0, 20.0]);
            prop_assert!(queues.values().iter().all(|&q| q >= 0.0));
        }
    }

    #[test]
    fn topology_invariants((n, m, reach) in reach_matrix()) {
        let topo = Topology::build(n, m, |f, s| reach[f * m + s]);
        // reachability is one relation seen from both sides
        for f in 0..n {
            for s in 0..m {
                prop_assert_eq!(topo.coverage[f].contains(&s), reach[f * m + s]);
                prop_assert_eq!(topo.reachable[s].contains(&f), reach[f * m + s]);
            }
        }
        for i in 0..n {
            // fog adjacency is symmetric and means a shared sensor
            for j in 0..n {
                let shared = i != j && (0..m).any(|s| reach[i * m + s] && reach[j * m + s]);
                prop_assert_eq!(topo.fog_adjacency[i].contains(&j), shared);
            }
            // conflict neighbors are exactly the nodes one or two hops away
            let dist = distances(&topo.fog_adjacency, i);
            let expected: Vec<usize> = (0..n).filter(|&j| j != i && dist[j] <= 2).collect();
            prop_assert_eq!(&topo.blanket[i], &expected);
            for &j in &topo.blanket[i] {
                prop_assert_ne!(topo.coloring[i], topo.coloring[j]);
            }
        }
        prop_assert!(topo.coloring_violation().is_none());
        let members: usize = topo.colorsets.iter().map(Vec::len).sum();
        prop_assert_eq!(members, n);
        prop_assert_eq!(topo.colorsets.len(), topo.num_colors);
    }

    #[test]
    fn capacity_masks_are_complete(k in 1usize..8, c in 0usize..5) {
        let masks = capacity_masks(k, c);
        prop_assert!(masks.iter().all(|m| m.count_ones() as usize <= c && *m < 1 << k));
        prop_assert!(masks.windows(2).all(|w| w[0] < w[1]));
        let binom = |n: usize, r: usize| (0..r).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
        let expected: usize = (0..=c.min(k)).map(|r| binom(k, r)).sum();
        prop_assert_eq!(masks.len(), expected);
    }

    #[test]
    fn admission_is_optimal_on_a_grid(
        workload in 0.0..3e9f64,
        gain in -2.0..2.0f64,
        queue in 0.0..500.0f64,
        v in 0.1..1e4f64,
        e0 in 0.0..6.0f64,
        cap in 0.0..30.0f64,
    ) {
        let spec = fogcfg_core::scenario::FogNodeSpec {
            static_energy_wh: e0,
            ..common::fog(0, 0.0, 0.0)
        };
        let b = admit_fraction(&spec, workload, gain, queue, v, cap);
        prop_assert!((0.0..=1.0).contains(&b));
        if e0 <= cap {
            prop_assert!(energy(&spec, workload, b) <= cap);
        }
        let cost = |x: f64| v * gain * x + queue * energy(&spec, workload, x);
        let at_b = cost(b);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            if energy(&spec, workload, x) <= cap {
                prop_assert!(cost(x) >= at_b - 1e-9 * at_b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn energy_and_delay_are_monotone_in_admission(seed in 0u64..10_000, b0 in 0.0..1.0f64, b1 in 0.0..1.0f64) {
        let mut r = rng::stream(seed, Domain::Topology, 0);
        let s = common::random_small(&mut r, 3, 2);
        let demand: Vec<f64> = (0..s.sensor_count()).map(|_| r.random_range(0.0..10.0)).collect();
        let ctx = common::slot(&s, demand);
        let queues = vec![0.0; s.fog_count()];
        let problem = SlotProblem::new(&s, &ctx, &queues, 1.0);
        let hosting = HostingProfile::from_masks(vec![0b11; s.fog_count()]);
        let assignment = problem.associate(&hosting);
        let (lo, hi) = if b0 <= b1 { (b0, b1) } else { (b1, b0) };
        let n = s.fog_count();
        let at_lo = AdmissionProfile::uniform(n, lo);
        let at_hi = AdmissionProfile::uniform(n, hi);
        for f in 0..n {
            let w = assignment.workload(&s, f);
            prop_assert!(energy(&s.fog_nodes[f], w, lo) <= energy(&s.fog_nodes[f], w, hi));
        }
        // each sensor's delay moves toward its fog delay as admission grows
        for m in 0..s.sensor_count() {
            let d_lo = problem.delay(m, &assignment, &at_lo);
            let d_hi = problem.delay(m, &assignment, &at_hi);
            let d_cloud = problem.delay(m, &assignment, &AdmissionProfile::uniform(n, 0.0));
            let d_fog = problem.delay(m, &assignment, &AdmissionProfile::uniform(n, 1.0));
            let tol = 1e-12 * d_cloud.max(d_fog).max(1.0);
            if d_fog <= d_cloud {
                prop_assert!(d_hi <= d_lo + tol);
            } else {
                prop_assert!(d_hi >= d_lo - tol);
            }
        }
    }

    #[test]
    fn local_objective_tracks_global_changes(seed in 0u64..10_000) {
        // changing node i alone moves the full objective by exactly as much
        // as it moves i's local objective
        let mut r = rng::stream(seed, Domain::Topology, 1);
        let s = common::random_small(&mut r, 3, 2);
        let demand: Vec<f64> = (0..s.sensor_count()).map(|_| r.random_range(0.0..10.0)).collect();
        let ctx = common::slot(&s, demand);
        let queues: Vec<f64> = (0..s.fog_count()).map(|_| r.random_range(0.0..500.0)).collect();
        let problem = SlotProblem::new(&s, &ctx, &queues, 100.0);
        let n = s.fog_count();
        let pick = |r: &mut rand_chacha::ChaCha8Rng, f: usize| {
            let c = problem.candidates(f);
            c[r.random_range(0..c.len())]
        };
        let base = HostingProfile::from_masks((0..n).map(|f| pick(&mut r, f)).collect());
        let i = r.random_range(0..n);
        let mut other = base.clone();
        other.set(i, pick(&mut r, i));
        let global = problem.reduced_objective(&other) - problem.reduced_objective(&base);
        let local = problem.local_objective(i, &other) - problem.local_objective(i, &base);
        let scale = problem.reduced_objective(&base).abs().max(1.0);
        prop_assert!((global - local).abs() <= 1e-9 * scale, "global {global} local {local}");
    }

    #[test]
    fn generated_scenarios_are_consistent(seed in 0u64..1_000) {
        let s = Scenario::generate(&ScenarioConfig::desk(), seed).unwrap();
        prop_assert!(s.verify().is_ok());
        prop_assert!(s.topology.coloring_violation().is_none());
        let ctx = s.generate_slot(0, seed);
        prop_assert_eq!(ctx.demand.len(), s.sensor_count());
        prop_assert!(ctx.demand.iter().all(|&d| d >= 0.0));
        for (m, gains) in ctx.channel.iter().enumerate() {
            prop_assert_eq!(gains.len(), s.topology.reachable[m].len());
        }
    }
}

#[test]
fn capacity_is_respected_by_solver_output() {
    use fogcfg_core::solver::{Cpgs, P2Solver};
    for seed in 1..=3 {
        let s = Scenario::generate(&ScenarioConfig::desk(), seed).unwrap();
        let ctx = s.generate_slot(0, seed);
        let queues = vec![100.0; s.fog_count()];
        let problem = SlotProblem::new(&s, &ctx, &queues, 1e3);
        let mut r = rng::stream(seed, Domain::Solver, 0);
        let sol = Cpgs::default().solve(&problem, &mut r).unwrap();
        assert!(sol.hosting.check_capacity(&s).is_ok());
        assert!(problem.check_feasible(&sol.hosting, &sol.evaluation.admission).is_ok());
    }
}
