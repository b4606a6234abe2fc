use proptest::prelude::*;

use teamdp::model::{
    expected_cost, lift_deterministic, lift_randomized, perfect_recall_expansion, Distribution, Policy,
    RandomizedPolicy, TeamSpec, DEFAULT_TABLE_CAP,
};
use teamdp::oracle::{nth_policy, path_enumeration_cost, policy_count};
use teamdp::par::Execution;
use teamdp::random::{
    random_deterministic_policy, random_randomized_policy, random_team, rng, simplex_row, RandomTeamConfig,
};
use teamdp::reduction::{default_references, reduced_expected_cost, static_reduce, ReferenceMeasures};
use teamdp::solver::{solve_exact, SolveOptions};

fn team(seed: u64, dms: usize, max: usize) -> TeamSpec {
    random_team(&mut rng(seed), &RandomTeamConfig::small(dms, max))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cost_lies_between_table_extremes(seed in any::<u64>(), dms in 1usize..=3) {
        let spec = team(seed, dms, 3);
        let p = random_randomized_policy(&mut rng(seed ^ 1), &spec);
        let j = expected_cost(&spec, &p).unwrap();
        let lo = spec.cost.values().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(j >= lo - 1e-12 && j <= spec.cost.max() + 1e-12);
    }

    #[test]
    fn path_enumeration_agrees(seed in any::<u64>(), dms in 1usize..=3) {
        let spec = team(seed, dms, 3);
        let p = random_randomized_policy(&mut rng(seed ^ 2), &spec);
        prop_assert!(close(expected_cost(&spec, &p).unwrap(), path_enumeration_cost(&spec, &p).unwrap()));
    }

    #[test]
    fn cost_is_affine_in_one_row(seed in any::<u64>(), dms in 1usize..=3, lambda in 0.0f64..=1.0) {
        let spec = team(seed, dms, 3);
        let mut r = rng(seed ^ 3);
        let base = random_randomized_policy(&mut r, &spec);
        let n = (seed as usize) % spec.dm_count();
        let y = (seed as usize / 7) % spec.y_len(n);
        let (a, b) = (simplex_row(&mut r, spec.u_len(n)), simplex_row(&mut r, spec.u_len(n)));
        let with = |row: Vec<f64>| {
            let mut p = base.clone();
            p.set_row(n, y, row);
            expected_cost(&spec, &p).unwrap()
        };
        let mixed: Vec<f64> = a.iter().zip(&b).map(|(x, z)| lambda * x + (1.0 - lambda) * z).collect();
        let lhs = with(mixed);
        let rhs = lambda * with(a) + (1.0 - lambda) * with(b);
        prop_assert!(close(lhs, rhs));
    }

    #[test]
    fn randomized_is_a_mixture_of_deterministic(seed in any::<u64>()) {
        let spec = team(seed, 2, 2);
        let pi = random_randomized_policy(&mut rng(seed ^ 4), &spec);
        let mut mixture = 0.0;
        for i in 0..policy_count(&spec) {
            let gamma = nth_policy(&spec, i);
            let mut weight = 1.0;
            for n in 0..spec.dm_count() {
                for y in 0..spec.y_len(n) {
                    weight *= pi.prob(n, y, gamma.action(n, y));
                }
            }
            mixture += weight * expected_cost(&spec, &gamma).unwrap();
        }
        prop_assert!(close(mixture, expected_cost(&spec, &pi).unwrap()));
    }

    #[test]
    fn recall_expansion_preserves_policy_costs(seed in any::<u64>(), dms in 1usize..=3) {
        let spec = team(seed, dms, 2);
        let big = perfect_recall_expansion(&spec, DEFAULT_TABLE_CAP).unwrap();
        prop_assert!(big.validate().is_valid());
        let mut r = rng(seed ^ 5);
        let g = random_deterministic_policy(&mut r, &spec);
        prop_assert!(close(expected_cost(&spec, &g).unwrap(), expected_cost(&big, &lift_deterministic(&spec, &g)).unwrap()));
        let p = random_randomized_policy(&mut r, &spec);
        prop_assert!(close(expected_cost(&spec, &p).unwrap(), expected_cost(&big, &lift_randomized(&spec, &p)).unwrap()));
        let small = solve_exact(&spec, &SolveOptions::default()).unwrap().value;
        let recall = solve_exact(&big, &SolveOptions::default()).unwrap().value;
        prop_assert!(recall <= small + 1e-12);
    }

    #[test]
    fn reduction_is_reference_invariant(seed in any::<u64>(), dms in 1usize..=3) {
        let spec = team(seed, dms, 3);
        let mut r = rng(seed ^ 6);
        let other = ReferenceMeasures {
            per_dm: spec.dms.iter().map(|dm| Distribution::new(simplex_row(&mut r, dm.y.len())).unwrap()).collect(),
        };
        let a = static_reduce(&spec, &default_references(&spec)).unwrap();
        let b = static_reduce(&spec, &other).unwrap();
        let p = random_randomized_policy(&mut r, &spec);
        let direct = expected_cost(&spec, &p).unwrap();
        prop_assert!(close(reduced_expected_cost(&a, &p).unwrap(), direct));
        prop_assert!(close(reduced_expected_cost(&b, &p).unwrap(), direct));
    }

    #[test]
    fn execution_mode_does_not_change_results(seed in any::<u64>(), dms in 2usize..=3) {
        let spec = team(seed, dms, 3);
        let seq = solve_exact(&spec, &SolveOptions { execution: Execution::Sequential, ..SolveOptions::default() }).unwrap();
        let par = solve_exact(&spec, &SolveOptions { execution: Execution::Parallel, ..SolveOptions::default() }).unwrap();
        prop_assert_eq!(seq.value.to_bits(), par.value.to_bits());
        prop_assert_eq!(seq.policy, par.policy);
    }

    #[test]
    fn uniform_policy_value_is_average_over_actions(seed in any::<u64>()) {
        let spec = team(seed, 1, 3);
        let u = RandomizedPolicy::uniform(&spec);
        let avg: f64 = (0..spec.omega_len())
            .map(|w| {
                let row = &spec.cost.values()[w * spec.u_len(0)..(w + 1) * spec.u_len(0)];
                spec.prior.probs()[w] * row.iter().sum::<f64>() / row.len() as f64
            })
            .sum();
        prop_assert!(close(avg, expected_cost(&spec, &u).unwrap()));
    }
}
