use super::costate::{costate_chain, pull_back_costate, stage_contributions, CoState};
use super::exact::{first_min, SolveResult};
use super::state::{initial_state, transition_unchecked, ExtendedState};
use crate::error::Result;
use crate::model::{DeterministicPolicy, Policy, StageAction, TeamSpec};
use crate::par::Execution;

/// Person-by-person optimality gaps of a deterministic policy.
#[derive(Debug, Clone, PartialEq)]
pub struct StagewiseReport {
    /// `⟨ψ_s, T_s(γ^s) π_s⟩ − min_γ ⟨ψ_s, T_s(γ) π_s⟩` per stage.
    pub per_stage_gap: Vec<f64>,
    pub max_gap: f64,
    /// The policy's expected cost as seen from each stage's pairing.
    pub per_stage_value: Vec<f64>,
    /// Every gap is at least `-tol`.
    pub consistent: bool,
}

impl StagewiseReport {
    /// No single stage can improve by more than `tol`.
    pub fn is_stagewise_optimal(&self, tol: f64) -> bool {
        self.max_gap <= tol
    }
}

fn forward_states(spec: &TeamSpec, policy: &DeterministicPolicy) -> Vec<ExtendedState> {
    let mut states = vec![initial_state(spec)];
    for s in 0..spec.dm_count() - 1 {
        let next = transition_unchecked(spec, &states[s], &policy.stage(s));
        states.push(next);
    }
    states
}

/// For each stage `s`, with `π_s` generated by the policy prefix and `ψ_s` by
/// its tail, compares the policy's pairing against the best single-stage
/// replacement. The minimum over stage policies is taken pointwise in `y^s`,
/// which is exact because the pairing is additive over measurement cells.
pub fn verify_stagewise(
    spec: &TeamSpec,
    policy: &DeterministicPolicy,
    tol: f64,
    exec: Execution,
) -> Result<StagewiseReport> {
    spec.ensure_valid()?;
    policy.check_shape(spec)?;
    let states = forward_states(spec, policy);
    let chain = costate_chain(spec, policy, exec)?;
    let mut per_stage_gap = Vec::with_capacity(spec.dm_count());
    let mut per_stage_value = Vec::with_capacity(spec.dm_count());
    for (s, (state, psi)) in states.iter().zip(&chain).enumerate() {
        let contrib = stage_contributions(spec, state, psi);
        let current: f64 = contrib
            .iter()
            .enumerate()
            .map(|(y, row)| row[policy.action(s, y)])
            .sum();
        let best: f64 = contrib.iter().map(|row| first_min(row).0).sum();
        per_stage_gap.push(current - best);
        per_stage_value.push(current);
    }
    let max_gap = per_stage_gap.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let consistent = per_stage_gap.iter().all(|&g| g >= -tol);
    Ok(StagewiseReport {
        per_stage_gap,
        max_gap,
        per_stage_value,
        consistent,
    })
}

/// Cyclic person-by-person improvement.
///
/// Each sweep visits stages `N-1, …, 0`; at stage `s` the stage policy is
/// replaced by a pointwise minimizer of `⟨ψ_s, T_s(γ) π_s⟩` with every other
/// stage held fixed (the current action is kept on ties). Expected cost never
/// increases. Stops after a sweep improving by less than `tol`, or after
/// `sweeps` sweeps.
pub fn stagewise_iterate(
    spec: &TeamSpec,
    init: &DeterministicPolicy,
    sweeps: usize,
    tol: f64,
    exec: Execution,
) -> Result<SolveResult> {
    spec.ensure_valid()?;
    init.check_shape(spec)?;
    let n = spec.dm_count();
    let mut policy = init.clone();
    let mut step_values = Vec::new();
    let mut sweep_values = Vec::new();
    let mut value = {
        let states = forward_states(spec, &policy);
        let psi = CoState::terminal(spec);
        let contrib = stage_contributions(spec, &states[n - 1], &psi);
        contrib
            .iter()
            .enumerate()
            .map(|(y, row)| row[policy.action(n - 1, y)])
            .sum::<f64>()
    };
    for _ in 0..sweeps {
        let start = value;
        let states = forward_states(spec, &policy);
        let mut psi = CoState::terminal(spec);
        for s in (0..n).rev() {
            let contrib = stage_contributions(spec, &states[s], &psi);
            let mut table = policy.tables()[s].clone();
            let mut v = 0.0;
            for (y, row) in contrib.iter().enumerate() {
                let (best, arg) = first_min(row);
                if row[table[y]] > best {
                    table[y] = arg;
                }
                v += row[table[y]];
            }
            policy.set_stage(s, table);
            value = v;
            step_values.push(v);
            if s > 0 {
                psi = pull_back_costate(spec, &psi, &StageAction::new(policy.tables()[s].clone()), exec)?;
            }
        }
        sweep_values.push(value);
        if start - value < tol {
            break;
        }
    }
    Ok(SolveResult {
        value,
        policy,
        reachable_counts: Vec::new(),
        dedup_hits: 0,
        step_values,
        sweep_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_cost, CostTable, DecisionMaker, Distribution, FiniteSpace, Kernel};
    use crate::oracle::{brute_force, DEFAULT_BRUTE_FORCE_CAP};
    use crate::random::{random_deterministic_policy, random_team, rng, RandomTeamConfig};
    use crate::solver::{solve_exact, SolveOptions};

    #[test]
    fn exact_solution_has_no_stagewise_gap() {
        let mut r = rng(31);
        for _ in 0..20 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let res = solve_exact(&spec, &SolveOptions::default()).unwrap();
            let rep = verify_stagewise(&spec, &res.policy, 1e-9, Execution::Parallel).unwrap();
            assert!(rep.max_gap <= 1e-9, "{rep:?}");
            assert!(rep.consistent);
            for v in &rep.per_stage_value {
                assert!((v - res.value).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn iteration_is_monotone_and_bounded_below_by_the_optimum() {
        let mut r = rng(32);
        for _ in 0..20 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let init = random_deterministic_policy(&mut r, &spec);
            let res = stagewise_iterate(&spec, &init, 20, 1e-12, Execution::Parallel).unwrap();
            let start = expected_cost(&spec, &init).unwrap();
            let mut prev = start;
            for &v in &res.step_values {
                assert!(v <= prev + 1e-12);
                prev = v;
            }
            let exact = solve_exact(&spec, &SolveOptions::default()).unwrap();
            assert!(res.value >= exact.value - 1e-9);
            assert!((expected_cost(&spec, &res.policy).unwrap() - res.value).abs() < 1e-12);
            let rep = verify_stagewise(&spec, &res.policy, 1e-9, Execution::Parallel).unwrap();
            assert!(rep.max_gap <= 1e-9, "{rep:?}");
        }
    }

    #[test]
    fn decoupled_static_team_converges_in_one_sweep() {
        // c = c1(ω0, u^0) + c2(ω0, u^1), measurements depend on ω0 only.
        let mut r = rng(33);
        for _ in 0..10 {
            let base = random_team(
                &mut r,
                &RandomTeamConfig {
                    static_measurements: true,
                    ..RandomTeamConfig::small(2, 3)
                },
            );
            let (w, u0, u1) = (base.omega_len(), base.u_len(0), base.u_len(1));
            let a: Vec<f64> = (0..w * u0).map(|i| ((i * 37) % 11) as f64 / 11.0).collect();
            let b: Vec<f64> = (0..w * u1).map(|i| ((i * 53) % 13) as f64 / 13.0).collect();
            let mut spec = base.clone();
            spec.cost = CostTable::from_fn(vec![w, u0, u1], |d| a[d[0] * u0 + d[1]] + b[d[0] * u1 + d[2]]);
            let res =
                stagewise_iterate(&spec, &DeterministicPolicy::zeros(&spec), 1, 0.0, Execution::Sequential).unwrap();
            let oracle = brute_force(&spec, DEFAULT_BRUTE_FORCE_CAP, Execution::Sequential).unwrap();
            assert!((res.value - oracle.value).abs() < 1e-12);
        }
    }

    #[test]
    fn profitable_deviation_shows_a_gap() {
        // DM0 sees ω0, DM1 sees nothing; cost 1 unless u^0 = ω0.
        let b = || FiniteSpace::indexed("v", 2);
        let spec = TeamSpec::new(
            b(),
            Distribution::uniform(2),
            vec![
                DecisionMaker {
                    y: b(),
                    u: b(),
                    kernel: Kernel::deterministic(vec![2], 2, |d| d[0]),
                },
                DecisionMaker {
                    y: FiniteSpace::indexed("o", 1),
                    u: b(),
                    kernel: Kernel::constant(vec![2, 2, 2], &Distribution::uniform(1)),
                },
            ],
            CostTable::from_fn(vec![2, 2, 2], |d| (d[0] != d[1]) as u8 as f64),
        )
        .unwrap();
        let bad = DeterministicPolicy::new(vec![vec![0, 0], vec![0]]);
        let rep = verify_stagewise(&spec, &bad, 1e-9, Execution::Sequential).unwrap();
        assert!((rep.per_stage_gap[0] - 0.5).abs() < 1e-12);
        assert_eq!(rep.per_stage_gap[1], 0.0);
    }
}
