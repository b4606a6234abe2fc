use std::collections::HashMap;

use super::costate::{stage_contributions, CoState};
use super::state::{initial_state, transition_unchecked, ExtendedState, StateKey};
use crate::error::{Result, TeamError};
use crate::model::{DeterministicPolicy, StagePolicies, TeamSpec, DEFAULT_STAGE_POLICY_CAP};
use crate::par::{self, Execution};

/// Default cap on distinct reachable extended states across all stages.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Merge extended states with equal [`ExtendedState::key`].
    pub memoize: bool,
    pub execution: Execution,
    /// Cap on `|U^s|^{|Y^s|}` for every enumerated stage (all but the last).
    pub stage_policy_cap: u128,
    pub state_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            memoize: true,
            execution: Execution::Parallel,
            stage_policy_cap: DEFAULT_STAGE_POLICY_CAP,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub value: f64,
    pub policy: DeterministicPolicy,
    /// Distinct extended states per stage (exact solver only).
    pub reachable_counts: Vec<usize>,
    pub dedup_hits: u64,
    /// Expected cost after every stage update (stagewise iteration only).
    pub step_values: Vec<f64>,
    /// Expected cost after every full sweep (stagewise iteration only).
    pub sweep_values: Vec<f64>,
}

/// Pointwise minimization of the last stage: for each `y`, the first action
/// minimizing its contribution. Returns `(value, table)`.
pub(crate) fn best_final_action(spec: &TeamSpec, state: &ExtendedState, terminal: &CoState) -> (f64, Vec<usize>) {
    let contrib = stage_contributions(spec, state, terminal);
    let mut value = 0.0;
    let table = contrib
        .iter()
        .map(|row| {
            let (v, u) = first_min(row);
            value += v;
            u
        })
        .collect();
    (value, table)
}

pub(crate) fn first_min(row: &[f64]) -> (f64, usize) {
    let mut best = (row[0], 0);
    for (u, &v) in row.iter().enumerate().skip(1) {
        if v < best.0 {
            best = (v, u);
        }
    }
    best
}

/// Exact team optimum by dynamic programming over extended states.
///
/// Reachable states are generated forward stage by stage, each stage policy
/// tried in canonical order and deduplicated on its canonical key (first
/// representative wins). Values then flow backward:
/// `J_s(π) = min_γ J_{s+1}(T_s(γ) π)`, with the last stage minimized pointwise
/// over measurements. Ties resolve to the first stage policy in enumeration
/// order, and the returned policy is read off the realized trajectory.
/// Results do not depend on the number of worker threads.
pub fn solve_exact(spec: &TeamSpec, opts: &SolveOptions) -> Result<SolveResult> {
    spec.ensure_valid()?;
    let n = spec.dm_count();
    let stage_policies: Vec<StagePolicies> = (0..n - 1)
        .map(|s| StagePolicies::new(spec.y_len(s), spec.u_len(s), opts.stage_policy_cap))
        .collect::<Result<_>>()?;

    // Forward: layers[s] holds the distinct reachable states at stage s;
    // successors[s][i][g] is the index in layers[s + 1] reached by policy g.
    let mut layer = vec![initial_state(spec)];
    let mut counts = vec![1usize];
    let mut total = 1usize;
    let mut successors: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n - 1);
    let mut dedup_hits = 0u64;
    for cands in &stage_policies {
        let per_state = cands.len();
        let mut next: Vec<ExtendedState> = Vec::new();
        let mut index: HashMap<StateKey, u32> = HashMap::new();
        let mut succ: Vec<Vec<u32>> = Vec::with_capacity(layer.len());
        let chunk_states = (1 << 16) / per_state.max(1) + 1;
        for chunk in layer.chunks(chunk_states) {
            let produced = par::map_range(opts.execution, chunk.len() * per_state, |j| {
                let state = &chunk[j / per_state];
                let action = cands.get(j % per_state);
                let t = transition_unchecked(spec, state, &action);
                let key = if opts.memoize { Some(t.key()) } else { None };
                (key, t)
            });
            let mut row = Vec::with_capacity(per_state);
            for (key, t) in produced {
                let slot = match key.and_then(|k| index.get(&k).copied()) {
                    Some(existing) => {
                        dedup_hits += 1;
                        existing
                    }
                    None => {
                        if total + 1 > opts.state_cap {
                            let bound = total as u128 + (layer.len() as u128) * (per_state as u128);
                            return Err(TeamError::CapExceeded {
                                what: "reachable extended states",
                                required: bound,
                                cap: opts.state_cap as u128,
                            });
                        }
                        total += 1;
                        let id = next.len() as u32;
                        if let Some(k) = key {
                            index.insert(k, id);
                        }
                        next.push(t);
                        id
                    }
                };
                row.push(slot);
                if row.len() == per_state {
                    succ.push(std::mem::take(&mut row));
                }
            }
        }
        debug_assert_eq!(succ.len(), layer.len());
        successors.push(succ);
        counts.push(next.len());
        layer = next;
    }

    // Backward.
    let terminal = CoState::terminal(spec);
    let finals: Vec<(f64, Vec<usize>)> =
        par::map_slice(opts.execution, &layer, |st| best_final_action(spec, st, &terminal));
    let mut values: Vec<f64> = finals.iter().map(|f| f.0).collect();
    let mut choices: Vec<Vec<usize>> = Vec::with_capacity(n - 1);
    for succ in successors.iter().rev() {
        let (v, c): (Vec<f64>, Vec<usize>) = succ
            .iter()
            .map(|row| {
                let mut best = (values[row[0] as usize], 0usize);
                for (g, &nx) in row.iter().enumerate().skip(1) {
                    let v = values[nx as usize];
                    if v < best.0 {
                        best = (v, g);
                    }
                }
                best
            })
            .unzip();
        values = v;
        choices.push(c);
    }
    choices.reverse();

    let mut tables = Vec::with_capacity(n);
    let mut at = 0usize;
    for s in 0..n - 1 {
        let g = choices[s][at];
        tables.push(stage_policies[s].get(g).into_table());
        at = successors[s][at][g] as usize;
    }
    tables.push(finals[at].1.clone());

    Ok(SolveResult {
        value: values[0],
        policy: DeterministicPolicy::new(tables),
        reachable_counts: counts,
        dedup_hits,
        step_values: Vec::new(),
        sweep_values: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::expected_cost;
    use crate::oracle::{brute_force, DEFAULT_BRUTE_FORCE_CAP};
    use crate::random::{random_team, rng, RandomTeamConfig};

    #[test]
    fn single_stage_is_a_single_minimization() {
        let mut r = rng(21);
        for _ in 0..10 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(1, 3));
            let res = solve_exact(&spec, &SolveOptions::default()).unwrap();
            let oracle = brute_force(&spec, DEFAULT_BRUTE_FORCE_CAP, Execution::Sequential).unwrap();
            assert!((res.value - oracle.value).abs() < 1e-12);
            assert_eq!(res.reachable_counts, vec![1]);
        }
    }

    #[test]
    fn matches_brute_force_and_reports_its_policy_cost() {
        let mut r = rng(22);
        for i in 0..50 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(2 + i % 2, 3));
            let res = solve_exact(&spec, &SolveOptions::default()).unwrap();
            let oracle = brute_force(&spec, DEFAULT_BRUTE_FORCE_CAP, Execution::Parallel).unwrap();
            assert!((res.value - oracle.value).abs() <= 1e-9, "instance {i}");
            let j = expected_cost(&spec, &res.policy).unwrap();
            assert!((j - res.value).abs() <= 1e-12);
        }
    }

    #[test]
    fn memoization_changes_only_counts() {
        let mut r = rng(23);
        for _ in 0..10 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 2));
            let with = solve_exact(&spec, &SolveOptions::default()).unwrap();
            let without = solve_exact(
                &spec,
                &SolveOptions {
                    memoize: false,
                    ..SolveOptions::default()
                },
            )
            .unwrap();
            assert!((with.value - without.value).abs() <= 1e-9);
            assert_eq!(without.dedup_hits, 0);
            assert!(with.reachable_counts.iter().sum::<usize>() <= without.reachable_counts.iter().sum());
        }
    }

    #[test]
    fn caps_are_typed_errors() {
        let mut r = rng(24);
        let spec = random_team(
            &mut r,
            &RandomTeamConfig {
                omega: (2, 2),
                y: (3, 3),
                u: (3, 3),
                ..RandomTeamConfig::small(3, 3)
            },
        );
        let err = solve_exact(
            &spec,
            &SolveOptions {
                stage_policy_cap: 10,
                ..SolveOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, TeamError::CapExceeded { required: 27, .. }));
        let err = solve_exact(
            &spec,
            &SolveOptions {
                state_cap: 5,
                ..SolveOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            TeamError::CapExceeded {
                what: "reachable extended states",
                ..
            }
        ));
    }
}
