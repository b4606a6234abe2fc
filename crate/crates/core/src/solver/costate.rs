use super::state::{CostIndexer, ExtendedState, PathMeasure};
use crate::error::{Result, TeamError};
use crate::layout::MixedRadix;
use crate::model::{Policy, PolicyStage, StageRule, TeamSpec, DEFAULT_TABLE_CAP};
use crate::par::{self, Execution};

/// Co-state `ψ_s`: the cost-to-go paired with `T_s(γ^s) π_s`.
///
/// For `s < N - 1` its domain is `(ω0, y^0, u^0, …, y^s, u^s, y^{s+1})`, the
/// layout of `π_{s+1}`; for the last stage it is the full path space and
/// `ψ_{N-1}` is the cost lifted to paths (kept implicit).
#[derive(Debug, Clone)]
pub struct CoState {
    stage: usize,
    dims: Vec<usize>,
    table: Table,
}

#[derive(Debug, Clone)]
enum Table {
    Dense(Vec<f64>),
    LiftedCost { cost: Vec<f64>, indexer: CostIndexer },
}

impl CoState {
    /// `ψ_{N-1}(ω0, y, u) = c(ω0, u)`.
    pub fn terminal(spec: &TeamSpec) -> Self {
        let dims = spec.path_dims();
        Self {
            stage: spec.dm_count() - 1,
            table: Table::LiftedCost {
                cost: spec.cost.values().to_vec(),
                indexer: CostIndexer::new(spec, dims.clone()),
            },
            dims,
        }
    }

    /// A co-state with explicit values over the stage-`stage` domain.
    pub fn from_values(spec: &TeamSpec, stage: usize, values: Vec<f64>) -> Result<Self> {
        let dims = costate_dims(spec, stage)?;
        if values.len() != dims.iter().product::<usize>() {
            return Err(TeamError::shape("co-state values do not match the stage domain"));
        }
        Ok(Self {
            stage,
            dims,
            table: Table::Dense(values),
        })
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        match &self.table {
            Table::Dense(v) => v[index],
            Table::LiftedCost { cost, indexer } => cost[indexer.cost_index(index)],
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.table {
            Table::Dense(v) => v.clone(),
            Table::LiftedCost { .. } => (0..self.dims.iter().product()).map(|i| self.get(i)).collect(),
        }
    }

    /// `⟨ψ_s, μ⟩` for `μ = T_s(γ^s) π_s` given as a sparse extended state.
    pub fn pair_state(&self, measure: &ExtendedState) -> f64 {
        debug_assert_eq!(measure.dims(), self.dims.as_slice());
        measure.entries().iter().map(|&(i, p)| p * self.get(i)).sum()
    }

    /// `⟨ψ_{N-1}, μ⟩` for a full-path measure.
    pub fn pair_path(&self, measure: &PathMeasure) -> f64 {
        debug_assert_eq!(measure.dims(), self.dims.as_slice());
        measure.entries().iter().map(|&(i, p)| p * self.get(i)).sum()
    }
}

fn costate_dims(spec: &TeamSpec, stage: usize) -> Result<Vec<usize>> {
    let n = spec.dm_count();
    if stage >= n {
        return Err(TeamError::StageOutOfRange { stage, dms: n });
    }
    Ok(if stage + 1 == n {
        spec.path_dims()
    } else {
        spec.prefix_dims(stage + 1)
    })
}

/// `T_s^*(γ^s) ψ_s`: a function on the domain of `π_s`, i.e. `ψ_{s-1}`
/// (or, for `s = 0`, the functional paired with `π_0`).
///
/// `ψ_{s-1}(h, y^s) = Σ_u γ^s(u | y^s) Σ_{y'} p_{s+1}(y' | h, y^s, u) ψ_s(h, y^s, u, y')`,
/// without the `y'` sum at the last stage.
pub fn pull_back<R: StageRule + ?Sized>(spec: &TeamSpec, psi: &CoState, rule: &R, exec: Execution) -> Result<Vec<f64>> {
    let s = psi.stage;
    if rule.measurement_count() != spec.y_len(s) {
        return Err(TeamError::shape("stage rule does not match the co-state stage"));
    }
    let dims = spec.prefix_dims(s);
    let size = MixedRadix::checked(&dims, DEFAULT_TABLE_CAP)?.size();
    let (y_len, u_len) = (spec.y_len(s), spec.u_len(s));
    let last = s + 1 == spec.dm_count();
    const CHUNK: usize = 4096;
    let chunks = par::map_range(exec, size.div_ceil(CHUNK), |c| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(size);
        (lo..hi)
            .map(|i| {
                let mut acc = 0.0;
                rule.for_each_action(i % y_len, &mut |u, pu| {
                    let h = i * u_len + u;
                    if last {
                        acc += pu * psi.get(h);
                    } else {
                        let next = &spec.dms[s + 1];
                        let ny = next.y.len();
                        let mut inner = 0.0;
                        for (y, &k) in next.kernel.row(h).iter().enumerate() {
                            if k != 0.0 {
                                inner += k * psi.get(h * ny + y);
                            }
                        }
                        acc += pu * inner;
                    }
                });
                acc
            })
            .collect::<Vec<f64>>()
    });
    Ok(chunks.concat())
}

/// `⟨f, π⟩` for a function on the domain of `π`.
pub fn pair_values(values: &[f64], state: &ExtendedState) -> f64 {
    state.entries().iter().map(|&(i, p)| p * values[i]).sum()
}

/// Co-states for every stage, `chain[s] = ψ_s`, propagated backward from the
/// cost through the policy's stages `N-1, …, 1`.
pub fn costate_chain<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P, exec: Execution) -> Result<Vec<CoState>> {
    policy.check_shape(spec)?;
    let n = spec.dm_count();
    let mut chain = vec![CoState::terminal(spec)];
    for s in (1..n).rev() {
        let rule = PolicyStage {
            policy,
            n: s,
            y_len: spec.y_len(s),
        };
        let values = pull_back(spec, chain.last().expect("nonempty"), &rule, exec)?;
        chain.push(CoState {
            stage: s - 1,
            dims: spec.prefix_dims(s),
            table: Table::Dense(values),
        });
    }
    chain.reverse();
    Ok(chain)
}

/// `ψ_s` for the tail `γ^{s+1}, …, γ^{N-1}` of `policy` (earlier stages are ignored).
pub fn costate<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P, stage: usize, exec: Execution) -> Result<CoState> {
    policy.check_shape(spec)?;
    let n = spec.dm_count();
    costate_dims(spec, stage)?;
    let mut psi = CoState::terminal(spec);
    for s in ((stage + 1)..n).rev() {
        psi = pull_back_costate(
            spec,
            &psi,
            &PolicyStage {
                policy,
                n: s,
                y_len: spec.y_len(s),
            },
            exec,
        )?;
    }
    Ok(psi)
}

/// `ψ_{s-1} = T_s^*(γ^s) ψ_s` as a [`CoState`]; `s` must be at least 1.
pub fn pull_back_costate<R: StageRule + ?Sized>(
    spec: &TeamSpec,
    psi: &CoState,
    rule: &R,
    exec: Execution,
) -> Result<CoState> {
    if psi.stage == 0 {
        return Err(TeamError::StageOutOfRange {
            stage: 0,
            dms: spec.dm_count(),
        });
    }
    let values = pull_back(spec, psi, rule, exec)?;
    Ok(CoState {
        stage: psi.stage - 1,
        dims: spec.prefix_dims(psi.stage),
        table: Table::Dense(values),
    })
}

/// Per-measurement contributions of each action to `⟨ψ_s, T_s(γ) π_s⟩`:
/// `out[y][u]`, so the pairing for a deterministic `γ` is `Σ_y out[y][γ(y)]`.
pub fn stage_contributions(spec: &TeamSpec, state: &ExtendedState, psi: &CoState) -> Vec<Vec<f64>> {
    let s = state.stage();
    debug_assert_eq!(psi.stage, s);
    let (y_len, u_len) = (spec.y_len(s), spec.u_len(s));
    let last = s + 1 == spec.dm_count();
    let mut out = vec![vec![0.0; u_len]; y_len];
    for &(i, p) in state.entries() {
        let row = &mut out[i % y_len];
        for (u, slot) in row.iter_mut().enumerate() {
            let h = i * u_len + u;
            let v = if last {
                psi.get(h)
            } else {
                let next = &spec.dms[s + 1];
                let ny = next.y.len();
                next.kernel
                    .row(h)
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k != 0.0)
                    .map(|(y, &k)| k * psi.get(h * ny + y))
                    .sum()
            };
            *slot += p * v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_cost, CostTable, DeterministicPolicy, RandomizedStage};
    use crate::random::{
        random_deterministic_policy, random_randomized_policy, random_team, rng, simplex_row, RandomTeamConfig,
    };
    use crate::solver::state::{attach_final_action, initial_state, transition};
    use rand::Rng;

    #[test]
    fn constant_cost_gives_constant_costates() {
        let mut r = rng(8);
        let mut spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
        spec.cost = CostTable::constant(spec.cost_dims(), 2.5);
        let pol = random_randomized_policy(&mut r, &spec);
        for psi in costate_chain(&spec, &pol, Execution::Sequential).unwrap() {
            assert!(psi.to_dense().iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn single_stage_pairing_is_expected_cost() {
        let mut r = rng(9);
        let spec = random_team(&mut r, &RandomTeamConfig::small(1, 3));
        let pol = random_deterministic_policy(&mut r, &spec);
        let psi = costate(&spec, &pol, 0, Execution::Sequential).unwrap();
        let full = attach_final_action(&spec, &initial_state(&spec), &pol.stage(0)).unwrap();
        assert!((psi.pair_path(&full) - expected_cost(&spec, &pol).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pairing_at_every_stage_is_the_policy_cost() {
        let mut r = rng(10);
        for _ in 0..20 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let pol = random_deterministic_policy(&mut r, &spec);
            let j = expected_cost(&spec, &pol).unwrap();
            let chain = costate_chain(&spec, &pol, Execution::Parallel).unwrap();
            let mut pi = initial_state(&spec);
            for s in 0..3 {
                let psi = &chain[s];
                let paired = if s < 2 {
                    psi.pair_state(&transition(&spec, &pi, &pol.stage(s)).unwrap())
                } else {
                    psi.pair_path(&attach_final_action(&spec, &pi, &pol.stage(s)).unwrap())
                };
                assert!((paired - j).abs() < 1e-12, "stage {s}: {paired} vs {j}");
                let contrib = stage_contributions(&spec, &pi, psi);
                let via: f64 = (0..spec.y_len(s)).map(|y| contrib[y][pol.action(s, y)]).sum();
                assert!((via - j).abs() < 1e-12);
                if s < 2 {
                    pi = transition(&spec, &pi, &pol.stage(s)).unwrap();
                }
            }
        }
    }

    #[test]
    fn adjoint_identity_for_random_functionals() {
        let mut r = rng(12);
        for _ in 0..30 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let s = r.random_range(0..2usize);
            let dims = spec.prefix_dims(s + 1);
            let values: Vec<f64> = (0..dims.iter().product::<usize>()).map(|_| r.random()).collect();
            let psi = CoState::from_values(&spec, s, values).unwrap();
            let pdims: usize = spec.prefix_dims(s).iter().product();
            let dense = simplex_row(&mut r, pdims);
            let pi = ExtendedState::from_dense(&spec, s, &dense).unwrap();
            let rule = RandomizedStage::new((0..spec.y_len(s)).map(|_| simplex_row(&mut r, spec.u_len(s))).collect());
            let lhs = psi.pair_state(&transition(&spec, &pi, &rule).unwrap());
            let rhs = pair_values(&pull_back(&spec, &psi, &rule, Execution::Sequential).unwrap(), &pi);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn costate_ignores_prefix_stages() {
        let mut r = rng(13);
        let spec = random_team(&mut r, &RandomTeamConfig::small(3, 2));
        let a = random_deterministic_policy(&mut r, &spec);
        let mut b = a.clone();
        b.set_stage(0, vec![0; spec.y_len(0)]);
        let pa = costate(&spec, &a, 0, Execution::Sequential).unwrap().to_dense();
        let pb = costate(&spec, &b, 0, Execution::Sequential).unwrap().to_dense();
        assert_eq!(pa, pb);
        let _ = DeterministicPolicy::zeros(&spec);
    }
}
