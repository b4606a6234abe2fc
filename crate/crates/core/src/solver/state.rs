use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Result, TeamError};
use crate::layout::MixedRadix;
use crate::model::{StageRule, TeamSpec};

/// Rounding quantum of [`ExtendedState::key`]: `2^-36`.
pub const KEY_QUANTUM_BITS: i32 = 36;

/// The dynamic-programming state at stage `s`: the joint law of
/// `(ω0, y^0, u^0, …, u^{s-1}, y^s)`.
///
/// Stored sparsely as strictly positive `(index, probability)` pairs sorted by
/// the lexicographic index over [`TeamSpec::prefix_dims`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedState {
    stage: usize,
    dims: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

/// Canonical memoization key: SHA-256 of the rounded tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub [u8; 32]);

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl ExtendedState {
    /// Builds a state from a dense tensor laid out over `spec.prefix_dims(stage)`.
    pub fn from_dense(spec: &TeamSpec, stage: usize, dense: &[f64]) -> Result<Self> {
        check_stage(spec, stage)?;
        let dims = spec.prefix_dims(stage);
        if dense.len() != dims.iter().product::<usize>() {
            return Err(TeamError::shape(format!(
                "dense state has {} entries, stage {stage} layout needs {}",
                dense.len(),
                dims.iter().product::<usize>()
            )));
        }
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(i, &p)| (i, p))
            .collect();
        Ok(Self { stage, dims, entries })
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dims.iter().product()];
        for &(i, p) in &self.entries {
            dense[i] = p;
        }
        dense
    }

    /// Each entry rounded to the nearest multiple of `2^-36`, serialized in
    /// index order (zero cells skipped) and hashed.
    pub fn key(&self) -> StateKey {
        let scale = f64::powi(2.0, KEY_QUANTUM_BITS);
        let mut h = Sha256::new();
        h.update((self.stage as u64).to_le_bytes());
        h.update((self.dims.len() as u64).to_le_bytes());
        for &d in &self.dims {
            h.update((d as u64).to_le_bytes());
        }
        for &(i, p) in &self.entries {
            let q = (p * scale).round() as i64;
            if q != 0 {
                h.update((i as u64).to_le_bytes());
                h.update(q.to_le_bytes());
            }
        }
        StateKey(h.finalize().into())
    }
}

/// Joint law of a full path `(ω0, y^0, u^0, …, y^{N-1}, u^{N-1})`, sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMeasure {
    dims: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl PathMeasure {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dims.iter().product()];
        for &(i, p) in &self.entries {
            dense[i] = p;
        }
        dense
    }
}

fn check_stage(spec: &TeamSpec, stage: usize) -> Result<()> {
    if stage >= spec.dm_count() {
        return Err(TeamError::StageOutOfRange {
            stage,
            dms: spec.dm_count(),
        });
    }
    Ok(())
}

fn check_rule<R: StageRule + ?Sized>(spec: &TeamSpec, stage: usize, rule: &R) -> Result<()> {
    if rule.measurement_count() != spec.y_len(stage) {
        return Err(TeamError::shape(format!(
            "stage rule covers {} measurements, dm {stage} has {}",
            rule.measurement_count(),
            spec.y_len(stage)
        )));
    }
    Ok(())
}

fn check_state(spec: &TeamSpec, state: &ExtendedState) -> Result<()> {
    check_stage(spec, state.stage)?;
    if state.dims != spec.prefix_dims(state.stage) {
        return Err(TeamError::shape("extended state layout does not match the team"));
    }
    Ok(())
}

/// `π_0(ω0, y^0) = prior(ω0) · p_0(y^0 | ω0)`.
pub fn initial_state(spec: &TeamSpec) -> ExtendedState {
    let kernel = &spec.dms[0].kernel;
    let y_len = spec.y_len(0);
    let mut entries = Vec::new();
    for (w, &pw) in spec.prior.probs().iter().enumerate() {
        if pw == 0.0 {
            continue;
        }
        for (y, &py) in kernel.row(w).iter().enumerate() {
            if py != 0.0 {
                entries.push((w * y_len + y, pw * py));
            }
        }
    }
    ExtendedState {
        stage: 0,
        dims: spec.prefix_dims(0),
        entries,
    }
}

/// `π_{s+1} = T_s(γ^s) π_s`: attach `u^s ~ γ^s(· | y^s)` and draw
/// `y^{s+1}` from decision maker `s + 1`'s kernel.
pub fn transition<R: StageRule + ?Sized>(spec: &TeamSpec, state: &ExtendedState, rule: &R) -> Result<ExtendedState> {
    check_state(spec, state)?;
    let s = state.stage;
    if s + 1 >= spec.dm_count() {
        return Err(TeamError::StageOutOfRange {
            stage: s + 1,
            dms: spec.dm_count(),
        });
    }
    check_rule(spec, s, rule)?;
    Ok(transition_unchecked(spec, state, rule))
}

pub(crate) fn transition_unchecked<R: StageRule + ?Sized>(
    spec: &TeamSpec,
    state: &ExtendedState,
    rule: &R,
) -> ExtendedState {
    let s = state.stage;
    let (y_len, u_len) = (spec.y_len(s), spec.u_len(s));
    let next = &spec.dms[s + 1];
    let next_y = next.y.len();
    let mut entries = Vec::with_capacity(state.entries.len());
    for &(i, p) in &state.entries {
        rule.for_each_action(i % y_len, &mut |u, pu| {
            let h = i * u_len + u;
            for (y, &k) in next.kernel.row(h).iter().enumerate() {
                if k != 0.0 {
                    entries.push((h * next_y + y, p * pu * k));
                }
            }
        });
    }
    ExtendedState {
        stage: s + 1,
        dims: spec.prefix_dims(s + 1),
        entries,
    }
}

/// Extends the last-stage state with `u^{N-1} ~ γ^{N-1}(· | y^{N-1})`.
pub fn attach_final_action<R: StageRule + ?Sized>(
    spec: &TeamSpec,
    state: &ExtendedState,
    rule: &R,
) -> Result<PathMeasure> {
    check_state(spec, state)?;
    let s = state.stage;
    if s + 1 != spec.dm_count() {
        return Err(TeamError::shape(format!(
            "final action attaches to stage {}, state is at stage {s}",
            spec.dm_count() - 1
        )));
    }
    check_rule(spec, s, rule)?;
    let (y_len, u_len) = (spec.y_len(s), spec.u_len(s));
    let mut entries = Vec::with_capacity(state.entries.len());
    for &(i, p) in &state.entries {
        rule.for_each_action(i % y_len, &mut |u, pu| entries.push((i * u_len + u, p * pu)));
    }
    Ok(PathMeasure {
        dims: spec.path_dims(),
        entries,
    })
}

/// Maps an interleaved index `(ω0, y^0, u^0, …)` to the partial cost index
/// over `(ω0, u^0, …)` of the coordinates present.
#[derive(Debug, Clone)]
pub(crate) struct CostIndexer {
    radix: MixedRadix,
    /// Cost-table stride of each interleaved position (0 for measurements).
    cost_strides: Vec<usize>,
}

impl CostIndexer {
    pub(crate) fn new(spec: &TeamSpec, dims: Vec<usize>) -> Self {
        let positions = dims.len();
        let u_present = (positions - 1) / 2;
        let cost_dims: Vec<usize> = std::iter::once(spec.omega_len())
            .chain((0..u_present).map(|k| spec.u_len(k)))
            .collect();
        let cost_radix = MixedRadix::new(&cost_dims);
        let mut cost_strides = vec![0; positions];
        cost_strides[0] = cost_radix.strides()[0];
        for k in 0..u_present {
            cost_strides[2 + 2 * k] = cost_radix.strides()[k + 1];
        }
        Self {
            radix: MixedRadix::new(&dims),
            cost_strides,
        }
    }

    #[inline]
    pub(crate) fn cost_index(&self, mut index: usize) -> usize {
        let mut c = 0;
        for (&stride, &cs) in self.radix.strides().iter().zip(&self.cost_strides) {
            let d = index / stride;
            index -= d * stride;
            c += d * cs;
        }
        c
    }
}

/// `⟨c, μ⟩` for a full-path measure.
pub fn pair_cost(spec: &TeamSpec, measure: &PathMeasure) -> f64 {
    let indexer = CostIndexer::new(spec, measure.dims.clone());
    let cost = spec.cost.values();
    measure
        .entries
        .iter()
        .map(|&(i, p)| p * cost[indexer.cost_index(i)])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        expected_cost, CostTable, DecisionMaker, DeterministicPolicy, Distribution, FiniteSpace, Kernel, StageAction,
    };
    use crate::random::{random_deterministic_policy, random_team, rng, RandomTeamConfig};

    fn uniform_binary(n: usize) -> TeamSpec {
        let b = || FiniteSpace::indexed("v", 2);
        let mut dms = Vec::new();
        for k in 0..n {
            let dims = vec![2; 2 * k + 1];
            dms.push(DecisionMaker {
                y: b(),
                u: b(),
                kernel: Kernel::constant(dims, &Distribution::uniform(2)),
            });
        }
        TeamSpec::new(
            b(),
            Distribution::uniform(2),
            dms,
            CostTable::constant(vec![2; n + 1], 1.0),
        )
        .unwrap()
    }

    #[test]
    fn initial_state_of_diagonal_kernel() {
        let mut spec = uniform_binary(1);
        spec.prior = Distribution::new(vec![0.2, 0.8]).unwrap();
        spec.dms[0].kernel = Kernel::deterministic(vec![2], 2, |d| d[0]);
        assert_eq!(initial_state(&spec).to_dense(), vec![0.2, 0.0, 0.0, 0.8]);
    }

    #[test]
    fn initial_state_uniform_cells() {
        let spec = uniform_binary(1);
        assert_eq!(initial_state(&spec).to_dense(), vec![0.25; 4]);
    }

    #[test]
    fn constant_action_gives_product_state() {
        let spec = uniform_binary(2);
        let pi0 = initial_state(&spec);
        let pi1 = transition(&spec, &pi0, &StageAction::constant(2, 1)).unwrap();
        let dense = pi1.to_dense();
        // layout (ω0, y0, u0, y1)
        for (i, p) in dense.iter().enumerate() {
            let u0 = (i / 2) % 2;
            let expected = if u0 == 1 { 0.125 } else { 0.0 };
            assert_eq!(*p, expected, "cell {i}");
        }
        assert!((pi1.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transition_marginalizes_back() {
        let mut r = rng(3);
        for _ in 0..20 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let pol = random_deterministic_policy(&mut r, &spec);
            let pi0 = initial_state(&spec);
            let pi1 = transition(&spec, &pi0, &pol.stage(0)).unwrap();
            assert!((pi1.mass() - 1.0).abs() < 1e-12);
            let tail = spec.u_len(0) * spec.y_len(1);
            let back: Vec<f64> = pi1.to_dense().chunks(tail).map(|c| c.iter().sum()).collect();
            for (a, b) in back.iter().zip(pi0.to_dense()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn final_pairing_matches_expected_cost() {
        let mut r = rng(4);
        for _ in 0..20 {
            let spec = random_team(&mut r, &RandomTeamConfig::small(3, 3));
            let pol = random_deterministic_policy(&mut r, &spec);
            let mut pi = initial_state(&spec);
            for s in 0..2 {
                pi = transition(&spec, &pi, &pol.stage(s)).unwrap();
            }
            let full = attach_final_action(&spec, &pi, &pol.stage(2)).unwrap();
            let j = expected_cost(&spec, &pol).unwrap();
            assert!((pair_cost(&spec, &full) - j).abs() < 1e-12);
        }
    }

    #[test]
    fn irrelevant_last_action() {
        let mut spec = uniform_binary(2);
        spec.cost = CostTable::from_fn(vec![2, 2, 2], |d| (d[0] + 2 * d[1]) as f64);
        let pi0 = initial_state(&spec);
        let pi1 = transition(&spec, &pi0, &StageAction::new(vec![0, 1])).unwrap();
        let a = pair_cost(
            &spec,
            &attach_final_action(&spec, &pi1, &StageAction::new(vec![0, 0])).unwrap(),
        );
        let b = pair_cost(
            &spec,
            &attach_final_action(&spec, &pi1, &StageAction::new(vec![1, 0])).unwrap(),
        );
        assert_eq!(a, b);
        let _ = DeterministicPolicy::zeros(&spec);
    }

    #[test]
    fn stage_errors() {
        let spec = uniform_binary(2);
        let pi0 = initial_state(&spec);
        let pi1 = transition(&spec, &pi0, &StageAction::constant(2, 0)).unwrap();
        assert!(matches!(
            transition(&spec, &pi1, &StageAction::constant(2, 0)),
            Err(TeamError::StageOutOfRange { .. })
        ));
        assert!(attach_final_action(&spec, &pi0, &StageAction::constant(2, 0)).is_err());
        assert!(transition(&spec, &pi0, &StageAction::constant(3, 0)).is_err());
    }

    #[test]
    fn key_behaviour() {
        let spec = uniform_binary(2);
        let pi0 = initial_state(&spec);
        // Different stage policies, same resulting tensor (uniform kernels, swap).
        let a = transition(&spec, &pi0, &StageAction::new(vec![0, 1])).unwrap();
        let b = ExtendedState::from_dense(&spec, 1, &a.to_dense()).unwrap();
        assert_eq!(a.key(), b.key());
        assert_eq!(a.key(), a.key());

        let mut dense = a.to_dense();
        dense[0] += f64::powi(2.0, -20);
        let c = ExtendedState::from_dense(&spec, 1, &dense).unwrap();
        assert_ne!(a.key(), c.key());

        let mut dense = a.to_dense();
        dense[0] += f64::powi(2.0, -45);
        let d = ExtendedState::from_dense(&spec, 1, &dense).unwrap();
        assert_eq!(a.key(), d.key());
    }
}
