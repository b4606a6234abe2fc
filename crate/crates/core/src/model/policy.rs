use super::team::TeamSpec;
use super::types::NORMALIZATION_TOL;
use crate::error::{Result, TeamError};
use crate::layout::pow_u128;

/// Default cap on `|U^n|^{|Y^n|}` for stage-policy enumeration.
pub const DEFAULT_STAGE_POLICY_CAP: u128 = 10_000_000;

/// Read access to a team policy, deterministic or individually randomized.
pub trait Policy: Sync {
    fn dm_count(&self) -> usize;

    /// Checks the policy against measurement sizes `y` and action sizes `u`.
    fn check_dims(&self, y: &[usize], u: &[usize]) -> Result<()>;

    fn check_shape(&self, spec: &TeamSpec) -> Result<()> {
        let y: Vec<usize> = spec.dms.iter().map(|d| d.y.len()).collect();
        let u: Vec<usize> = spec.dms.iter().map(|d| d.u.len()).collect();
        self.check_dims(&y, &u)
    }

    /// `π^n(u | y)`.
    fn prob(&self, n: usize, y: usize, u: usize) -> f64;

    /// Calls `f(u, π^n(u | y))` for every action with positive probability.
    fn for_each_action(&self, n: usize, y: usize, f: &mut dyn FnMut(usize, f64));
}

/// Per-stage decision rule `y ↦ π(· | y)`.
pub trait StageRule: Sync {
    fn measurement_count(&self) -> usize;
    fn for_each_action(&self, y: usize, f: &mut dyn FnMut(usize, f64));
}

/// `u^n = γ^n(y^n)`: one action index per measurement index, per decision maker.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    tables: Vec<Vec<usize>>,
}

impl DeterministicPolicy {
    pub fn new(tables: Vec<Vec<usize>>) -> Self {
        Self { tables }
    }

    /// Every decision maker plays action 0 everywhere.
    pub fn zeros(spec: &TeamSpec) -> Self {
        Self {
            tables: spec.dms.iter().map(|dm| vec![0; dm.y.len()]).collect(),
        }
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    pub fn stage(&self, n: usize) -> StageAction {
        StageAction::new(self.tables[n].clone())
    }

    pub fn action(&self, n: usize, y: usize) -> usize {
        self.tables[n][y]
    }

    pub fn set_stage(&mut self, n: usize, table: Vec<usize>) {
        self.tables[n] = table;
    }

    pub fn to_randomized(&self, spec: &TeamSpec) -> RandomizedPolicy {
        let rows = self
            .tables
            .iter()
            .enumerate()
            .map(|(n, t)| {
                t.iter()
                    .map(|&a| {
                        let mut row = vec![0.0; spec.u_len(n)];
                        row[a] = 1.0;
                        row
                    })
                    .collect()
            })
            .collect();
        RandomizedPolicy { rows }
    }
}

impl Policy for DeterministicPolicy {
    fn dm_count(&self) -> usize {
        self.tables.len()
    }

    fn check_dims(&self, y_lens: &[usize], u_lens: &[usize]) -> Result<()> {
        if self.tables.len() != y_lens.len() {
            return Err(TeamError::shape(format!(
                "policy covers {} decision makers, team has {}",
                self.tables.len(),
                y_lens.len()
            )));
        }
        for (n, t) in self.tables.iter().enumerate() {
            if t.len() != y_lens[n] {
                return Err(TeamError::shape(format!(
                    "policy for dm {n} has {} entries, measurement space has {}",
                    t.len(),
                    y_lens[n]
                )));
            }
            if let Some((y, a)) = t.iter().enumerate().find(|(_, &a)| a >= u_lens[n]) {
                return Err(TeamError::shape(format!(
                    "policy for dm {n} maps measurement {y} to action {a}, only {} actions",
                    u_lens[n]
                )));
            }
        }
        Ok(())
    }

    #[inline]
    fn prob(&self, n: usize, y: usize, u: usize) -> f64 {
        if self.tables[n][y] == u {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    fn for_each_action(&self, n: usize, y: usize, f: &mut dyn FnMut(usize, f64)) {
        f(self.tables[n][y], 1.0)
    }
}

/// Individually randomized policy: `rows[n][y][u] = Π^n(u | y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedPolicy {
    rows: Vec<Vec<Vec<f64>>>,
}

impl RandomizedPolicy {
    pub fn new(rows: Vec<Vec<Vec<f64>>>) -> Self {
        Self { rows }
    }

    /// Uniform over actions for every measurement.
    pub fn uniform(spec: &TeamSpec) -> Self {
        Self {
            rows: spec
                .dms
                .iter()
                .map(|dm| vec![vec![1.0 / dm.u.len() as f64; dm.u.len()]; dm.y.len()])
                .collect(),
        }
    }

    pub fn rows(&self) -> &[Vec<Vec<f64>>] {
        &self.rows
    }

    pub fn stage_rows(&self, n: usize) -> &[Vec<f64>] {
        &self.rows[n]
    }

    pub fn set_row(&mut self, n: usize, y: usize, row: Vec<f64>) {
        self.rows[n][y] = row;
    }
}

impl Policy for RandomizedPolicy {
    fn dm_count(&self) -> usize {
        self.rows.len()
    }

    fn check_dims(&self, y_lens: &[usize], u_lens: &[usize]) -> Result<()> {
        if self.rows.len() != y_lens.len() {
            return Err(TeamError::shape(format!(
                "policy covers {} decision makers, team has {}",
                self.rows.len(),
                y_lens.len()
            )));
        }
        for (n, table) in self.rows.iter().enumerate() {
            if table.len() != y_lens[n] {
                return Err(TeamError::shape(format!(
                    "policy for dm {n} has {} rows, measurement space has {}",
                    table.len(),
                    y_lens[n]
                )));
            }
            for (y, row) in table.iter().enumerate() {
                if row.len() != u_lens[n] {
                    return Err(TeamError::shape(format!(
                        "policy row ({n}, {y}) has {} entries, expected {}",
                        row.len(),
                        u_lens[n]
                    )));
                }
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(TeamError::shape(format!("policy row ({n}, {y}) is not a distribution")));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn prob(&self, n: usize, y: usize, u: usize) -> f64 {
        self.rows[n][y][u]
    }

    fn for_each_action(&self, n: usize, y: usize, f: &mut dyn FnMut(usize, f64)) {
        for (u, &p) in self.rows[n][y].iter().enumerate() {
            if p > 0.0 {
                f(u, p)
            }
        }
    }
}

/// Either kind of policy, for callers that choose at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyPolicy {
    Deterministic(DeterministicPolicy),
    Randomized(RandomizedPolicy),
}

impl Policy for AnyPolicy {
    fn dm_count(&self) -> usize {
        match self {
            AnyPolicy::Deterministic(p) => p.dm_count(),
            AnyPolicy::Randomized(p) => p.dm_count(),
        }
    }

    fn check_dims(&self, y: &[usize], u: &[usize]) -> Result<()> {
        match self {
            AnyPolicy::Deterministic(p) => p.check_dims(y, u),
            AnyPolicy::Randomized(p) => p.check_dims(y, u),
        }
    }

    fn prob(&self, n: usize, y: usize, u: usize) -> f64 {
        match self {
            AnyPolicy::Deterministic(p) => p.prob(n, y, u),
            AnyPolicy::Randomized(p) => p.prob(n, y, u),
        }
    }

    fn for_each_action(&self, n: usize, y: usize, f: &mut dyn FnMut(usize, f64)) {
        match self {
            AnyPolicy::Deterministic(p) => p.for_each_action(n, y, f),
            AnyPolicy::Randomized(p) => p.for_each_action(n, y, f),
        }
    }
}

/// A deterministic stage policy `γ^n : Y^n → U^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StageAction {
    table: Vec<usize>,
}

impl StageAction {
    pub fn new(table: Vec<usize>) -> Self {
        Self { table }
    }

    pub fn constant(y_len: usize, action: usize) -> Self {
        Self {
            table: vec![action; y_len],
        }
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn into_table(self) -> Vec<usize> {
        self.table
    }
}

impl StageRule for StageAction {
    fn measurement_count(&self) -> usize {
        self.table.len()
    }

    #[inline]
    fn for_each_action(&self, y: usize, f: &mut dyn FnMut(usize, f64)) {
        f(self.table[y], 1.0)
    }
}

/// A randomized stage policy given by row-stochastic rows `Π(u | y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedStage {
    rows: Vec<Vec<f64>>,
}

impl RandomizedStage {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }
}

impl StageRule for RandomizedStage {
    fn measurement_count(&self) -> usize {
        self.rows.len()
    }

    fn for_each_action(&self, y: usize, f: &mut dyn FnMut(usize, f64)) {
        for (u, &p) in self.rows[y].iter().enumerate() {
            if p > 0.0 {
                f(u, p)
            }
        }
    }
}

/// Stage `n` of a team policy viewed as a [`StageRule`].
pub struct PolicyStage<'a, P: ?Sized> {
    pub policy: &'a P,
    pub n: usize,
    pub y_len: usize,
}

impl<P: Policy + ?Sized> StageRule for PolicyStage<'_, P> {
    fn measurement_count(&self) -> usize {
        self.y_len
    }

    fn for_each_action(&self, y: usize, f: &mut dyn FnMut(usize, f64)) {
        self.policy.for_each_action(self.n, y, f)
    }
}

/// All deterministic stage policies `Y^n → U^n` in lexicographic order of the
/// action tuple (the entry for measurement 0 is the most significant digit).
/// This order is the canonical tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StagePolicies {
    y_len: usize,
    u_len: usize,
    count: usize,
}

impl StagePolicies {
    pub fn new(y_len: usize, u_len: usize, cap: u128) -> Result<Self> {
        let required = pow_u128(u_len, y_len);
        if required > cap || required > usize::MAX as u128 {
            return Err(TeamError::CapExceeded {
                what: "stage policies",
                required,
                cap,
            });
        }
        Ok(Self {
            y_len,
            u_len,
            count: required as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Writes the `index`-th table into `out` (length `y_len`).
    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = index % self.u_len;
            index /= self.u_len;
        }
    }

    pub fn get(&self, index: usize) -> StageAction {
        let mut table = vec![0; self.y_len];
        self.decode_into(index, &mut table);
        StageAction::new(table)
    }

    pub fn iter(&self) -> impl Iterator<Item = StageAction> + '_ {
        (0..self.count).map(|i| self.get(i))
    }
}

/// Enumerates the deterministic stage policies of decision maker `n`.
pub fn enumerate_stage_policies(spec: &TeamSpec, n: usize, cap: u128) -> Result<StagePolicies> {
    if n >= spec.dm_count() {
        return Err(TeamError::StageOutOfRange {
            stage: n,
            dms: spec.dm_count(),
        });
    }
    StagePolicies::new(spec.y_len(n), spec.u_len(n), cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_measurement_lists_actions_in_order() {
        let p = StagePolicies::new(1, 3, DEFAULT_STAGE_POLICY_CAP).unwrap();
        let all: Vec<_> = p.iter().map(StageAction::into_table).collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn binary_tables_are_lexicographic() {
        let p = StagePolicies::new(2, 2, DEFAULT_STAGE_POLICY_CAP).unwrap();
        let all: Vec<_> = p.iter().map(StageAction::into_table).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn overflow_guard() {
        let err = StagePolicies::new(20, 10, DEFAULT_STAGE_POLICY_CAP).unwrap_err();
        assert!(matches!(
            err,
            TeamError::CapExceeded { required, .. } if required == 10u128.pow(20)
        ));
    }
}
