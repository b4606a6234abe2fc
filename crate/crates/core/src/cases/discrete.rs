//! The binary-noise Witsenhausen team: `x, w` uniform on `{−1, 1}`,
//! `u¹ = γ¹(x)`, `u² = γ²(u¹ + w)`, cost `k(u¹ − x)² + (u² − u¹)²`.

use std::collections::BTreeMap;

use crate::error::{Result, TeamError};
use crate::model::{CostTable, DecisionMaker, DeterministicPolicy, Distribution, FiniteSpace, Kernel, TeamSpec};
use crate::oracle::{brute_force, DEFAULT_BRUTE_FORCE_CAP};
use crate::par::{self, Execution};
use crate::solver::{solve_exact, SolveOptions};

use super::SweepRow;

/// Grid values closer than this are treated as the same measurement.
const DEDUP_SCALE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq)]
pub struct WitsenhausenDiscreteConfig {
    pub k: f64,
    pub eps: f64,
    pub u1_grid: Vec<f64>,
    pub u2_grid: Vec<f64>,
}

impl WitsenhausenDiscreteConfig {
    /// Both grids `{−1−ε, −ε, ε, 1+ε}`, which contain every action the
    /// two-level signalling policy uses.
    pub fn with_default_grid(k: f64, eps: f64) -> Self {
        let grid = default_grid(eps);
        Self {
            k,
            eps,
            u1_grid: grid.clone(),
            u2_grid: grid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(TeamError::InvalidConfig(format!(
                "k must be finite and non-negative, got {}",
                self.k
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(TeamError::InvalidConfig(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        for (name, grid) in [("u1 grid", &self.u1_grid), ("u2 grid", &self.u2_grid)] {
            if grid.is_empty() {
                return Err(TeamError::InvalidConfig(format!("{name} is empty")));
            }
            if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(TeamError::InvalidConfig(format!(
                    "{name} must be finite and strictly increasing"
                )));
            }
        }
        Ok(())
    }
}

pub fn default_grid(eps: f64) -> Vec<f64> {
    vec![-1.0 - eps, -eps, eps, 1.0 + eps]
}

/// A built instance together with the numeric value behind every label.
#[derive(Debug, Clone)]
pub struct DiscreteWitsenhausen {
    pub config: WitsenhausenDiscreteConfig,
    pub spec: TeamSpec,
    /// Sorted distinct values of `u¹ + w`.
    pub y2_values: Vec<f64>,
}

const SIGNS: [f64; 2] = [-1.0, 1.0];

fn scaled(v: f64) -> i64 {
    (v * DEDUP_SCALE).round() as i64
}

fn fmt_value(v: f64) -> String {
    let r = (v * DEDUP_SCALE).round() / DEDUP_SCALE;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

pub fn build_discrete_witsenhausen(cfg: &WitsenhausenDiscreteConfig) -> Result<DiscreteWitsenhausen> {
    cfg.validate()?;
    let mut y2: BTreeMap<i64, f64> = BTreeMap::new();
    for &g in &cfg.u1_grid {
        for w in SIGNS {
            y2.entry(scaled(g + w)).or_insert(g + w);
        }
    }
    let y2_keys: Vec<i64> = y2.keys().copied().collect();
    let y2_values: Vec<f64> = y2.values().copied().collect();
    let y2_pos = |v: f64| y2_keys.binary_search(&scaled(v)).expect("measurement on grid");

    let omega_labels: Vec<String> = SIGNS
        .iter()
        .flat_map(|x| SIGNS.iter().map(move |w| format!("x={x},w={w}")))
        .collect();
    let omega0 = FiniteSpace::new(omega_labels)?;
    let y1 = FiniteSpace::new(["-1", "1"])?;
    let u1 = FiniteSpace::new(cfg.u1_grid.iter().map(|&v| fmt_value(v)))?;
    let u2 = FiniteSpace::new(cfg.u2_grid.iter().map(|&v| fmt_value(v)))?;
    let y2_space = FiniteSpace::new(y2_values.iter().map(|&v| fmt_value(v)))?;
    let (n1, n2) = (cfg.u1_grid.len(), cfg.u2_grid.len());

    let dm0 = DecisionMaker {
        y: y1,
        u: u1,
        kernel: Kernel::deterministic(vec![4], 2, |d| d[0] / 2),
    };
    let dm1 = DecisionMaker {
        y: y2_space,
        u: u2,
        kernel: Kernel::deterministic(vec![4, 2, n1], y2_values.len(), |d| {
            y2_pos(cfg.u1_grid[d[2]] + SIGNS[d[0] % 2])
        }),
    };
    let cost = CostTable::from_fn(vec![4, n1, n2], |d| {
        let x = SIGNS[d[0] / 2];
        let (a, b) = (cfg.u1_grid[d[1]], cfg.u2_grid[d[2]]);
        cfg.k * (a - x).powi(2) + (b - a).powi(2)
    });
    let spec = TeamSpec::new(omega0, Distribution::uniform(4), vec![dm0, dm1], cost)?;
    Ok(DiscreteWitsenhausen {
        config: cfg.clone(),
        spec,
        y2_values,
    })
}

fn grid_position(grid: &[f64], target: f64, what: &str) -> Result<usize> {
    grid.iter()
        .position(|&g| (g - target).abs() < 1.0 / DEDUP_SCALE)
        .ok_or_else(|| TeamError::InvalidConfig(format!("{what} value {target} is not on the grid")))
}

impl DiscreteWitsenhausen {
    /// `γ¹(x) = x + ε·sgn(x)`; `γ²` sends `{2+ε, ε}` to `1+ε` and
    /// `{−2−ε, −ε}` to `−1−ε`. Any other measurement value takes the action
    /// of the nearest of those four.
    pub fn signalling_policy(&self) -> Result<DeterministicPolicy> {
        let e = self.config.eps;
        let hi = grid_position(&self.config.u1_grid, 1.0 + e, "first action")?;
        let lo = grid_position(&self.config.u1_grid, -1.0 - e, "first action")?;
        let hi2 = grid_position(&self.config.u2_grid, 1.0 + e, "second action")?;
        let lo2 = grid_position(&self.config.u2_grid, -1.0 - e, "second action")?;
        let listed = [(2.0 + e, hi2), (e, hi2), (-e, lo2), (-2.0 - e, lo2)];
        let second = self
            .y2_values
            .iter()
            .map(|&y| {
                listed
                    .iter()
                    .min_by(|a, b| (a.0 - y).abs().total_cmp(&(b.0 - y).abs()))
                    .map(|l| l.1)
                    .unwrap()
            })
            .collect();
        Ok(DeterministicPolicy::new(vec![vec![lo, hi], second]))
    }
}

/// For each `ε`, the exact optimum on the grid from `grids(ε)`, next to the
/// value of the signalling policy on the same grid. Rows keep the order of
/// `eps_list`.
pub fn refinement_sweep<G>(k: f64, eps_list: &[f64], grids: G, exec: Execution) -> Result<Vec<SweepRow>>
where
    G: Fn(f64) -> (Vec<f64>, Vec<f64>) + Sync,
{
    let rows = par::map_slice(exec, eps_list, |&eps| -> Result<SweepRow> {
        let (u1_grid, u2_grid) = grids(eps);
        let inst = build_discrete_witsenhausen(&WitsenhausenDiscreteConfig {
            k,
            eps,
            u1_grid,
            u2_grid,
        })?;
        let opts = SolveOptions {
            execution: Execution::Sequential,
            ..SolveOptions::default()
        };
        let optimum = solve_exact(&inst.spec, &opts)?.value;
        let baseline = match inst.signalling_policy() {
            Ok(p) => crate::model::expected_cost(&inst.spec, &p)?,
            Err(_) => f64::NAN,
        };
        Ok(SweepRow {
            parameter: eps,
            optimum,
            baseline,
            gap: baseline - optimum,
        })
    });
    rows.into_iter().collect()
}

/// Exhaustive check of one sweep row.
pub fn brute_force_optimum(inst: &DiscreteWitsenhausen, exec: Execution) -> Result<f64> {
    Ok(brute_force(&inst.spec, DEFAULT_BRUTE_FORCE_CAP, exec)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::expected_cost;

    #[test]
    fn eight_distinct_second_measurements() {
        let inst = build_discrete_witsenhausen(&WitsenhausenDiscreteConfig::with_default_grid(1.0, 0.1)).unwrap();
        assert_eq!(inst.spec.y_len(1), 8);
        assert_eq!(inst.y2_values.len(), 8);
        assert!(inst.spec.validate().is_valid());
    }

    #[test]
    fn coinciding_sums_are_merged() {
        // Neighbouring grid points are one apart, so their ±1 sums collide.
        let inst = build_discrete_witsenhausen(&WitsenhausenDiscreteConfig::with_default_grid(1.0, 0.5)).unwrap();
        assert_eq!(inst.y2_values, vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
    }

    #[test]
    fn signalling_policy_costs_k_eps_squared() {
        for &(k, eps) in &[(1.0, 0.5), (1.0, 0.1), (0.3, 0.05), (2.0, 0.2)] {
            let inst = build_discrete_witsenhausen(&WitsenhausenDiscreteConfig::with_default_grid(k, eps)).unwrap();
            let p = inst.signalling_policy().unwrap();
            let j = expected_cost(&inst.spec, &p).unwrap();
            assert!((j - k * eps * eps).abs() < 1e-12, "k={k} eps={eps} J={j}");
        }
    }

    #[test]
    fn zero_weight_has_zero_optimum() {
        let inst = build_discrete_witsenhausen(&WitsenhausenDiscreteConfig::with_default_grid(0.0, 0.1)).unwrap();
        let v = solve_exact(&inst.spec, &SolveOptions::default()).unwrap().value;
        assert_eq!(v, 0.0);
    }

    #[test]
    fn sweep_matches_brute_force_and_bound() {
        let eps = [0.5, 0.2, 0.1];
        let rows = refinement_sweep(1.0, &eps, |e| (default_grid(e), default_grid(e)), Execution::Parallel).unwrap();
        for (row, &e) in rows.iter().zip(&eps) {
            assert_eq!(row.parameter, e);
            assert!(row.optimum <= e * e + 1e-12);
            assert!(row.optimum > 0.0);
            let inst = build_discrete_witsenhausen(&WitsenhausenDiscreteConfig::with_default_grid(1.0, e)).unwrap();
            let bf = brute_force_optimum(&inst, Execution::Sequential).unwrap();
            assert!((bf - row.optimum).abs() < 1e-12);
            assert!((row.gap - (row.baseline - row.optimum)).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = WitsenhausenDiscreteConfig::with_default_grid(1.0, 0.1);
        cfg.u2_grid = vec![1.0, 0.0];
        assert!(build_discrete_witsenhausen(&cfg).is_err());
        cfg.u2_grid.clear();
        assert!(build_discrete_witsenhausen(&cfg).is_err());
    }

    #[test]
    fn policy_needs_representable_actions() {
        let mut cfg = WitsenhausenDiscreteConfig::with_default_grid(1.0, 0.1);
        cfg.u1_grid = vec![-1.0, 0.0, 1.0];
        let inst = build_discrete_witsenhausen(&cfg).unwrap();
        assert!(inst.signalling_policy().is_err());
    }
}
