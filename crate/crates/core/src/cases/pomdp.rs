//! Finite-horizon POMDPs as sequential teams.
//!
//! All randomness is moved into `ω0 = (x_0, transition uniformizers,
//! observation uniformizers)`, so that states and observations are
//! deterministic functions of `ω0` and past actions. DM `t` observes `y_t`,
//! and perfect recall is then imposed, giving the classical information
//! structure of a single controller.

use crate::error::{Result, TeamError};
use crate::layout::MixedRadix;
use crate::model::{
    perfect_recall_expansion, CostTable, DecisionMaker, Distribution, FiniteSpace, Kernel, TeamSpec, DEFAULT_TABLE_CAP,
    NORMALIZATION_TOL,
};

/// Breakpoints closer than this are merged.
const BREAKPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PomdpSpec {
    pub states: FiniteSpace,
    pub observations: FiniteSpace,
    pub actions: FiniteSpace,
    pub initial: Distribution,
    /// Rows indexed by `(x, u)`, `x` slowest.
    pub transition: Kernel,
    /// Rows indexed by `x`.
    pub observation: Kernel,
    /// Dims `[X, U]`.
    pub stage_cost: CostTable,
    pub horizon: usize,
}

impl PomdpSpec {
    pub fn validate(&self) -> Result<()> {
        let (x, y, u) = (self.states.len(), self.observations.len(), self.actions.len());
        let bad = |m: String| Err(TeamError::InvalidConfig(m));
        if x == 0 || y == 0 || u == 0 {
            return bad("pomdp spaces must be non-empty".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.initial.len() != x {
            return bad("initial distribution does not match the state space".into());
        }
        if self.transition.input_dims() != [x, u] || self.transition.output_dim() != x {
            return bad("transition kernel must map (state, action) to state".into());
        }
        if self.observation.input_dims() != [x] || self.observation.output_dim() != y {
            return bad("observation kernel must map state to observation".into());
        }
        if self.stage_cost.dims() != [x, u] {
            return bad("stage cost must be a (state, action) table".into());
        }
        for (name, k) in [("transition", &self.transition), ("observation", &self.observation)] {
            for r in 0..k.row_count() {
                let row = k.row(r);
                let s: f64 = row.iter().sum();
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (s - 1.0).abs() > NORMALIZATION_TOL {
                    return bad(format!("{name} row {r} is not a probability vector"));
                }
            }
        }
        if self.stage_cost.values().iter().any(|c| !c.is_finite()) {
            return bad("stage cost has a non-finite entry".into());
        }
        Ok(())
    }

    /// The same model with the state observed exactly.
    pub fn fully_observed(&self) -> Self {
        let x = self.states.len();
        Self {
            observations: self.states.clone(),
            observation: Kernel::deterministic(vec![x], x, |d| d[0]),
            ..self.clone()
        }
    }
}

/// Inverse-transform representation of a kernel: a finite uniformizer whose
/// levels are the gaps between all rows' cumulative breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Uniformizer {
    /// Probability of each level.
    pub widths: Vec<f64>,
    /// `outcome[row][level]`.
    pub outcome: Vec<Vec<usize>>,
}

pub fn uniformizer(kernel: &Kernel) -> Uniformizer {
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for r in 0..kernel.row_count() {
        let mut acc = 0.0;
        for &p in kernel.row(r) {
            acc += p;
            if acc > 0.0 && acc < 1.0 {
                cuts.push(acc);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(cuts.len());
    for c in cuts {
        match merged.last() {
            Some(&last) if c - last <= BREAKPOINT_TOL => {}
            _ => merged.push(c),
        }
    }
    if 1.0 - merged[merged.len() - 1] > 0.0 {
        // The merged tail absorbed 1.0 into a breakpoint within tolerance.
        *merged.last_mut().unwrap() = 1.0;
    }
    let widths: Vec<f64> = merged.windows(2).map(|w| w[1] - w[0]).collect();
    let mids: Vec<f64> = merged.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let outcome = (0..kernel.row_count())
        .map(|r| {
            let row = kernel.row(r);
            mids.iter()
                .map(|&m| {
                    let mut acc = 0.0;
                    for (j, &p) in row.iter().enumerate() {
                        acc += p;
                        if m < acc {
                            return j;
                        }
                    }
                    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
                })
                .collect()
        })
        .collect();
    Uniformizer { widths, outcome }
}

/// `ω0` coordinates: `x_0`, then one transition level per step `0..T-1`,
/// then one observation level per step `0..T`.
struct NoiseLayout {
    radix: MixedRadix,
    trans: Uniformizer,
    obs: Uniformizer,
    horizon: usize,
}

impl NoiseLayout {
    fn new(p: &PomdpSpec, cap: u128) -> Result<Self> {
        let trans = uniformizer(&p.transition);
        let obs = uniformizer(&p.observation);
        let mut dims = vec![p.states.len()];
        dims.extend(std::iter::repeat_n(trans.widths.len(), p.horizon - 1));
        dims.extend(std::iter::repeat_n(obs.widths.len(), p.horizon));
        let radix = MixedRadix::checked(&dims, cap)?;
        Ok(Self {
            radix,
            trans,
            obs,
            horizon: p.horizon,
        })
    }

    fn prior(&self, p: &PomdpSpec, omega: usize) -> f64 {
        let d = self.radix.digits(omega);
        let mut q = p.initial.probs()[d[0]];
        for t in 0..self.horizon - 1 {
            q *= self.trans.widths[d[1 + t]];
        }
        for t in 0..self.horizon {
            q *= self.obs.widths[d[self.horizon + t]];
        }
        q
    }

    /// States `x_0..x_t` given `ω0` digits and the first `t` actions.
    fn states(&self, u_len: usize, d: &[usize], actions: &[usize]) -> Vec<usize> {
        let mut xs = vec![d[0]];
        for (t, &u) in actions.iter().enumerate() {
            let x = xs[t];
            xs.push(self.trans.outcome[x * u_len + u][d[1 + t]]);
        }
        xs
    }

    fn observe(&self, d: &[usize], t: usize, x: usize) -> usize {
        self.obs.outcome[x][d[self.horizon + t]]
    }
}

fn noise_label(layout: &NoiseLayout, p: &PomdpSpec, omega: usize) -> String {
    let d = layout.radix.digits(omega);
    let mut s = p.states.label(d[0]).to_string();
    for v in &d[1..] {
        s.push('|');
        s.push_str(&v.to_string());
    }
    s
}

/// The team in which DM `t` observes only `y_t`.
pub fn pomdp_observation_team(p: &PomdpSpec, cap: u128) -> Result<TeamSpec> {
    p.validate()?;
    let layout = NoiseLayout::new(p, cap)?;
    let omega_len = layout.radix.size();
    let (y_len, u_len) = (p.observations.len(), p.actions.len());

    let omega0 = FiniteSpace::from_labels_unchecked((0..omega_len).map(|w| noise_label(&layout, p, w)).collect());
    let prior = Distribution::from_probs_unchecked((0..omega_len).map(|w| layout.prior(p, w)).collect());

    let mut dms = Vec::with_capacity(p.horizon);
    let mut input = vec![omega_len];
    let mut rows = omega_len as u128;
    for t in 0..p.horizon {
        if rows * y_len as u128 > cap {
            return Err(TeamError::CapExceeded {
                what: "observation kernel entries",
                required: rows * y_len as u128,
                cap,
            });
        }
        let kernel = Kernel::deterministic(input.clone(), y_len, |h| {
            let d = layout.radix.digits(h[0]);
            let actions: Vec<usize> = (0..t).map(|k| h[2 + 2 * k]).collect();
            let xs = layout.states(u_len, &d, &actions);
            layout.observe(&d, t, xs[t])
        });
        dms.push(DecisionMaker {
            y: p.observations.clone(),
            u: p.actions.clone(),
            kernel,
        });
        input.push(y_len);
        input.push(u_len);
        rows *= (y_len * u_len) as u128;
    }

    let mut cost_dims = vec![omega_len];
    cost_dims.extend(std::iter::repeat_n(u_len, p.horizon));
    MixedRadix::checked(&cost_dims, cap)?;
    let c = p.stage_cost.values();
    let cost = CostTable::from_fn(cost_dims, |d| {
        let w = layout.radix.digits(d[0]);
        let xs = layout.states(u_len, &w, &d[1..p.horizon]);
        (0..p.horizon).map(|t| c[xs[t] * u_len + d[1 + t]]).sum()
    });
    TeamSpec::new(omega0, prior, dms, cost)
}

/// [`pomdp_observation_team`] with perfect recall imposed.
pub fn build_pomdp_team(p: &PomdpSpec) -> Result<TeamSpec> {
    build_pomdp_team_with_cap(p, DEFAULT_TABLE_CAP)
}

pub fn build_pomdp_team_with_cap(p: &PomdpSpec, cap: u128) -> Result<TeamSpec> {
    let team = pomdp_observation_team(p, cap)?;
    perfect_recall_expansion(&team, cap)
}

fn stage_cost(p: &PomdpSpec, belief: &[f64], u: usize) -> f64 {
    let u_len = p.actions.len();
    belief
        .iter()
        .enumerate()
        .map(|(x, b)| b * p.stage_cost.values()[x * u_len + u])
        .sum()
}

fn predict(p: &PomdpSpec, belief: &[f64], u: usize) -> Vec<f64> {
    let (x_len, u_len) = (p.states.len(), p.actions.len());
    let mut next = vec![0.0; x_len];
    for (x, &b) in belief.iter().enumerate() {
        if b > 0.0 {
            for (x2, q) in p.transition.row(x * u_len + u).iter().enumerate() {
                next[x2] += b * q;
            }
        }
    }
    next
}

/// Splits a prior on the state by the observation: `(P(y), posterior)`
/// for every `y` with positive likelihood.
fn observe(p: &PomdpSpec, prior: &[f64]) -> Vec<(f64, Vec<f64>)> {
    (0..p.observations.len())
        .filter_map(|y| {
            let joint: Vec<f64> = prior
                .iter()
                .enumerate()
                .map(|(x, b)| b * p.observation.prob(x, y))
                .collect();
            let py: f64 = joint.iter().sum();
            (py > 0.0).then(|| (py, joint.iter().map(|j| j / py).collect()))
        })
        .collect()
}

fn belief_value(p: &PomdpSpec, t: usize, belief: &[f64]) -> f64 {
    (0..p.actions.len())
        .map(|u| {
            let mut v = stage_cost(p, belief, u);
            if t + 1 < p.horizon {
                let next = predict(p, belief, u);
                v += observe(p, &next)
                    .iter()
                    .map(|(py, post)| py * belief_value(p, t + 1, post))
                    .sum::<f64>();
            }
            v
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exact finite-horizon value over the reachable belief tree.
pub fn belief_value_iteration(p: &PomdpSpec) -> Result<f64> {
    p.validate()?;
    Ok(observe(p, p.initial.probs())
        .iter()
        .map(|(py, post)| py * belief_value(p, 0, post))
        .sum())
}

/// Backward induction with the state observed; the observation kernel is
/// ignored.
pub fn mdp_value(p: &PomdpSpec) -> Result<f64> {
    p.validate()?;
    let (x_len, u_len) = (p.states.len(), p.actions.len());
    let mut v = vec![0.0; x_len];
    for _ in 0..p.horizon {
        v = (0..x_len)
            .map(|x| {
                (0..u_len)
                    .map(|u| {
                        let future: f64 = p
                            .transition
                            .row(x * u_len + u)
                            .iter()
                            .zip(&v)
                            .map(|(q, vx)| q * vx)
                            .sum();
                        p.stage_cost.values()[x * u_len + u] + future
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
    }
    Ok(p.initial.probs().iter().zip(&v).map(|(b, vx)| b * vx).sum())
}

/// Best fixed action sequence.
pub fn open_loop_value(p: &PomdpSpec) -> Result<f64> {
    p.validate()?;
    fn go(p: &PomdpSpec, t: usize, belief: &[f64]) -> f64 {
        (0..p.actions.len())
            .map(|u| {
                let mut v = stage_cost(p, belief, u);
                if t + 1 < p.horizon {
                    v += go(p, t + 1, &predict(p, belief, u));
                }
                v
            })
            .fold(f64::INFINITY, f64::min)
    }
    Ok(go(p, 0, p.initial.probs()))
}

/// The classic listen-or-open problem with two doors, reduced to two actions.
/// `listen` costs 1 and reports the tiger's side correctly with probability
/// 0.85; `open-left` costs 100 if the tiger is behind the left door and earns
/// nothing otherwise, after which the tiger is placed uniformly at random.
pub fn tiger(horizon: usize) -> PomdpSpec {
    let states = FiniteSpace::new(["tiger-left", "tiger-right"]).unwrap();
    let observations = FiniteSpace::new(["hear-left", "hear-right"]).unwrap();
    let actions = FiniteSpace::new(["listen", "open-left"]).unwrap();
    PomdpSpec {
        states,
        observations,
        actions,
        initial: Distribution::uniform(2),
        transition: Kernel::from_table(vec![2, 2], 2, vec![1.0, 0.0, 0.5, 0.5, 0.0, 1.0, 0.5, 0.5]),
        observation: Kernel::from_table(vec![2], 2, vec![0.85, 0.15, 0.15, 0.85]),
        stage_cost: CostTable::new(vec![2, 2], vec![1.0, 100.0, 1.0, 0.0]),
        horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_exact, SolveOptions};

    fn solve(p: &PomdpSpec) -> f64 {
        solve_exact(&build_pomdp_team(p).unwrap(), &SolveOptions::default())
            .unwrap()
            .value
    }

    #[test]
    fn uniformizer_levels_reproduce_rows() {
        let k = Kernel::from_table(vec![3], 3, vec![0.2, 0.3, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        let u = uniformizer(&k);
        assert_eq!(u.widths.len(), 3);
        for r in 0..3 {
            let mut got = [0.0; 3];
            for (l, &w) in u.widths.iter().enumerate() {
                got[u.outcome[r][l]] += w;
            }
            for (g, p) in got.iter().zip(k.row(r)) {
                assert!((g - p).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn noise_space_size() {
        let mut p = tiger(3);
        p.transition = Kernel::from_table(vec![2, 2], 2, vec![0.9, 0.1, 0.3, 0.7, 0.2, 0.8, 0.6, 0.4]);
        p.observation = Kernel::from_table(vec![2], 2, vec![0.75, 0.25, 0.4, 0.6]);
        let team = pomdp_observation_team(&p, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(team.omega_len(), 2 * 5 * 5 * 3 * 3 * 3);
        assert!((team.prior.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_step_without_information() {
        let mut p = tiger(1);
        p.observation = Kernel::from_table(vec![2], 2, vec![0.5, 0.5, 0.5, 0.5]);
        p.initial = Distribution::new(vec![0.3, 0.7]).unwrap();
        let expected = (0..2)
            .map(|u| 0.3 * p.stage_cost.values()[u] + 0.7 * p.stage_cost.values()[2 + u])
            .fold(f64::INFINITY, f64::min);
        assert!((solve(&p) - expected).abs() < 1e-12);
        assert!((belief_value_iteration(&p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn uninformative_beliefs_are_open_loop() {
        let mut p = tiger(3);
        p.observation = Kernel::from_table(vec![2], 2, vec![0.5, 0.5, 0.5, 0.5]);
        let a = belief_value_iteration(&p).unwrap();
        let b = open_loop_value(&p).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn tiger_team_matches_belief_iteration() {
        for t in 1..=3 {
            let p = tiger(t);
            let a = solve(&p);
            let b = belief_value_iteration(&p).unwrap();
            assert!((a - b).abs() < 1e-9, "horizon {t}: team {a} belief {b}");
        }
    }

    #[test]
    fn fully_observed_matches_mdp() {
        let p = tiger(3).fully_observed();
        assert!((solve(&p) - mdp_value(&p).unwrap()).abs() < 1e-9);
        assert!((belief_value_iteration(&p).unwrap() - mdp_value(&p).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_models() {
        let mut p = tiger(2);
        p.horizon = 0;
        assert!(p.validate().is_err());
        let mut p = tiger(2);
        p.observation = Kernel::from_table(vec![2], 2, vec![0.5, 0.4, 0.5, 0.5]);
        assert!(p.validate().is_err());
    }
}
