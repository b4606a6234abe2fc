//! Deliberately naive reference implementations used to check the solver.
//!
//! Nothing here shares cost-evaluation code with [`crate::model`] or
//! [`crate::solver`].

use crate::error::{Result, TeamError};
use crate::layout::pow_u128;
use crate::model::{expected_cost, DeterministicPolicy, Policy, TeamSpec};
use crate::par::{self, Execution};
use crate::random;

/// Default cap on the number of policy tuples [`brute_force`] may evaluate.
pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub policy: DeterministicPolicy,
    pub policies_evaluated: u64,
}

/// Expected cost by explicit enumeration of every `(ω0, y, u)` path.
///
/// Paths are visited with an odometer whose first digit turns fastest; each
/// path's probability is rebuilt from scratch.
pub fn path_enumeration_cost<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P) -> Result<f64> {
    policy.check_shape(spec)?;
    let n = spec.dm_count();
    // digits: [ω0, y^0..y^{N-1}, u^0..u^{N-1}]
    let mut radix = Vec::with_capacity(2 * n + 1);
    radix.push(spec.omega_len());
    radix.extend(spec.dms.iter().map(|d| d.y.len()));
    radix.extend(spec.dms.iter().map(|d| d.u.len()));
    let mut digits = vec![0usize; radix.len()];
    let prior = spec.prior.probs();
    let cost = spec.cost.values();
    let mut total = 0.0;
    'paths: loop {
        let omega = digits[0];
        let ys = &digits[1..=n];
        let us = &digits[n + 1..];
        let mut weight = prior[omega];
        let mut stage = 0;
        while weight != 0.0 && stage < n {
            let mut row = omega;
            for k in 0..stage {
                row = (row * spec.dms[k].y.len() + ys[k]) * spec.dms[k].u.len() + us[k];
            }
            weight *= spec.dms[stage].kernel.prob(row, ys[stage]);
            weight *= policy.prob(stage, ys[stage], us[stage]);
            stage += 1;
        }
        if weight != 0.0 {
            let mut c = omega;
            for (dm, &u) in spec.dms.iter().zip(us) {
                c = c * dm.u.len() + u;
            }
            total += weight * cost[c];
        }
        for (d, &r) in digits.iter_mut().zip(&radix) {
            *d += 1;
            if *d < r {
                continue 'paths;
            }
            *d = 0;
        }
        break;
    }
    Ok(total)
}

/// Number of deterministic policy tuples of `spec`.
pub fn policy_count(spec: &TeamSpec) -> u128 {
    spec.dms
        .iter()
        .fold(1u128, |acc, dm| acc.saturating_mul(pow_u128(dm.u.len(), dm.y.len())))
}

/// Decodes the `index`-th deterministic policy tuple; decision maker 0 and
/// measurement 0 are the most significant digits.
pub fn nth_policy(spec: &TeamSpec, mut index: u128) -> DeterministicPolicy {
    let mut tables: Vec<Vec<usize>> = spec.dms.iter().map(|dm| vec![0; dm.y.len()]).collect();
    for (dm, table) in spec.dms.iter().zip(tables.iter_mut()).rev() {
        for slot in table.iter_mut().rev() {
            *slot = (index % dm.u.len() as u128) as usize;
            index /= dm.u.len() as u128;
        }
    }
    DeterministicPolicy::new(tables)
}

/// Exhaustive minimum over deterministic policies; ties go to the
/// lexicographically first tuple.
pub fn brute_force(spec: &TeamSpec, cap: u128, exec: Execution) -> Result<OracleResult> {
    spec.ensure_valid()?;
    let count = policy_count(spec);
    if count > cap || count > usize::MAX as u128 {
        return Err(TeamError::CapExceeded {
            what: "deterministic policy tuples",
            required: count,
            cap,
        });
    }
    let (value, index) = par::argmin_range(exec, count as usize, |i| {
        let policy = nth_policy(spec, i as u128);
        path_enumeration_cost(spec, &policy).expect("enumerated policy matches the team")
    })
    .expect("a valid team has at least one policy");
    Ok(OracleResult {
        value,
        policy: nth_policy(spec, index as u128),
        policies_evaluated: count as u64,
    })
}

/// Minimum expected cost over `count` randomized policies whose rows are
/// drawn from the flat simplex; `+∞` when `count == 0`.
pub fn randomized_sample(spec: &TeamSpec, count: usize, seed: u64) -> Result<f64> {
    let mut rng = random::rng(seed);
    let mut best = f64::INFINITY;
    for _ in 0..count {
        let policy = random::random_randomized_policy(&mut rng, spec);
        best = best.min(expected_cost(spec, &policy)?);
    }
    Ok(best)
}
