//! Seeded random instances and policies.
//!
//! Simplex rows are drawn as normalized independent `Exp(1)` variates, which is
//! the flat (Dirichlet(1, …, 1)) distribution on the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};

use crate::model::{
    CostTable, DecisionMaker, DeterministicPolicy, Distribution, FiniteSpace, Kernel, RandomizedPolicy, TeamSpec,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point drawn uniformly from the probability simplex of dimension `n`.
pub fn simplex_row<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / sum).collect()
}

/// A simplex row where each entry is zeroed with probability `zero_prob`;
/// at least one entry stays positive.
pub fn sparse_simplex_row<R: Rng + ?Sized>(rng: &mut R, n: usize, zero_prob: f64) -> Vec<f64> {
    let keep_one = rng.random_range(0..n);
    let mut draws: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = Exp1.sample(rng);
            if i != keep_one && rng.random::<f64>() < zero_prob {
                0.0
            } else {
                d
            }
        })
        .collect();
    let sum: f64 = draws.iter().sum();
    draws.iter_mut().for_each(|d| *d /= sum);
    draws
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomTeamConfig {
    pub dms: usize,
    pub omega: (usize, usize),
    pub y: (usize, usize),
    pub u: (usize, usize),
    /// Probability of zeroing a kernel entry.
    pub zero_prob: f64,
    /// Measurements depend on `ω0` only.
    pub static_measurements: bool,
}

impl RandomTeamConfig {
    /// `dms` decision makers, every space of size 1..=`max`.
    pub fn small(dms: usize, max: usize) -> Self {
        Self {
            dms,
            omega: (1, max),
            y: (1, max),
            u: (1, max),
            zero_prob: 0.3,
            static_measurements: false,
        }
    }
}

/// A valid team with costs uniform in `[0, 1)`.
pub fn random_team<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomTeamConfig) -> TeamSpec {
    let mut pick = |(lo, hi): (usize, usize)| rng.random_range(lo..=hi);
    let omega_len = pick(cfg.omega);
    let sizes: Vec<(usize, usize)> = (0..cfg.dms).map(|_| (pick(cfg.y), pick(cfg.u))).collect();
    let prior = Distribution::from_probs_unchecked(simplex_row(rng, omega_len));
    let mut dms = Vec::with_capacity(cfg.dms);
    let mut input_dims = vec![omega_len];
    for (n, &(y_len, u_len)) in sizes.iter().enumerate() {
        let kernel = if cfg.static_measurements {
            let rows: Vec<Vec<f64>> = (0..omega_len)
                .map(|_| sparse_simplex_row(rng, y_len, cfg.zero_prob))
                .collect();
            Kernel::from_fn(input_dims.clone(), y_len, |d| rows[d[0]].clone())
        } else {
            Kernel::from_fn(input_dims.clone(), y_len, |_| {
                sparse_simplex_row(rng, y_len, cfg.zero_prob)
            })
        };
        dms.push(DecisionMaker {
            y: FiniteSpace::indexed(&format!("y{n}_"), y_len),
            u: FiniteSpace::indexed(&format!("u{n}_"), u_len),
            kernel,
        });
        input_dims.push(y_len);
        input_dims.push(u_len);
    }
    let mut cost_dims = vec![omega_len];
    cost_dims.extend(sizes.iter().map(|s| s.1));
    let cost = CostTable::from_fn(cost_dims, |_| rng.random::<f64>());
    TeamSpec {
        omega0: FiniteSpace::indexed("w", omega_len),
        prior,
        dms,
        cost,
    }
}

pub fn random_deterministic_policy<R: Rng + ?Sized>(rng: &mut R, spec: &TeamSpec) -> DeterministicPolicy {
    DeterministicPolicy::new(
        spec.dms
            .iter()
            .map(|dm| (0..dm.y.len()).map(|_| rng.random_range(0..dm.u.len())).collect())
            .collect(),
    )
}

pub fn random_randomized_policy<R: Rng + ?Sized>(rng: &mut R, spec: &TeamSpec) -> RandomizedPolicy {
    RandomizedPolicy::new(
        spec.dms
            .iter()
            .map(|dm| (0..dm.y.len()).map(|_| simplex_row(rng, dm.u.len())).collect())
            .collect(),
    )
}
