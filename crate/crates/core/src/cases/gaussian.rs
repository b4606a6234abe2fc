//! Gaussian Witsenhausen team in reduced form.
//!
//! `y¹ ~ N(0, σ²)`, `u¹ = γ¹(y¹)`, `y² = u¹ + w` with `w ~ N(0, 1)`,
//! `u² = γ²(y²)`, cost `k(u¹ − y¹)² + (u¹ − u²)²`. Changing the law of `y²`
//! to `N(0, 1)` makes both measurements exogenous and multiplies the cost by
//! `η(y² − u¹)/η(y²)`. Measurements are discretized on truncated equal-width
//! cells (midpoint values, renormalized cell masses).

use rand_distr::{Distribution as _, Normal};

use crate::error::{Result, TeamError};
use crate::layout::MixedRadix;
use crate::model::{DeterministicPolicy, Distribution, FiniteSpace, TeamSpec, DEFAULT_TABLE_CAP};
use crate::par::Execution;
use crate::random::rng;
use crate::reduction::{as_team_spec, reduced_expected_cost, ReducedDm, ReducedStaticTeam};
use crate::solver::{stagewise_iterate, SolveResult};

/// Number of grid points on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianBins {
    pub y1: usize,
    pub y2: usize,
    pub u1: usize,
    pub u2: usize,
}

impl GaussianBins {
    pub fn uniform(n: usize) -> Self {
        Self {
            y1: n,
            y2: n,
            u1: n,
            u2: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitsenhausenGaussianConfig {
    pub k: f64,
    pub sigma: f64,
    pub bins: GaussianBins,
    /// Truncation radius in standard deviations.
    pub trunc: f64,
    /// Rescale the density ratio for each `u¹` so that the discretized law of
    /// `y²` given `u¹` sums to one. Off by default. Without it, actions far
    /// outside the `y²` grid receive almost no weight, which the discretized
    /// problem can exploit.
    pub normalize_likelihood: bool,
}

impl WitsenhausenGaussianConfig {
    pub fn new(k: f64, sigma: f64, bins: usize, trunc: f64) -> Self {
        Self {
            k,
            sigma,
            bins: GaussianBins::uniform(bins),
            trunc,
            normalize_likelihood: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.bins;
        if [b.y1, b.y2, b.u1, b.u2].iter().any(|&n| n < 3) {
            return Err(TeamError::InvalidConfig("every axis needs at least 3 bins".into()));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(TeamError::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(TeamError::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.trunc > 0.0 && self.trunc.is_finite()) {
            return Err(TeamError::InvalidConfig(format!(
                "trunc must be positive, got {}",
                self.trunc
            )));
        }
        Ok(())
    }

    /// `[−trunc·σ − 1, trunc·σ + 1]`.
    pub fn action_radius(&self) -> f64 {
        self.trunc * self.sigma + 1.0
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Midpoints and renormalized masses of `n` equal cells on
/// `[−trunc·sd, trunc·sd]` under `N(0, sd²)`.
pub fn gaussian_grid(sd: f64, trunc: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let lo = -trunc * sd;
    let width = 2.0 * trunc * sd / n as f64;
    let mut values = Vec::with_capacity(n);
    let mut masses = Vec::with_capacity(n);
    for i in 0..n {
        let a = lo + i as f64 * width;
        let b = a + width;
        values.push(0.5 * (a + b));
        masses.push(normal_cdf(b / sd) - normal_cdf(a / sd));
    }
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    (values, masses)
}

/// `n` evenly spaced points on `[−r, r]`.
pub fn uniform_grid(r: f64, n: usize) -> Vec<f64> {
    let step = 2.0 * r / (n - 1) as f64;
    (0..n).map(|j| -r + j as f64 * step).collect()
}

/// `η(y − u)/η(y)` for the standard normal density `η`.
pub fn density_ratio(y: f64, u: f64) -> f64 {
    (y * u - 0.5 * u * u).exp()
}

fn labels(values: &[f64]) -> Result<FiniteSpace> {
    FiniteSpace::new(values.iter().map(|v| format!("{v}")))
}

#[derive(Debug, Clone)]
pub struct GaussianWitsenhausen {
    pub config: WitsenhausenGaussianConfig,
    pub team: ReducedStaticTeam,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

pub fn build_gaussian_witsenhausen(cfg: &WitsenhausenGaussianConfig) -> Result<GaussianWitsenhausen> {
    cfg.validate()?;
    let b = cfg.bins;
    let (y1, q1) = gaussian_grid(cfg.sigma, cfg.trunc, b.y1);
    let (y2, q2) = gaussian_grid(1.0, cfg.trunc, b.y2);
    let r = cfg.action_radius();
    let u1 = uniform_grid(r, b.u1);
    let u2 = uniform_grid(r, b.u2);
    let radix = MixedRadix::checked(&[1, b.y1, b.y2, b.u1, b.u2], DEFAULT_TABLE_CAP)?;
    let scale: Vec<f64> = u1
        .iter()
        .map(|&v| {
            if cfg.normalize_likelihood {
                1.0 / y2.iter().zip(&q2).map(|(&y, q)| q * density_ratio(y, v)).sum::<f64>()
            } else {
                1.0
            }
        })
        .collect();
    let mut reduced_cost = Vec::with_capacity(radix.size());
    for &a in &y1 {
        for &y in &y2 {
            for (&v, s) in u1.iter().zip(&scale) {
                let ratio = density_ratio(y, v) * s;
                for &w in &u2 {
                    reduced_cost.push((cfg.k * (v - a).powi(2) + (v - w).powi(2)) * ratio);
                }
            }
        }
    }
    let team = ReducedStaticTeam {
        omega0: FiniteSpace::new(["0"])?,
        prior: Distribution::point(1, 0),
        dms: vec![
            ReducedDm {
                y: labels(&y1)?,
                u: labels(&u1)?,
                reference: Distribution::from_probs_unchecked(q1),
            },
            ReducedDm {
                y: labels(&y2)?,
                u: labels(&u2)?,
                reference: Distribution::from_probs_unchecked(q2),
            },
        ],
        reduced_cost,
    };
    Ok(GaussianWitsenhausen {
        config: cfg.clone(),
        team,
        y1,
        y2,
        u1,
        u2,
    })
}

/// Index of the equal-width cell (given by its midpoints) containing `v`;
/// values outside the truncation fall in the end cells.
pub fn cell_of(midpoints: &[f64], v: f64) -> usize {
    let n = midpoints.len();
    if n < 2 {
        return 0;
    }
    let width = midpoints[1] - midpoints[0];
    let lo = midpoints[0] - 0.5 * width;
    ((v - lo) / width).floor().clamp(0.0, (n - 1) as f64) as usize
}

/// Index of the grid point nearest to `v`; the lower one on ties.
pub fn nearest(grid: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g - v).abs() < (grid[best] - v).abs() {
            best = i;
        }
    }
    best
}

/// `E[k(a·x − x)² + (b(a·x + w) − a·x)²] = k(a−1)²σ² + (b−1)²a²σ² + b²`.
pub fn affine_cost(k: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let s2 = sigma * sigma;
    k * (a - 1.0).powi(2) * s2 + (b - 1.0).powi(2) * a * a * s2 + b * b
}

/// Best second-stage gain for a fixed first-stage gain.
pub fn affine_second_gain(sigma: f64, a: f64) -> f64 {
    let p = a * a * sigma * sigma;
    p / (p + 1.0)
}

/// Minimizes `affine_cost` over `a ∈ [0, 1]` (negative or larger gains are
/// dominated) with the second gain in closed form: a grid scan followed by
/// golden-section refinement around the best grid point.
pub fn best_affine_gains(k: f64, sigma: f64) -> (f64, f64, f64) {
    let g = |a: f64| affine_cost(k, sigma, a, affine_second_gain(sigma, a));
    const SCAN: usize = 2000;
    let step = 1.0 / SCAN as f64;
    let mut best = 0;
    for i in 1..=SCAN {
        if g(i as f64 * step) < g(best as f64 * step) {
            best = i;
        }
    }
    let (mut lo, mut hi) = (
        (best as f64 - 1.0).max(0.0) * step,
        (best as f64 + 1.0).min(SCAN as f64) * step,
    );
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = hi - phi * (hi - lo);
        let d = lo + phi * (hi - lo);
        if g(c) <= g(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let mut a = 0.5 * (lo + hi);
    if g(best as f64 * step) < g(a) {
        a = best as f64 * step;
    }
    (a, affine_second_gain(sigma, a), g(a))
}

#[derive(Debug, Clone)]
pub struct AffineBaseline {
    pub a: f64,
    pub b: f64,
    pub continuous_value: f64,
    pub quantized_value: f64,
    pub policy: DeterministicPolicy,
}

impl GaussianWitsenhausen {
    /// `u¹ = nearest(a·y¹)`, `u² = nearest(b·y²)` on the action grids.
    pub fn quantized_affine(&self, a: f64, b: f64) -> DeterministicPolicy {
        DeterministicPolicy::new(vec![
            self.y1.iter().map(|&y| nearest(&self.u1, a * y)).collect(),
            self.y2.iter().map(|&y| nearest(&self.u2, b * y)).collect(),
        ])
    }

    /// A grid policy extended to continuous measurements: each measurement
    /// takes the action assigned to its cell. Returns the action values.
    pub fn cellwise_actions(
        &self,
        policy: &DeterministicPolicy,
    ) -> (impl Fn(f64) -> f64 + '_, impl Fn(f64) -> f64 + '_) {
        let t = policy.tables();
        let (t1, t2) = (t[0].clone(), t[1].clone());
        (
            move |y: f64| self.u1[t1[cell_of(&self.y1, y)]],
            move |y: f64| self.u2[t2[cell_of(&self.y2, y)]],
        )
    }

    pub fn best_affine_baseline(&self) -> Result<AffineBaseline> {
        let (a, b, continuous_value) = best_affine_gains(self.config.k, self.config.sigma);
        let policy = self.quantized_affine(a, b);
        let quantized_value = reduced_expected_cost(&self.team, &policy)?;
        Ok(AffineBaseline {
            a,
            b,
            continuous_value,
            quantized_value,
            policy,
        })
    }

    /// The reduced team as an ordinary team over `(y¹, y²)` pairs.
    pub fn team_spec(&self) -> Result<TeamSpec> {
        as_team_spec(&self.team, DEFAULT_TABLE_CAP)
    }
}

/// Monte-Carlo mean and standard error of the continuous cost under
/// `u¹ = g1(x)`, `u² = g2(u¹ + w)`.
pub fn monte_carlo_cost(
    k: f64,
    sigma: f64,
    g1: impl Fn(f64) -> f64,
    g2: impl Fn(f64) -> f64,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut r = rng(seed);
    let x_dist = Normal::new(0.0, sigma).expect("positive sigma");
    let w_dist = Normal::new(0.0, 1.0).expect("unit variance");
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x = x_dist.sample(&mut r);
        let w = w_dist.sample(&mut r);
        let u1 = g1(x);
        let u2 = g2(u1 + w);
        let c = k * (u1 - x).powi(2) + (u2 - u1).powi(2);
        sum += c;
        sq += c * c;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone)]
pub struct GaussianCaseOutcome {
    pub baseline: AffineBaseline,
    pub iterate: SolveResult,
}

/// Person-by-person iteration started from the quantized affine pair.
pub fn run_gaussian_case(
    cfg: &WitsenhausenGaussianConfig,
    sweeps: usize,
    tol: f64,
    exec: Execution,
) -> Result<GaussianCaseOutcome> {
    let inst = build_gaussian_witsenhausen(cfg)?;
    let baseline = inst.best_affine_baseline()?;
    let spec = inst.team_spec()?;
    let iterate = stagewise_iterate(&spec, &baseline.policy, sweeps, tol, exec)?;
    Ok(GaussianCaseOutcome { baseline, iterate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_at_origin() {
        assert_eq!(density_ratio(0.0, 0.0), 1.0);
        let (y, u) = (0.7, -1.3);
        let eta = |t: f64| (-0.5 * t * t).exp();
        assert!((density_ratio(y, u) - eta(y - u) / eta(y)).abs() < 1e-12);
    }

    #[test]
    fn grids() {
        let (v, m) = gaussian_grid(5.0, 3.0, 21);
        assert_eq!(v.len(), 21);
        assert!(v[10].abs() < 1e-12);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((m[0] - m[20]).abs() < 1e-12);
        let u = uniform_grid(16.0, 21);
        assert_eq!(u[0], -16.0);
        assert!((u[20] - 16.0).abs() < 1e-12);
        assert_eq!(nearest(&u, 0.79), 10);
        assert_eq!(nearest(&u, 100.0), 20);
    }

    #[test]
    fn reduced_cost_cells() {
        let cfg = WitsenhausenGaussianConfig::new(0.2, 5.0, 5, 3.0);
        let inst = build_gaussian_witsenhausen(&cfg).unwrap();
        inst.team.validate().unwrap();
        let radix = MixedRadix::new(&inst.team.dims());
        for (i, &c) in inst.team.reduced_cost.iter().enumerate() {
            let d = radix.digits(i);
            let (a, y, v, w) = (inst.y1[d[1]], inst.y2[d[2]], inst.u1[d[3]], inst.u2[d[4]]);
            let eta = |t: f64| (-0.5 * t * t).exp();
            let expected = (0.2 * (v - a).powi(2) + (v - w).powi(2)) * eta(y - v) / eta(y);
            assert!((c - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }

    #[test]
    fn affine_closed_form_limits() {
        // a = 1: (b−1)²σ² + b², minimized at b = σ²/(σ²+1).
        let s = 2.0;
        let b = affine_second_gain(s, 1.0);
        assert!((b - 4.0 / 5.0).abs() < 1e-15);
        assert!((affine_cost(1.0, s, 1.0, b) - 4.0 / 5.0).abs() < 1e-12);
        assert!((affine_cost(0.7, s, 0.0, 0.0) - 0.7 * 4.0).abs() < 1e-12);
        // Large k forces the first gain to one.
        let (a, _, _) = best_affine_gains(1e6, 1.0);
        assert!((a - 1.0).abs() < 1e-4);
    }

    #[test]
    fn best_gains_beat_a_fine_scan() {
        let (k, s) = (0.2, 5.0);
        let (_, _, v) = best_affine_gains(k, s);
        for i in 0..=10_000 {
            let a = i as f64 / 10_000.0;
            assert!(v <= affine_cost(k, s, a, affine_second_gain(s, a)) + 1e-12);
        }
    }

    #[test]
    fn normalized_likelihood_sums_to_one() {
        let mut cfg = WitsenhausenGaussianConfig::new(0.2, 5.0, 9, 3.0);
        cfg.normalize_likelihood = true;
        let inst = build_gaussian_witsenhausen(&cfg).unwrap();
        let q2 = inst.team.dms[1].reference.probs();
        for &v in &inst.u1 {
            let s: f64 = inst.y2.iter().zip(q2).map(|(&y, q)| q * density_ratio(y, v)).sum();
            let scaled: f64 = inst.y2.iter().zip(q2).map(|(&y, q)| q * density_ratio(y, v) / s).sum();
            assert!((scaled - 1.0).abs() < 1e-12);
        }
        // Cost of a cell with u¹ = y¹ = 0 and u² = 0 is zero either way.
        assert!(inst.team.reduced_cost.iter().all(|c| c.is_finite() && *c >= 0.0));
    }

    #[test]
    fn cells() {
        let (v, _) = gaussian_grid(1.0, 3.0, 6);
        assert_eq!(cell_of(&v, -10.0), 0);
        assert_eq!(cell_of(&v, -2.5), 0);
        assert_eq!(cell_of(&v, 0.01), 3);
        assert_eq!(cell_of(&v, 2.99), 5);
        assert_eq!(cell_of(&v, 10.0), 5);
    }

    #[test]
    fn closed_form_matches_monte_carlo() {
        let mut r = rng(99);
        use rand::Rng;
        for i in 0..5 {
            let (a, b): (f64, f64) = (r.random_range(-1.5..1.5), r.random_range(-1.5..1.5));
            let (k, s) = (0.5, 1.5);
            let (mean, se) = monte_carlo_cost(k, s, |x| a * x, |y| b * y, 200_000, 1000 + i);
            let exact = affine_cost(k, s, a, b);
            assert!(
                (mean - exact).abs() <= 3.0 * se,
                "a={a} b={b} mc={mean}±{se} exact={exact}"
            );
        }
    }
}
