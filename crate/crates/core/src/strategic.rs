//! Strategic measures: the joint law of `(ω0, y^0, u^0, …, y^{N-1}, u^{N-1})`
//! induced by a policy, and membership tests for the sets of measures induced
//! by randomized and deterministic policies.
//!
//! Membership is decided with finite-space conditionals. A conditional is only
//! evaluated when its conditioning event has mass above [`SUPPORT_THRESHOLD`];
//! unsupported events contribute no gap.

use crate::error::{Result, TeamError};
use crate::layout::{product_u128, MixedRadix};
use crate::model::{CostTable, Policy, TeamSpec, DEFAULT_TABLE_CAP};
use crate::solver::PathMeasure;

pub const SUPPORT_THRESHOLD: f64 = 1e-12;
const MAX_WITNESSES: usize = 64;

/// Dense joint law over the interleaved path layout, `ω0` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategicMeasure {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl StrategicMeasure {
    pub fn new(dims: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len().is_multiple_of(2) {
            return Err(TeamError::shape("path layout needs omega0 plus (y, u) pairs"));
        }
        if product_u128(&dims) != probs.len() as u128 {
            return Err(TeamError::shape(format!(
                "{} probabilities for a layout of size {}",
                probs.len(),
                product_u128(&dims)
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(TeamError::InvalidConfig(
                "measure has a negative or non-finite entry".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(TeamError::InvalidConfig(format!("measure sums to {total}")));
        }
        Ok(Self { dims, probs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dm_count(&self) -> usize {
        (self.dims.len() - 1) / 2
    }

    /// Marginal over the first `k` coordinates of the layout.
    pub fn prefix_marginal(&self, k: usize) -> Vec<f64> {
        let len: usize = self.dims[..k].iter().product();
        let block = self.probs.len() / len;
        self.probs.chunks(block).map(|c| c.iter().sum()).collect()
    }
}

impl From<&PathMeasure> for StrategicMeasure {
    fn from(m: &PathMeasure) -> Self {
        Self {
            dims: m.dims().to_vec(),
            probs: m.to_dense(),
        }
    }
}

/// `P(ω0, y, u) = prior(ω0) ∏ p_n(y^n | h_{n-1}) ∏ π^n(u^n | y^n)`.
pub fn induce_measure<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P) -> Result<StrategicMeasure> {
    spec.ensure_valid()?;
    policy.check_shape(spec)?;
    let dims = spec.path_dims();
    MixedRadix::checked(&dims, DEFAULT_TABLE_CAP)?;
    let mut probs = vec![0.0; dims.iter().product()];
    for (w, &p) in spec.prior.probs().iter().enumerate() {
        if p > 0.0 {
            fill(spec, policy, 0, w, p, &mut probs);
        }
    }
    Ok(StrategicMeasure { dims, probs })
}

fn fill<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P, n: usize, h: usize, mass: f64, out: &mut [f64]) {
    if n == spec.dm_count() {
        out[h] += mass;
        return;
    }
    let (y_len, u_len) = (spec.y_len(n), spec.u_len(n));
    for (y, &py) in spec.dms[n].kernel.row(h).iter().enumerate() {
        if py == 0.0 {
            continue;
        }
        policy.for_each_action(n, y, &mut |u, pu| {
            if pu > 0.0 {
                fill(spec, policy, n + 1, (h * y_len + y) * u_len + u, mass * py * pu, out);
            }
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    Prior,
    Kernel,
    ConditionalIndependence,
    Determinism,
}

/// An offending cell. `indices` lists the history digits followed by the
/// measurement and, when relevant, the action.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub kind: GapKind,
    pub dm: usize,
    pub indices: Vec<usize>,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub passed: bool,
    pub prior_gap: f64,
    pub kernel_gap: f64,
    pub ci_gap: f64,
    /// Only computed by [`validate_la`]; zero otherwise.
    pub determinism_gap: f64,
    pub witnesses: Vec<Witness>,
}

struct Collector {
    tol: f64,
    witnesses: Vec<Witness>,
}

impl Collector {
    fn note(&mut self, gap: f64, make: impl FnOnce() -> Witness) {
        if gap > self.tol && self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(make());
        }
    }
}

fn check_layout(p: &StrategicMeasure, spec: &TeamSpec) -> Result<()> {
    if p.dims != spec.path_dims() {
        return Err(TeamError::shape(format!(
            "measure layout {:?} does not match team layout {:?}",
            p.dims,
            spec.path_dims()
        )));
    }
    Ok(())
}

/// Checks the conditions characterizing measures induced by randomized
/// policies: the `ω0` marginal is the prior, each measurement follows its
/// kernel given the history, and each action is conditionally independent of
/// the history given the DM's own measurement.
pub fn validate_lr(p: &StrategicMeasure, spec: &TeamSpec, tol: f64) -> Result<MembershipReport> {
    check_layout(p, spec)?;
    let mut col = Collector {
        tol,
        witnesses: Vec::new(),
    };
    let (prior_gap, kernel_gap, ci_gap) = lr_gaps(p, spec, &mut col);
    Ok(MembershipReport {
        passed: prior_gap <= tol && kernel_gap <= tol && ci_gap <= tol,
        prior_gap,
        kernel_gap,
        ci_gap,
        determinism_gap: 0.0,
        witnesses: col.witnesses,
    })
}

/// [`validate_lr`] plus degeneracy of every supported `P(u^n | y^n)`.
pub fn validate_la(p: &StrategicMeasure, spec: &TeamSpec, tol: f64) -> Result<MembershipReport> {
    check_layout(p, spec)?;
    let mut col = Collector {
        tol,
        witnesses: Vec::new(),
    };
    let (prior_gap, kernel_gap, ci_gap) = lr_gaps(p, spec, &mut col);
    let mut determinism_gap: f64 = 0.0;
    for n in 0..spec.dm_count() {
        let yu = own_marginal(p, spec, n);
        let u_len = spec.u_len(n);
        for (y, row) in yu.chunks(u_len).enumerate() {
            let mass: f64 = row.iter().sum();
            if mass <= SUPPORT_THRESHOLD {
                continue;
            }
            let modal = row.iter().copied().fold(0.0, f64::max);
            let gap = 1.0 - modal / mass;
            determinism_gap = determinism_gap.max(gap);
            col.note(gap, || Witness {
                kind: GapKind::Determinism,
                dm: n,
                indices: vec![y],
                gap,
            });
        }
    }
    Ok(MembershipReport {
        passed: prior_gap <= tol && kernel_gap <= tol && ci_gap <= tol && determinism_gap <= tol,
        prior_gap,
        kernel_gap,
        ci_gap,
        determinism_gap,
        witnesses: col.witnesses,
    })
}

/// Joint law of `(y^n, u^n)`, laid out `y` slowest.
fn own_marginal(p: &StrategicMeasure, spec: &TeamSpec, n: usize) -> Vec<f64> {
    let joint = p.prefix_marginal(2 * n + 3);
    let yu = spec.y_len(n) * spec.u_len(n);
    let mut out = vec![0.0; yu];
    for block in joint.chunks(yu) {
        for (o, v) in out.iter_mut().zip(block) {
            *o += v;
        }
    }
    out
}

fn lr_gaps(p: &StrategicMeasure, spec: &TeamSpec, col: &mut Collector) -> (f64, f64, f64) {
    let dims = &p.dims;
    let omega = p.prefix_marginal(1);
    let mut prior_gap: f64 = 0.0;
    for (w, (&a, &b)) in omega.iter().zip(spec.prior.probs()).enumerate() {
        let gap = (a - b).abs();
        prior_gap = prior_gap.max(gap);
        col.note(gap, || Witness {
            kind: GapKind::Prior,
            dm: 0,
            indices: vec![w],
            gap,
        });
    }

    let mut kernel_gap: f64 = 0.0;
    let mut ci_gap: f64 = 0.0;
    let mut history = omega;
    for n in 0..spec.dm_count() {
        let (y_len, u_len) = (spec.y_len(n), spec.u_len(n));
        let hy = p.prefix_marginal(2 * n + 2);
        let hyu = p.prefix_marginal(2 * n + 3);
        let h_radix = MixedRadix::new(&dims[..2 * n + 1]);
        let own = own_marginal(p, spec, n);

        for (h, &ph) in history.iter().enumerate() {
            if ph <= SUPPORT_THRESHOLD {
                continue;
            }
            for y in 0..y_len {
                let cond = hy[h * y_len + y] / ph;
                let gap = (cond - spec.dms[n].kernel.prob(h, y)).abs();
                kernel_gap = kernel_gap.max(gap);
                col.note(gap, || {
                    let mut indices = h_radix.digits(h);
                    indices.push(y);
                    Witness {
                        kind: GapKind::Kernel,
                        dm: n,
                        indices,
                        gap,
                    }
                });

                let phy = hy[h * y_len + y];
                if phy <= SUPPORT_THRESHOLD {
                    continue;
                }
                let py: f64 = own[y * u_len..(y + 1) * u_len].iter().sum();
                for u in 0..u_len {
                    let given_history = hyu[(h * y_len + y) * u_len + u] / phy;
                    let given_own = own[y * u_len + u] / py;
                    let gap = (given_history - given_own).abs();
                    ci_gap = ci_gap.max(gap);
                    col.note(gap, || {
                        let mut indices = h_radix.digits(h);
                        indices.extend([y, u]);
                        Witness {
                            kind: GapKind::ConditionalIndependence,
                            dm: n,
                            indices,
                            gap,
                        }
                    });
                }
            }
        }
        history = hyu;
    }
    (prior_gap, kernel_gap, ci_gap)
}

/// `Σ P(ω0, y, u) c(ω0, u)`.
pub fn measure_expected_cost(p: &StrategicMeasure, cost: &CostTable) -> Result<f64> {
    let n = p.dm_count();
    let mut expected = vec![p.dims[0]];
    expected.extend((0..n).map(|k| p.dims[2 + 2 * k]));
    if cost.dims() != expected.as_slice() {
        return Err(TeamError::shape(format!(
            "cost layout {:?} does not match measure actions {:?}",
            cost.dims(),
            expected
        )));
    }
    let radix = MixedRadix::new(&p.dims);
    let cost_radix = MixedRadix::new(&expected);
    let mut digits = vec![0; p.dims.len()];
    let mut cd = vec![0; n + 1];
    let mut total = 0.0;
    for (i, &q) in p.probs.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        radix.digits_into(i, &mut digits);
        cd[0] = digits[0];
        for k in 0..n {
            cd[k + 1] = digits[2 + 2 * k];
        }
        total += q * cost.values()[cost_radix.index(&cd)];
    }
    Ok(total)
}
