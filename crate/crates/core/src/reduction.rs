//! Independent-measurements static reduction.
//!
//! Each measurement law `p_n(y | h)` is rewritten as a density
//! `f_n(y, h) = p_n(y | h) / Q_n(y)` against a reference law `Q_n`. Under the
//! product of the references the measurements become mutually independent and
//! independent of `ω0`, and the densities move into the cost:
//! `c_s(ω0, y, u) = c(ω0, u) · ∏_n f_n(y^n, h_{n-1})`.

use crate::error::{Result, TeamError};
use crate::layout::{product_u128, MixedRadix};
use crate::model::{CostTable, DecisionMaker, Distribution, FiniteSpace, Kernel, Policy, TeamSpec, DEFAULT_TABLE_CAP};
use crate::par::{self, Execution};

/// One reference law `Q_n` over `Y^n` per decision maker.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeasures {
    pub per_dm: Vec<Distribution>,
}

/// Uniform `Q_n` for every decision maker; strictly positive, so it dominates
/// every kernel.
pub fn default_references(spec: &TeamSpec) -> ReferenceMeasures {
    ReferenceMeasures {
        per_dm: spec.dms.iter().map(|dm| Distribution::uniform(dm.y.len())).collect(),
    }
}

/// A cell where `p_n(y | h) > 0` but `Q_n(y) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContinuityViolation {
    pub dm: usize,
    /// Lexicographic index of the history `(ω0, y^0, u^0, …)` feeding kernel `dm`.
    pub history: usize,
    pub y: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContinuityReport {
    pub violations: Vec<ContinuityViolation>,
}

impl ContinuityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_reference_shapes(spec: &TeamSpec, refs: &ReferenceMeasures) -> Result<()> {
    if refs.per_dm.len() != spec.dm_count() {
        return Err(TeamError::shape(format!(
            "{} reference measures for {} decision makers",
            refs.per_dm.len(),
            spec.dm_count()
        )));
    }
    for (n, q) in refs.per_dm.iter().enumerate() {
        if q.len() != spec.y_len(n) {
            return Err(TeamError::shape(format!(
                "reference for dm {n} has {} entries, measurement space has {}",
                q.len(),
                spec.y_len(n)
            )));
        }
    }
    Ok(())
}

/// Lists every `(n, h, y)` with `p_n(y | h) > 0 = Q_n(y)`. Every history row
/// is checked, reachable or not.
pub fn check_absolute_continuity(spec: &TeamSpec, refs: &ReferenceMeasures) -> Result<ContinuityReport> {
    check_reference_shapes(spec, refs)?;
    let mut violations = Vec::new();
    for (n, (dm, q)) in spec.dms.iter().zip(&refs.per_dm).enumerate() {
        for h in 0..dm.kernel.row_count() {
            for (y, &p) in dm.kernel.row(h).iter().enumerate() {
                if p > 0.0 && q.probs()[y] <= 0.0 {
                    violations.push(ContinuityViolation { dm: n, history: h, y });
                }
            }
        }
    }
    Ok(ContinuityReport { violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDm {
    pub y: FiniteSpace,
    pub u: FiniteSpace,
    pub reference: Distribution,
}

/// A static team with independent measurements `y^n ~ Q_n` and a cost that
/// depends on the measurements.
///
/// `reduced_cost` is laid out over `(ω0, y^0, …, y^{N-1}, u^0, …, u^{N-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedStaticTeam {
    pub omega0: FiniteSpace,
    pub prior: Distribution,
    pub dms: Vec<ReducedDm>,
    pub reduced_cost: Vec<f64>,
}

impl ReducedStaticTeam {
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.omega0.len()];
        dims.extend(self.dms.iter().map(|d| d.y.len()));
        dims.extend(self.dms.iter().map(|d| d.u.len()));
        dims
    }

    pub fn dm_count(&self) -> usize {
        self.dms.len()
    }

    pub fn max_cost(&self) -> f64 {
        self.reduced_cost.iter().copied().fold(0.0, f64::max)
    }

    /// The same team under a different prior on `ω0`.
    pub fn with_prior(&self, prior: Distribution) -> Result<Self> {
        if prior.len() != self.omega0.len() {
            return Err(TeamError::shape("prior does not match omega0"));
        }
        Ok(Self { prior, ..self.clone() })
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if self.prior.len() != self.omega0.len() {
            return Err(TeamError::shape("prior does not match omega0"));
        }
        for (n, dm) in self.dms.iter().enumerate() {
            if dm.reference.len() != dm.y.len() {
                return Err(TeamError::shape(format!("reference for dm {n} has wrong length")));
            }
        }
        if self.reduced_cost.len() as u128 != product_u128(&dims) {
            return Err(TeamError::shape("reduced cost does not match the team layout"));
        }
        if self.reduced_cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(TeamError::InvalidConfig(
                "reduced cost has a negative or non-finite entry".into(),
            ));
        }
        Ok(())
    }
}

/// Rewrites `spec` as an independent-measurements static team.
///
/// `f_n` is taken as 0 wherever `p_n(y | h) = 0`.
pub fn static_reduce(spec: &TeamSpec, refs: &ReferenceMeasures) -> Result<ReducedStaticTeam> {
    static_reduce_with(spec, refs, DEFAULT_TABLE_CAP, Execution::Parallel)
}

pub fn static_reduce_with(
    spec: &TeamSpec,
    refs: &ReferenceMeasures,
    cap: u128,
    exec: Execution,
) -> Result<ReducedStaticTeam> {
    spec.ensure_valid()?;
    let report = check_absolute_continuity(spec, refs)?;
    if !report.passed() {
        return Err(TeamError::AbsoluteContinuity(report.violations));
    }
    let n = spec.dm_count();
    let mut dims = vec![spec.omega_len()];
    dims.extend(spec.dms.iter().map(|d| d.y.len()));
    dims.extend(spec.dms.iter().map(|d| d.u.len()));
    let radix = MixedRadix::checked(&dims, cap)?;
    let cost_radix = MixedRadix::new(&spec.cost_dims());
    let cost = spec.cost.values();
    let reduced_cost = par::map_range(exec, radix.size(), |i| {
        let d = radix.digits(i);
        let (omega, ys, us) = (d[0], &d[1..=n], &d[n + 1..]);
        let mut density = 1.0;
        let mut h = omega;
        for k in 0..n {
            let p = spec.dms[k].kernel.prob(h, ys[k]);
            if p == 0.0 {
                return 0.0;
            }
            density *= p / refs.per_dm[k].probs()[ys[k]];
            h = (h * spec.y_len(k) + ys[k]) * spec.u_len(k) + us[k];
        }
        let mut cd = Vec::with_capacity(n + 1);
        cd.push(omega);
        cd.extend_from_slice(us);
        cost[cost_radix.index(&cd)] * density
    });
    Ok(ReducedStaticTeam {
        omega0: spec.omega0.clone(),
        prior: spec.prior.clone(),
        dms: spec
            .dms
            .iter()
            .zip(&refs.per_dm)
            .map(|(dm, q)| ReducedDm {
                y: dm.y.clone(),
                u: dm.u.clone(),
                reference: q.clone(),
            })
            .collect(),
        reduced_cost,
    })
}

/// `Σ prior(ω0) ∏ Q_n(y^n) ∏ π^n(u^n | y^n) c_s(ω0, y, u)`.
pub fn reduced_expected_cost<P: Policy + ?Sized>(reduced: &ReducedStaticTeam, policy: &P) -> Result<f64> {
    let y: Vec<usize> = reduced.dms.iter().map(|d| d.y.len()).collect();
    let u: Vec<usize> = reduced.dms.iter().map(|d| d.u.len()).collect();
    policy.check_dims(&y, &u)?;
    let u_total: usize = u.iter().product();
    let mut total = 0.0;
    for (w, &p) in reduced.prior.probs().iter().enumerate() {
        if p > 0.0 {
            total += p * descend(reduced, policy, 0, w, 0, u_total);
        }
    }
    Ok(total)
}

fn descend<P: Policy + ?Sized>(
    reduced: &ReducedStaticTeam,
    policy: &P,
    n: usize,
    y_part: usize,
    u_part: usize,
    u_total: usize,
) -> f64 {
    if n == reduced.dms.len() {
        return reduced.reduced_cost[y_part * u_total + u_part];
    }
    let dm = &reduced.dms[n];
    let u_len = dm.u.len();
    let mut acc = 0.0;
    for (y, &q) in dm.reference.probs().iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let next_y = y_part * dm.y.len() + y;
        policy.for_each_action(n, y, &mut |u, pu| {
            acc += q * pu * descend(reduced, policy, n + 1, next_y, u_part * u_len + u, u_total);
        });
    }
    acc
}

/// Expresses a reduced team as an ordinary team: `ω0` is enlarged to
/// `Ω0 × Y^0 × … × Y^{N-1}` with prior `prior(ω0) ∏ Q_n(y^n)`, and each
/// kernel deterministically reveals its coordinate.
pub fn as_team_spec(reduced: &ReducedStaticTeam, cap: u128) -> Result<TeamSpec> {
    reduced.validate()?;
    let n = reduced.dm_count();
    let mut omega_dims = vec![reduced.omega0.len()];
    omega_dims.extend(reduced.dms.iter().map(|d| d.y.len()));
    let omega_radix = MixedRadix::checked(&omega_dims, cap)?;
    let omega_len = omega_radix.size();

    let mut kernel_entries = 0u128;
    let mut input = vec![omega_len];
    for dm in &reduced.dms {
        kernel_entries = kernel_entries.saturating_add(product_u128(&input).saturating_mul(dm.y.len() as u128));
        input.push(dm.y.len());
        input.push(dm.u.len());
    }
    if kernel_entries > cap {
        return Err(TeamError::CapExceeded {
            what: "kernel entries of the enlarged team",
            required: kernel_entries,
            cap,
        });
    }

    let mut labels = Vec::with_capacity(omega_len);
    let mut prior = Vec::with_capacity(omega_len);
    for i in 0..omega_len {
        let d = omega_radix.digits(i);
        let mut label = reduced.omega0.label(d[0]).to_string();
        let mut p = reduced.prior.probs()[d[0]];
        for (k, dm) in reduced.dms.iter().enumerate() {
            label.push('|');
            label.push_str(dm.y.label(d[k + 1]));
            p *= dm.reference.probs()[d[k + 1]];
        }
        labels.push(label);
        prior.push(p);
    }

    let mut dms = Vec::with_capacity(n);
    let mut input = vec![omega_len];
    for (k, dm) in reduced.dms.iter().enumerate() {
        let stride = omega_radix.strides()[k + 1];
        let y_len = dm.y.len();
        dms.push(DecisionMaker {
            y: dm.y.clone(),
            u: dm.u.clone(),
            kernel: Kernel::deterministic(input.clone(), y_len, |d| (d[0] / stride) % y_len),
        });
        input.push(y_len);
        input.push(dm.u.len());
    }
    let mut cost_dims = vec![omega_len];
    cost_dims.extend(reduced.dms.iter().map(|d| d.u.len()));
    Ok(TeamSpec {
        omega0: FiniteSpace::from_labels_unchecked(labels),
        prior: Distribution::from_probs_unchecked(prior),
        dms,
        cost: CostTable::new(cost_dims, reduced.reduced_cost.clone()),
    })
}
