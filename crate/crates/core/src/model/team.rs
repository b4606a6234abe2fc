use std::fmt;

use super::types::{row_problem, CostTable, Distribution, FiniteSpace, Kernel};
use crate::error::{Result, TeamError};

/// One decision maker: what it measures, what it can do, and how its
/// measurement is generated from the history `(ω0, y^1, u^1, …, y^{n-1}, u^{n-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMaker {
    pub y: FiniteSpace,
    pub u: FiniteSpace,
    pub kernel: Kernel,
}

/// A finite sequential team in intrinsic form.
///
/// Decision makers are indexed from zero. Decision maker `n`'s kernel takes
/// the interleaved history `(ω0, y^0, u^0, …, y^{n-1}, u^{n-1})` as input,
/// which is also the layout of every extended state and strategic measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamSpec {
    pub omega0: FiniteSpace,
    pub prior: Distribution,
    pub dms: Vec<DecisionMaker>,
    pub cost: CostTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Empty,
    Labels,
    Normalization,
    Arity,
    Shape,
    Range,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

/// Every violated invariant of a team; empty iff the team is valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}: {}", v.kind, v.message)?;
        }
        Ok(())
    }
}

impl TeamSpec {
    /// Builds a team and rejects it unless [`TeamSpec::validate`] is clean.
    pub fn new(omega0: FiniteSpace, prior: Distribution, dms: Vec<DecisionMaker>, cost: CostTable) -> Result<Self> {
        let spec = Self {
            omega0,
            prior,
            dms,
            cost,
        };
        spec.ensure_valid()?;
        Ok(spec)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(TeamError::InvalidSpec(report))
        }
    }

    pub fn dm_count(&self) -> usize {
        self.dms.len()
    }

    pub fn omega_len(&self) -> usize {
        self.omega0.len()
    }

    pub fn y_len(&self, n: usize) -> usize {
        self.dms[n].y.len()
    }

    pub fn u_len(&self, n: usize) -> usize {
        self.dms[n].u.len()
    }

    /// `[|Ω0|, |Y^0|, |U^0|, …, |Y^{n-1}|, |U^{n-1}|]`: the input dims of kernel `n`.
    pub fn history_dims(&self, n: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(2 * n + 1);
        dims.push(self.omega_len());
        for dm in &self.dms[..n] {
            dims.push(dm.y.len());
            dims.push(dm.u.len());
        }
        dims
    }

    /// Layout of the extended state at stage `s`: history through `y^s`.
    pub fn prefix_dims(&self, s: usize) -> Vec<usize> {
        let mut dims = self.history_dims(s);
        dims.push(self.y_len(s));
        dims
    }

    /// Layout of full paths `(ω0, y^0, u^0, …, y^{N-1}, u^{N-1})`.
    pub fn path_dims(&self) -> Vec<usize> {
        self.history_dims(self.dm_count())
    }

    /// Expected layout of the cost table.
    pub fn cost_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.omega_len()];
        dims.extend(self.dms.iter().map(|dm| dm.u.len()));
        dims
    }

    /// Checks every structural and probabilistic invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.dms.is_empty() {
            report.push(ViolationKind::Empty, "team has no decision makers".into());
        }
        check_space(&mut report, "omega0", &self.omega0);
        if self.prior.len() != self.omega0.len() {
            report.push(
                ViolationKind::Shape,
                format!(
                    "prior has {} entries but omega0 has {} labels",
                    self.prior.len(),
                    self.omega0.len()
                ),
            );
        } else if let Some(p) = row_problem(self.prior.probs()) {
            report.push(ViolationKind::Normalization, format!("prior {p}"));
        }

        for (n, dm) in self.dms.iter().enumerate() {
            check_space(&mut report, &format!("dm {n} measurement space"), &dm.y);
            check_space(&mut report, &format!("dm {n} action space"), &dm.u);
            let expected = self.history_dims(n);
            let found = dm.kernel.input_dims();
            if found.len() != expected.len() {
                report.push(
                    ViolationKind::Arity,
                    format!(
                        "dm {n} kernel takes {} inputs, expected {}",
                        found.len(),
                        expected.len()
                    ),
                );
                continue;
            }
            if found != expected.as_slice() {
                report.push(
                    ViolationKind::Shape,
                    format!("dm {n} kernel input dims {found:?}, expected {expected:?}"),
                );
                continue;
            }
            if dm.kernel.output_dim() != dm.y.len() {
                report.push(
                    ViolationKind::Shape,
                    format!(
                        "dm {n} kernel outputs {} values, measurement space has {}",
                        dm.kernel.output_dim(),
                        dm.y.len()
                    ),
                );
                continue;
            }
            let rows = dm.kernel.row_count();
            if dm.kernel.table().len() != rows * dm.kernel.output_dim() {
                report.push(
                    ViolationKind::Shape,
                    format!(
                        "dm {n} kernel table has {} entries, expected {}",
                        dm.kernel.table().len(),
                        rows * dm.kernel.output_dim()
                    ),
                );
                continue;
            }
            for r in 0..rows {
                if let Some(p) = row_problem(dm.kernel.row(r)) {
                    report.push(ViolationKind::Normalization, format!("dm {n} kernel row {r} {p}"));
                }
            }
        }

        let expected = self.cost_dims();
        if self.cost.dims() != expected.as_slice() {
            report.push(
                ViolationKind::Shape,
                format!("cost dims {:?}, expected {expected:?}", self.cost.dims()),
            );
        } else if self.cost.values().len() != expected.iter().product::<usize>() {
            report.push(
                ViolationKind::Shape,
                format!("cost table has {} entries", self.cost.values().len()),
            );
        } else if let Some((i, v)) = self
            .cost
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            report.push(ViolationKind::Range, format!("cost entry {i} is {v}"));
        }
        report
    }
}

fn check_space(report: &mut ValidationReport, what: &str, space: &FiniteSpace) {
    if space.is_empty() {
        report.push(ViolationKind::Empty, format!("{what} is empty"));
    } else if space.has_duplicates() {
        report.push(ViolationKind::Labels, format!("{what} has duplicate labels"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::types::Kernel;

    fn binary_team() -> TeamSpec {
        let b = || FiniteSpace::indexed("v", 2);
        let dm0 = DecisionMaker {
            y: b(),
            u: b(),
            kernel: Kernel::deterministic(vec![2], 2, |d| d[0]),
        };
        let dm1 = DecisionMaker {
            y: b(),
            u: b(),
            kernel: Kernel::constant(vec![2, 2, 2], &Distribution::uniform(2)),
        };
        TeamSpec {
            omega0: b(),
            prior: Distribution::uniform(2),
            dms: vec![dm0, dm1],
            cost: CostTable::from_fn(vec![2, 2, 2], |d| (d[0] != d[2]) as u8 as f64),
        }
    }

    #[test]
    fn well_formed_team_has_empty_report() {
        let spec = binary_team();
        assert!(spec.validate().is_valid());
        assert!(spec.ensure_valid().is_ok());
    }

    #[test]
    fn short_kernel_row_is_named() {
        let mut spec = binary_team();
        let mut table = spec.dms[1].kernel.table().to_vec();
        table[3 * 2] = 0.4;
        table[3 * 2 + 1] = 0.5;
        spec.dms[1].kernel = Kernel::from_table(vec![2, 2, 2], 2, table);
        let report = spec.validate();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::Normalization);
        assert!(v.message.contains("dm 1"), "{}", v.message);
        assert!(v.message.contains("row 3"), "{}", v.message);
    }

    #[test]
    fn wrong_kernel_arity_is_reported() {
        let mut spec = binary_team();
        spec.dms[1].kernel = Kernel::constant(vec![2, 2, 2, 2], &Distribution::uniform(2));
        let report = spec.validate();
        assert_eq!(report.count(ViolationKind::Arity), 1);
    }

    #[test]
    fn negative_cost_and_bad_prior_are_both_listed() {
        let mut spec = binary_team();
        spec.prior = Distribution::from_probs_unchecked(vec![0.7, 0.7]);
        spec.cost = CostTable::constant(vec![2, 2, 2], -1.0);
        let report = spec.validate();
        assert_eq!(report.count(ViolationKind::Normalization), 1);
        assert_eq!(report.count(ViolationKind::Range), 1);
    }

    #[test]
    fn no_dms_is_invalid() {
        let mut spec = binary_team();
        spec.dms.clear();
        spec.cost = CostTable::constant(vec![2], 0.0);
        assert_eq!(spec.validate().count(ViolationKind::Empty), 1);
    }

    #[test]
    fn layout_helpers() {
        let spec = binary_team();
        assert_eq!(spec.history_dims(0), vec![2]);
        assert_eq!(spec.prefix_dims(1), vec![2, 2, 2, 2]);
        assert_eq!(spec.path_dims(), vec![2, 2, 2, 2, 2]);
        assert_eq!(spec.cost_dims(), vec![2, 2, 2]);
    }
}
