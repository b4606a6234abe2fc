use super::policy::{DeterministicPolicy, RandomizedPolicy};
use super::team::{DecisionMaker, TeamSpec};
use super::types::{FiniteSpace, Kernel};
use crate::error::{Result, TeamError};
use crate::layout::product_u128;

/// Default cap on the number of entries of any generated table.
pub const DEFAULT_TABLE_CAP: u128 = 1 << 25;

/// Gives every decision maker perfect recall of all earlier measurements and
/// actions.
///
/// Decision maker `n` measures `(y^0, u^0, …, y^{n-1}, u^{n-1}, y^n)`; the new
/// kernel copies the history coordinates and draws `y^n` from the original
/// kernel. Costs are unchanged. `cap` bounds the entries of each new kernel.
pub fn perfect_recall_expansion(spec: &TeamSpec, cap: u128) -> Result<TeamSpec> {
    spec.ensure_valid()?;
    let mut dms: Vec<DecisionMaker> = Vec::with_capacity(spec.dm_count());
    for n in 0..spec.dm_count() {
        if n == 0 {
            dms.push(spec.dms[0].clone());
            continue;
        }
        let orig = &spec.dms[n];
        // Measurement-history prefix (y^0, u^0, …, y^{n-1}, u^{n-1}) without ω0.
        let prefix_dims = &spec.history_dims(n)[1..];
        let prefix_len = product_u128(prefix_dims);
        let y_len = product_u128(&[prefix_len as usize, orig.y.len()]);
        let mut input_dims = vec![spec.omega_len()];
        for dm in &dms {
            input_dims.push(dm.y.len());
            input_dims.push(dm.u.len());
        }
        let entries = product_u128(&input_dims).saturating_mul(y_len);
        if entries > cap || y_len > cap {
            return Err(TeamError::CapExceeded {
                what: "perfect-recall kernel entries",
                required: entries,
                cap,
            });
        }
        let prefix_len = prefix_len as usize;
        let last_u = spec.u_len(n - 1);
        let orig_y = orig.y.len();
        let kernel = Kernel::from_fn(input_dims, y_len as usize, |d| {
            let omega = d[0];
            let prefix = d[2 * n - 1] * last_u + d[2 * n];
            let source = orig.kernel.row(omega * prefix_len + prefix);
            let mut row = vec![0.0; y_len as usize];
            row[prefix * orig_y..(prefix + 1) * orig_y].copy_from_slice(source);
            row
        });
        let prev = &dms[n - 1];
        let mut labels = Vec::with_capacity(y_len as usize);
        for py in prev.y.labels() {
            for pu in spec.dms[n - 1].u.labels() {
                for y in orig.y.labels() {
                    labels.push(format!("{py}|{pu}|{y}"));
                }
            }
        }
        dms.push(DecisionMaker {
            y: FiniteSpace::from_labels_unchecked(labels),
            u: orig.u.clone(),
            kernel,
        });
    }
    Ok(TeamSpec {
        omega0: spec.omega0.clone(),
        prior: spec.prior.clone(),
        dms,
        cost: spec.cost.clone(),
    })
}

/// Lifts a policy of the original team to the expanded team by ignoring the
/// copied history coordinates.
pub fn lift_deterministic(spec: &TeamSpec, policy: &DeterministicPolicy) -> DeterministicPolicy {
    let tables = (0..spec.dm_count())
        .map(|n| {
            let prefix: usize = spec.history_dims(n)[1..].iter().product();
            let y_len = spec.y_len(n);
            (0..prefix * y_len).map(|y| policy.action(n, y % y_len)).collect()
        })
        .collect();
    DeterministicPolicy::new(tables)
}

pub fn lift_randomized(spec: &TeamSpec, policy: &RandomizedPolicy) -> RandomizedPolicy {
    let rows = (0..spec.dm_count())
        .map(|n| {
            let prefix: usize = spec.history_dims(n)[1..].iter().product();
            let y_len = spec.y_len(n);
            (0..prefix * y_len)
                .map(|y| policy.stage_rows(n)[y % y_len].clone())
                .collect()
        })
        .collect();
    RandomizedPolicy::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{expected_cost, CostTable, Distribution};

    fn single_dm() -> TeamSpec {
        TeamSpec::new(
            FiniteSpace::indexed("w", 3),
            Distribution::uniform(3),
            vec![DecisionMaker {
                y: FiniteSpace::indexed("y", 2),
                u: FiniteSpace::indexed("u", 2),
                kernel: Kernel::deterministic(vec![3], 2, |d| d[0] % 2),
            }],
            CostTable::from_fn(vec![3, 2], |d| (d[0] + d[1]) as f64),
        )
        .unwrap()
    }

    #[test]
    fn single_decision_maker_is_unchanged() {
        let spec = single_dm();
        assert_eq!(perfect_recall_expansion(&spec, DEFAULT_TABLE_CAP).unwrap(), spec);
    }

    #[test]
    fn binary_pair_expands_to_eight_points() {
        let b = || FiniteSpace::indexed("v", 2);
        let spec = TeamSpec::new(
            b(),
            Distribution::uniform(2),
            vec![
                DecisionMaker {
                    y: b(),
                    u: b(),
                    kernel: Kernel::deterministic(vec![2], 2, |d| d[0]),
                },
                DecisionMaker {
                    y: b(),
                    u: b(),
                    kernel: Kernel::constant(vec![2, 2, 2], &Distribution::uniform(2)),
                },
            ],
            CostTable::from_fn(vec![2, 2, 2], |d| (d[0] ^ d[2]) as f64),
        )
        .unwrap();
        let big = perfect_recall_expansion(&spec, DEFAULT_TABLE_CAP).unwrap();
        assert!(big.validate().is_valid());
        assert_eq!(big.y_len(1), 8);
        assert_eq!(big.dms[1].y.label(5), "v1|v0|v1");

        // In the expanded team DM1 can recover ω0 through y^0.
        let lifted = lift_deterministic(&spec, &DeterministicPolicy::new(vec![vec![0, 1], vec![0, 0]]));
        let orig = expected_cost(&spec, &DeterministicPolicy::new(vec![vec![0, 1], vec![0, 0]])).unwrap();
        assert!((expected_cost(&big, &lifted).unwrap() - orig).abs() < 1e-15);
        let recall = DeterministicPolicy::new(vec![vec![0, 1], (0..8).map(|y| y / 4).collect()]);
        assert_eq!(expected_cost(&big, &recall).unwrap(), 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let b = || FiniteSpace::indexed("v", 2);
        let spec = TeamSpec::new(
            b(),
            Distribution::uniform(2),
            vec![
                DecisionMaker {
                    y: b(),
                    u: b(),
                    kernel: Kernel::deterministic(vec![2], 2, |d| d[0]),
                },
                DecisionMaker {
                    y: b(),
                    u: b(),
                    kernel: Kernel::constant(vec![2, 2, 2], &Distribution::uniform(2)),
                },
            ],
            CostTable::constant(vec![2, 2, 2], 1.0),
        )
        .unwrap();
        assert!(matches!(
            perfect_recall_expansion(&spec, 10),
            Err(TeamError::CapExceeded { .. })
        ));
    }
}
