use super::policy::Policy;
use super::team::TeamSpec;
use crate::error::Result;

/// `J(γ) = E[c(ω0, u)]` for a deterministic or randomized policy.
///
/// Depth-first over `(ω0, y^0, u^0, …)`, pruning zero-probability branches.
pub fn expected_cost<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P) -> Result<f64> {
    policy.check_shape(spec)?;
    let mut total = 0.0;
    for (w, &p) in spec.prior.probs().iter().enumerate() {
        if p > 0.0 {
            total += p * descend(spec, policy, 0, w, w);
        }
    }
    Ok(total)
}

fn descend<P: Policy + ?Sized>(spec: &TeamSpec, policy: &P, n: usize, history: usize, cost_index: usize) -> f64 {
    if n == spec.dm_count() {
        return spec.cost.values()[cost_index];
    }
    let dm = &spec.dms[n];
    let (y_len, u_len) = (dm.y.len(), dm.u.len());
    let mut acc = 0.0;
    for (y, &py) in dm.kernel.row(history).iter().enumerate() {
        if py == 0.0 {
            continue;
        }
        policy.for_each_action(n, y, &mut |u, pu| {
            let next = (history * y_len + y) * u_len + u;
            acc += py * pu * descend(spec, policy, n + 1, next, cost_index * u_len + u);
        });
    }
    acc
}
