//! Data-parallel helpers with a sequential fallback.
//!
//! Every reduction here is order-independent: minima are taken over
//! `(value, index)` pairs so the first minimizer in enumeration order wins no
//! matter how work is split across threads. Without the `parallel` feature,
//! [`Execution::Parallel`] silently runs sequentially.

/// How candidate evaluations are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Environment variable holding the worker count (`0` = one per core).
pub const THREADS_ENV: &str = "TEAMDP_THREADS";

/// Reads [`THREADS_ENV`]; unset or unparsable values mean `0` (auto).
pub fn workers_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Runs `f` on a dedicated pool of `workers` threads (`0` = auto).
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Number of threads the current pool would use.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// `(0..n).map(f).collect()`, in index order.
pub fn map_range<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(exec: Execution, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Smaller value wins; equal values resolve to the smaller index.
#[inline]
pub fn ordered_min(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// First minimizer of `f` over `0..n` as `(value, index)`; `None` when `n == 0`.
///
/// `NaN` values never win.
pub fn argmin_range<F>(exec: Execution, n: usize, f: F) -> Option<(f64, usize)>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if n == 0 {
        return None;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .map(|i| (nan_to_inf(f(i)), i))
            .reduce_with(ordered_min);
    }
    let _ = exec;
    (0..n).map(|i| (nan_to_inf(f(i)), i)).reduce(ordered_min)
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmin_prefers_first_index_on_ties() {
        let vals = [3.0, 1.0, 2.0, 1.0, 1.0];
        for exec in [Execution::Sequential, Execution::Parallel] {
            assert_eq!(argmin_range(exec, vals.len(), |i| vals[i]), Some((1.0, 1)));
        }
    }

    #[test]
    fn argmin_of_empty_range() {
        assert_eq!(argmin_range(Execution::Parallel, 0, |_| 0.0), None);
    }

    #[test]
    fn map_range_keeps_order() {
        let v = map_range(Execution::Parallel, 1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn parallel_argmin_is_worker_independent() {
        let f = |i: usize| ((i * 7919) % 101) as f64;
        let one = with_workers(1, || argmin_range(Execution::Parallel, 10_000, f));
        let many = with_workers(8, || argmin_range(Execution::Parallel, 10_000, f));
        assert_eq!(one, many);
        assert_eq!(one, Some((0.0, 0)));
    }
}
