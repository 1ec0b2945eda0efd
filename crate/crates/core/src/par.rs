//! Data-parallel helpers.
//!
//! With the `parallel` feature the maps below run on the rayon global pool;
//! without it, or with [`Execution::Sequential`], they run in order on the
//! calling thread. Results are always collected in input order and any
//! reduction happens afterwards on the caller's side, so output is bitwise
//! identical between the two modes.

/// Selects how grid-sized loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

// Below this many items the rayon split overhead dominates.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 256;

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && items.len() >= MIN_PARALLEL_LEN {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..len`, preserving order.
pub fn map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && len >= MIN_PARALLEL_LEN {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Like [`map`] but without the minimum-length cutoff, for loops whose items
/// are individually expensive (one Remez design per item, for instance).
pub fn map_coarse<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<f64> = (0..5000).map(|i| i as f64 * 0.001).collect();
        let a = map(Execution::Sequential, &xs, |x| x.sin().exp());
        let b = map(Execution::Parallel, &xs, |x| x.sin().exp());
        assert_eq!(a, b);
        let c = map_range(Execution::Parallel, 1000, |i| i * i);
        assert_eq!(c[999], 999 * 999);
    }
}
