//! Execution strategy for the data-parallel kernels.
//!
//! With the `parallel` feature (default) the map phase of every kernel runs on
//! the rayon pool. Reductions always happen sequentially in index order, so a
//! result never depends on the strategy or on the thread count.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a kernel distributes its independent work items.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[derive(Default)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}


impl Exec {
    /// Evaluates `f` on every index in `range` and returns the results in index order.
    pub fn map_range<T, F>(self, range: Range<usize>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => range.map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => range.into_par_iter().with_min_len(256).map(f).collect(),
        }
    }

    /// Maps over a slice of jobs, preserving order.
    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Exec::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Exec::Parallel => "parallel",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_and_keep_order() {
        let seq = Exec::Sequential.map_range(0..10_000, |i| (i as f64).sqrt());
        let def = Exec::default().map_range(0..10_000, |i| (i as f64).sqrt());
        assert_eq!(seq, def);
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(
            Exec::default().map_slice(&items, |x| x * 2),
            Exec::Sequential.map_slice(&items, |x| x * 2)
        );
    }
}
