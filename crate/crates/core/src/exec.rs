//! Execution strategy for the per-node passes.
//!
//! Every data-parallel loop in the crate is an index map whose body depends
//! only on its own index, so the parallel and sequential paths produce
//! bit-identical results. Without the `parallel` feature, [`Exec::Parallel`]
//! runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `(0..n).map(f).collect()`, possibly split across the rayon pool.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel if n >= 2 * MIN_CHUNK => (0..n)
                .into_par_iter()
                .with_min_len(MIN_CHUNK)
                .map(f)
                .collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// True when this strategy will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin().exp();
        let a = Exec::Sequential.map(10_000, f);
        let b = Exec::Parallel.map(10_000, f);
        assert_eq!(a, b);
    }
}
