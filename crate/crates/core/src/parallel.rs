//! Execution strategy for the data-parallel loops.
//!
//! Every parallel loop in the crate writes disjoint outputs or reduces with a
//! deterministic tie-break, so both strategies produce bit-identical results.
//! Without the `parallel` feature, [`Parallelism::Parallel`] runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }

    /// `(0..n).map(f).collect()`, in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Calls `f(i, chunk)` for each consecutive `chunk_len`-sized chunk.
    pub fn for_each_chunk<T, F>(self, data: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }

    /// Minimum of `key(i)` over `0..n`, ties resolved to the smallest index.
    pub fn argmin_by_key<F>(self, n: usize, key: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let better = |a: (usize, f64), b: (usize, f64)| {
            if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        };
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n)
                .into_par_iter()
                .map(|i| (i, key(i)))
                .reduce_with(better);
        }
        (0..n).map(|i| (i, key(i))).reduce(better)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let f = |i: usize| ((i * 7919) % 113) as f64;
        for p in [Parallelism::Sequential, Parallelism::Parallel] {
            assert_eq!(p.map(50, |i| i * 2)[49], 98);
            assert_eq!(p.argmin_by_key(500, f), Some((0, 0.0)));
            let mut v = vec![0usize; 12];
            p.for_each_chunk(&mut v, 5, |i, c| c.iter_mut().for_each(|x| *x = i));
            assert_eq!(v, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2]);
        }
    }
}
