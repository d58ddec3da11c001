//! Sequential / data-parallel dispatch for the slice sweeps.
//!
//! With the `parallel` feature the chunked loops go through rayon; without it,
//! or when [`Parallelism::Serial`] is requested at run time, they run on the
//! calling thread in index order. Both paths visit every chunk exactly once and
//! produce identical per-chunk results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for the hot loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether this build can actually run data-parallel.
    pub fn available() -> bool {
        cfg!(feature = "parallel")
    }

    fn is_parallel(self) -> bool {
        self == Parallelism::Parallel && Self::available()
    }
}

/// Calls `f(index, chunk)` for each `chunk_len`-sized chunk of `data`.
pub fn for_each_chunk_mut<T, F>(mode: Parallelism, data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(idx, chunk)| f(idx, chunk));
        return;
    }
    let _ = mode;
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(idx, chunk)| f(idx, chunk));
}

/// Like [`for_each_chunk_mut`] but collects one result per chunk, in chunk order.
pub fn map_chunks_mut<T, R, F>(mode: Parallelism, data: &mut [T], chunk_len: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return data
            .par_chunks_mut(chunk_len)
            .enumerate()
            .map(|(idx, chunk)| f(idx, chunk))
            .collect();
    }
    let _ = mode;
    data.chunks_mut(chunk_len)
        .enumerate()
        .map(|(idx, chunk)| f(idx, chunk))
        .collect()
}

/// Maps `0..n` through `f` and collects in index order.
pub fn map_collect<R, F>(mode: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_agree() {
        let mut a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let mut b = a.clone();
        let body = |idx: usize, chunk: &mut [f64]| {
            for v in chunk.iter_mut() {
                *v = (*v).sin() * idx as f64;
            }
        };
        for_each_chunk_mut(Parallelism::Serial, &mut a, 7, body);
        for_each_chunk_mut(Parallelism::Parallel, &mut b, 7, body);
        assert_eq!(a, b);
        let sums_s = map_chunks_mut(Parallelism::Serial, &mut a, 9, |i, c| c.iter().sum::<f64>() + i as f64);
        let sums_p = map_chunks_mut(Parallelism::Parallel, &mut b, 9, |i, c| c.iter().sum::<f64>() + i as f64);
        assert_eq!(sums_s, sums_p);
        assert_eq!(sums_s.len(), 112);
        let m = map_collect(Parallelism::Parallel, 10, |i| i * i);
        assert_eq!(m, (0..10).map(|i| i * i).collect::<Vec<_>>());
    }
}
