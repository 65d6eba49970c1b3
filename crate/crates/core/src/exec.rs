//! Sequential or rayon-backed execution of independent work units.
//!
//! Every parallel site in this crate maps a slice of independent inputs to a
//! `Vec` of outputs with order preserved, so the result is bitwise identical
//! whichever mode runs it.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to run a batch of independent work units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Plain iteration on the calling thread.
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    /// Rayon work-stealing pool.
    #[cfg(feature = "parallel")]
    #[cfg_attr(feature = "parallel", default)]
    Parallel,
}

/// Map `f` over `items`, preserving order.
pub fn map_collect<T, U, F>(mode: ExecMode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    match mode {
        ExecMode::Sequential => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => items.par_iter().map(f).collect(),
    }
}

/// Map `f` over mutable chunks described by disjoint, ascending index
/// ranges, returning one output per chunk in range order.
///
/// Used for per-block factor/solve inside a Newton iteration: each range is
/// handed to `f` together with the matching sub-slice of `data`.
pub fn map_blocks<U, F>(
    mode: ExecMode,
    data: &mut [f64],
    ranges: &[std::ops::Range<usize>],
    f: F,
) -> Vec<U>
where
    U: Send,
    F: Fn(usize, &mut [f64]) -> U + Send + Sync,
{
    match mode {
        ExecMode::Sequential => ranges
            .iter()
            .enumerate()
            .map(|(k, r)| f(k, &mut data[r.clone()]))
            .collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            // Split `data` into the disjoint chunks up-front so rayon can own them.
            let mut chunks: Vec<(usize, &mut [f64])> = Vec::with_capacity(ranges.len());
            let mut rest = data;
            let mut offset = 0;
            for (k, r) in ranges.iter().enumerate() {
                let (_, tail) = rest.split_at_mut(r.start - offset);
                let (chunk, tail) = tail.split_at_mut(r.end - r.start);
                chunks.push((k, chunk));
                rest = tail;
                offset = r.end;
            }
            chunks.into_par_iter().map(|(k, chunk)| f(k, chunk)).collect()
        }
    }
}
