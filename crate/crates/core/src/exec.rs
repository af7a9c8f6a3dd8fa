//! Data-parallel helpers with a sequential fallback.
//!
//! Every parallel loop in the crate goes through these helpers. Results are
//! always assembled in index order, so the output of a computation never
//! depends on how work was scheduled. When the `parallel` feature is off,
//! [`Execution::Parallel`] silently runs the sequential path.

use serde::Serialize;

/// How data-parallel loops are executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// Whether this build actually runs `Parallel` work on a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(i)` for `i in 0..len` and returns the results in index order.
pub fn map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Splits `data` into consecutive blocks of `block_len` elements and calls
/// `f(offset, block)` on each, where `offset` is the index of the block's
/// first element. Returns the per-block results in block order.
pub fn map_blocks_mut<T, R, F>(exec: Execution, data: &mut [T], block_len: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    let block_len = block_len.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return data
            .par_chunks_mut(block_len)
            .enumerate()
            .map(|(b, chunk)| f(b * block_len, chunk))
            .collect();
    }
    let _ = exec;
    data.chunks_mut(block_len)
        .enumerate()
        .map(|(b, chunk)| f(b * block_len, chunk))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_preserves_order() {
        for exec in [Execution::Parallel, Execution::Sequential] {
            let out = map_range(exec, 1000, |i| i * i);
            assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
        }
    }

    #[test]
    fn blocks_cover_slice_once() {
        for exec in [Execution::Parallel, Execution::Sequential] {
            let mut data = vec![0usize; 1003];
            let offsets = map_blocks_mut(exec, &mut data, 100, |off, chunk| {
                for (k, x) in chunk.iter_mut().enumerate() {
                    *x = off + k;
                }
                off
            });
            assert_eq!(offsets.len(), 11);
            assert!(data.iter().enumerate().all(|(i, &v)| v == i));
        }
    }
}
