//! Element-loop execution: rayon when the `parallel` feature is on, plain
//! iterators otherwise. Results always come back in index order, so both
//! paths produce bit-identical assembled operators.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Falls back to sequential execution when built without `parallel`.
    #[default]
    Rayon,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }
}

pub fn map_range<R, F>(par: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// Applies `f` to consecutive index chunks and concatenates the outputs in order.
pub fn flat_map_chunks<R, F>(par: Parallelism, n: usize, chunk: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(std::ops::Range<usize>, &mut Vec<R>) + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let parts = map_range(par, n_chunks, |c| {
        let mut out = Vec::new();
        f(c * chunk..((c + 1) * chunk).min(n), &mut out);
        out
    });
    let mut all = Vec::with_capacity(parts.iter().map(Vec::len).sum());
    for p in parts {
        all.extend(p);
    }
    all
}

/// Sum over `0..n` of `f(i)`, combined in a fixed order.
pub fn sum_range<F>(par: Parallelism, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    const CHUNK: usize = 1024;
    map_range(par, n.div_ceil(CHUNK), |c| {
        (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum::<f64>()
    })
    .into_iter()
    .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree_bitwise() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = sum_range(Parallelism::Sequential, 100_003, f);
        let b = sum_range(Parallelism::Rayon, 100_003, f);
        assert_eq!(a.to_bits(), b.to_bits());
        let chunks = |r: std::ops::Range<usize>, out: &mut Vec<usize>| out.extend(r.map(|i| i * 2));
        assert_eq!(
            flat_map_chunks(Parallelism::Sequential, 1001, 64, chunks),
            flat_map_chunks(Parallelism::Rayon, 1001, 64, chunks)
        );
    }
}
