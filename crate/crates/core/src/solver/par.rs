// Cell-parallel helpers. Each output entry depends only on its index, so the
// result is the same for any worker count.

#[cfg(feature = "parallel")]
const CHUNK: usize = 2048;

#[cfg(feature = "parallel")]
pub(crate) fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let base = c * CHUNK;
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = f(base + k);
        }
    });
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    for (k, v) in out.iter_mut().enumerate() {
        *v = f(k);
    }
}

/// Maximum of `f` over `0..len`, or 0 when empty.
#[cfg(feature = "parallel")]
pub(crate) fn max_of<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    let chunks = len.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).fold(0.0f64, |m, k| m.max(f(k)))
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn max_of<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..len).fold(0.0f64, |m, k| m.max(f(k)))
}
