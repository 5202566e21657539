//! Deterministic chunked parallelism.
//!
//! Work is split into fixed chunks whose boundaries do not depend on the
//! thread count; per-chunk results are reduced in chunk order, so outputs
//! are bit-identical for any value of `BVLAB_THREADS`.

use std::sync::OnceLock;

fn thread_count() -> usize {
    static N: OnceLock<usize> = OnceLock::new();
    *N.get_or_init(|| {
        std::env::var("BVLAB_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            })
    })
}

const CHUNK: usize = 1024;

/// Sum of `f(i)` for `i` in `0..n`, evaluated in fixed 1024-item chunks
/// (sequential within a chunk) and reduced in chunk order.
pub(crate) fn parallel_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    let threads = thread_count().min(n_chunks.max(1));
    if threads <= 1 || n_chunks <= 1 {
        return (0..n).map(f).sum();
    }
    let f = &f;
    let mut partial = vec![0.0f64; n_chunks];
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for t in 0..threads {
            handles.push(scope.spawn(move || {
                let mut out = Vec::new();
                let mut c = t;
                while c < n_chunks {
                    let lo = c * CHUNK;
                    let hi = ((c + 1) * CHUNK).min(n);
                    let mut s = 0.0;
                    for i in lo..hi {
                        s += f(i);
                    }
                    out.push((c, s));
                    c += threads;
                }
                out
            }));
        }
        for h in handles {
            for (c, s) in h.join().unwrap() {
                partial[c] = s;
            }
        }
    });
    partial.iter().sum()
}
