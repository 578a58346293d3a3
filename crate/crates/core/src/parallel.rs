//! Deterministic fan-out of indexed work across threads.
//!
//! Results land in slots keyed by index, so the output is identical for any
//! worker count. The only environment influence is the default thread count.

/// Environment variable overriding the default worker count.
pub const THREADS_ENV_VAR: &str = "RANDSWITCH_THREADS";

/// Worker count from `RANDSWITCH_THREADS`, else the machine's parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var(THREADS_ENV_VAR) {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Evaluates `f(0..count)` with up to `workers` threads, returning results
/// in index order.
pub fn run_indexed<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(workers.min(count));
    std::thread::scope(|scope| {
        for (w, slice) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                let start = w * chunk;
                for (offset, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(start + offset));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("worker filled slot"))
        .collect()
}
