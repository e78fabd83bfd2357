//! Bounded fan-out for independent jobs. Workers pull indices from a shared
//! counter; the caller receives results in input order, so anything written
//! from them afterwards is deterministic regardless of scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

/// Runs `f` over `jobs` on at most `workers` threads and returns the results
/// in job order. Panics in `f` propagate.
pub fn run_ordered<T, R, F>(jobs: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, jobs.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, R)>();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            scope.spawn(|| {
                let tx = tx;
                loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    let Some(job) = jobs.get(idx) else { break };
                    // A send can only fail if the receiver is gone, which
                    // means the main thread already panicked.
                    if tx.send((idx, f(job))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let mut slots: Vec<Option<R>> = (0..jobs.len()).map(|_| None).collect();
        for (idx, result) in rx {
            slots[idx] = Some(result);
        }
        slots
            .into_iter()
            .map(|s| s.expect("every job sends exactly one result"))
            .collect()
    })
}

/// Worker count for a job list: the available parallelism, capped by the
/// number of jobs.
pub fn default_workers(jobs: usize) -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .clamp(1, jobs.max(1))
}
