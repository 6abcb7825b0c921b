//! Concurrent batch execution: workers pull jobs from a shared queue, each
//! with a private integrator pool, writing results to disjoint slots. The
//! integration itself is deterministic, so final states are bitwise
//! independent of the worker count and scheduling order.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use lockstep_core::{CellBlock, IntegratorStats, ToleranceSpec, VectorPool};
use lockstep_integrators::{BdfOptions, SolverChoice};
use lockstep_models::OdeSystem;

use crate::error::BatchError;
use crate::integrate::integrate_batch;

/// One unit of queued work: a cell block plus its per-cell forcing.
pub struct BatchJob {
    pub id: usize,
    pub block: CellBlock,
    pub f_ext: Vec<f64>,
}

pub type BatchResult = Result<(CellBlock, IntegratorStats), BatchError>;

/// Runs `jobs` (in queue order) on `n_workers` threads. Returns one result
/// per job, index-aligned with the input, plus the summed stats of the
/// successful batches. A panic inside a job is surfaced as `WorkerPanic`
/// with that job's id; remaining work still drains.
#[allow(clippy::too_many_arguments)]
pub fn run_concurrent(
    jobs: &[BatchJob],
    system: &dyn OdeSystem,
    t0: f64,
    t_end: f64,
    tol: &ToleranceSpec,
    solver: SolverChoice,
    opts: &BdfOptions,
    n_workers: usize,
) -> (Vec<BatchResult>, IntegratorStats) {
    assert!(n_workers >= 1, "need at least one worker");
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<BatchResult>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..n_workers {
            scope.spawn(|| {
                let mut pool = VectorPool::new();
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= jobs.len() {
                        break;
                    }
                    let job = &jobs[i];
                    let result = catch_unwind(AssertUnwindSafe(|| {
                        integrate_batch(
                            &job.block, &job.f_ext, system, t0, t_end, tol, solver, opts,
                            &mut pool, job.id,
                        )
                    }))
                    .unwrap_or_else(|_| Err(BatchError::WorkerPanic { batch_id: job.id }));
                    // A panic may leave the pool in an arbitrary state;
                    // start this worker over with a fresh one.
                    if matches!(result, Err(BatchError::WorkerPanic { .. })) {
                        pool = VectorPool::new();
                    }
                    *slots[i].lock().expect("result slot poisoned") = Some(result);
                }
            });
        }
    });

    let mut results = Vec::with_capacity(jobs.len());
    let mut total = IntegratorStats::default();
    for slot in slots {
        let r = slot
            .into_inner()
            .expect("result slot poisoned")
            .expect("queue drained every job");
        if let Ok((_, ref stats)) = r {
            total.merge(stats);
        }
        results.push(r);
    }
    (results, total)
}
