//! Greedy longest-processing-time (LPT) work distribution across workers,
//! and the gated rebalance decision that only deploys a new plan when the
//! predicted makespan improves by at least a threshold fraction.

use crate::patch::Patch;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    /// `assignments[w]` lists the patch indices owned by worker `w`, in
    /// assignment order.
    pub assignments: Vec<Vec<usize>>,
    /// Max over workers of the summed work estimates.
    pub predicted_makespan: f64,
    pub n_workers: usize,
}

impl BatchPlan {
    /// Recomputes the makespan of this plan's assignment under refreshed
    /// work estimates.
    pub fn makespan_under(&self, patches: &[Patch]) -> f64 {
        self.assignments
            .iter()
            .map(|list| list.iter().map(|&i| patches[i].work_estimate).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Patch indices in shared-queue order: descending work, ties by lower
    /// patch index (the order in which LPT assigned them).
    pub fn queue_order(&self, patches: &[Patch]) -> Vec<usize> {
        sorted_by_work(patches)
    }
}

fn sorted_by_work(patches: &[Patch]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.sort_by(|&a, &b| {
        patches[b]
            .work_estimate
            .partial_cmp(&patches[a].work_estimate)
            .expect("work estimates must be comparable")
            .then(a.cmp(&b))
    });
    order
}

/// Greedy LPT assignment: visit patches in descending work order (ties by
/// lower patch index) and give each to the currently least-loaded worker
/// (ties by lower worker index).
pub fn partition_patches(patches: &[Patch], n_workers: usize) -> BatchPlan {
    assert!(n_workers >= 1, "need at least one worker");
    let mut assignments = vec![Vec::new(); n_workers];
    let mut loads = vec![0.0f64; n_workers];
    for i in sorted_by_work(patches) {
        let w = loads
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("loads are finite"))
            .map(|(w, _)| w)
            .expect("n_workers >= 1");
        assignments[w].push(i);
        loads[w] += patches[i].work_estimate;
    }
    let predicted_makespan = loads.iter().copied().fold(0.0, f64::max);
    BatchPlan {
        assignments,
        predicted_makespan,
        n_workers,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rebalance {
    Keep,
    Deploy(BatchPlan),
}

/// Builds a tentative plan from refreshed estimates and deploys it only if
/// its predicted makespan undercuts the current assignment's makespan
/// (recomputed under the refreshed estimates) by at least `threshold`.
pub fn rebalance_if_improved(
    current: &BatchPlan,
    patches: &[Patch],
    threshold: f64,
) -> Rebalance {
    assert!(
        threshold > 0.0 && threshold < 1.0,
        "threshold must lie in (0, 1)"
    );
    let current_makespan = current.makespan_under(patches);
    let tentative = partition_patches(patches, current.n_workers);
    if tentative.predicted_makespan <= (1.0 - threshold) * current_makespan {
        Rebalance::Deploy(tentative)
    } else {
        Rebalance::Keep
    }
}
