//! Batching behavior: layout permutations, tiling, LPT planning and the
//! rebalance gate, lockstep batch integration, and the concurrent driver.

use lockstep_batching::{
    integrate_batch, partition_patches, rebalance_if_improved, reorder, run_concurrent, tile,
    BatchError, BatchJob, BatchPlan, CellBlock, Layout, Patch, Rebalance,
};
use lockstep_core::{ToleranceSpec, VectorPool};
use lockstep_integrators::{BdfOptions, JacobianKind, SolverChoice};
use lockstep_models::{LinearDecay, Robertson, ToyIgnition};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol(rtol: f64, atol: f64, n_comp: usize) -> ToleranceSpec {
    ToleranceSpec::fixed(rtol, atol, n_comp).unwrap()
}

// ---- layout ----

#[test]
fn reorder_two_by_two_example() {
    let cy = CellBlock::from_data(2, 2, Layout::CellMajor, vec![1.0, 10.0, 2.0, 20.0]).unwrap();
    let yc = reorder(&cy, Layout::ComponentMajor);
    assert_eq!(yc.data, vec![1.0, 2.0, 10.0, 20.0]);
}

#[test]
fn reorder_single_cell_is_identity() {
    let cy = CellBlock::from_data(1, 3, Layout::CellMajor, vec![1.0, 2.0, 3.0]).unwrap();
    let yc = reorder(&cy, Layout::ComponentMajor);
    assert_eq!(yc.data, cy.data);
    let same = reorder(&cy, Layout::CellMajor);
    assert_eq!(same, cy);
}

proptest! {
    #[test]
    fn reorder_round_trip_is_bitwise(
        n_cells in 1usize..20,
        n_comp in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n_cells * n_comp)
            .map(|_| rng.gen_range(-1e10..1e10))
            .collect();
        let cy = CellBlock::from_data(n_cells, n_comp, Layout::CellMajor, data).unwrap();
        let back = reorder(&reorder(&cy, Layout::ComponentMajor), Layout::CellMajor);
        for (a, b) in cy.data.iter().zip(&back.data) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

// ---- tiling ----

#[test]
fn tile_examples() {
    let one = tile(&Patch::new(0..100, 100.0, 100));
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].cell_range, 0..100);

    let four = tile(&Patch::new(0..100, 100.0, 32));
    let sizes: Vec<usize> = four.iter().map(|t| t.n_cells()).collect();
    assert_eq!(sizes, vec![32, 32, 32, 4]);
    assert_eq!(four[0].cell_range.start, 0);
    assert_eq!(four[3].cell_range, 96..100);

    let singles = tile(&Patch::new(5..12, 7.0, 1));
    assert_eq!(singles.len(), 7);
    for (i, t) in singles.iter().enumerate() {
        assert_eq!(t.cell_range, 5 + i..6 + i);
    }
}

#[test]
fn tiles_cover_patch_without_overlap() {
    let patch = Patch::new(3..250, 500.0, 64);
    let tiles = tile(&patch);
    let mut next = patch.cell_range.start;
    for t in &tiles {
        assert_eq!(t.cell_range.start, next);
        assert!(t.n_cells() <= 64);
        next = t.cell_range.end;
    }
    assert_eq!(next, patch.cell_range.end);
    let total_work: f64 = tiles.iter().map(|t| t.work_estimate).sum();
    assert!((total_work - patch.work_estimate).abs() < 1e-9);
}

// ---- planning ----

fn patches_from_works(works: &[f64]) -> Vec<Patch> {
    works
        .iter()
        .enumerate()
        .map(|(i, &w)| Patch::new(i..i + 1, w, 1024))
        .collect()
}

fn worker_loads(plan: &BatchPlan, patches: &[Patch]) -> Vec<f64> {
    plan.assignments
        .iter()
        .map(|list| list.iter().map(|&i| patches[i].work_estimate).sum())
        .collect()
}

#[test]
fn lpt_five_patches_stays_within_graham_bound_of_optimum() {
    // Greedy LPT on (5,4,3,3,3) over 2 workers yields loads (8,10); the
    // brute-force optimum is (9,9). The greedy result sits inside the
    // 4/3 - 1/(3m) guarantee: 10 <= 10.5.
    let patches = patches_from_works(&[5.0, 4.0, 3.0, 3.0, 3.0]);
    let plan = partition_patches(&patches, 2);
    let mut loads = worker_loads(&plan, &patches);
    assert_eq!(plan.predicted_makespan, 10.0);
    loads.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(loads, vec![8.0, 10.0]);
    let opt = optimal_makespan(&[5, 4, 3, 3, 3], 2) as f64;
    assert_eq!(opt, 9.0);
    assert!(plan.predicted_makespan <= (4.0 / 3.0 - 1.0 / 6.0) * opt);
}

#[test]
fn lpt_equal_patches_divide_evenly() {
    let patches = patches_from_works(&[2.0; 12]);
    let plan = partition_patches(&patches, 4);
    for list in &plan.assignments {
        assert_eq!(list.len(), 3);
    }
    assert_eq!(plan.predicted_makespan, 6.0);
}

#[test]
fn lpt_single_worker_takes_everything() {
    let patches = patches_from_works(&[1.0, 7.0, 2.0]);
    let plan = partition_patches(&patches, 1);
    assert_eq!(plan.assignments[0].len(), 3);
    assert_eq!(plan.predicted_makespan, 10.0);
}

#[test]
fn eight_equal_batches_two_workers_get_four_each() {
    let patches = patches_from_works(&[3.0; 8]);
    let plan = partition_patches(&patches, 2);
    assert_eq!(plan.assignments[0].len(), 4);
    assert_eq!(plan.assignments[1].len(), 4);
}

#[test]
fn rebalance_threshold_examples() {
    // Current plan packs both patches onto worker 0 (makespan 100 under
    // refreshed estimates); LPT would split them.
    let current = BatchPlan {
        assignments: vec![vec![0, 1], vec![]],
        predicted_makespan: 100.0,
        n_workers: 2,
    };

    let improved = patches_from_works(&[94.0, 6.0]);
    match rebalance_if_improved(&current, &improved, 0.05) {
        Rebalance::Deploy(plan) => assert_eq!(plan.predicted_makespan, 94.0),
        Rebalance::Keep => panic!("6% improvement must deploy"),
    }

    let marginal = patches_from_works(&[96.0, 4.0]);
    assert_eq!(
        rebalance_if_improved(&current, &marginal, 0.05),
        Rebalance::Keep
    );

    // Identical estimates: the tentative plan cannot beat the current one.
    let patches = patches_from_works(&[5.0, 4.0, 3.0]);
    let plan = partition_patches(&patches, 2);
    assert_eq!(rebalance_if_improved(&plan, &patches, 0.05), Rebalance::Keep);
}

/// Optimal makespan by exhaustive assignment (feasible for <= 8 patches).
fn optimal_makespan(works: &[u32], m: usize) -> u32 {
    let mut best = u32::MAX;
    let mut loads = vec![0u32; m];
    fn recurse(works: &[u32], i: usize, loads: &mut [u32], best: &mut u32) {
        if i == works.len() {
            let ms = *loads.iter().max().unwrap();
            if ms < *best {
                *best = ms;
            }
            return;
        }
        let current_max = *loads.iter().max().unwrap();
        if current_max >= *best {
            return;
        }
        for w in 0..loads.len() {
            loads[w] += works[i];
            recurse(works, i + 1, loads, best);
            loads[w] -= works[i];
            // Symmetry cut: assigning to a second empty worker is redundant.
            if loads[w] == works[i] {
                break;
            }
        }
    }
    recurse(works, 0, &mut loads, &mut best);
    best
}

#[test]
fn lpt_respects_graham_bound_exhaustively() {
    // All multisets of up to 8 works drawn from {1..5}; non-decreasing
    // sequences enumerate each multiset once.
    fn multisets(n: usize, min: u32) -> Vec<Vec<u32>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for v in min..=5 {
            for mut rest in multisets(n - 1, v) {
                rest.insert(0, v);
                out.push(rest);
            }
        }
        out
    }
    for n in 1..=8 {
        for works in multisets(n, 1) {
            for m in [2usize, 3] {
                let patches =
                    patches_from_works(&works.iter().map(|&w| w as f64).collect::<Vec<_>>());
                let plan = partition_patches(&patches, m);
                let opt = optimal_makespan(&works, m) as f64;
                let bound = (4.0 / 3.0 - 1.0 / (3.0 * m as f64)) * opt;
                assert!(
                    plan.predicted_makespan <= bound + 1e-9,
                    "works {works:?}, m {m}: LPT {} vs bound {bound}",
                    plan.predicted_makespan
                );
            }
        }
    }
}

// ---- batch integration ----

#[test]
fn empty_batch_is_an_error() {
    let model = Robertson::default();
    let block = CellBlock::zeros(0, 3, Layout::CellMajor);
    let mut pool = VectorPool::new();
    let err = integrate_batch(
        &block,
        &[],
        &model,
        0.0,
        1.0,
        &tol(1e-6, 1e-9, 3),
        SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic),
        &BdfOptions::default(),
        &mut pool,
        7,
    )
    .unwrap_err();
    match err {
        BatchError::EmptyBatch { batch_id } => assert_eq!(batch_id, 7),
        other => panic!("expected EmptyBatch, got {other:?}"),
    }
}

#[test]
fn integrate_errors_carry_the_batch_id() {
    // Negative temperature makes the ignition rhs fail on the very first
    // evaluation; the recoverable-failure path runs out of retries and the
    // resulting error must name the batch.
    let model = ToyIgnition::default();
    let block = CellBlock::from_data(1, 2, Layout::CellMajor, vec![0.5, -10.0]).unwrap();
    let mut pool = VectorPool::new();
    let err = integrate_batch(
        &block,
        &[0.0, 0.0],
        &model,
        0.0,
        1e-4,
        &tol(1e-6, 1e-9, 2),
        SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic),
        &BdfOptions::default(),
        &mut pool,
        3,
    )
    .unwrap_err();
    match err {
        BatchError::Integrate { batch_id, .. } => assert_eq!(batch_id, 3),
        other => panic!("expected Integrate, got {other:?}"),
    }
}

fn lockstep_equivalence_for(solver: SolverChoice) {
    let model = Robertson::default();
    let y0 = [1.0, 0.0, 0.0];
    let spec = tol(1e-7, 1e-10, 3);
    let opts = BdfOptions::default();
    let mut pool = VectorPool::new();

    let single_block = CellBlock::replicate(&y0, 1, Layout::CellMajor);
    let (single, single_stats) = integrate_batch(
        &single_block,
        &[0.0; 3],
        &model,
        0.0,
        10.0,
        &spec,
        solver,
        &opts,
        &mut pool,
        0,
    )
    .unwrap();

    let k = 16;
    let batch_block = CellBlock::replicate(&y0, k, Layout::CellMajor);
    let (batch, batch_stats) = integrate_batch(
        &batch_block,
        &vec![0.0; 3 * k],
        &model,
        0.0,
        10.0,
        &spec,
        solver,
        &opts,
        &mut pool,
        1,
    )
    .unwrap();

    assert_eq!(batch_stats.n_steps, single_stats.n_steps, "{solver:?}");
    let mut cell = [0.0; 3];
    for c in 0..k {
        batch.extract_cell(c, &mut cell);
        for (a, b) in cell.iter().zip(&single.data) {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            assert!(rel <= 1e-12, "{solver:?} cell {c}: {a} vs {b} (rel {rel:e})");
        }
    }
}

#[test]
fn lockstep_batch_matches_single_cell_direct_analytic() {
    lockstep_equivalence_for(SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic));
}

#[test]
fn lockstep_batch_matches_single_cell_direct_numerical() {
    lockstep_equivalence_for(SolverChoice::ModifiedNewtonDirect(JacobianKind::Numerical));
}

#[test]
fn lockstep_batch_matches_single_cell_gmres() {
    lockstep_equivalence_for(SolverChoice::InexactNewtonGmres);
}

#[test]
fn stiff_cell_governs_the_shared_step_sequence() {
    let model = Robertson::default();
    let spec = tol(1e-6, 1e-10, 3);
    let opts = BdfOptions::default();
    let solver = SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic);
    let mut pool = VectorPool::new();

    let stiff_block = CellBlock::replicate(&[1.0, 0.0, 0.0], 1, Layout::CellMajor);
    let (_, stiff_stats) = integrate_batch(
        &stiff_block,
        &[0.0; 3],
        &model,
        0.0,
        1.0,
        &spec,
        solver,
        &opts,
        &mut pool,
        0,
    )
    .unwrap();

    // (0, 0, 1) is a fixed point of the kinetics: trivial on its own.
    let mixed = CellBlock::from_data(
        2,
        3,
        Layout::CellMajor,
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    )
    .unwrap();
    let (_, mixed_stats) = integrate_batch(
        &mixed,
        &[0.0; 6],
        &model,
        0.0,
        1.0,
        &spec,
        solver,
        &opts,
        &mut pool,
        1,
    )
    .unwrap();

    assert!(
        mixed_stats.n_steps >= stiff_stats.n_steps,
        "mixed {} vs stiff-alone {}",
        mixed_stats.n_steps,
        stiff_stats.n_steps
    );
}

#[test]
fn component_major_input_round_trips_through_direct_solver() {
    let model = LinearDecay::scalar(-2.0);
    let k = 4;
    let mut yc = CellBlock::zeros(k, 1, Layout::ComponentMajor);
    for c in 0..k {
        yc.set(c, 0, 1.0 + c as f64);
    }
    let mut pool = VectorPool::new();
    let (out, _) = integrate_batch(
        &yc,
        &vec![0.0; k],
        &model,
        0.0,
        1.0,
        &tol(1e-8, 1e-12, 1),
        SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic),
        &BdfOptions::default(),
        &mut pool,
        0,
    )
    .unwrap();
    assert_eq!(out.layout, Layout::ComponentMajor);
    let exact = (-2.0f64).exp();
    for c in 0..k {
        let rel = (out.get(c, 0) - (1.0 + c as f64) * exact).abs() / ((1.0 + c as f64) * exact);
        assert!(rel < 1e-6, "cell {c}: rel {rel:e}");
    }
}

#[test]
fn direct_and_gmres_endpoints_agree_on_a_robertson_batch() {
    let model = Robertson::default();
    let k = 16;
    let rtol = 1e-7;
    let spec = tol(rtol, 1e-12, 3);
    let opts = BdfOptions::default();
    let mut pool = VectorPool::new();

    // Mildly perturbed initial fuel levels so the cells differ.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut block = CellBlock::zeros(k, 3, Layout::CellMajor);
    for c in 0..k {
        block.set(c, 0, 1.0 + rng.gen_range(-0.05..0.05));
    }
    let f_ext = vec![0.0; 3 * k];

    let (direct, _) = integrate_batch(
        &block,
        &f_ext,
        &model,
        0.0,
        100.0,
        &spec,
        SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic),
        &opts,
        &mut pool,
        0,
    )
    .unwrap();
    let (gmres, _) = integrate_batch(
        &block,
        &f_ext,
        &model,
        0.0,
        100.0,
        &spec,
        SolverChoice::InexactNewtonGmres,
        &opts,
        &mut pool,
        1,
    )
    .unwrap();

    for (i, (a, b)) in direct.data.iter().zip(&gmres.data).enumerate() {
        let rel = (a - b).abs() / a.abs().max(1e-300);
        assert!(rel <= 100.0 * rtol, "dof {i}: {a} vs {b} (rel {rel:e})");
    }
}

// ---- concurrent driver ----

fn make_jobs(n_jobs: usize, cells_per_job: usize) -> Vec<BatchJob> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..n_jobs)
        .map(|id| {
            let mut block = CellBlock::zeros(cells_per_job, 3, Layout::CellMajor);
            for c in 0..cells_per_job {
                block.set(c, 0, 1.0 + rng.gen_range(-0.1..0.1));
            }
            BatchJob {
                id,
                f_ext: vec![0.0; 3 * cells_per_job],
                block,
            }
        })
        .collect()
}

#[test]
fn concurrent_results_are_scheduling_invariant() {
    let model = Robertson::default();
    let jobs = make_jobs(32, 4);
    let spec = tol(1e-7, 1e-10, 3);
    let opts = BdfOptions::default();
    let solver = SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic);

    let (base, base_stats) =
        run_concurrent(&jobs, &model, 0.0, 10.0, &spec, solver, &opts, 1);
    for workers in [2, 8] {
        let (results, stats) =
            run_concurrent(&jobs, &model, 0.0, 10.0, &spec, solver, &opts, workers);
        assert_eq!(stats, base_stats, "{workers} workers");
        for (i, (r, b)) in results.iter().zip(&base).enumerate() {
            let (rb, rs) = r.as_ref().unwrap();
            let (bb, bs) = b.as_ref().unwrap();
            assert_eq!(rs, bs, "job {i}, {workers} workers");
            for (x, y) in rb.data.iter().zip(&bb.data) {
                assert_eq!(x.to_bits(), y.to_bits(), "job {i}, {workers} workers");
            }
        }
    }
}

#[test]
fn concurrent_failures_are_tagged_and_work_drains() {
    let model = ToyIgnition::default();
    let mut jobs: Vec<BatchJob> = (0..4)
        .map(|id| BatchJob {
            id,
            block: CellBlock::replicate(&[0.01, 900.0], 2, Layout::CellMajor),
            f_ext: vec![0.0; 4],
        })
        .collect();
    // Job 2 starts with a negative temperature and must fail; the rest
    // still complete.
    jobs[2].block = CellBlock::from_data(2, 2, Layout::CellMajor, vec![0.01, -5.0, 0.01, 900.0])
        .unwrap();

    let (results, _) = run_concurrent(
        &jobs,
        &model,
        0.0,
        1e-5,
        &tol(1e-6, 1e-9, 2),
        SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic),
        &BdfOptions::default(),
        2,
    );
    for (i, r) in results.iter().enumerate() {
        if i == 2 {
            assert_eq!(r.as_ref().unwrap_err().batch_id(), 2);
        } else {
            assert!(r.is_ok(), "job {i} should complete: {:?}", r.as_ref().err());
        }
    }
}
