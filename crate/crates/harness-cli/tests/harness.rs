//! Harness behavior: config parsing, the outer loop, reference generation,
//! the temperature MSE metric, and sweep CSV emission.

use lockstep_harness::{
    compute_reference, compute_reference_with, error_metric, interval_grid, run_outer_loop,
    run_row, run_sweep, Approach, Reference, RowOutcome, RunOutcome, SweepConfig, CSV_HEADER,
};

fn cache_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("lockstep-test-refcache");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

// ---- config ----

#[test]
fn approach_parsing_round_trips() {
    for s in ["1A", "1B", "2A", "2B", "3A", "3B"] {
        let a: Approach = s.parse().unwrap();
        assert_eq!(a.to_string(), s);
    }
    assert!("4A".parse::<Approach>().is_err());
    assert!("1C".parse::<Approach>().is_err());
    assert!("2".parse::<Approach>().is_err());
}

#[test]
fn config_file_parses_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.cfg");
    std::fs::write(
        &path,
        "# comment\nmodel=robertson\nrtol = 1e-6\ndt_cfd=1e-4,1e-3\napproaches=1A,2B\n",
    )
    .unwrap();
    let mut cfg = SweepConfig::default();
    cfg.apply_file(&path).unwrap();
    assert_eq!(cfg.model, "robertson");
    assert_eq!(cfg.rtol, 1e-6);
    assert_eq!(cfg.dt_cfd_list, vec![1e-4, 1e-3]);
    assert_eq!(cfg.approaches.len(), 2);

    cfg.set("rtol", "1e-8").unwrap();
    assert_eq!(cfg.rtol, 1e-8);
    assert!(cfg.set("no_such_key", "1").is_err());

    let printed = cfg.print();
    assert!(printed.contains("model=robertson"));
    assert!(printed.contains("rtol=1e-8"));
}

#[test]
fn defaults_match_the_documented_values() {
    let cfg = SweepConfig::default();
    assert_eq!(cfg.rtol, 1e-7);
    assert_eq!(cfg.t_end, 0.1);
    assert_eq!(cfg.timeout_seconds, 60.0);
    assert_eq!(cfg.tile_size, 1024);
}

// ---- interval grid ----

#[test]
fn ten_intervals_over_a_tenth() {
    let grid = interval_grid(0.1, 0.01);
    assert_eq!(grid.len(), 10);
    assert_eq!(*grid.last().unwrap(), 0.1);
}

#[test]
fn short_final_interval_is_recorded() {
    let grid = interval_grid(0.25, 0.1);
    assert_eq!(grid, vec![0.1, 0.2, 0.25]);
}

// ---- outer loop ----

#[test]
fn zero_rhs_keeps_every_endpoint_at_y0() {
    // Zero fuel makes the ignition rhs identically zero.
    let mut cfg = SweepConfig::default();
    cfg.model = "ignition".into();
    cfg.y0 = vec![0.0, 600.0];
    cfg.t_end = 1e-3;
    cfg.n_cells = 2;
    cfg.perturb = 0.0;
    let out = run_outer_loop(&cfg, "2A".parse().unwrap(), 1e-4, 1e-8).unwrap();
    assert_eq!(out.outcome, RunOutcome::Completed);
    assert_eq!(out.states.len(), 10);
    for s in &out.states {
        assert_eq!(s.as_slice(), &[0.0, 600.0]);
    }
}

#[test]
fn ignition_endpoints_match_the_reference_within_one_kelvin_rms() {
    let mut cfg = SweepConfig::default();
    cfg.model = "ignition".into();
    cfg.t_end = 1e-2;
    cfg.n_cells = 2;
    cfg.perturb = 0.0;
    cfg.cache_dir = Some(cache_dir());
    let dt = 1e-4;
    let grid = interval_grid(cfg.t_end, dt);
    let reference = compute_reference(&cfg.model, cfg.t_end, &grid, cfg.cache_dir.as_deref())
        .unwrap();
    let row = run_row(&cfg, "2A".parse().unwrap(), dt, 1e-8, Some(&reference));
    assert_eq!(row.outcome, RowOutcome::Completed);
    let rms = row.avg_mse_temperature.unwrap().sqrt();
    assert!(rms <= 1.0, "temperature RMS error {rms} K");
}

#[test]
fn pre_ignition_horizon_reports_no_ignition() {
    let mut cfg = SweepConfig::default();
    cfg.model = "ignition".into();
    cfg.t_end = 1e-5;
    cfg.n_cells = 2;
    cfg.perturb = 0.0;
    let dt = 5e-6;
    let row = run_row(&cfg, "2A".parse().unwrap(), dt, 1e-8, None);
    assert_eq!(row.outcome, RowOutcome::NoIgnition);
    assert!(row.avg_mse_temperature.is_none());
}

// ---- reference ----

#[test]
fn reference_against_itself_has_zero_error() {
    let samples = interval_grid(1e-3, 1e-4);
    let r = compute_reference_with("ignition", 1e-3, &samples, None, 1e-3, Some(&cache_dir()))
        .unwrap();
    let mse = error_metric(&r.times, &r.states, &r, 1).unwrap();
    assert_eq!(mse, 0.0);
}

#[test]
fn linear_decay_reference_matches_the_exact_solution() {
    let samples: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
    let r = compute_reference("linear", 1.0, &samples, Some(&cache_dir())).unwrap();
    for (t, s) in r.times.iter().zip(&r.states) {
        let exact = (-t).exp();
        let rel = (s[0] - exact).abs() / exact;
        assert!(rel <= 1e-9, "t {t}: rel {rel:e}");
    }
}

#[test]
fn ignition_reference_self_converges_in_interval_width() {
    let t_end = 5e-3;
    let samples = interval_grid(t_end, 5e-4);
    let coarse =
        compute_reference_with("ignition", t_end, &samples, None, 2e-4, Some(&cache_dir()))
            .unwrap();
    let fine =
        compute_reference_with("ignition", t_end, &samples, None, 1e-4, Some(&cache_dir()))
            .unwrap();
    for ((t, a), b) in coarse.times.iter().zip(&coarse.states).zip(&fine.states) {
        let rel = (a[1] - b[1]).abs() / b[1].abs();
        assert!(rel <= 1e-6, "t {t}: rel {rel:e}");
    }
}

// ---- metric ----

fn reference_from(times: &[f64], temps: &[f64]) -> Reference {
    Reference {
        model: "ignition".into(),
        t_end: *times.last().unwrap(),
        times: times.to_vec(),
        states: temps.iter().map(|&t| vec![1.0, t]).collect(),
    }
}

#[test]
fn metric_examples() {
    let times = [0.1, 0.2];
    let r = reference_from(&times, &[700.0, 900.0]);

    let same: Vec<Vec<f64>> = r.states.clone();
    assert_eq!(error_metric(&times, &same, &r, 1).unwrap(), 0.0);

    let offset1: Vec<Vec<f64>> = vec![vec![1.0, 701.0], vec![1.0, 901.0]];
    assert_eq!(error_metric(&times, &offset1, &r, 1).unwrap(), 1.0);

    let offsets: Vec<Vec<f64>> = vec![vec![1.0, 701.0], vec![1.0, 902.0]];
    assert_eq!(error_metric(&times, &offsets, &r, 1).unwrap(), 2.5);
}

#[test]
fn metric_rejects_mismatched_grids() {
    let r = reference_from(&[0.1, 0.2], &[700.0, 900.0]);
    let states = vec![vec![1.0, 700.0]];
    assert!(error_metric(&[0.15], &states, &r, 1).is_err());
    assert!(error_metric(&[0.1], &states[..0].to_vec(), &r, 1).is_err());
}

// ---- sweep ----

#[test]
fn sweep_grid_yields_one_row_per_combination() {
    let mut cfg = SweepConfig::default();
    cfg.model = "linear".into();
    cfg.approaches = vec!["2A".parse().unwrap()];
    cfg.t_end = 1e-2;
    cfg.dt_cfd_list = vec![
        1e-6, 3.125e-6, 1.25e-5, 2.5e-5, 1e-4, 2e-4, 1e-3, 2e-3, 1e-2,
    ];
    cfg.eta_list = vec![1e-6, 1e-8, 1e-10, 1e-12, 1e-14];
    cfg.n_cells = 1;
    let (rows, csv) = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 45);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 46);
    assert_eq!(lines[0], CSV_HEADER);
    for row in &rows {
        assert_eq!(row.outcome, RowOutcome::Completed);
        assert!(row.stats.n_steps > 0);
    }
}

#[test]
fn empty_eta_grid_degenerates_to_the_fixed_atol() {
    let mut cfg = SweepConfig::default();
    cfg.model = "linear".into();
    cfg.approaches = vec!["2A".parse().unwrap()];
    cfg.t_end = 1e-3;
    cfg.dt_cfd_list = vec![1e-3];
    cfg.eta_list = vec![];
    cfg.n_cells = 1;
    let (rows, csv) = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].eta, 1e-10);
    assert!(csv.lines().nth(1).unwrap().contains("1e-10"));
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            let mut kept = fields.clone();
            if kept.len() > 4 {
                kept.remove(4);
            }
            kept.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_is_deterministic_modulo_wall_time() {
    let mut cfg = SweepConfig::default();
    cfg.model = "ignition".into();
    cfg.approaches = vec!["2B".parse().unwrap(), "1B".parse().unwrap()];
    cfg.t_end = 1e-2;
    cfg.dt_cfd_list = vec![2e-3];
    cfg.eta_list = vec![1e-8];
    cfg.n_cells = 4;
    cfg.seed = 7;
    cfg.cache_dir = Some(cache_dir());
    let (_, csv_a) = run_sweep(&cfg).unwrap();
    let (_, csv_b) = run_sweep(&cfg).unwrap();
    assert_eq!(strip_wall_time(&csv_a), strip_wall_time(&csv_b));
    assert!(csv_a.lines().nth(1).unwrap().contains("completed"));
}

#[test]
fn parallel_rows_match_sequential_rows() {
    let mut cfg = SweepConfig::default();
    cfg.model = "linear".into();
    cfg.approaches = vec!["2A".parse().unwrap(), "1A".parse().unwrap()];
    cfg.t_end = 1e-3;
    cfg.dt_cfd_list = vec![1e-4, 1e-3];
    cfg.eta_list = vec![1e-8, 1e-10];
    cfg.n_cells = 2;
    let (_, sequential) = run_sweep(&cfg).unwrap();
    cfg.parallel_rows = 4;
    let (_, parallel) = run_sweep(&cfg).unwrap();
    assert_eq!(strip_wall_time(&sequential), strip_wall_time(&parallel));
}

#[test]
fn row_failures_are_recorded_not_fatal() {
    let mut cfg = SweepConfig::default();
    cfg.model = "ignition".into();
    cfg.y0 = vec![0.5, -10.0];
    cfg.t_end = 1e-3;
    cfg.dt_cfd_list = vec![1e-3];
    cfg.eta_list = vec![1e-8];
    cfg.n_cells = 1;
    let row = run_row(&cfg, "2A".parse().unwrap(), 1e-3, 1e-8, None);
    assert!(matches!(row.outcome, RowOutcome::Failed(_)));
    assert!(row.avg_mse_temperature.is_none());
    assert!(row.to_csv_line().contains("failed"));
}

// ---- CLI binary ----

#[test]
fn cli_print_config_and_tiny_sweep() {
    let bin = env!("CARGO_BIN_EXE_lockstep");
    let out = std::process::Command::new(bin)
        .args(["sweep", "--model", "linear", "--print-config"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("model=linear"));
    assert!(text.contains("rtol=1e-7"));

    let out = std::process::Command::new(bin)
        .args([
            "sweep",
            "--model",
            "linear",
            "--approach",
            "2A",
            "--dt-cfd",
            "1e-3",
            "--eta",
            "1e-8",
            "--t-end",
            "1e-3",
            "--cells",
            "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(text.contains("completed"));
}
