use std::fs;
use std::path::Path;

use tilted_cavities::config::{GridSpec, RunSettings};
use tilted_cavities::sweep::{
    export, load_results, read_results_csv, run_sweep, write_results_csv, Axis, CellResult, SweepGrid, SweepOptions,
    RESULTS_HEADER,
};
use tilted_cavities::LatticeParams;

/// A small, quick grid: 21 sites, strong loss, 3 x 2 cells.
fn small_grid(kerr_max: f64) -> SweepGrid {
    let template = LatticeParams::canonical().with_sites(21).with_loss(0.05);
    let mut run = RunSettings::defaults_for(&template);
    run.transient = 0.75 * run.t_end;
    let axes = GridSpec {
        kerr: Axis { min: 0.0, max: kerr_max, count: 3 },
        tilt: Axis { min: 0.4, max: 0.6, count: 2 },
    };
    SweepGrid::new(axes, template, run).unwrap()
}

fn csv(cells: &[CellResult]) -> String {
    let mut out = Vec::new();
    write_results_csv(&mut out, cells).unwrap();
    String::from_utf8(out).unwrap()
}

fn opts(workers: usize, checkpoint: Option<&Path>, resume: bool, max_new_cells: Option<usize>) -> SweepOptions {
    SweepOptions { workers, checkpoint: checkpoint.map(Path::to_path_buf), resume, max_new_cells }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let grid = small_grid(0.2);
    let one = run_sweep(&grid, &opts(1, None, false, None)).unwrap();
    let three = run_sweep(&grid, &opts(3, None, false, None)).unwrap();
    assert_eq!(one.len(), grid.len());
    for (a, b) in one.iter().zip(&three) {
        assert!(a.same_outcome(b), "cell {} differs", a.index);
    }
    assert_eq!(csv(&one), csv(&three));
}

#[test]
fn interrupted_sweep_resumes_to_same_results() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("checkpoint.json");
    let grid = small_grid(0.2);

    let partial = run_sweep(&grid, &opts(2, Some(&cp), false, Some(2))).unwrap();
    assert_eq!(partial.len(), 2);
    assert!(cp.exists());

    let resumed = run_sweep(&grid, &opts(2, Some(&cp), true, None)).unwrap();
    let fresh = run_sweep(&grid, &opts(1, None, false, None)).unwrap();
    assert_eq!(resumed.len(), grid.len());
    assert_eq!(csv(&resumed), csv(&fresh));
}

#[test]
fn resume_rejects_a_different_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("checkpoint.json");
    run_sweep(&small_grid(0.2), &opts(1, Some(&cp), false, Some(1))).unwrap();
    let err = run_sweep(&small_grid(0.3), &opts(1, Some(&cp), true, None)).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("kerr.max"), "{msg}");
}

#[test]
fn empty_checkpoint_runs_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("checkpoint.json");
    fs::write(&cp, "").unwrap();
    let grid = small_grid(0.2);
    let cells = run_sweep(&grid, &opts(1, Some(&cp), true, None)).unwrap();
    assert_eq!(cells.len(), grid.len());
}

#[test]
fn export_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let grid = small_grid(0.2);
    let cells = run_sweep(&grid, &opts(1, None, false, None)).unwrap();
    let manifest = export(dir.path(), &grid, &cells, "# test\n", 1.0).unwrap();

    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(RESULTS_HEADER));
    let rows = read_results_csv(text.as_bytes()).unwrap();
    assert_eq!(rows, load_results(dir.path()).unwrap());
    assert_eq!(rows.len(), grid.len());
    assert_eq!(manifest.cells, grid.len());
    assert_eq!(manifest.regimes.values().sum::<usize>() + manifest.failures, grid.len());

    for row in &rows {
        if let (Some(dn), Some(p), Some(theta)) = (row.delta_n, row.avg_max_fidelity, row.theta) {
            assert!((theta - dn * p).abs() <= 1e-12 * (1.0 + theta.abs()));
            assert!((0.0..=1.0 + 1e-9).contains(&p));
        }
    }
    // linear cells settle into a steady state
    for row in rows.iter().filter(|r| r.chi == 0.0) {
        assert_eq!(row.label, "stationary", "{row:?}");
    }

    let on_disk: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk["grid_fingerprint"], grid.fingerprint());
    assert!(dir.path().join("failures.log").exists());
}
