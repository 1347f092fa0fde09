//! Coarse (chi, dw) phase diagram on a worker pool, with checkpointing and CSV export.
//!
//!     cargo run --release --example phase_diagram -- [output-dir]
//!
//! The default grid takes a few minutes; the full 31 x 31 map is `tcav sweep`.

use std::path::PathBuf;
use std::time::Instant;

use tilted_cavities::config::{GridSpec, RunSettings};
use tilted_cavities::sweep::{export, regime_counts, run_sweep, Axis, SweepGrid, SweepOptions};
use tilted_cavities::LatticeParams;

fn main() -> tilted_cavities::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tcav-phase-diagram"));
    let template = LatticeParams::canonical();
    let run = RunSettings::defaults_for(&template);
    let axes = GridSpec { kerr: Axis { min: 0.0, max: 0.15, count: 7 }, tilt: Axis { min: 0.3, max: 0.6, count: 4 } };
    let grid = SweepGrid::new(axes, template, run)?;

    let clock = Instant::now();
    let opts = SweepOptions { workers: 0, checkpoint: Some(out.with_extension("checkpoint.json")), resume: true, max_new_cells: None };
    std::fs::create_dir_all(out.parent().unwrap_or(&out))?;
    let cells = run_sweep(&grid, &opts)?;
    let manifest = export(&out, &grid, &cells, "", clock.elapsed().as_secs_f64())?;

    println!("{} cells in {:.1}s -> {}", manifest.cells, manifest.wall_time, out.display());
    println!("{:?}", regime_counts(&cells));
    let kerrs = grid.axes.kerr.values();
    print!("{:>6}", "dw\\chi");
    for k in &kerrs {
        print!("{k:>7.3}");
    }
    println!();
    for (row, tilt) in grid.axes.tilt.values().iter().enumerate() {
        print!("{tilt:>6.3}");
        for col in 0..kerrs.len() {
            let c = &cells[row * kerrs.len() + col];
            let tag = c.classification.as_ref().map_or("fail".to_string(), |r| r.label.to_string()[..4].to_string());
            print!("{tag:>7}");
        }
        println!();
    }
    Ok(())
}
