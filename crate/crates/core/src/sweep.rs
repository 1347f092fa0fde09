//! Parallel `(chi, dw)` scans with checkpoint/resume and tidy CSV export.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{GridSpec, RunSettings};
use crate::dynamics::{integrate, StepStats};
use crate::error::{Error, Result, Violation};
use crate::model::LatticeParams;
use crate::observables::{classify, ClassificationResult, Regime};
use crate::wannier_stark::{build_basis, ModeRange};

/// Evenly spaced values `min..=max`; a single-point axis sits at `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn point(value: f64) -> Self {
        Self { min: value, max: value, count: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + i as f64 * step }).collect()
    }

    pub fn violations(&self, field: &'static str, positive: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.count == 0 {
            out.push(Violation::new(field, "count must be at least 1"));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min {
            out.push(Violation::new(field, "need finite bounds with min <= max"));
        }
        if positive && !(self.min > 0.0) {
            out.push(Violation::new(field, "bounds must be positive"));
        } else if !positive && self.min < 0.0 {
            out.push(Violation::new(field, "bounds must be non-negative"));
        }
        out
    }
}

/// A validated scan: axes, the lattice every cell starts from, and per-cell run settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: GridSpec,
    pub template: LatticeParams,
    pub run: RunSettings,
}

impl SweepGrid {
    pub fn new(axes: GridSpec, template: LatticeParams, run: RunSettings) -> Result<Self> {
        let mut v = axes.kerr.violations("sweep.kerr", false);
        v.extend(axes.tilt.violations("sweep.tilt", true));
        v.extend(template.violations());
        v.extend(run.violations());
        if !v.is_empty() {
            return Err(Error::InvalidParams(v));
        }
        Ok(Self { axes, template, run })
    }

    pub fn len(&self) -> usize {
        self.axes.kerr.count.max(1) * self.axes.tilt.count.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(kerr, tilt)` of cell `index`; kerr varies fastest.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let nk = self.axes.kerr.count.max(1);
        (self.axes.kerr.values()[index % nk], self.axes.tilt.values()[index / nk])
    }

    pub fn cell_params(&self, index: usize) -> LatticeParams {
        let (kerr, tilt) = self.cell(index);
        self.template.clone().with_kerr(kerr).with_tilt(tilt)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        digest_hex(serde_json::to_string(self).expect("grid serialises").as_bytes())
    }
}

pub(crate) fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub kerr: f64,
    pub tilt: f64,
    pub classification: Option<ClassificationResult>,
    /// Diagnostic when the cell failed.
    pub error: Option<String>,
    pub steps: StepStats,
    pub boundary_contaminated: bool,
    /// Wall time in seconds; excluded from comparisons between runs.
    pub runtime: f64,
}

impl CellResult {
    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self { runtime: 0.0, ..self.clone() } == Self { runtime: 0.0, ..other.clone() }
    }
}

/// Simulate and classify a single cell.
pub fn run_cell(grid: &SweepGrid, index: usize) -> CellResult {
    let start = Instant::now();
    let (kerr, tilt) = grid.cell(index);
    let params = grid.cell_params(index);
    let outcome = integrate(&grid.run.initial_condition(), &params, &grid.run.evolve_options()).and_then(|traj| {
        let basis = build_basis(&params, ModeRange::All)?;
        let class = classify(&traj, &basis, grid.run.transient, &grid.run.classifier)?;
        Ok((traj.diagnostics, class))
    });
    let runtime = start.elapsed().as_secs_f64();
    match outcome {
        Ok((diag, class)) => CellResult {
            index,
            kerr,
            tilt,
            classification: Some(class),
            error: None,
            steps: diag.steps,
            boundary_contaminated: diag.boundary_contaminated,
            runtime,
        },
        Err(e) => CellResult {
            index,
            kerr,
            tilt,
            classification: None,
            error: Some(e.to_string()),
            steps: StepStats::default(),
            boundary_contaminated: false,
            runtime,
        },
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: String,
    grid: SweepGrid,
    cells: Vec<CellResult>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub checkpoint: Option<PathBuf>,
    /// Continue from an existing checkpoint instead of starting over.
    pub resume: bool,
    /// Stop after this many newly computed cells.
    pub max_new_cells: Option<usize>,
}

fn diff_paths(a: &Value, b: &Value, prefix: &str, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            for k in keys {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                match (x.get(k), y.get(k)) {
                    (Some(u), Some(v)) => diff_paths(u, v, &p, out),
                    (u, v) => out.push(format!("{p}: {} -> {}", fmt_opt(u), fmt_opt(v))),
                }
            }
        }
        _ if a != b => out.push(format!("{prefix}: {a} -> {b}")),
        _ => {}
    }
}

fn fmt_opt(v: Option<&Value>) -> String {
    v.map_or_else(|| "<missing>".into(), ToString::to_string)
}

fn load_checkpoint(path: &Path, grid: &SweepGrid) -> Result<BTreeMap<usize, CellResult>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(e.into()),
    };
    if text.trim().is_empty() {
        return Ok(BTreeMap::new());
    }
    let cp: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if cp.fingerprint != grid.fingerprint() {
        let mut diffs = Vec::new();
        diff_paths(&serde_json::to_value(&cp.grid)?, &serde_json::to_value(grid)?, "", &mut diffs);
        return Err(Error::Checkpoint(format!("checkpoint grid differs from requested grid: {}", diffs.join("; "))));
    }
    Ok(cp.cells.into_iter().filter(|c| c.index < grid.len()).map(|c| (c.index, c)).collect())
}

/// Write `bytes` to `path` through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn save_checkpoint(path: &Path, grid: &SweepGrid, done: &BTreeMap<usize, CellResult>) -> Result<()> {
    let cp = Checkpoint { fingerprint: grid.fingerprint(), grid: grid.clone(), cells: done.values().cloned().collect() };
    write_atomic(path, &serde_json::to_vec(&cp)?)
}

/// Run every outstanding cell on a worker pool. Results come back sorted by
/// cell index, so they do not depend on the worker count or completion order.
pub fn run_sweep(grid: &SweepGrid, opts: &SweepOptions) -> Result<Vec<CellResult>> {
    let mut done = match (&opts.checkpoint, opts.resume) {
        (Some(path), true) => load_checkpoint(path, grid)?,
        _ => BTreeMap::new(),
    };
    let mut todo: Vec<usize> = (0..grid.len()).filter(|i| !done.contains_key(i)).collect();
    if let Some(k) = opts.max_new_cells {
        todo.truncate(k);
    }
    if !done.is_empty() {
        log::info!("resuming: {} of {} cells already done", done.len(), grid.len());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<CellResult>();
    let mut save_error = None;
    std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                todo.par_iter().for_each_with(tx, |tx, &i| {
                    let _ = tx.send(run_cell(grid, i));
                })
            })
        });
        for cell in rx {
            if let Some(e) = &cell.error {
                log::warn!("cell {} (kerr {}, tilt {}) failed: {e}", cell.index, cell.kerr, cell.tilt);
            }
            done.insert(cell.index, cell);
            if let (Some(path), None) = (&opts.checkpoint, &save_error) {
                if let Err(e) = save_checkpoint(path, grid, &done) {
                    save_error = Some(e);
                }
            }
        }
    });
    if let Some(e) = save_error {
        return Err(e);
    }
    Ok(done.into_values().collect())
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub chi: f64,
    pub delta_omega: f64,
    pub delta_n: Option<f64>,
    pub avg_max_fidelity: Option<f64>,
    pub theta: Option<f64>,
    /// Regime name, or `failed`.
    pub label: String,
    pub period: Option<f64>,
}

pub const RESULTS_HEADER: &str = "chi,delta_omega,delta_n,avg_max_fidelity,theta,label,period";

impl From<&CellResult> for ResultRow {
    fn from(c: &CellResult) -> Self {
        match &c.classification {
            Some(r) => Self {
                chi: c.kerr,
                delta_omega: c.tilt,
                delta_n: Some(r.delta_n),
                avg_max_fidelity: r.avg_max_fidelity,
                theta: r.theta,
                label: r.label.to_string(),
                period: r.period,
            },
            None => Self {
                chi: c.kerr,
                delta_omega: c.tilt,
                delta_n: None,
                avg_max_fidelity: None,
                theta: None,
                label: "failed".into(),
                period: None,
            },
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn write_results_csv<W: Write>(mut out: W, cells: &[CellResult]) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for c in cells {
        let r = ResultRow::from(c);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.chi,
            r.delta_omega,
            opt(r.delta_n),
            opt(r.avg_max_fidelity),
            opt(r.theta),
            r.label,
            opt(r.period)
        )?;
    }
    Ok(())
}

pub fn read_results_csv<R: BufRead>(input: R) -> Result<Vec<ResultRow>> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty results file".into()))??;
    if header.trim() != RESULTS_HEADER {
        return Err(Error::Data(format!("unexpected results header: {header}")));
    }
    let num = |s: &str, line: usize| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| Error::Data(format!("line {line}: {e}")))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 2;
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Data(format!("line {n}: expected 7 columns, got {}", f.len())));
        }
        let req = |s: &str| num(s, n)?.ok_or_else(|| Error::Data(format!("line {n}: missing coordinate")));
        rows.push(ResultRow {
            chi: req(f[0])?,
            delta_omega: req(f[1])?,
            delta_n: num(f[2], n)?,
            avg_max_fidelity: num(f[3], n)?,
            theta: num(f[4], n)?,
            label: f[5].to_string(),
            period: num(f[6], n)?,
        });
    }
    Ok(rows)
}

/// Provenance record written next to `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub grid: SweepGrid,
    pub grid_fingerprint: String,
    /// SHA-256 of the configuration document the sweep was started from.
    pub config_hash: String,
    pub version: String,
    pub wall_time: f64,
    pub cells: usize,
    pub failures: usize,
    pub regimes: BTreeMap<String, usize>,
    pub results_sha256: String,
}

/// Write `results.csv`, `manifest.json` and `failures.log` into `dir`.
pub fn export(dir: &Path, grid: &SweepGrid, cells: &[CellResult], config_text: &str, wall_time: f64) -> Result<SweepManifest> {
    fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    write_results_csv(&mut csv, cells)?;
    write_atomic(&dir.join("results.csv"), &csv)?;
    let mut failures = String::new();
    let mut regimes = BTreeMap::new();
    for c in cells {
        match (&c.classification, &c.error) {
            (Some(r), _) => *regimes.entry(r.label.to_string()).or_insert(0) += 1,
            (None, e) => failures.push_str(&format!(
                "cell {} chi={} delta_omega={}: {}\n",
                c.index,
                c.kerr,
                c.tilt,
                e.as_deref().unwrap_or("unknown failure")
            )),
        }
    }
    write_atomic(&dir.join("failures.log"), failures.as_bytes())?;
    let manifest = SweepManifest {
        grid: grid.clone(),
        grid_fingerprint: grid.fingerprint(),
        config_hash: digest_hex(config_text.as_bytes()),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time,
        cells: cells.len(),
        failures: cells.iter().filter(|c| c.classification.is_none()).count(),
        regimes,
        results_sha256: digest_hex(&csv),
    };
    write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Load `results.csv` from an output directory.
pub fn load_results(dir: &Path) -> Result<Vec<ResultRow>> {
    read_results_csv(BufReader::new(fs::File::open(dir.join("results.csv"))?))
}

/// Count of each label, for quick summaries.
pub fn regime_counts(cells: &[CellResult]) -> BTreeMap<Regime, usize> {
    let mut out = BTreeMap::new();
    for r in cells.iter().filter_map(|c| c.classification.as_ref()) {
        *out.entry(r.label).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SweepGrid {
        let template = LatticeParams::canonical().with_sites(11).with_loss(0.05);
        let mut run = RunSettings::defaults_for(&template);
        run.t_end = 100.0;
        run.transient = 50.0;
        SweepGrid::new(GridSpec { kerr: Axis { min: 0.0, max: 0.02, count: 2 }, tilt: Axis { min: 0.4, max: 0.6, count: 2 } }, template, run).unwrap()
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis { min: 0.0, max: 1.0, count: 3 }.values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Axis::point(0.3).values(), vec![0.3]);
        assert!(!Axis { min: 0.0, max: 1.0, count: 0 }.violations("x", false).is_empty());
        assert!(!Axis { min: 0.0, max: 1.0, count: 2 }.violations("x", true).is_empty());
    }

    #[test]
    fn cell_layout() {
        let g = small_grid();
        assert_eq!(g.len(), 4);
        assert_eq!(g.cell(0), (0.0, 0.4));
        assert_eq!(g.cell(1), (0.02, 0.4));
        assert_eq!(g.cell(2), (0.0, 0.6));
        assert_eq!(g.cell_params(3).kerr, 0.02);
    }

    #[test]
    fn csv_round_trip() {
        let g = small_grid();
        let cells = run_sweep(&g, &SweepOptions { workers: 2, ..Default::default() }).unwrap();
        assert_eq!(cells.len(), 4);
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &cells).unwrap();
        let rows = read_results_csv(&buf[..]).unwrap();
        assert_eq!(rows.len(), 4);
        for (r, c) in rows.iter().zip(&cells) {
            assert_eq!(r, &ResultRow::from(c));
            if let (Some(dn), Some(f), Some(t)) = (r.delta_n, r.avg_max_fidelity, r.theta) {
                assert!((t - dn * f).abs() <= 1e-12 * t.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn failed_cells_are_recorded() {
        let mut g = small_grid();
        g.run.sample_dt = 1000.0;
        let c = run_cell(&g, 0);
        assert!(c.classification.is_none());
        assert!(c.error.is_some());
        assert_eq!(ResultRow::from(&c).label, "failed");
    }

    #[test]
    fn diff_summary_lists_changed_fields() {
        let a = serde_json::json!({"axes": {"kerr": {"count": 2}}, "x": 1});
        let b = serde_json::json!({"axes": {"kerr": {"count": 3}}, "x": 1});
        let mut out = Vec::new();
        diff_paths(&a, &b, "", &mut out);
        assert_eq!(out, vec!["axes.kerr.count: 2 -> 3".to_string()]);
    }
}
