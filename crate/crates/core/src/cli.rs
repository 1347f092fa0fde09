//! Command-line front end: `evolve`, `classify`, `ws`, `antires` and `sweep`.
//!
//! Exit status is 0 on success, 2 for usage errors and 1 for runtime failures.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::config::{self, Config, RunSettings};
use crate::dynamics::{integrate, Method, Sample, StateSnapshot, Trajectory};
use crate::error::{Error, Result};
use crate::model::PumpProfile;
use crate::observables::classify;
use crate::sweep::{self, digest_hex, Axis, SweepGrid, SweepOptions};
use crate::wannier_stark::{build_basis, find_anti_resonances, pump_projection, steady_state_occupation, ModeRange};

#[derive(Debug, Parser)]
#[command(name = "tcav", version, about = "Tilted Kerr-cavity lattice simulator", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the equations of motion and write a trajectory.
    Evolve(EvolveArgs),
    /// Label a trajectory as stationary, oscillatory or chaotic.
    Classify(ClassifyArgs),
    /// Wannier-Stark coefficients, steady-state profiles and anti-resonances.
    Ws(WsArgs),
    /// Tilts at which a Wannier-Stark mode decouples from a single-site pump.
    Antires(AntiresArgs),
    /// Scan the (chi, dw) plane in parallel.
    Sweep(SweepArgs),
}

/// Model and run overrides shared by every simulating subcommand. Flags take
/// precedence over `--config`, which takes precedence over built-in defaults.
#[derive(Debug, Args, Clone, Default)]
struct ModelArgs {
    /// TOML configuration file (see docs/config.md).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the configuration recorded in a run manifest.
    #[arg(long, conflicts_with = "config")]
    replay: Option<PathBuf>,
    /// Number of sites L (odd).
    #[arg(long)]
    sites: Option<usize>,
    /// Hopping J.
    #[arg(long)]
    hopping: Option<f64>,
    /// Tilt dw.
    #[arg(long = "deltaomega")]
    tilt: Option<f64>,
    /// Kerr interaction chi.
    #[arg(long = "chi")]
    kerr: Option<f64>,
    /// Loss rate kappa.
    #[arg(long = "kappa")]
    loss: Option<f64>,
    /// Pump amplitude on the central site; replaces the pump table.
    #[arg(long)]
    eta: Option<f64>,
    /// Pump reference site j0.
    #[arg(long)]
    j0: Option<f64>,
    /// meanfield or cumulant2.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// End time of the run.
    #[arg(long)]
    t_end: Option<f64>,
    /// Start of the averaging window.
    #[arg(long)]
    transient: Option<f64>,
    /// Relative integrator tolerance.
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute integrator tolerance.
    #[arg(long)]
    atol: Option<f64>,
    /// Spacing of recorded samples.
    #[arg(long)]
    sample_dt: Option<f64>,
    /// Keep a full state every this many samples (0 disables).
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Half-width of random initial coherent seeds (0 starts from vacuum).
    #[arg(long)]
    seed_amplitude: Option<f64>,
    /// RNG seed for the initial seeds.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Trajectory CSV written by `evolve`; without it the run is simulated inline.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Amplitude CSV written by `evolve`, enabling fidelity averages.
    #[arg(long)]
    amplitudes: Option<PathBuf>,
    /// Final state JSON written by `evolve`, enabling the condensate fraction.
    #[arg(long)]
    final_state: Option<PathBuf>,
    /// Write the JSON record here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeSelection {
    All,
    Interior,
}

#[derive(Debug, Args)]
struct WsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Print the coefficient matrix beta[n][j].
    #[arg(long, group = "what")]
    matrix: bool,
    /// Print steady-state occupations of each mode.
    #[arg(long, group = "what")]
    profile: bool,
    /// Print anti-resonance tilts for `--order` over `--range`.
    #[arg(long, group = "what")]
    antires: bool,
    /// Every lattice mode, or only those whose support fits inside the lattice.
    #[arg(long, value_enum, default_value = "all")]
    modes: ModeSelection,
    /// Bessel order for `--antires`.
    #[arg(long, default_value_t = 1)]
    order: i64,
    /// Tilt interval `lo:hi` for `--antires`.
    #[arg(long, default_value = "0.2:1.0", value_parser = parse_range)]
    range: (f64, f64),
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AntiresArgs {
    /// Bessel order |n| of the decoupling mode.
    #[arg(long, default_value_t = 1)]
    order: i64,
    /// Tilt interval `lo:hi`.
    #[arg(long, default_value = "0.2:1.0", value_parser = parse_range)]
    range: (f64, f64),
    /// Hopping J.
    #[arg(long, default_value_t = 1.0)]
    hopping: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Kerr axis `min:max:count`.
    #[arg(long = "chi-axis", value_parser = parse_axis)]
    kerr_axis: Option<Axis>,
    /// Tilt axis `min:max:count`.
    #[arg(long = "deltaomega-axis", value_parser = parse_axis)]
    tilt_axis: Option<Axis>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Checkpoint file, rewritten after every finished cell.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Continue from `--checkpoint`.
    #[arg(long, requires = "checkpoint")]
    resume: bool,
    /// Output directory for results.csv, manifest.json and failures.log.
    #[arg(long, short, default_value = "sweep-out")]
    out: PathBuf,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

fn parse_axis(s: &str) -> std::result::Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(Axis::point(v.trim().parse().map_err(|e| format!("{e}"))?)),
        [lo, hi, n] => Ok(Axis {
            min: lo.trim().parse().map_err(|e| format!("{e}"))?,
            max: hi.trim().parse().map_err(|e| format!("{e}"))?,
            count: n.trim().parse().map_err(|e| format!("{e}"))?,
        }),
        _ => Err("expected value or min:max:count".into()),
    }
}

/// Provenance of one CLI invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved configuration document.
    pub config: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    /// SHA-256 of every file written, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Recompute the digests of the listed files relative to `dir`; returns the mismatching names.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for (name, digest) in &self.outputs {
            if &digest_hex(&fs::read(dir.join(name))?) != digest {
                bad.push(name.clone());
            }
        }
        Ok(bad)
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn resolve(model: &ModelArgs) -> Result<Config> {
    let text = match (&model.config, &model.replay) {
        (Some(path), _) => fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(path)) => RunManifest::read(path).map_err(|e| Error::Config(format!("cannot read manifest {}: {e}", path.display())))?.config,
        (None, None) => String::new(),
    };
    let mut cfg = config::load_config(&text)?;
    let old_defaults = RunSettings::defaults_for(&cfg.params);
    let p = &mut cfg.params;
    let loss_changed = model.loss.is_some_and(|k| k != p.loss);
    if let Some(v) = model.sites {
        p.sites = v;
    }
    if let Some(v) = model.hopping {
        p.hopping = v;
    }
    if let Some(v) = model.tilt {
        p.tilt = v;
    }
    if let Some(v) = model.kerr {
        p.kerr = v;
    }
    if let Some(v) = model.loss {
        p.loss = v;
    }
    if let Some(v) = model.eta {
        p.pump = PumpProfile::single_site(0, v);
    }
    if let Some(v) = model.j0 {
        p.pump_center = v;
    }
    let r = &mut cfg.run;
    // run times left at their lifetime-based defaults follow a new kappa
    if loss_changed {
        let d = RunSettings::defaults_for(p);
        if r.t_end == old_defaults.t_end {
            r.t_end = d.t_end;
        }
        if r.transient == old_defaults.transient {
            r.transient = d.transient;
        }
    }
    if let Some(v) = model.method {
        r.method = v;
    }
    if let Some(v) = model.t_end {
        r.t_end = v;
    }
    if let Some(v) = model.transient {
        r.transient = v;
    }
    if let Some(v) = model.rtol {
        r.rtol = v;
    }
    if let Some(v) = model.atol {
        r.atol = v;
    }
    if let Some(v) = model.sample_dt {
        r.sample_dt = v;
    }
    if let Some(v) = model.snapshot_stride {
        r.snapshot_stride = v;
    }
    if let Some(v) = model.seed_amplitude {
        r.seed_amplitude = v;
    }
    if let Some(v) = model.seed {
        r.seed = v;
    }
    let mut v = cfg.params.violations();
    v.extend(cfg.run.violations());
    if !v.is_empty() {
        return Err(Error::InvalidParams(v));
    }
    if !cfg.params.pump_center_is_integer() {
        log::warn!("pump_center j0 = {} is not an integer; Wannier-Stark mode selection assumes integer j0", cfg.params.pump_center);
    }
    Ok(cfg)
}

/// Collects written files and their digests.
struct Outputs {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), digests: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        sweep::write_atomic(&self.dir.join(name), bytes)?;
        self.digests.insert(name.to_string(), digest_hex(bytes));
        Ok(())
    }

    fn finish(self, subcommand: &str, config: String, started: f64) -> Result<()> {
        let manifest = RunManifest {
            tool: "tcav".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config,
            started,
            finished: now(),
            outputs: self.digests,
        };
        sweep::write_atomic(&self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())
    }
}

/// Amplitude CSV: `time, re_j, im_j` for every site.
fn amplitudes_csv(traj: &Trajectory) -> Vec<u8> {
    use std::fmt::Write as _;
    let h = (traj.sites as i64 - 1) / 2;
    let mut s = String::from("time");
    for j in -h..=h {
        write!(s, ",re_{j},im_{j}").unwrap();
    }
    s.push('\n');
    for sample in &traj.samples {
        write!(s, "{}", sample.time).unwrap();
        for a in &sample.alpha {
            write!(s, ",{},{}", a.re, a.im).unwrap();
        }
        s.push('\n');
    }
    s.into_bytes()
}

fn read_amplitudes(path: &Path, samples: &mut [Sample]) -> Result<()> {
    let mut lines = BufReader::new(fs::File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| Error::Data("empty amplitude file".into()))??;
    let cols = header.split(',').count();
    if cols < 3 || cols % 2 == 0 {
        return Err(Error::Data(format!("unexpected amplitude header: {header}")));
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Data(format!("amplitudes: {e}")))?;
        if v.len() != cols {
            return Err(Error::Data(format!("amplitudes: expected {cols} columns, got {}", v.len())));
        }
        rows.push(v);
    }
    if rows.len() != samples.len() {
        return Err(Error::LengthMismatch { expected: samples.len(), got: rows.len() });
    }
    for (s, row) in samples.iter_mut().zip(rows) {
        if (row[0] - s.time).abs() > 1e-9 * s.time.abs().max(1.0) {
            return Err(Error::Data(format!("amplitude time {} does not match trajectory time {}", row[0], s.time)));
        }
        s.alpha = row[1..].chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    }
    Ok(())
}

fn cmd_evolve(args: &EvolveArgs) -> Result<()> {
    let started = now();
    let cfg = resolve(&args.model)?;
    let clock = Instant::now();
    let traj = integrate(&cfg.run.initial_condition(), &cfg.params, &cfg.run.evolve_options())?;
    log::info!(
        "{} samples, {} accepted / {} rejected steps in {:.2}s",
        traj.samples.len(),
        traj.diagnostics.steps.accepted,
        traj.diagnostics.steps.rejected,
        clock.elapsed().as_secs_f64()
    );
    let text = config::serialize(&cfg)?;
    let mut out = Outputs::new(&args.out)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    out.write("trajectory.csv", &csv)?;
    out.write("amplitudes.csv", &amplitudes_csv(&traj))?;
    if let Some(fs) = &traj.final_state {
        out.write("final_state.json", &serde_json::to_vec(fs)?)?;
    }
    if cfg.run.snapshot_stride > 0 {
        let mut snaps = Vec::new();
        traj.write_snapshots(&mut snaps)?;
        out.write("snapshots.json", &snaps)?;
    }
    out.write("config.toml", text.as_bytes())?;
    out.finish("evolve", text, started)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, bytes)?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let cfg = resolve(&args.model)?;
    let traj = match &args.trajectory {
        Some(path) => {
            let mut traj = Trajectory::read_csv(BufReader::new(fs::File::open(path)?), cfg.run.method)?;
            if traj.sites != cfg.params.sites {
                return Err(Error::LengthMismatch { expected: cfg.params.sites, got: traj.sites });
            }
            let sibling = |name: &str| path.parent().map(|d| d.join(name)).filter(|p| p.exists());
            if let Some(a) = args.amplitudes.clone().or_else(|| sibling("amplitudes.csv")) {
                read_amplitudes(&a, &mut traj.samples)?;
            }
            if let Some(f) = args.final_state.clone().or_else(|| sibling("final_state.json")) {
                traj.final_state = Some(serde_json::from_slice::<StateSnapshot>(&fs::read(f)?)?);
            }
            traj
        }
        None => integrate(&cfg.run.initial_condition(), &cfg.params, &cfg.run.evolve_options())?,
    };
    let basis = build_basis(&cfg.params, ModeRange::All)?;
    let result = classify(&traj, &basis, cfg.run.transient, &cfg.run.classifier)?;
    let mut json = serde_json::to_vec_pretty(&result)?;
    json.push(b'\n');
    emit(&args.out, &json)
}

fn cmd_ws(args: &WsArgs) -> Result<()> {
    use std::fmt::Write as _;
    let cfg = resolve(&args.model)?;
    let p = &cfg.params;
    let mut s = String::new();
    if args.antires {
        return antires_table(p.hopping, args.range, args.order, &args.out);
    }
    let range = match args.modes {
        ModeSelection::All => ModeRange::All,
        ModeSelection::Interior => ModeRange::Interior,
    };
    let basis = build_basis(p, range)?;
    if args.matrix {
        s.push('n');
        for j in p.site_indices() {
            write!(s, ",j_{j}").unwrap();
        }
        s.push('\n');
        for (row, &n) in basis.modes().iter().enumerate() {
            write!(s, "{n}").unwrap();
            for b in basis.row(row) {
                write!(s, ",{b}").unwrap();
            }
            s.push('\n');
        }
    } else {
        if !args.profile {
            log::info!("no output selected; printing the steady-state profile");
        }
        s.push_str("n,energy,pump_projection,occupation,contaminated\n");
        for (row, &n) in basis.modes().iter().enumerate() {
            let energy = p.tilt * (n as f64 - p.pump_center);
            let eta = pump_projection(p, n)?;
            let occ = steady_state_occupation(p, n)?;
            writeln!(s, "{n},{energy},{eta},{occ},{}", basis.is_contaminated(row)).unwrap();
        }
    }
    emit(&args.out, s.as_bytes())
}

fn antires_table(hopping: f64, (lo, hi): (f64, f64), order: i64, out: &Option<PathBuf>) -> Result<()> {
    use std::fmt::Write as _;
    let roots = find_anti_resonances(hopping, lo, hi, order)?;
    let mut s = String::from("order,delta_omega,gamma\n");
    for dw in roots {
        writeln!(s, "{order},{dw},{}", 2.0 * hopping / dw).unwrap();
    }
    emit(out, s.as_bytes())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = resolve(&args.model)?;
    let mut axes = cfg.sweep.clone().unwrap_or_default();
    if let Some(a) = args.kerr_axis {
        axes.kerr = a;
    }
    if let Some(a) = args.tilt_axis {
        axes.tilt = a;
    }
    let grid = SweepGrid::new(axes.clone(), cfg.params.clone(), cfg.run.clone())?;
    let text = config::serialize(&Config { sweep: Some(axes), ..cfg })?;
    let clock = Instant::now();
    let cells = sweep::run_sweep(
        &grid,
        &SweepOptions { workers: args.workers, checkpoint: args.checkpoint.clone(), resume: args.resume, max_new_cells: None },
    )?;
    let manifest = sweep::export(&args.out, &grid, &cells, &text, clock.elapsed().as_secs_f64())?;
    fs::write(args.out.join("config.toml"), &text)?;
    log::info!("{} cells, {} failed, regimes {:?}", manifest.cells, manifest.failures, manifest.regimes);
    Ok(())
}

/// Parse `argv` (including the program name) and run the selected subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Ws(a) => cmd_ws(a),
        Command::Antires(a) => antires_table(a.hopping, a.range, a.order, &a.out),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
