//! TOML run configuration: `[lattice]`, `[pump]`, `[run]` and optional `[sweep]`.
//!
//! Every key is optional. Missing lattice keys take the canonical values, a
//! missing `[pump]` table pumps the central site with unit amplitude, and the
//! run length and transient default to `12/kappa` and `6/kappa`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{EvolveOptions, InitialCondition, IntegratorSettings, Method, Sampler, Tolerances};
use crate::error::{Error, Result, Violation};
use crate::model::{LatticeParams, PumpProfile};
use crate::observables::ClassifierSettings;
use crate::sweep::Axis;

/// Run length in units of the photon lifetime `1/kappa`.
pub const DEFAULT_RUN_LIFETIMES: f64 = 12.0;
/// Transient discarded before averaging, in units of `1/kappa`.
pub const DEFAULT_TRANSIENT_LIFETIMES: f64 = 6.0;

/// Everything besides the model constants that a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub method: Method,
    pub t_end: f64,
    /// Start of the averaging window.
    pub transient: f64,
    pub sample_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Half-width of the uniform random coherent seed; zero starts from vacuum.
    pub seed_amplitude: f64,
    pub seed: u64,
    pub snapshot_stride: usize,
    pub classifier: ClassifierSettings,
}

impl RunSettings {
    /// Defaults for a lattice with the given loss; a lossless lattice gets a fixed span of 1200.
    pub fn defaults_for(params: &LatticeParams) -> Self {
        let lifetime = if params.loss > 0.0 { 1.0 / params.loss } else { 100.0 };
        let tol = Tolerances::default();
        Self {
            method: Method::MeanField,
            t_end: DEFAULT_RUN_LIFETIMES * lifetime,
            transient: DEFAULT_TRANSIENT_LIFETIMES * lifetime,
            sample_dt: Sampler::default().dt,
            rtol: tol.rtol,
            atol: tol.atol,
            seed_amplitude: 0.0,
            seed: 0,
            snapshot_stride: 0,
            classifier: ClassifierSettings::default(),
        }
    }

    pub fn initial_condition(&self) -> InitialCondition {
        if self.seed_amplitude > 0.0 {
            InitialCondition::Seeded { amplitude: self.seed_amplitude, seed: self.seed }
        } else {
            InitialCondition::Vacuum
        }
    }

    pub fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            method: self.method,
            t_end: self.t_end,
            integrator: IntegratorSettings::with_tolerances(Tolerances { rtol: self.rtol, atol: self.atol }),
            sampler: Sampler { dt: self.sample_dt, record_from: 0.0, snapshot_stride: self.snapshot_stride },
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            out.push(Violation::new("run.t_end", "must be positive"));
        }
        if !(self.transient >= 0.0 && self.transient < self.t_end) {
            out.push(Violation::new("run.transient", "must lie in [0, t_end)"));
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            out.push(Violation::new("run.sample_dt", "must be positive"));
        }
        if !(self.rtol > 0.0) {
            out.push(Violation::new("run.rtol", "must be positive"));
        }
        if !(self.atol > 0.0) {
            out.push(Violation::new("run.atol", "must be positive"));
        }
        if !(self.seed_amplitude >= 0.0 && self.seed_amplitude.is_finite()) {
            out.push(Violation::new("run.seed_amplitude", "must be non-negative"));
        }
        let c = &self.classifier;
        if !(c.stationary_threshold > 0.0) {
            out.push(Violation::new("run.stationary_threshold", "must be positive"));
        }
        if !(c.concentration > 0.0 && c.concentration < 1.0) {
            out.push(Violation::new("run.concentration", "must lie in (0, 1)"));
        }
        if c.min_periods == 0 {
            out.push(Violation::new("run.min_periods", "must be at least 1"));
        }
        out
    }
}

/// Axes of a `(chi, dw)` scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kerr: Axis,
    pub tilt: Axis,
}

impl Default for GridSpec {
    /// 31 x 31 cells over `chi in [0, 0.15]`, `dw in [0.15, 0.6]`.
    fn default() -> Self {
        Self { kerr: Axis { min: 0.0, max: 0.15, count: 31 }, tilt: Axis { min: 0.15, max: 0.6, count: 31 } }
    }
}

/// A parsed configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: LatticeParams,
    pub run: RunSettings,
    pub sweep: Option<GridSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    sites: Option<usize>,
    hopping: Option<f64>,
    tilt: Option<f64>,
    kerr: Option<f64>,
    loss: Option<f64>,
    pump_center: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    method: Option<String>,
    t_end: Option<f64>,
    transient: Option<f64>,
    sample_dt: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    seed_amplitude: Option<f64>,
    seed: Option<u64>,
    snapshot_stride: Option<usize>,
    stationary_threshold: Option<f64>,
    concentration: Option<f64>,
    min_periods: Option<usize>,
    harmonic_halfwidth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    lattice: RawLattice,
    pump: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    run: RawRun,
    sweep: Option<GridSpec>,
}

/// Parse a configuration document, filling defaults and validating the result.
pub fn load_config(text: &str) -> Result<Config> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let base = LatticeParams::canonical();
    let l = raw.lattice;
    let pump = match raw.pump {
        None => PumpProfile::single_site(0, LatticeParams::DEFAULT_PUMP),
        Some(table) => {
            let mut pairs = Vec::with_capacity(table.len());
            for (key, eta) in table {
                let site = key
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Config(format!("pump: key '{key}' is not an integer site index")))?;
                pairs.push((site, eta));
            }
            PumpProfile::from_pairs(pairs)
        }
    };
    let params = LatticeParams {
        sites: l.sites.unwrap_or(base.sites),
        hopping: l.hopping.unwrap_or(base.hopping),
        tilt: l.tilt.unwrap_or(base.tilt),
        pump_center: l.pump_center.unwrap_or(base.pump_center),
        kerr: l.kerr.unwrap_or(base.kerr),
        loss: l.loss.unwrap_or(base.loss),
        pump,
    };

    let d = RunSettings::defaults_for(&params);
    let r = raw.run;
    let method = match r.method {
        Some(m) => m.parse::<Method>().map_err(|e| Error::Config(format!("run.method: {e}")))?,
        None => d.method,
    };
    let dc = d.classifier;
    let run = RunSettings {
        method,
        t_end: r.t_end.unwrap_or(d.t_end),
        transient: r.transient.unwrap_or(d.transient),
        sample_dt: r.sample_dt.unwrap_or(d.sample_dt),
        rtol: r.rtol.unwrap_or(d.rtol),
        atol: r.atol.unwrap_or(d.atol),
        seed_amplitude: r.seed_amplitude.unwrap_or(d.seed_amplitude),
        seed: r.seed.unwrap_or(d.seed),
        snapshot_stride: r.snapshot_stride.unwrap_or(d.snapshot_stride),
        classifier: ClassifierSettings {
            stationary_threshold: r.stationary_threshold.unwrap_or(dc.stationary_threshold),
            concentration: r.concentration.unwrap_or(dc.concentration),
            min_periods: r.min_periods.unwrap_or(dc.min_periods),
            harmonic_halfwidth: r.harmonic_halfwidth.unwrap_or(dc.harmonic_halfwidth),
        },
    };

    let mut violations = params.violations();
    violations.extend(run.violations());
    if let Some(grid) = &raw.sweep {
        violations.extend(grid.kerr.violations("sweep.kerr", false));
        violations.extend(grid.tilt.violations("sweep.tilt", true));
    }
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    Ok(Config { params, run, sweep: raw.sweep })
}

#[derive(Serialize)]
struct OutLattice {
    sites: usize,
    hopping: f64,
    tilt: f64,
    kerr: f64,
    loss: f64,
    pump_center: f64,
}

#[derive(Serialize)]
struct OutRun {
    method: String,
    t_end: f64,
    transient: f64,
    sample_dt: f64,
    rtol: f64,
    atol: f64,
    seed_amplitude: f64,
    seed: u64,
    snapshot_stride: usize,
    stationary_threshold: f64,
    concentration: f64,
    min_periods: usize,
    harmonic_halfwidth: usize,
}

#[derive(Serialize)]
struct OutConfig<'a> {
    lattice: OutLattice,
    pump: BTreeMap<String, f64>,
    run: OutRun,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<&'a GridSpec>,
}

/// Render a configuration that [`load_config`] reads back unchanged.
pub fn serialize(config: &Config) -> Result<String> {
    let p = &config.params;
    let r = &config.run;
    let out = OutConfig {
        lattice: OutLattice { sites: p.sites, hopping: p.hopping, tilt: p.tilt, kerr: p.kerr, loss: p.loss, pump_center: p.pump_center },
        pump: p.pump.iter().map(|(j, eta)| (j.to_string(), eta)).collect(),
        run: OutRun {
            method: r.method.to_string(),
            t_end: r.t_end,
            transient: r.transient,
            sample_dt: r.sample_dt,
            rtol: r.rtol,
            atol: r.atol,
            seed_amplitude: r.seed_amplitude,
            seed: r.seed,
            snapshot_stride: r.snapshot_stride,
            stationary_threshold: r.classifier.stationary_threshold,
            concentration: r.classifier.concentration,
            min_periods: r.classifier.min_periods,
            harmonic_halfwidth: r.classifier.harmonic_halfwidth,
        },
        sweep: config.sweep.as_ref(),
    };
    toml::to_string(&out).map_err(|e| Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = load_config("[lattice]\ntilt = 0.3\nkerr = 0.05\n").unwrap();
        assert_eq!(c.params.hopping, 1.0);
        assert_eq!(c.params.loss, 0.01);
        assert_eq!(c.params.sites, 41);
        assert_eq!(c.params.pump_center, 0.0);
        assert_eq!(c.params.pump, PumpProfile::single_site(0, 1.0));
        assert_eq!(c.params.tilt, 0.3);
        assert_eq!(c.params.kerr, 0.05);
        assert!((c.run.t_end - 1200.0).abs() < 1e-9);
        assert!((c.run.transient - 600.0).abs() < 1e-9);
        assert_eq!(c.run.method, Method::MeanField);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn two_site_pump_table() {
        let c = load_config("[pump]\n\"0\" = 1.0\n\"7\" = 1.0\n").unwrap();
        assert_eq!(c.params.pump, PumpProfile::from_pairs([(0, 1.0), (7, 1.0)]));
    }

    #[test]
    fn errors_name_the_field() {
        let e = load_config("[lattice]\ntilt = \"fast\"\n").unwrap_err().to_string();
        assert!(e.contains("tilt"), "{e}");
        let e = load_config("[lattice]\ntilte = 0.5\n").unwrap_err().to_string();
        assert!(e.contains("tilte"), "{e}");
        let e = load_config("[lattice]\nsites = 40\n").unwrap_err().to_string();
        assert!(e.contains("L must be odd"), "{e}");
        let e = load_config("[pump]\nleft = 1.0\n").unwrap_err().to_string();
        assert!(e.contains("left"), "{e}");
        let e = load_config("[run]\nmethod = \"exact\"\n").unwrap_err().to_string();
        assert!(e.contains("run.method"), "{e}");
        let e = load_config("[run]\ntransient = 5000.0\n").unwrap_err().to_string();
        assert!(e.contains("run.transient"), "{e}");
    }

    #[test]
    fn round_trip() {
        let text = r#"
[lattice]
sites = 31
hopping = 1.0
tilt = 0.362
kerr = 0.13
loss = 0.02
pump_center = 1.0

[pump]
"-3" = 0.5
"1" = 2.0

[run]
method = "cumulant2"
sample_dt = 0.25
seed_amplitude = 1e-6
seed = 42
min_periods = 12

[sweep]
kerr = { min = 0.0, max = 0.15, count = 4 }
tilt = { min = 0.2, max = 0.6, count = 3 }
"#;
        let c = load_config(text).unwrap();
        let again = load_config(&serialize(&c).unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(c.run.t_end, 600.0);
        assert_eq!(c.sweep.as_ref().unwrap().kerr.count, 4);
    }

    #[test]
    fn seed_selects_initial_condition() {
        let c = load_config("[run]\nseed_amplitude = 1e-6\nseed = 3\n").unwrap();
        assert_eq!(c.run.initial_condition(), InitialCondition::Seeded { amplitude: 1e-6, seed: 3 });
        assert_eq!(load_config("").unwrap().run.initial_condition(), InitialCondition::Vacuum);
    }
}
