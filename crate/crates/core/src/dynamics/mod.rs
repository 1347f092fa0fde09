//! Open-system time evolution: mean-field and second-order cumulant equations,
//! adaptive integration and steady-state detection.

pub mod cumulant;
pub mod integrator;
pub mod meanfield;
pub mod steady;
pub mod trajectory;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use cumulant::{close_moment, cumulant_rhs, CumulantState, CumulantSystem, Op};
pub use integrator::{integrate_dense, IntegratorSettings, OdeSystem, StepStats, Tolerances};
pub use meanfield::{mean_field_rhs, MeanFieldState, MeanFieldSystem};
pub use steady::{detect_steady_state, SteadyCriteria, SteadyState};
pub use trajectory::{IntegrationDiagnostics, Sample, StateSnapshot, Trajectory};

use crate::error::{Error, Result};
use crate::model::LatticeParams;

/// Order of the cumulant expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Method {
    /// First order: coherent amplitudes only.
    #[default]
    #[serde(rename = "meanfield")]
    MeanField,
    /// Second order: amplitudes plus normal and anomalous correlations.
    #[serde(rename = "cumulant2")]
    Cumulant2,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meanfield" => Ok(Self::MeanField),
            "cumulant2" => Ok(Self::Cumulant2),
            other => Err(Error::Config(format!("unknown method '{other}' (expected meanfield or cumulant2)"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MeanField => "meanfield",
            Self::Cumulant2 => "cumulant2",
        })
    }
}

/// Where a run starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// All moments zero.
    Vacuum,
    /// Coherent seeds with uniform random components in `[-amplitude, amplitude]`.
    Seeded { amplitude: f64, seed: u64 },
    /// Given coherent amplitudes (second moments start coherent for cumulant runs).
    Coherent(Vec<C64>),
    /// A full cumulant state (cumulant runs only).
    Cumulant(CumulantState),
}

/// Output grid of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub dt: f64,
    /// First time recorded.
    pub record_from: f64,
    /// Keep a full state snapshot every this many samples; 0 disables.
    pub snapshot_stride: usize,
}

impl Default for Sampler {
    fn default() -> Self {
        Self { dt: 0.5, record_from: 0.0, snapshot_stride: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    pub t_end: f64,
    pub integrator: IntegratorSettings,
    pub sampler: Sampler,
}

impl EvolveOptions {
    pub fn new(method: Method, t_end: f64) -> Self {
        Self { method, t_end, integrator: IntegratorSettings::default(), sampler: Sampler::default() }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.integrator.tolerances = tolerances;
        self
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }
}

/// Sites within this distance of an edge count towards boundary contamination.
pub const EDGE_SITES: usize = 3;
/// Fraction of the photon number near the edges above which a run is flagged.
pub const EDGE_FRACTION_LIMIT: f64 = 1e-3;

fn sample_grid(sampler: &Sampler, t_end: f64) -> Result<Vec<f64>> {
    if !(sampler.dt > 0.0) {
        return Err(Error::Config("sample dt must be positive".into()));
    }
    let first = (sampler.record_from.max(0.0) / sampler.dt).ceil() as u64;
    let last = (t_end / sampler.dt + 1e-9).floor() as u64;
    Ok((first..=last).map(|i| i as f64 * sampler.dt).filter(|&t| t <= t_end).collect())
}

fn edge_fraction(occupations: &[f64]) -> f64 {
    let total: f64 = occupations.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let n = occupations.len();
    let k = EDGE_SITES.min(n / 2);
    let edge: f64 = occupations[..k].iter().chain(&occupations[n - k..]).sum();
    edge / total
}

/// Integrate the selected equations of motion from `initial` to `opts.t_end`.
pub fn integrate(initial: &InitialCondition, params: &LatticeParams, opts: &EvolveOptions) -> Result<Trajectory> {
    params.validate()?;
    if !(opts.t_end > 0.0) {
        return Err(Error::Config("t_end must be positive".into()));
    }
    let tol = opts.integrator.tolerances;
    if !(tol.rtol > 0.0 && tol.atol > 0.0) {
        return Err(Error::Config("tolerances must be positive".into()));
    }
    let l = params.sites;
    let grid = sample_grid(&opts.sampler, opts.t_end)?;
    let stride = opts.sampler.snapshot_stride;
    let mut samples = Vec::with_capacity(grid.len());
    let mut snapshots = Vec::new();
    let mut clamped = 0u64;

    let coherent_start = |alpha: Vec<C64>| -> Result<Vec<C64>> {
        if alpha.len() != l {
            return Err(Error::LengthMismatch { expected: l, got: alpha.len() });
        }
        Ok(alpha)
    };

    let (steps, final_state) = match opts.method {
        Method::MeanField => {
            let y0 = match initial {
                InitialCondition::Vacuum => MeanFieldState::vacuum(l).alpha,
                InitialCondition::Seeded { amplitude, seed } => MeanFieldState::seeded(l, *amplitude, *seed).alpha,
                InitialCondition::Coherent(a) => coherent_start(a.clone())?,
                InitialCondition::Cumulant(_) => {
                    return Err(Error::Config("a cumulant initial state needs the cumulant2 method".into()))
                }
            };
            let mut sys = MeanFieldSystem::new(params);
            let mut count = 0usize;
            let mut last = None;
            let steps = integrate_dense(&mut sys, &y0, 0.0, opts.t_end, &opts.integrator, &grid, |t, y| {
                check_finite(t, y)?;
                let occ: Vec<f64> = y.iter().map(|a| a.norm_sqr()).collect();
                let total = occ.iter().sum();
                samples.push(Sample { time: t, occupations: occ, total, alpha: y.to_vec() });
                if stride > 0 && count.is_multiple_of(stride) {
                    snapshots.push(StateSnapshot::MeanField(MeanFieldState { alpha: y.to_vec(), time: t }));
                }
                count += 1;
                last = Some(StateSnapshot::MeanField(MeanFieldState { alpha: y.to_vec(), time: t }));
                Ok(())
            })?;
            (steps, last)
        }
        Method::Cumulant2 => {
            let start = match initial {
                InitialCondition::Vacuum => CumulantState::vacuum(l),
                InitialCondition::Seeded { amplitude, seed } => {
                    CumulantState::coherent(&MeanFieldState::seeded(l, *amplitude, *seed).alpha)
                }
                InitialCondition::Coherent(a) => CumulantState::coherent(&coherent_start(a.clone())?),
                InitialCondition::Cumulant(s) => {
                    if s.sites() != l {
                        return Err(Error::LengthMismatch { expected: l, got: s.sites() });
                    }
                    s.clone()
                }
            };
            let mut y0 = vec![C64::new(0.0, 0.0); CumulantState::packed_len(l)];
            start.pack(&mut y0);
            let mut sys = CumulantSystem::new(params);
            let mut count = 0usize;
            let mut last = None;
            let steps = integrate_dense(&mut sys, &y0, 0.0, opts.t_end, &opts.integrator, &grid, |t, y| {
                check_finite(t, y)?;
                let state = CumulantState::from_packed(l, y, t);
                let (occ, was_clamped) = crate::observables::cumulant_occupations(&state);
                if was_clamped {
                    clamped += 1;
                }
                let total = occ.iter().sum();
                samples.push(Sample { time: t, occupations: occ, total, alpha: state.alpha.clone() });
                if stride > 0 && count.is_multiple_of(stride) {
                    snapshots.push(StateSnapshot::Cumulant(state.clone()));
                }
                count += 1;
                last = Some(StateSnapshot::Cumulant(state));
                Ok(())
            })?;
            (steps, last)
        }
    };

    if clamped > 0 {
        log::warn!("{clamped} samples had negative occupations from the cumulant closure (clamped to 0)");
    }
    let edge = samples.last().map(|s| edge_fraction(&s.occupations)).unwrap_or(0.0);
    let contaminated = edge > EDGE_FRACTION_LIMIT;
    if contaminated {
        log::warn!("{:.3}% of the photon number sits within {EDGE_SITES} sites of the lattice edge", edge * 100.0);
    }
    Ok(Trajectory {
        method: opts.method,
        sites: l,
        samples,
        snapshots,
        final_state,
        diagnostics: IntegrationDiagnostics {
            steps,
            clamped_samples: clamped,
            edge_fraction: edge,
            boundary_contaminated: contaminated,
        },
    })
}

fn check_finite(t: f64, y: &[C64]) -> Result<()> {
    if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integration { time: t, max_amplitude: f64::NAN, reason: "non-finite state".into() })
    }
}
