//! Observables computed from states and trajectories: occupations, WS fidelity,
//! relative photon-number variation, condensate fraction, periodicity.

pub mod classify;
pub mod eigen;
pub mod spectrum;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use classify::{classify, ClassificationResult, ClassifierSettings, Regime};
pub use eigen::{hermitian_eigen, hermitian_eigenvalues};
pub use spectrum::{harmonic_concentration, periodogram, HarmonicPeak};

use crate::dynamics::{CumulantState, MeanFieldState, Sample, StateSnapshot, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::wannier_stark::WsBasis;

/// Anything that can report per-site photon numbers.
pub trait Occupations {
    fn site_occupations(&self) -> Vec<f64>;

    fn total_photon_number(&self) -> f64 {
        self.site_occupations().iter().sum()
    }
}

impl Occupations for MeanFieldState {
    fn site_occupations(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a.norm_sqr()).collect()
    }
}

impl Occupations for CumulantState {
    fn site_occupations(&self) -> Vec<f64> {
        cumulant_occupations(self).0
    }
}

impl Occupations for StateSnapshot {
    fn site_occupations(&self) -> Vec<f64> {
        match self {
            Self::MeanField(s) => s.site_occupations(),
            Self::Cumulant(s) => s.site_occupations(),
        }
    }
}

/// `Re G_jj` per site, clamped at zero. The flag reports whether any clamp fired.
pub fn cumulant_occupations(state: &CumulantState) -> (Vec<f64>, bool) {
    let mut clamped = false;
    let occ = (0..state.sites())
        .map(|j| {
            let n = state.normal[(j, j)].re;
            if n < 0.0 {
                clamped = true;
                0.0
            } else {
                n
            }
        })
        .collect();
    (occ, clamped)
}

/// Normalised overlaps `P_n = |<beta_n|alpha>|^2 / |alpha|^2` for every mode of a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySpectrum {
    pub modes: Vec<i64>,
    pub values: Vec<f64>,
}

impl FidelitySpectrum {
    pub fn get(&self, n: i64) -> Option<f64> {
        self.modes.iter().position(|&m| m == n).map(|i| self.values[i])
    }

    /// Mode with the largest fidelity and its value.
    pub fn max(&self) -> (i64, f64) {
        self.modes
            .iter()
            .zip(&self.values)
            .fold((0, f64::NEG_INFINITY), |best, (&m, &v)| if v > best.1 { (m, v) } else { best })
    }
}

pub fn ws_fidelity(alpha: &[C64], basis: &WsBasis) -> Result<FidelitySpectrum> {
    let norm: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let proj = basis.to_ws(alpha)?;
    Ok(FidelitySpectrum { modes: basis.modes().to_vec(), values: proj.iter().map(|b| b.norm_sqr() / norm).collect() })
}

/// `(max - min) / mean` of a series.
pub fn delta_n(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::WindowTooShort("no samples in window".into()));
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    if mean == 0.0 || !mean.is_finite() {
        return Err(Error::ZeroAverage(mean));
    }
    let (lo, hi) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok((hi - lo) / mean)
}

fn require_amplitudes(window: &[Sample]) -> Result<()> {
    if window.iter().any(|s| s.alpha.is_empty()) {
        return Err(Error::Data("trajectory carries no coherent amplitudes".into()));
    }
    Ok(())
}

/// Time average of `max_n P_n(t)` over samples with `time >= window_start`.
pub fn avg_max_fidelity(traj: &Trajectory, basis: &WsBasis, window_start: f64) -> Result<f64> {
    let window = traj.window(window_start);
    if window.is_empty() {
        return Err(Error::WindowTooShort(format!("no samples after t = {window_start}")));
    }
    require_amplitudes(window)?;
    let mut sum = 0.0;
    for s in window {
        sum += ws_fidelity(&s.alpha, basis)?.max().1;
    }
    Ok(sum / window.len() as f64)
}

/// Time-averaged fidelity of each mode over the window.
pub fn mean_fidelity_spectrum(traj: &Trajectory, basis: &WsBasis, window_start: f64) -> Result<FidelitySpectrum> {
    let window = traj.window(window_start);
    if window.is_empty() {
        return Err(Error::WindowTooShort(format!("no samples after t = {window_start}")));
    }
    require_amplitudes(window)?;
    let mut acc = vec![0.0; basis.len()];
    for s in window {
        for (a, v) in acc.iter_mut().zip(ws_fidelity(&s.alpha, basis)?.values) {
            *a += v;
        }
    }
    let k = window.len() as f64;
    Ok(FidelitySpectrum { modes: basis.modes().to_vec(), values: acc.into_iter().map(|a| a / k).collect() })
}

/// Order parameter `Theta = delta_n * avg_max_fidelity`.
pub fn theta(delta_n: f64, avg_max_fidelity: f64) -> f64 {
    delta_n * avg_max_fidelity
}

/// Hermitian part of `<a_j^dag a_l>`.
pub fn single_particle_density_matrix(state: &CumulantState) -> CMatrix {
    let g = &state.normal;
    CMatrix::from_fn(g.dim(), |j, l| 0.5 * (g[(j, l)] + g[(l, j)].conj()))
}

/// Largest eigenvalue of the one-body density matrix over its trace.
pub fn condensate_fraction(rho: &CMatrix) -> Result<f64> {
    let tr = rho.trace().re;
    if tr <= 0.0 {
        return Err(Error::ZeroAverage(tr));
    }
    let vals = hermitian_eigenvalues(rho)?;
    Ok(vals[0] / tr)
}

/// Condensate fraction of a snapshot; a pure coherent state gives one.
pub fn snapshot_condensate_fraction(snapshot: &StateSnapshot) -> Result<f64> {
    match snapshot {
        StateSnapshot::MeanField(s) => {
            let a = &s.alpha;
            condensate_fraction(&CMatrix::from_fn(a.len(), |j, l| a[j].conj() * a[l]))
        }
        StateSnapshot::Cumulant(s) => condensate_fraction(&single_particle_density_matrix(s)),
    }
}

/// Period of the site-occupation pattern from the normalised autocorrelation,
/// searched over lags in `[min_lag, max_lag]` and refined by a parabola.
pub fn recurrence_period(samples: &[Sample], min_lag: f64, max_lag: f64) -> Result<f64> {
    let dt = Trajectory::uniform_spacing(samples).ok_or_else(|| Error::Data("samples are not uniformly spaced".into()))?;
    let k_lo = (min_lag / dt).floor().max(1.0) as usize;
    let k_hi = (max_lag / dt).ceil() as usize;
    if k_lo >= k_hi || k_hi + 1 >= samples.len() {
        return Err(Error::WindowTooShort(format!("need samples spanning more than {max_lag}")));
    }
    let corr = |k: usize| {
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        for i in 0..samples.len() - k {
            let a = &samples[i].occupations;
            let b = &samples[i + k].occupations;
            for (x, y) in a.iter().zip(b) {
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
        }
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb).sqrt()
        }
    };
    let values: Vec<f64> = (k_lo - 1..=k_hi + 1).map(corr).collect();
    let mut best = None;
    for i in 1..values.len() - 1 {
        if values[i] >= values[i - 1] && values[i] >= values[i + 1] {
            let better = best.is_none_or(|(_, v)| values[i] > v);
            if better {
                best = Some((i, values[i]));
            }
        }
    }
    let (i, _) = best.ok_or_else(|| Error::Data("no autocorrelation maximum in the lag range".into()))?;
    let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Ok(((k_lo - 1 + i) as f64 + shift) * dt)
}

/// How closely an orbit returns to itself after one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitReturn {
    /// Largest, over one period of start points, of the closest later approach.
    pub distance: f64,
    /// Largest pairwise distance between orbit points.
    pub diameter: f64,
}

impl OrbitReturn {
    pub fn relative(&self) -> f64 {
        if self.diameter > 0.0 {
            self.distance / self.diameter
        } else {
            0.0
        }
    }
}

/// Coordinates in which an orbit is traced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitSpace {
    /// `(Re alpha_j, Im alpha_j)` for every site.
    Amplitudes,
    /// Site occupations `n_j`.
    Occupations,
}

fn orbit_points(samples: &[Sample], space: OrbitSpace) -> Result<Vec<Vec<f64>>> {
    match space {
        OrbitSpace::Occupations => Ok(samples.iter().map(|s| s.occupations.clone()).collect()),
        OrbitSpace::Amplitudes => {
            require_amplitudes(samples)?;
            Ok(samples.iter().map(|s| s.alpha.iter().flat_map(|a| [a.re, a.im]).collect()).collect())
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn point_segment_dist2(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (mut ab2, mut ap_ab) = (0.0, 0.0);
    for ((&pi, &ai), &bi) in p.iter().zip(a).zip(b) {
        ab2 += (bi - ai) * (bi - ai);
        ap_ab += (pi - ai) * (bi - ai);
    }
    let s = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    p.iter().zip(a).zip(b).map(|((&pi, &ai), &bi)| (pi - ai - s * (bi - ai)).powi(2)).sum()
}

/// For every sample `t` in the first period, the closest approach of the
/// orbit at any later time `t' > t + T/2` in the window, measured to the
/// polyline through the samples so that the result does not depend on the
/// sampling phase. The worst such distance is reported with the orbit diameter.
/// Orbits whose true period is a multiple of `period` still close.
pub fn orbit_return(samples: &[Sample], period: f64, space: OrbitSpace) -> Result<OrbitReturn> {
    let dt = Trajectory::uniform_spacing(samples).ok_or_else(|| Error::Data("samples are not uniformly spaced".into()))?;
    let per = (period / dt).ceil() as usize;
    let half = (0.5 * period / dt).floor() as usize;
    if per < 2 || 2 * per + 2 >= samples.len() {
        return Err(Error::WindowTooShort(format!("need more than two periods of {period}")));
    }
    let pts = orbit_points(samples, space)?;
    let mut worst: f64 = 0.0;
    for i in 0..per {
        let d = (i + half + 1..pts.len() - 1).map(|k| point_segment_dist2(&pts[i], &pts[k], &pts[k + 1])).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    let stride = pts.len().div_ceil(600);
    let orbit: Vec<&Vec<f64>> = pts.iter().step_by(stride).collect();
    let mut diam: f64 = 0.0;
    for i in 0..orbit.len() {
        for j in (i + 1)..orbit.len() {
            diam = diam.max(dist2(orbit[i], orbit[j]));
        }
    }
    Ok(OrbitReturn { distance: worst.sqrt(), diameter: diam.sqrt() })
}
