//! Stationary / oscillatory / chaotic labelling of a post-transient trajectory.

use serde::{Deserialize, Serialize};

use super::spectrum::{harmonic_concentration, periodogram};
use super::{avg_max_fidelity, delta_n, snapshot_condensate_fraction, theta};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::wannier_stark::WsBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Stationary,
    Oscillatory,
    Chaotic,
    Inconclusive,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Stationary => "stationary",
            Self::Oscillatory => "oscillatory",
            Self::Chaotic => "chaotic",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierSettings {
    /// `delta_n` below this is stationary.
    pub stationary_threshold: f64,
    /// Share of spectral power the harmonic comb must hold for an oscillatory label.
    pub concentration: f64,
    /// Minimum number of periods the window must contain; sets the lowest admissible peak bin.
    pub min_periods: usize,
    /// Half-width in bins of each comb tooth.
    pub harmonic_halfwidth: usize,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self { stationary_threshold: 0.01, concentration: 0.6, min_periods: 10, harmonic_halfwidth: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub label: Regime,
    pub delta_n: f64,
    /// `None` for trajectories without coherent amplitudes.
    pub avg_max_fidelity: Option<f64>,
    pub theta: Option<f64>,
    /// Dominant period of `N(t)` when oscillatory.
    pub period: Option<f64>,
    /// Share of `N(t)` power in the dominant harmonic comb.
    pub spectral_concentration: Option<f64>,
    /// Condensate fraction of the final state, if it was kept.
    #[serde(rename = "N0_over_N")]
    pub n0_over_n: Option<f64>,
}

/// Label the dynamics after `window_start`. The window must be uniformly sampled.
pub fn classify(traj: &Trajectory, basis: &WsBasis, window_start: f64, settings: &ClassifierSettings) -> Result<ClassificationResult> {
    let window = traj.window(window_start);
    if window.len() < 2 {
        return Err(Error::WindowTooShort(format!("fewer than two samples after t = {window_start}")));
    }
    let dt = Trajectory::uniform_spacing(window).ok_or_else(|| Error::Data("classification window is not uniformly sampled".into()))?;
    let totals: Vec<f64> = window.iter().map(|s| s.total).collect();
    let dn = delta_n(&totals)?;
    let fid = if window.iter().all(|s| !s.alpha.is_empty()) { Some(avg_max_fidelity(traj, basis, window_start)?) } else { None };
    let n0 = traj.final_state.as_ref().map(snapshot_condensate_fraction).transpose()?;

    let mut result = ClassificationResult {
        label: Regime::Inconclusive,
        delta_n: dn,
        avg_max_fidelity: fid,
        theta: fid.map(|f| theta(dn, f)),
        period: None,
        spectral_concentration: None,
        n0_over_n: n0,
    };
    if dn < settings.stationary_threshold {
        result.label = Regime::Stationary;
        return Ok(result);
    }
    let power = periodogram(&totals);
    let Some(peak) = harmonic_concentration(&power, settings.min_periods, settings.harmonic_halfwidth) else {
        return Ok(result);
    };
    result.spectral_concentration = Some(peak.concentration);
    if peak.concentration > settings.concentration {
        result.label = Regime::Oscillatory;
        result.period = Some(totals.len() as f64 * dt / peak.refined_bin);
    } else {
        result.label = Regime::Chaotic;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{IntegrationDiagnostics, Method, Sample};
    use crate::model::LatticeParams;
    use crate::wannier_stark::{build_basis, ModeRange};

    fn traj(f: impl Fn(f64) -> f64) -> Trajectory {
        let samples = (0..2400)
            .map(|i| {
                let t = i as f64 * 0.5;
                let n = f(t);
                Sample { time: t, occupations: vec![n], total: n, alpha: vec![] }
            })
            .collect();
        Trajectory { method: Method::MeanField, sites: 1, samples, snapshots: vec![], final_state: None, diagnostics: IntegrationDiagnostics::default() }
    }

    fn basis() -> WsBasis {
        build_basis(&LatticeParams::canonical(), ModeRange::All).unwrap()
    }

    #[test]
    fn flat_series_is_stationary() {
        let r = classify(&traj(|t| 30.0 + 0.01 * (t * 0.3).sin()), &basis(), 600.0, &ClassifierSettings::default()).unwrap();
        assert_eq!(r.label, Regime::Stationary);
        assert!(r.avg_max_fidelity.is_none());
    }

    #[test]
    fn limit_cycle_is_oscillatory_with_period() {
        let w = 2.0 * std::f64::consts::PI / 20.69;
        let r = classify(&traj(|t| 30.0 + 8.0 * (w * t).sin() + 2.0 * (2.0 * w * t).cos()), &basis(), 600.0, &ClassifierSettings::default()).unwrap();
        assert_eq!(r.label, Regime::Oscillatory);
        assert!((r.period.unwrap() - 20.69).abs() < 0.2, "{:?}", r.period);
    }

    #[test]
    fn incommensurate_mixture_is_chaotic() {
        let r = classify(
            &traj(|t| 30.0 + (0.31 * t).sin() + (0.523 * t).sin() + (0.871 * t).sin() + (1.37 * t).sin() + (2.03 * t).sin() + (2.71 * t).sin()),
            &basis(),
            600.0,
            &ClassifierSettings::default(),
        )
        .unwrap();
        assert_eq!(r.label, Regime::Chaotic, "{r:?}");
    }

    #[test]
    fn drift_is_not_stationary() {
        let r = classify(&traj(|t| 30.0 + 0.1 * t), &basis(), 600.0, &ClassifierSettings::default()).unwrap();
        assert_ne!(r.label, Regime::Stationary);
        assert!(classify(&traj(|_| 1.0), &basis(), 5000.0, &ClassifierSettings::default()).is_err());
    }
}
