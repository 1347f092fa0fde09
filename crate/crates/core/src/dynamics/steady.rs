use serde::{Deserialize, Serialize};

use super::trajectory::{Sample, Trajectory};
use crate::error::{Error, Result};
use crate::model::LatticeParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyCriteria {
    /// Length of the test window.
    pub window: f64,
    /// Bloch period `2 pi / dw`; the window must cover at least two.
    pub bloch_period: f64,
    /// Relative peak-to-peak tolerance `eps_ss`.
    pub tolerance: f64,
}

impl SteadyCriteria {
    pub const DEFAULT_TOLERANCE: f64 = 1e-3;

    /// Two Bloch periods, `eps_ss = 1e-3`.
    pub fn for_params(params: &LatticeParams) -> Self {
        let t = params.bloch_period();
        Self { window: 2.0 * t, bloch_period: t, tolerance: Self::DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SteadyState {
    Reached { time: f64 },
    NotReached,
}

impl SteadyState {
    pub fn is_reached(&self) -> bool {
        matches!(self, Self::Reached { .. })
    }
}

fn window_is_flat(window: &[Sample], tol: f64) -> bool {
    let avg_total = window.iter().map(|s| s.total).sum::<f64>() / window.len() as f64;
    if avg_total <= 0.0 {
        // an empty lattice is trivially stationary
        return window.iter().all(|s| s.total == 0.0);
    }
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.total), hi.max(s.total)));
    if hi - lo >= tol * avg_total {
        return false;
    }
    let sites = window[0].occupations.len();
    let floor = 1e-6 * avg_total;
    (0..sites).all(|j| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for s in window {
            let v = s.occupations[j];
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let avg = sum / window.len() as f64;
        hi - lo < tol * avg.max(floor)
    })
}

/// Earliest window start from which the total and every site occupation vary
/// by less than `tolerance` relative to their window average.
pub fn detect_steady_state(traj: &Trajectory, criteria: &SteadyCriteria) -> Result<SteadyState> {
    if criteria.window < 2.0 * criteria.bloch_period * (1.0 - 1e-12) {
        return Err(Error::WindowTooShort(format!(
            "steady-state window {} shorter than two Bloch periods ({})",
            criteria.window,
            2.0 * criteria.bloch_period
        )));
    }
    let samples = &traj.samples;
    let Some(last) = samples.last() else {
        return Err(Error::WindowTooShort("empty trajectory".into()));
    };
    if last.time - samples[0].time < criteria.window {
        return Err(Error::WindowTooShort(format!(
            "trajectory spans {} < window {}",
            last.time - samples[0].time,
            criteria.window
        )));
    }
    let mut end = 0usize;
    for start in 0..samples.len() {
        let t0 = samples[start].time;
        while end < samples.len() && samples[end].time < t0 + criteria.window {
            end += 1;
        }
        if end >= samples.len() {
            break;
        }
        if window_is_flat(&samples[start..=end], criteria.tolerance) {
            return Ok(SteadyState::Reached { time: t0 });
        }
    }
    Ok(SteadyState::NotReached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{IntegrationDiagnostics, Method};

    fn traj(f: impl Fn(f64) -> f64, t_end: f64) -> Trajectory {
        let samples = (0..=(t_end as usize * 2))
            .map(|i| {
                let t = i as f64 * 0.5;
                let n = f(t);
                Sample { time: t, occupations: vec![0.25 * n, 0.5 * n, 0.25 * n], total: n, alpha: vec![] }
            })
            .collect();
        Trajectory { method: Method::MeanField, sites: 3, samples, snapshots: vec![], final_state: None, diagnostics: IntegrationDiagnostics::default() }
    }

    fn criteria() -> SteadyCriteria {
        SteadyCriteria { window: 25.2, bloch_period: 12.566, tolerance: 1e-3 }
    }

    #[test]
    fn constant_is_steady_from_start() {
        let t = traj(|_| 3.0, 100.0);
        assert_eq!(detect_steady_state(&t, &criteria()).unwrap(), SteadyState::Reached { time: 0.0 });
    }

    #[test]
    fn oscillation_never_settles() {
        let t = traj(|t| 3.0 + (0.5 * t).sin(), 200.0);
        assert_eq!(detect_steady_state(&t, &criteria()).unwrap(), SteadyState::NotReached);
    }

    #[test]
    fn decaying_transient_settles_later() {
        let t = traj(|t| 3.0 + (-0.05 * t).exp() * (0.5 * t).sin(), 300.0);
        match detect_steady_state(&t, &criteria()).unwrap() {
            SteadyState::Reached { time } => assert!(time > 50.0 && time < 200.0, "{time}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_windows_rejected() {
        let t = traj(|_| 1.0, 100.0);
        let mut c = criteria();
        c.window = 10.0;
        assert!(detect_steady_state(&t, &c).is_err());
        let short = traj(|_| 1.0, 10.0);
        assert!(detect_steady_state(&short, &criteria()).is_err());
    }
}
