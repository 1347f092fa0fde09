//! Dormand-Prince 5(4) integrator for complex ODE systems with PI step-size
//! control and fourth-order dense output.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order system `dy/dt = f(t, y)` over complex components.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub tolerances: Tolerances,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: u64,
    /// Amplitudes above this are treated as a blow-up.
    pub blow_up: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            h_init: None,
            h_max: None,
            max_steps: 50_000_000,
            blow_up: 1e12,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerances(tolerances: Tolerances) -> Self {
        Self { tolerances, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evaluations: u64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
// step ratio h_new/h is kept within [FAC_MIN, FAC_MAX]
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

fn error_norm(err: &[C64], y: &[C64], y_new: &[C64], tol: Tolerances) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
            let r = e.norm() / sc;
            r * r
        })
        .sum();
    (s / n).sqrt()
}

fn max_amplitude(y: &[C64]) -> f64 {
    y.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn initial_step<S: OdeSystem>(sys: &mut S, t: f64, y: &[C64], f0: &[C64], tol: Tolerances, span: f64) -> f64 {
    let n = y.len();
    let zero = vec![C64::new(0.0, 0.0); n];
    let d0 = error_norm(y, &zero, y, tol);
    let d1 = error_norm(f0, &zero, y, tol);
    let h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<C64> = y.iter().zip(f0).map(|(a, f)| a + f * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); n];
    sys.rhs(t + h0, &y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = error_norm(&diff, &zero, y, tol) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

/// Integrate from `t0` to `t_end`, invoking `on_sample` at every time in
/// `samples` (ascending, within `[t0, t_end]`) with the dense-output state.
pub fn integrate_dense<S, F>(
    sys: &mut S,
    y0: &[C64],
    t0: f64,
    t_end: f64,
    settings: &IntegratorSettings,
    samples: &[f64],
    mut on_sample: F,
) -> Result<StepStats>
where
    S: OdeSystem,
    F: FnMut(f64, &[C64]) -> Result<()>,
{
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y0.len() });
    }
    if !(t_end > t0) {
        return Err(Error::Integration { time: t0, max_amplitude: max_amplitude(y0), reason: "t_end must exceed t0".into() });
    }
    let tol = settings.tolerances;
    if !(tol.rtol > 0.0) || !(tol.atol > 0.0) {
        return Err(Error::Integration { time: t0, max_amplitude: 0.0, reason: "tolerances must be positive".into() });
    }
    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut y_tmp = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut err = vec![zero; n];
    let mut cont: Vec<Vec<C64>> = (0..5).map(|_| vec![zero; n]).collect();
    let mut interp = vec![zero; n];
    let mut stats = StepStats::default();

    let mut next_sample = 0usize;
    while next_sample < samples.len() && samples[next_sample] <= t0 {
        on_sample(samples[next_sample], &y)?;
        next_sample += 1;
    }

    let mut t = t0;
    sys.rhs(t, &y, &mut k[0]);
    stats.rhs_evaluations += 1;
    let span = t_end - t0;
    let h_max = settings.h_max.unwrap_or(span).min(span);
    let mut h = settings.h_init.unwrap_or_else(|| {
        stats.rhs_evaluations += 1;
        initial_step(sys, t, &y, &k[0], tol, span)
    });
    h = h.min(h_max);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= settings.max_steps {
            return Err(Error::Integration { time: t, max_amplitude: max_amplitude(&y), reason: "step budget exhausted".into() });
        }
        let h_min = 1e-13 * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::Integration {
                time: t,
                max_amplitude: max_amplitude(&y),
                reason: format!("step size underflow (h = {h:e})"),
            });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        for i in 0..n {
            y_tmp[i] = y[i] + k[0][i] * (h * A21);
        }
        sys.rhs(t + C2 * h, &y_tmp, &mut k[1]);
        for i in 0..n {
            y_tmp[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
        }
        sys.rhs(t + C3 * h, &y_tmp, &mut k[2]);
        for i in 0..n {
            y_tmp[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
        }
        sys.rhs(t + C4 * h, &y_tmp, &mut k[3]);
        for i in 0..n {
            y_tmp[i] = y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
        }
        sys.rhs(t + C5 * h, &y_tmp, &mut k[4]);
        for i in 0..n {
            y_tmp[i] = y[i] + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65) * h;
        }
        sys.rhs(t + h, &y_tmp, &mut k[5]);
        for i in 0..n {
            y_new[i] = y[i] + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76) * h;
        }
        sys.rhs(t + h, &y_new, &mut k[6]);
        stats.rhs_evaluations += 6;
        for i in 0..n {
            err[i] = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
        }
        let mut e = error_norm(&err, &y, &y_new, tol);
        if !e.is_finite() {
            e = f64::INFINITY;
        }

        let fac11 = if e.is_finite() { e.powf(0.2 - BETA * 0.75) } else { f64::INFINITY };
        if e <= 1.0 {
            let amp = max_amplitude(&y_new);
            if amp > settings.blow_up {
                return Err(Error::Integration { time: t + h, max_amplitude: amp, reason: "amplitude blow-up".into() });
            }
            // dense output coefficients
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = k[0][i] * h - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - k[6][i] * h - bspl;
                cont[4][i] = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5 + k[5][i] * D6 + k[6][i] * D7) * h;
            }
            let t_new = if last { t_end } else { t + h };
            while next_sample < samples.len() && samples[next_sample] <= t_new {
                let ts = samples[next_sample];
                let s = ((ts - t) / h).clamp(0.0, 1.0);
                let s1 = 1.0 - s;
                for i in 0..n {
                    interp[i] = cont[0][i] + (cont[1][i] + (cont[2][i] + (cont[3][i] + cont[4][i] * s1) * s) * s1) * s;
                }
                on_sample(ts, &interp)?;
                next_sample += 1;
            }
            stats.accepted += 1;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            t = t_new;
            if last {
                break;
            }
            let mut fac = fac11 / fac_old.powf(BETA);
            fac_old = e.max(1e-4);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            h = h_new.min(h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let shrink = if fac11.is_finite() { (fac11 / SAFETY).min(1.0 / FAC_MIN) } else { 1.0 / FAC_MIN };
            h /= shrink.max(1.0);
            if !e.is_finite() {
                h *= 0.1;
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotor {
        omega: f64,
        gamma: f64,
    }

    impl OdeSystem for Rotor {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(-self.gamma, -self.omega) * y[0];
        }
    }

    struct Forced;

    impl OdeSystem for Forced {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = C64::new(t.cos(), 0.0);
            dy[1] = -y[1] * y[1];
        }
    }

    #[test]
    fn exponential_rotation_is_accurate() {
        let mut sys = Rotor { omega: 2.0, gamma: 0.1 };
        let samples: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let mut worst = 0.0_f64;
        let settings = IntegratorSettings::with_tolerances(Tolerances { rtol: 1e-10, atol: 1e-12 });
        integrate_dense(&mut sys, &[C64::new(1.0, 0.0)], 0.0, 10.0, &settings, &samples, |t, y| {
            let exact = (C64::new(-0.1, -2.0) * t).exp();
            worst = worst.max((y[0] - exact).norm());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn dense_output_between_steps() {
        let mut sys = Forced;
        let samples: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.005).collect();
        let mut worst = 0.0_f64;
        let settings = IntegratorSettings::with_tolerances(Tolerances { rtol: 1e-9, atol: 1e-12 });
        let stats = integrate_dense(&mut sys, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 0.0, 5.0, &settings, &samples, |t, y| {
            worst = worst.max((y[0].re - t.sin()).abs());
            worst = worst.max((y[1].re - 1.0 / (1.0 + t)).abs());
            Ok(())
        })
        .unwrap();
        assert!(worst < 1e-7, "{worst}");
        // dense output means far fewer steps than samples
        assert!(stats.accepted < 500, "{stats:?}");
    }

    #[test]
    fn tolerance_controls_error() {
        let errs: Vec<f64> = [1e-5, 1e-8, 1e-11]
            .iter()
            .map(|&rtol| {
                let mut sys = Rotor { omega: 3.0, gamma: 0.0 };
                let mut out = C64::new(0.0, 0.0);
                let settings = IntegratorSettings::with_tolerances(Tolerances { rtol, atol: rtol * 1e-2 });
                integrate_dense(&mut sys, &[C64::new(1.0, 0.0)], 0.0, 20.0, &settings, &[20.0], |_, y| {
                    out = y[0];
                    Ok(())
                })
                .unwrap();
                (out - (C64::new(0.0, -60.0)).exp()).norm()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    struct Explode;

    impl OdeSystem for Explode {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) {
            dy[0] = y[0] * y[0];
        }
    }

    #[test]
    fn finite_time_blow_up_is_diagnosed() {
        let mut sys = Explode;
        let res = integrate_dense(&mut sys, &[C64::new(1.0, 0.0)], 0.0, 2.0, &IntegratorSettings::default(), &[], |_, _| Ok(()));
        match res {
            Err(Error::Integration { time, .. }) => assert!((time - 1.0).abs() < 1e-3, "{time}"),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }

    #[test]
    fn initial_sample_is_initial_state() {
        let mut sys = Rotor { omega: 1.0, gamma: 0.0 };
        let mut first = None;
        integrate_dense(&mut sys, &[C64::new(0.5, 0.5)], 0.0, 1.0, &IntegratorSettings::default(), &[0.0], |_, y| {
            first = Some(y[0]);
            Ok(())
        })
        .unwrap();
        assert_eq!(first, Some(C64::new(0.5, 0.5)));
    }
}
