//! Hann-windowed periodogram and harmonic-comb concentration of a real series.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// One-sided power spectrum of the mean-removed, Hann-windowed series.
/// Bin `k` corresponds to frequency `k / (n dt)`.
pub fn periodogram(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n < 2 {
        return vec![0.0; n.min(1)];
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<C64> = series
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            C64::new((x - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|z| z.norm_sqr()).collect()
}

/// Dominant peak and the share of non-DC power in its harmonic comb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPeak {
    pub bin: usize,
    /// Peak position refined by a parabola through the neighbouring bins.
    pub refined_bin: f64,
    /// Power within `halfwidth` bins of every multiple of `bin`, over all power above DC.
    pub concentration: f64,
}

/// Locate the strongest bin at or above `min_bin` and measure how much power
/// its harmonics hold. Returns `None` if no such bin exists or the spectrum is flat zero.
pub fn harmonic_concentration(power: &[f64], min_bin: usize, halfwidth: usize) -> Option<HarmonicPeak> {
    let min_bin = min_bin.max(1);
    if power.len() <= min_bin + 1 {
        return None;
    }
    let (bin, &peak) = power.iter().enumerate().skip(min_bin).max_by(|a, b| a.1.total_cmp(b.1))?;
    let total: f64 = power[1..].iter().sum();
    if !(total > 0.0) || peak == 0.0 {
        return None;
    }
    let mut in_comb = vec![false; power.len()];
    let mut m = bin;
    while m.saturating_sub(halfwidth) < power.len() {
        let lo = m.saturating_sub(halfwidth).max(1);
        let hi = (m + halfwidth).min(power.len() - 1);
        in_comb[lo..=hi].iter_mut().for_each(|c| *c = true);
        m += bin;
    }
    let comb: f64 = power.iter().zip(&in_comb).filter(|(_, &c)| c).map(|(p, _)| p).sum();
    let refined = if bin + 1 < power.len() {
        let (a, b, c) = (power[bin - 1], power[bin], power[bin + 1]);
        let denom = a - 2.0 * b + c;
        bin as f64 + if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 }
    } else {
        bin as f64
    };
    Some(HarmonicPeak { bin, refined_bin: refined, concentration: comb / total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_tone_lands_in_its_bin() {
        let n = 512;
        let p = periodogram(&(0..n).map(|i| (2.0 * std::f64::consts::PI * 32.0 * i as f64 / n as f64).sin()).collect::<Vec<_>>());
        assert_eq!(p.len(), n / 2 + 1);
        let peak = harmonic_concentration(&p, 10, 2).unwrap();
        assert_eq!(peak.bin, 32);
        assert!(peak.concentration > 0.999);
        assert!((peak.refined_bin - 32.0).abs() < 0.05);
    }

    #[test]
    fn harmonics_are_counted() {
        let n = 1024;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let ph = 2.0 * std::f64::consts::PI * 20.3 * i as f64 / n as f64;
                ph.sin() + 0.5 * (2.0 * ph).cos() + 0.2 * (3.0 * ph).sin()
            })
            .collect();
        let peak = harmonic_concentration(&periodogram(&x), 10, 2).unwrap();
        assert_eq!(peak.bin, 20);
        assert!(peak.concentration > 0.98, "{}", peak.concentration);
    }

    #[test]
    fn noise_is_spread_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..2048).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let peak = harmonic_concentration(&periodogram(&x), 10, 2).unwrap();
        assert!(peak.concentration < 0.6, "{}", peak.concentration);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(harmonic_concentration(&periodogram(&[1.0; 64]), 10, 2).is_none());
        assert!(harmonic_concentration(&[0.0; 5], 10, 2).is_none());
        assert_eq!(periodogram(&[3.0]), vec![0.0]);
    }
}
