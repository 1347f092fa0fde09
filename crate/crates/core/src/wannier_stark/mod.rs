//! Wannier-Stark (WS) eigenbasis of the tilted lattice and the exact
//! non-interacting dynamics it diagonalises.
//!
//! Mode `n` has amplitude `beta[n][j] = J_{j-n}(gamma)` on site `j`, with
//! `gamma = 2J/dw`, and energy `dw (n - j0)` in the pump frame. The basis is the
//! infinite-lattice one restricted to the `L` sites of the array; modes whose
//! Bessel tail reaches the edges are flagged as boundary-contaminated.

pub mod bessel;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LatticeParams;

pub use bessel::{bessel_j, bessel_j_range, bessel_j_sequence};

/// Minimum number of sites beyond `|gamma|` that a mode's support must keep inside the lattice.
pub const SUPPORT_MARGIN: f64 = 8.0;
/// Bessel weight allowed outside a mode's support, `sum_{|k| > K} J_k(gamma)^2`.
pub const SUPPORT_TAIL: f64 = 1e-10;

/// Which WS modes to retain.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeRange {
    /// One mode per lattice site, `n = -(L-1)/2 ..= (L-1)/2`.
    All,
    /// Only modes whose support (see [`support_reach`]) fits inside the lattice.
    Interior,
    /// An explicit list of mode indices.
    Explicit(Vec<i64>),
}

/// Truncated WS coefficient matrix, rows = modes, columns = sites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WsBasis {
    pub gamma: f64,
    sites: usize,
    modes: Vec<i64>,
    contaminated: Vec<bool>,
    coefficients: Vec<f64>,
}

impl WsBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Coefficients of the mode stored at row `row`, indexed by site position.
    pub fn row(&self, row: usize) -> &[f64] {
        &self.coefficients[row * self.sites..(row + 1) * self.sites]
    }

    /// Row of mode `n`, if retained.
    pub fn row_of(&self, n: i64) -> Option<usize> {
        self.modes.iter().position(|&m| m == n)
    }

    pub fn coefficient(&self, row: usize, position: usize) -> f64 {
        self.coefficients[row * self.sites + position]
    }

    /// Whether the mode at `row` leaks past the lattice edges.
    pub fn is_contaminated(&self, row: usize) -> bool {
        self.contaminated[row]
    }

    /// Largest `|sum_j beta_nj beta_mj - delta_nm|` over uncontaminated pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let rows: Vec<usize> = (0..self.len()).filter(|&r| !self.contaminated[r]).collect();
        let mut worst = 0.0_f64;
        for (a, &r) in rows.iter().enumerate() {
            for &s in &rows[a..] {
                let dot: f64 = self.row(r).iter().zip(self.row(s)).map(|(x, y)| x * y).sum();
                let target = if r == s { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Map site amplitudes to mode amplitudes: `b_n = sum_j beta_nj alpha_j`.
    pub fn to_ws(&self, site_amplitudes: &[C64]) -> Result<Vec<C64>> {
        if site_amplitudes.len() != self.sites {
            return Err(Error::LengthMismatch { expected: self.sites, got: site_amplitudes.len() });
        }
        Ok((0..self.len())
            .map(|r| self.row(r).iter().zip(site_amplitudes).map(|(&b, &a)| a * b).sum())
            .collect())
    }

    /// Inverse map `alpha_j = sum_n beta_nj b_n`.
    pub fn from_ws(&self, ws_amplitudes: &[C64]) -> Result<Vec<C64>> {
        if ws_amplitudes.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: ws_amplitudes.len() });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.sites];
        for (r, &b) in ws_amplitudes.iter().enumerate() {
            for (o, &c) in out.iter_mut().zip(self.row(r)) {
                *o += b * c;
            }
        }
        Ok(out)
    }

    /// Projections `eta~_n = sum_j beta_nj eta_j` of a pump vector onto each mode.
    pub fn project_real(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.sites {
            return Err(Error::LengthMismatch { expected: self.sites, got: values.len() });
        }
        Ok((0..self.len()).map(|r| self.row(r).iter().zip(values).map(|(b, v)| b * v).sum()).collect())
    }
}

/// Half-width of a mode's support: at least `|gamma| + 8`, widened until the
/// Bessel weight outside it drops below [`SUPPORT_TAIL`].
pub fn support_reach(gamma: f64) -> Result<f64> {
    let base = gamma.abs() + SUPPORT_MARGIN;
    let top = (2.0 * gamma.abs() + 4.0 * SUPPORT_MARGIN).ceil() as usize;
    let seq = bessel_j_sequence(top, gamma.abs())?;
    let mut tail = 0.0;
    let mut k = top;
    // walk inwards while the two-sided tail beyond k - 1 stays small
    while k as f64 > base {
        let next = tail + 2.0 * seq[k] * seq[k];
        if next >= SUPPORT_TAIL {
            break;
        }
        tail = next;
        k -= 1;
    }
    Ok(base.max(k as f64))
}

fn support_fits(n: i64, reach: f64, half_width: i64) -> bool {
    (n as f64 - reach) >= -(half_width as f64) && (n as f64 + reach) <= half_width as f64
}

/// Build `beta[n][j] = J_{j-n}(2J/dw)` over the lattice.
pub fn build_basis(params: &LatticeParams, range: ModeRange) -> Result<WsBasis> {
    if !(params.tilt > 0.0) || !params.tilt.is_finite() {
        return Err(Error::InvalidParams(vec![crate::error::Violation::new("tilt", "tilt must be positive")]));
    }
    let h = params.half_width();
    let gamma = params.gamma();
    let reach = support_reach(gamma)?;
    let modes: Vec<i64> = match range {
        ModeRange::All => (-h..=h).collect(),
        ModeRange::Interior => (-h..=h).filter(|&n| support_fits(n, reach, h)).collect(),
        ModeRange::Explicit(list) => list,
    };
    let sites = params.sites;
    // every needed order j - n lies within [-(2h + |n|max), ...]; one sequence covers all
    let max_mode = modes.iter().map(|n| n.abs()).max().unwrap_or(0);
    let max_order = (h + max_mode) as usize;
    let seq = bessel_j_sequence(max_order, gamma)?;
    let bessel = |k: i64| {
        let v = seq[k.unsigned_abs() as usize];
        if k < 0 && k % 2 != 0 {
            -v
        } else {
            v
        }
    };
    let mut coefficients = Vec::with_capacity(modes.len() * sites);
    for &n in &modes {
        for j in -h..=h {
            coefficients.push(bessel(j - n));
        }
    }
    let contaminated = modes.iter().map(|&n| !support_fits(n, reach, h)).collect();
    Ok(WsBasis { gamma, sites, modes, contaminated, coefficients })
}

/// Pump projection `eta~_n` of mode `n` from the Bessel coefficients directly.
pub fn pump_projection(params: &LatticeParams, n: i64) -> Result<f64> {
    let gamma = params.gamma();
    let mut acc = 0.0;
    for (j, eta) in params.pump.iter() {
        acc += bessel_j(j - n, gamma)? * eta;
    }
    Ok(acc)
}

/// Exact `chi = 0` evolution of WS mode `n` from amplitude `b0`:
/// `e^{-i t (D_n - i k)} b0 + (e^{-i t (D_n - i k)} - 1)/(D_n - i k) * eta~_n`.
pub fn analytic_mode_evolution(params: &LatticeParams, n: i64, b0: C64, t: f64) -> Result<C64> {
    params.validate()?;
    let eta = pump_projection(params, n)?;
    Ok(mode_evolution_with_projection(params, n, eta, b0, t))
}

pub(crate) fn mode_evolution_with_projection(params: &LatticeParams, n: i64, eta: f64, b0: C64, t: f64) -> C64 {
    let z = C64::new(params.tilt * (n as f64 - params.pump_center), -params.loss);
    let phase = (C64::new(0.0, -t) * z).exp();
    let drive = if z.norm() == 0.0 {
        // limit of (e^{-i t z} - 1)/z as z -> 0
        C64::new(0.0, -t)
    } else if (z * t).norm() < 1e-8 {
        // series to avoid cancellation: -i t (1 - i t z / 2)
        C64::new(0.0, -t) * (C64::new(1.0, 0.0) - C64::new(0.0, 0.5 * t) * z)
    } else {
        (phase - 1.0) / z
    };
    phase * b0 + drive * eta
}

/// Long-time occupation of WS mode `n`: `eta~_n^2 / (dw^2 (n - j0)^2 + kappa^2)`.
pub fn steady_state_occupation(params: &LatticeParams, n: i64) -> Result<f64> {
    params.validate()?;
    let eta = pump_projection(params, n)?;
    let detuning = params.tilt * (n as f64 - params.pump_center);
    let denom = detuning * detuning + params.loss * params.loss;
    if denom == 0.0 {
        if eta == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Divergent { mode: n });
    }
    Ok(eta * eta / denom)
}

/// Tilts `dw` in `[lo, hi]` where `J_order(2J/dw) = 0`, i.e. where the mode
/// `|n| = order` decouples from a single-site pump at `j = 0`.
///
/// The interval is scanned in 1000 uniform steps for sign changes, each of
/// which is refined by bisection.
pub fn find_anti_resonances(hopping: f64, lo: f64, hi: f64, order: i64) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::EmptyRange { lo, hi });
    }
    let f = |dw: f64| bessel_j(order, 2.0 * hopping / dw);
    let steps = 1000;
    let step = (hi - lo) / steps as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0)?;
    if f0 == 0.0 {
        roots.push(x0);
    }
    for i in 1..=steps {
        let x1 = if i == steps { hi } else { lo + i as f64 * step };
        let f1 = f(x1)?;
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            while b - a > 1e-13 {
                let m = 0.5 * (a + b);
                let fm = f(m)?;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PumpProfile;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_hopping_is_identity() {
        let p = LatticeParams::canonical().with_hopping(0.0);
        let b = build_basis(&p, ModeRange::All).unwrap();
        for r in 0..b.len() {
            for pos in 0..b.sites() {
                let want = if r == pos { 1.0 } else { 0.0 };
                assert_eq!(b.coefficient(r, pos), want);
            }
        }
        let mut e = vec![c(0.0, 0.0); 41];
        e[7] = c(1.0, 0.0);
        assert_eq!(b.to_ws(&e).unwrap(), e);
    }

    #[test]
    fn canonical_central_coefficient() {
        let p = LatticeParams::canonical();
        let b = build_basis(&p, ModeRange::All).unwrap();
        assert_eq!(b.gamma, 4.0);
        let r = b.row_of(0).unwrap();
        let pos = p.position(0).unwrap();
        assert!((b.coefficient(r, pos) - (-0.397_149_809_863_847_4)).abs() < 1e-13);
        let norm: f64 = b.row(r).iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-8);
    }

    #[test]
    fn interior_modes_are_orthonormal() {
        for &tilt in &[0.15, 0.3, 0.5, 1.0] {
            let p = LatticeParams::canonical().with_tilt(tilt).with_sites(61);
            let b = build_basis(&p, ModeRange::Interior).unwrap();
            assert!(!b.is_empty());
            assert!(b.orthonormality_defect() < 1e-8, "tilt {tilt}: {}", b.orthonormality_defect());
        }
    }

    #[test]
    fn edge_modes_flagged() {
        let p = LatticeParams::canonical();
        let b = build_basis(&p, ModeRange::All).unwrap();
        assert!(b.is_contaminated(0));
        assert!(!b.is_contaminated(b.row_of(0).unwrap()));
        let interior = build_basis(&p, ModeRange::Interior).unwrap();
        assert_eq!(interior.modes(), &(-8..=8).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn row_maps_to_unit_vector() {
        let p = LatticeParams::canonical();
        let b = build_basis(&p, ModeRange::All).unwrap();
        let r0 = b.row_of(2).unwrap();
        let alpha: Vec<C64> = b.row(r0).iter().map(|&x| c(x, 0.0)).collect();
        let ws = b.to_ws(&alpha).unwrap();
        for (r, v) in ws.iter().enumerate() {
            if b.is_contaminated(r) {
                continue;
            }
            let want = if r == r0 { 1.0 } else { 0.0 };
            assert!((v - want).norm() < 1e-8);
        }
    }

    #[test]
    fn round_trip_and_norm_on_interior_state() {
        let p = LatticeParams::canonical();
        let b = build_basis(&p, ModeRange::All).unwrap();
        let mut alpha = vec![c(0.0, 0.0); 41];
        for (k, j) in (-3..=3).enumerate() {
            alpha[p.position(j).unwrap()] = c(0.3 * k as f64 - 0.5, 0.1 * (k * k) as f64);
        }
        let ws = b.to_ws(&alpha).unwrap();
        let n_site: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
        let n_ws: f64 = ws.iter().map(|a| a.norm_sqr()).sum();
        assert!((n_site.sqrt() - n_ws.sqrt()).abs() < 1e-8);
        let back = b.from_ws(&ws).unwrap();
        for (x, y) in back.iter().zip(&alpha) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn length_mismatch() {
        let b = build_basis(&LatticeParams::canonical(), ModeRange::Interior).unwrap();
        assert!(matches!(b.to_ws(&[c(1.0, 0.0); 3]), Err(Error::LengthMismatch { expected: 41, got: 3 })));
        assert!(b.from_ws(&[c(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn analytic_evolution_limits() {
        let p = LatticeParams::canonical().with_kerr(0.0);
        let b0 = c(0.3, -0.2);
        assert_eq!(analytic_mode_evolution(&p, 1, b0, 0.0).unwrap(), b0);
        // undriven mode decays
        let undriven = p.clone().with_pump(PumpProfile::none());
        assert!(analytic_mode_evolution(&undriven, 0, b0, 5000.0).unwrap().norm() < 1e-20);
        // driven resonant mode saturates at |eta~| / kappa
        let late = analytic_mode_evolution(&p, 0, c(0.0, 0.0), 5000.0).unwrap();
        let want = 0.397_149_809_863_847_4 / 0.01;
        assert!((late.norm() - want).abs() < 1e-6 * want, "{}", late.norm());
        assert!((late.norm() - 39.714_98).abs() < 1e-3);
    }

    #[test]
    fn analytic_evolution_undamped_resonance_grows_linearly() {
        let p = LatticeParams::canonical().with_kerr(0.0).with_loss(0.0);
        let b = analytic_mode_evolution(&p, 0, c(0.0, 0.0), 10.0).unwrap();
        let eta = pump_projection(&p, 0).unwrap();
        assert!((b - c(0.0, -10.0 * eta)).norm() < 1e-12);
    }

    #[test]
    fn steady_state_examples() {
        let p = LatticeParams::canonical();
        let peak = steady_state_occupation(&p, 0).unwrap();
        let j0 = -0.397_149_809_863_847_4_f64;
        assert!((peak - j0 * j0 / 1e-4).abs() < 1e-6 * peak);
        assert!((peak - 1577.28).abs() < 0.01, "{peak}");
        // anti-resonant pump projection
        let ar = find_anti_resonances(1.0, 0.3, 0.6, 1).unwrap();
        let q = p.clone().with_tilt(ar[0]);
        assert!(steady_state_occupation(&q, 1).unwrap() < 1e-20);
        // Lorentzian suppression at n = 10
        let far = steady_state_occupation(&p, 10).unwrap();
        let eta10 = pump_projection(&p, 10).unwrap();
        let ratio = far / peak / (eta10 * eta10 / (j0 * j0));
        assert!((ratio - 1e-4 / (0.25 * 100.0 + 1e-4)).abs() < 1e-12);
        assert!((ratio - 4e-6).abs() < 1e-8);
    }

    #[test]
    fn steady_state_divergence() {
        let p = LatticeParams::canonical().with_loss(0.0);
        assert!(matches!(steady_state_occupation(&p, 0), Err(Error::Divergent { mode: 0 })));
    }

    #[test]
    fn anti_resonances_match_bessel_zeros() {
        let k1 = find_anti_resonances(1.0, 0.3, 0.6, 1).unwrap();
        assert!(k1.iter().any(|&d| (d - 0.522).abs() < 1e-3), "{k1:?}");
        let k0 = find_anti_resonances(1.0, 0.3, 0.6, 0).unwrap();
        assert!(k0.iter().any(|&d| (d - 0.362).abs() < 1e-3), "{k0:?}");
        // zeros of J_0 with 2 <= x <= 10, from an independent arbitrary-precision evaluation
        let k0 = find_anti_resonances(1.0, 0.2, 1.0, 0).unwrap();
        let zeros = [2.404_825_557_695_773, 5.520_078_110_286_311, 8.653_727_912_911_013];
        assert_eq!(k0.len(), 3);
        let mut gammas: Vec<f64> = k0.iter().map(|d| 2.0 / d).collect();
        gammas.sort_by(f64::total_cmp);
        for (g, z) in gammas.iter().zip(zeros) {
            assert!((g - z).abs() < 1e-6, "{g} vs {z}");
        }
    }

    #[test]
    fn anti_resonance_empty_range() {
        assert!(find_anti_resonances(1.0, 0.6, 0.3, 0).is_err());
        assert!(find_anti_resonances(1.0, 0.0, 0.3, 0).is_err());
    }
}
