//! Physical model of the tilted cavity array in the rotating frame of the pump.
//!
//! Sites are labelled by signed indices `j = -(L-1)/2 ..= (L-1)/2`; dense vectors
//! over the lattice are stored by *position* `p = j + (L-1)/2`. Energies are in
//! units of the hopping `J` (with `hbar = 1`), times in units of `1/J`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Coherent pump amplitudes `eta_j`, keyed by signed site index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PumpProfile {
    amplitudes: BTreeMap<i64, f64>,
}

impl PumpProfile {
    /// Pump a single cavity `site` with amplitude `eta`.
    pub fn single_site(site: i64, eta: f64) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(site, eta);
        Self { amplitudes }
    }

    /// An undriven lattice.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, f64)>) -> Self {
        Self { amplitudes: pairs.into_iter().collect() }
    }

    pub fn amplitude(&self, site: i64) -> f64 {
        self.amplitudes.get(&site).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.amplitudes.iter().map(|(&j, &eta)| (j, eta))
    }

    pub fn is_undriven(&self) -> bool {
        self.amplitudes.values().all(|&eta| eta == 0.0)
    }

    /// Multiply every amplitude by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|(&j, &eta)| (j, eta * factor)).collect() }
    }
}

/// All constants of the driven-dissipative tilted Bose-Hubbard model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    /// Number of cavities `L` (odd).
    pub sites: usize,
    /// Nearest-neighbour tunnelling `J`.
    pub hopping: f64,
    /// Frequency step per site `dw`.
    pub tilt: f64,
    /// Pump reference site `j0`; the detuning vanishes there.
    pub pump_center: f64,
    /// On-site Kerr interaction `chi`.
    pub kerr: f64,
    /// Amplitude decay rate `kappa`.
    pub loss: f64,
    pub pump: PumpProfile,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self::canonical()
    }
}

impl LatticeParams {
    pub const DEFAULT_SITES: usize = 41;
    pub const DEFAULT_HOPPING: f64 = 1.0;
    pub const DEFAULT_LOSS: f64 = 0.01;
    pub const DEFAULT_PUMP: f64 = 1.0;

    /// The weakly interacting reference point: `L = 41, J = 1, dw = 0.5,
    /// chi = 0.01, kappa = 0.01`, unit pump on the central cavity, `j0 = 0`.
    pub fn canonical() -> Self {
        Self {
            sites: Self::DEFAULT_SITES,
            hopping: Self::DEFAULT_HOPPING,
            tilt: 0.5,
            pump_center: 0.0,
            kerr: 0.01,
            loss: Self::DEFAULT_LOSS,
            pump: PumpProfile::single_site(0, Self::DEFAULT_PUMP),
        }
    }

    pub fn with_tilt(mut self, tilt: f64) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn with_kerr(mut self, kerr: f64) -> Self {
        self.kerr = kerr;
        self
    }

    pub fn with_loss(mut self, loss: f64) -> Self {
        self.loss = loss;
        self
    }

    pub fn with_hopping(mut self, hopping: f64) -> Self {
        self.hopping = hopping;
        self
    }

    pub fn with_sites(mut self, sites: usize) -> Self {
        self.sites = sites;
        self
    }

    pub fn with_pump(mut self, pump: PumpProfile) -> Self {
        self.pump = pump;
        self
    }

    pub fn with_pump_center(mut self, j0: f64) -> Self {
        self.pump_center = j0;
        self
    }

    /// `(L-1)/2`, the largest site index.
    pub fn half_width(&self) -> i64 {
        (self.sites as i64 - 1) / 2
    }

    /// Signed site indices in position order.
    pub fn site_indices(&self) -> impl Iterator<Item = i64> {
        let h = self.half_width();
        (-h..=h).take(self.sites)
    }

    /// Signed index of the site stored at `position`.
    pub fn site_at(&self, position: usize) -> i64 {
        position as i64 - self.half_width()
    }

    /// Storage position of site `j`.
    pub fn position(&self, j: i64) -> Result<usize> {
        let h = self.half_width();
        if j < -h || j > h {
            return Err(Error::SiteOutOfRange { index: j, min: -h, max: h });
        }
        Ok((j + h) as usize)
    }

    /// Cavity-pump detuning `dw * (j - j0)`.
    pub fn detuning(&self, j: i64) -> Result<f64> {
        self.position(j)?;
        Ok(self.tilt * (j as f64 - self.pump_center))
    }

    /// Detunings of every site in position order.
    pub fn detunings(&self) -> Vec<f64> {
        self.site_indices().map(|j| self.tilt * (j as f64 - self.pump_center)).collect()
    }

    /// Pump amplitudes in position order. Entries outside the lattice are ignored
    /// (validation reports them).
    pub fn pump_vector(&self) -> Vec<f64> {
        self.site_indices().map(|j| self.pump.amplitude(j)).collect()
    }

    /// Dimensionless Bessel argument `gamma = 2J / dw`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.hopping / self.tilt
    }

    /// Bloch period `2 pi / dw`.
    pub fn bloch_period(&self) -> f64 {
        std::f64::consts::TAU / self.tilt
    }

    /// Whether `j0` is an integer, which is what WS mode selection assumes.
    pub fn pump_center_is_integer(&self) -> bool {
        self.pump_center.fract() == 0.0
    }

    /// Collect every invariant violation. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.sites.is_multiple_of(2) {
            out.push(Violation::new("sites", "L must be odd"));
        }
        if self.sites < 3 {
            out.push(Violation::new("sites", "L must be at least 3"));
        }
        let finite = [
            ("hopping", self.hopping),
            ("tilt", self.tilt),
            ("pump_center", self.pump_center),
            ("kerr", self.kerr),
            ("loss", self.loss),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                out.push(Violation::new(field, "must be finite"));
            }
        }
        if self.hopping < 0.0 {
            out.push(Violation::new("hopping", "hopping must be non-negative"));
        }
        if !(self.tilt > 0.0) {
            out.push(Violation::new("tilt", "tilt must be positive"));
        }
        if self.kerr < 0.0 {
            out.push(Violation::new("kerr", "interaction must be non-negative"));
        }
        if self.loss < 0.0 {
            out.push(Violation::new("loss", "loss must be non-negative"));
        }
        let h = self.half_width();
        for (j, eta) in self.pump.iter() {
            if j < -h || j > h {
                out.push(Violation::new("pump", format!("pumped site {j} outside lattice [-{h}, {h}]")));
            }
            if !eta.is_finite() {
                out.push(Violation::new("pump", format!("amplitude at site {j} must be finite")));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(v))
        }
    }
}
