use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrator::OdeSystem;
use crate::model::LatticeParams;

/// Coherent amplitudes `alpha_j = <a_j>` in position order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub alpha: Vec<C64>,
    pub time: f64,
}

impl MeanFieldState {
    pub fn vacuum(sites: usize) -> Self {
        Self { alpha: vec![C64::new(0.0, 0.0); sites], time: 0.0 }
    }

    /// Vacuum plus independent complex seeds with components uniform in
    /// `[-amplitude, amplitude]`, reproducible from `seed`.
    pub fn seeded(sites: usize, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = (0..sites)
            .map(|_| C64::new(rng.gen_range(-amplitude..=amplitude), rng.gen_range(-amplitude..=amplitude)))
            .collect();
        Self { alpha, time: 0.0 }
    }
}

/// First-order cumulant (Gross-Pitaevskii type) equations of motion.
#[derive(Debug, Clone)]
pub struct MeanFieldSystem {
    detuning: Vec<f64>,
    pump: Vec<f64>,
    hopping: f64,
    kerr: f64,
    loss: f64,
}

impl MeanFieldSystem {
    pub fn new(params: &LatticeParams) -> Self {
        Self {
            detuning: params.detunings(),
            pump: params.pump_vector(),
            hopping: params.hopping,
            kerr: params.kerr,
            loss: params.loss,
        }
    }
}

impl OdeSystem for MeanFieldSystem {
    fn dim(&self) -> usize {
        self.detuning.len()
    }

    fn rhs(&mut self, _t: f64, alpha: &[C64], d: &mut [C64]) {
        let n = alpha.len();
        let minus_i = C64::new(0.0, -1.0);
        for j in 0..n {
            let left = if j > 0 { alpha[j - 1] } else { C64::new(0.0, 0.0) };
            let right = if j + 1 < n { alpha[j + 1] } else { C64::new(0.0, 0.0) };
            let a = alpha[j];
            let h = a * (self.detuning[j] + 2.0 * self.kerr * a.norm_sqr()) - (left + right) * self.hopping + self.pump[j];
            d[j] = minus_i * h - a * self.loss;
        }
    }
}

/// `d alpha_j / dt = -i [D_j a_j - J (a_{j+1} + a_{j-1}) + 2 chi |a_j|^2 a_j + eta_j] - kappa a_j`.
pub fn mean_field_rhs(state: &MeanFieldState, params: &LatticeParams) -> Vec<C64> {
    let mut sys = MeanFieldSystem::new(params);
    let mut d = vec![C64::new(0.0, 0.0); state.alpha.len()];
    sys.rhs(state.time, &state.alpha, &mut d);
    d
}
