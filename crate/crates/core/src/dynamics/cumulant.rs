//! Second-order cumulant expansion.
//!
//! The state holds `alpha_j = <a_j>`, `G_jk = <a_j^dag a_k>` and
//! `A_jk = <a_j a_k>`. Higher normal-ordered moments that appear in the
//! Heisenberg equations are closed by setting every joint cumulant of order
//! three and above to zero.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::integrator::OdeSystem;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::LatticeParams;

/// First and second moments of the cavity fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantState {
    pub alpha: Vec<C64>,
    /// `G_jk = <a_j^dag a_k>` (Hermitian).
    pub normal: CMatrix,
    /// `A_jk = <a_j a_k>` (symmetric).
    pub anomalous: CMatrix,
    pub time: f64,
}

impl CumulantState {
    pub fn vacuum(sites: usize) -> Self {
        Self {
            alpha: vec![C64::new(0.0, 0.0); sites],
            normal: CMatrix::zeros(sites),
            anomalous: CMatrix::zeros(sites),
            time: 0.0,
        }
    }

    /// Product coherent state: every cumulant beyond the first vanishes.
    pub fn coherent(alpha: &[C64]) -> Self {
        let n = alpha.len();
        Self {
            alpha: alpha.to_vec(),
            normal: CMatrix::from_fn(n, |j, k| alpha[j].conj() * alpha[k]),
            anomalous: CMatrix::from_fn(n, |j, k| alpha[j] * alpha[k]),
            time: 0.0,
        }
    }

    pub fn sites(&self) -> usize {
        self.alpha.len()
    }

    /// Number of packed complex unknowns for `sites` modes.
    pub fn packed_len(sites: usize) -> usize {
        sites + sites * (sites + 1)
    }

    /// `[alpha | upper(G) | upper(A)]`, upper triangles row by row.
    pub fn pack(&self, out: &mut [C64]) {
        let n = self.sites();
        out[..n].copy_from_slice(&self.alpha);
        let mut idx = n;
        for m in [&self.normal, &self.anomalous] {
            for j in 0..n {
                for k in j..n {
                    out[idx] = m[(j, k)];
                    idx += 1;
                }
            }
        }
    }

    /// Inverse of [`pack`](Self::pack), mirroring triangles by Hermiticity / symmetry.
    pub fn unpack_into(&mut self, y: &[C64]) {
        let n = self.sites();
        self.alpha.copy_from_slice(&y[..n]);
        let mut idx = n;
        for j in 0..n {
            for k in j..n {
                let v = y[idx];
                self.normal[(j, k)] = v;
                self.normal[(k, j)] = v.conj();
                idx += 1;
            }
        }
        for j in 0..n {
            for k in j..n {
                let v = y[idx];
                self.anomalous[(j, k)] = v;
                self.anomalous[(k, j)] = v;
                idx += 1;
            }
        }
    }

    pub fn from_packed(sites: usize, y: &[C64], time: f64) -> Self {
        let mut s = Self::vacuum(sites);
        s.unpack_into(y);
        s.time = time;
        s
    }
}

/// A single mode operator `a_site` or `a_site^dag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Op {
    pub site: usize,
    pub dagger: bool,
}

impl Op {
    pub const fn create(site: usize) -> Self {
        Self { site, dagger: true }
    }

    pub const fn annihilate(site: usize) -> Self {
        Self { site, dagger: false }
    }
}

fn mean(op: Op, s: &CumulantState) -> C64 {
    let a = s.alpha[op.site];
    if op.dagger {
        a.conj()
    } else {
        a
    }
}

/// Stored second moment of a normal-ordered pair `p q`.
fn pair(p: Op, q: Op, s: &CumulantState) -> C64 {
    match (p.dagger, q.dagger) {
        (true, true) => s.anomalous[(p.site, q.site)].conj(),
        (true, false) => s.normal[(p.site, q.site)],
        (false, false) => s.anomalous[(p.site, q.site)],
        (false, true) => unreachable!("pair of a normal-ordered product"),
    }
}

fn pair_cumulant(p: Op, q: Op, s: &CumulantState) -> C64 {
    pair(p, q, s) - mean(p, s) * mean(q, s)
}

/// Expectation of a normal-ordered product of up to four mode operators,
/// with all joint cumulants of order >= 3 set to zero.
pub fn close_moment(ops: &[Op], state: &CumulantState) -> Result<C64> {
    if ops.is_empty() || ops.len() > 4 {
        return Err(Error::UnsupportedMoment(format!("products of 1..=4 operators only, got {}", ops.len())));
    }
    if let Some(op) = ops.iter().find(|op| op.site >= state.sites()) {
        return Err(Error::UnsupportedMoment(format!("site {} outside {} modes", op.site, state.sites())));
    }
    if ops.windows(2).any(|w| !w[0].dagger && w[1].dagger) {
        return Err(Error::UnsupportedMoment("product is not normal ordered".into()));
    }
    Ok(close_unchecked(ops, state))
}

fn close_unchecked(ops: &[Op], s: &CumulantState) -> C64 {
    match *ops {
        [a] => mean(a, s),
        [a, b] => pair(a, b, s),
        [a, b, c] => {
            let (ma, mb, mc) = (mean(a, s), mean(b, s), mean(c, s));
            pair(a, b, s) * mc + pair(a, c, s) * mb + pair(b, c, s) * ma - ma * mb * mc * 2.0
        }
        [a, b, c, d] => {
            let (ma, mb, mc, md) = (mean(a, s), mean(b, s), mean(c, s), mean(d, s));
            let ab = pair_cumulant(a, b, s);
            let ac = pair_cumulant(a, c, s);
            let ad = pair_cumulant(a, d, s);
            let bc = pair_cumulant(b, c, s);
            let bd = pair_cumulant(b, d, s);
            let cd = pair_cumulant(c, d, s);
            ab * cd + ac * bd + ad * bc
                + ab * mc * md
                + ac * mb * md
                + ad * mb * mc
                + bc * ma * md
                + bd * ma * mc
                + cd * ma * mb
                + ma * mb * mc * md
        }
        _ => unreachable!(),
    }
}

/// Second-order cumulant equations for the driven-dissipative lattice.
#[derive(Debug, Clone)]
pub struct CumulantSystem {
    detuning: Vec<f64>,
    pump: Vec<f64>,
    hopping: f64,
    kerr: f64,
    loss: f64,
    scratch: CumulantState,
}

impl CumulantSystem {
    pub fn new(params: &LatticeParams) -> Self {
        Self {
            detuning: params.detunings(),
            pump: params.pump_vector(),
            hopping: params.hopping,
            kerr: params.kerr,
            loss: params.loss,
            scratch: CumulantState::vacuum(params.sites),
        }
    }

    fn sites(&self) -> usize {
        self.detuning.len()
    }

    /// Time derivatives `(d alpha, dG, dA)` as full matrices.
    pub fn derivatives(&self, s: &CumulantState) -> (Vec<C64>, CMatrix, CMatrix) {
        let n = self.sites();
        let i = C64::new(0.0, 1.0);
        let zero = C64::new(0.0, 0.0);
        let (j_hop, chi, kappa) = (self.hopping, self.kerr, self.loss);
        let neighbours = |j: usize| -> [Option<usize>; 2] {
            [if j > 0 { Some(j - 1) } else { None }, if j + 1 < n { Some(j + 1) } else { None }]
        };

        let mut d_alpha = vec![zero; n];
        for j in 0..n {
            let hop: C64 = neighbours(j).iter().flatten().map(|&m| s.alpha[m]).sum();
            let third = close_unchecked(&[Op::create(j), Op::annihilate(j), Op::annihilate(j)], s);
            let h = s.alpha[j] * self.detuning[j] - hop * j_hop + third * (2.0 * chi) + self.pump[j];
            d_alpha[j] = -i * h - s.alpha[j] * kappa;
        }

        let mut d_normal = CMatrix::zeros(n);
        let mut d_anom = CMatrix::zeros(n);
        for j in 0..n {
            for k in j..n {
                let g = s.normal[(j, k)];
                let hop_j: C64 = neighbours(j).iter().flatten().map(|&m| s.normal[(m, k)]).sum();
                let hop_k: C64 = neighbours(k).iter().flatten().map(|&m| s.normal[(j, m)]).sum();
                let f1 = close_unchecked(&[Op::create(j), Op::create(j), Op::annihilate(j), Op::annihilate(k)], s);
                let f2 = close_unchecked(&[Op::create(j), Op::create(k), Op::annihilate(k), Op::annihilate(k)], s);
                let dg = i * (g * (self.detuning[j] - self.detuning[k]))
                    - i * hop_j * j_hop
                    + i * hop_k * j_hop
                    + i * (f1 - f2) * (2.0 * chi)
                    + i * s.alpha[k] * self.pump[j]
                    - i * s.alpha[j].conj() * self.pump[k]
                    - g * (2.0 * kappa);
                d_normal[(j, k)] = dg;
                d_normal[(k, j)] = dg.conj();

                let a = s.anomalous[(j, k)];
                let hop_j: C64 = neighbours(j).iter().flatten().map(|&m| s.anomalous[(m, k)]).sum();
                let hop_k: C64 = neighbours(k).iter().flatten().map(|&m| s.anomalous[(j, m)]).sum();
                let h1 = close_unchecked(&[Op::create(j), Op::annihilate(j), Op::annihilate(j), Op::annihilate(k)], s);
                let h2 = close_unchecked(&[Op::create(k), Op::annihilate(j), Op::annihilate(k), Op::annihilate(k)], s);
                // a_j a_k^dag = a_k^dag a_j + delta_jk
                let commutator = if j == k { a } else { zero };
                let da = -i * a * (self.detuning[j] + self.detuning[k])
                    + i * (hop_j + hop_k) * j_hop
                    - i * (h1 + h2 + commutator) * (2.0 * chi)
                    - i * s.alpha[k] * self.pump[j]
                    - i * s.alpha[j] * self.pump[k]
                    - a * (2.0 * kappa);
                d_anom[(j, k)] = da;
                d_anom[(k, j)] = da;
            }
        }
        (d_alpha, d_normal, d_anom)
    }
}

impl OdeSystem for CumulantSystem {
    fn dim(&self) -> usize {
        CumulantState::packed_len(self.sites())
    }

    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        let mut scratch = std::mem::replace(&mut self.scratch, CumulantState::vacuum(0));
        scratch.unpack_into(y);
        scratch.time = t;
        let (da, dg, dan) = self.derivatives(&scratch);
        let out = CumulantState { alpha: da, normal: dg, anomalous: dan, time: t };
        out.pack(dy);
        self.scratch = scratch;
    }
}

/// Time derivatives of all first and second moments.
pub fn cumulant_rhs(state: &CumulantState, params: &LatticeParams) -> CumulantState {
    let sys = CumulantSystem::new(params);
    let (alpha, normal, anomalous) = sys.derivatives(state);
    CumulantState { alpha, normal, anomalous, time: state.time }
}
