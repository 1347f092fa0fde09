//! Bessel functions of the first kind for integer order.
//!
//! Small and moderate arguments use Miller's backward recurrence normalised by
//! `J_0 + 2 * sum J_2k = 1`. Large arguments relative to the order use the
//! Hankel asymptotic expansion.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Largest supported `|order|`.
pub const MAX_ORDER: i64 = 200;
/// Largest supported `|x|`.
pub const MAX_ARGUMENT: f64 = 500.0;

const RESCALE_ABOVE: f64 = 1e200;
const RESCALE_BY: f64 = 1e-200;

/// `J_order(x)`.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    if order.abs() > MAX_ORDER || !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::BesselDomain { order, x });
    }
    let n = order.unsigned_abs() as usize;
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x)
    let mut sign = 1.0;
    if order < 0 && n % 2 == 1 {
        sign = -sign;
    }
    if x < 0.0 && n % 2 == 1 {
        sign = -sign;
    }
    let ax = x.abs();
    if ax == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let value = if use_asymptotic(n, ax) {
        hankel_asymptotic(n, ax)
    } else {
        miller_sequence(n, ax)[n]
    };
    Ok(sign * value)
}

/// `J_k(x)` for `k = 0..=max_order`, all from one backward recurrence.
pub fn bessel_j_sequence(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if max_order as i64 > MAX_ORDER || !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::BesselDomain { order: max_order as i64, x });
    }
    let ax = x.abs();
    if ax == 0.0 {
        let mut out = vec![0.0; max_order + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    let mut seq = miller_sequence(max_order, ax);
    if x < 0.0 {
        for (k, v) in seq.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    Ok(seq)
}

/// `J_k(x)` for integer `k` in `lo..=hi` (negative orders allowed).
pub fn bessel_j_range(lo: i64, hi: i64, x: f64) -> Result<Vec<f64>> {
    let max = lo.abs().max(hi.abs()) as usize;
    let seq = bessel_j_sequence(max, x)?;
    Ok((lo..=hi)
        .map(|k| {
            let v = seq[k.unsigned_abs() as usize];
            if k < 0 && k % 2 != 0 {
                -v
            } else {
                v
            }
        })
        .collect())
}

fn use_asymptotic(n: usize, x: f64) -> bool {
    let n = n as f64;
    x >= 30.0 && x >= 2.0 * n * n
}

/// Backward recurrence `J_{k-1} = (2k/x) J_k - J_{k+1}` from well above
/// `max(n, x)`, normalised with `J_0 + 2 sum_{k>=1} J_2k = 1`. Requires `x > 0`.
fn miller_sequence(n: usize, x: f64) -> Vec<f64> {
    let top = (n as f64).max(x);
    let mut start = (top + 30.0 + 10.0 * top.sqrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut out = vec![0.0; n + 1];
    let mut next = 0.0; // J_{k+1}
    let mut current = 1e-30; // J_k, arbitrary seed
    let mut even_sum = 0.0;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let prev = k as f64 * two_over_x * current - next;
        next = current;
        current = prev;
        let idx = k - 1;
        if idx % 2 == 0 && idx > 0 {
            even_sum += current;
        }
        if idx <= n {
            out[idx] = current;
        }
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            next *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            for v in out.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }
    let norm = current + 2.0 * even_sum;
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Hankel expansion `sqrt(2/(pi x)) (P cos w - Q sin w)`, `w = x - n pi/2 - pi/4`.
fn hankel_asymptotic(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..200usize {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        // k even -> P with sign (-1)^{k/2}; k odd -> Q with sign (-1)^{(k-1)/2}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if mag < 1e-17 {
            break;
        }
    }
    let w = x - n as f64 * FRAC_PI_2 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}
