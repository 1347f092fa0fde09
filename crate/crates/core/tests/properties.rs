use num_complex::Complex64 as C64;
use proptest::prelude::*;

mod common;
use common::partition_moment;

use tilted_cavities::dynamics::{
    close_moment, integrate, CumulantState, EvolveOptions, InitialCondition, Method, Op, Sampler, Tolerances,
};
use tilted_cavities::linalg::CMatrix;
use tilted_cavities::observables::{delta_n, hermitian_eigen, ws_fidelity};
use tilted_cavities::wannier_stark::{analytic_mode_evolution, build_basis, ModeRange};
use tilted_cavities::{LatticeParams, PumpProfile};

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn amplitudes(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(complex(), len)
}

/// A random moment state: means plus Hermitian normal and symmetric anomalous matrices.
fn moment_state(sites: usize) -> impl Strategy<Value = CumulantState> {
    (amplitudes(sites), amplitudes(sites * sites), amplitudes(sites * sites)).prop_map(move |(alpha, g, a)| {
        let mut s = CumulantState::vacuum(sites);
        s.alpha = alpha;
        for j in 0..sites {
            for k in 0..sites {
                let (lo, hi) = (j.min(k), j.max(k));
                let gz = g[lo * sites + hi];
                s.normal[(j, k)] = if j == k { C64::new(gz.re, 0.0) } else if j < k { gz } else { gz.conj() };
                s.anomalous[(j, k)] = a[lo * sites + hi];
            }
        }
        s
    })
}

/// Normal-ordered product of 1..=4 operators: creators first, each list in any site order.
fn normal_ordered(sites: usize) -> impl Strategy<Value = Vec<Op>> {
    (1usize..=4)
        .prop_flat_map(move |len| (0..=len, prop::collection::vec(0..sites, len)))
        .prop_map(|(creators, idx)| idx.iter().enumerate().map(|(i, &site)| Op { site, dagger: i < creators }).collect())
}

fn small_lattice(sites: usize) -> LatticeParams {
    LatticeParams::canonical().with_sites(sites)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_matches_partition_expansion(state in moment_state(4), ops in normal_ordered(4)) {
        let got = close_moment(&ops, &state).unwrap();
        let want = partition_moment(&ops, &state);
        prop_assert!((got - want).norm() <= 1e-12 * (1.0 + want.norm()), "{ops:?}: {got} vs {want}");
    }

    #[test]
    fn fidelity_ignores_phase_and_scale(alpha in amplitudes(41), phase in 0.0..6.3f64, scale in 0.01..100.0f64) {
        let basis = build_basis(&LatticeParams::canonical(), ModeRange::All).unwrap();
        prop_assume!(alpha.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
        let rotated: Vec<C64> = alpha.iter().map(|a| a * C64::from_polar(scale, phase)).collect();
        let p = ws_fidelity(&alpha, &basis).unwrap();
        let q = ws_fidelity(&rotated, &basis).unwrap();
        for (x, y) in p.values.iter().zip(&q.values) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let sum: f64 = p.values.iter().sum();
        prop_assert!(sum <= 1.0 + 1e-9);
    }

    #[test]
    fn delta_n_is_scale_invariant(series in prop::collection::vec(0.1..10.0f64, 2..200), scale in 1e-3..1e3f64) {
        let scaled: Vec<f64> = series.iter().map(|x| x * scale).collect();
        let a = delta_n(&series).unwrap();
        let b = delta_n(&scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn ws_basis_is_orthonormal(tilt in 0.15..2.0f64, hopping in 0.0..2.0f64) {
        let params = LatticeParams::canonical().with_sites(81).with_tilt(tilt).with_hopping(hopping);
        let basis = build_basis(&params, ModeRange::Interior).unwrap();
        prop_assert!(basis.orthonormality_defect() < 1e-8, "defect {}", basis.orthonormality_defect());
    }

    #[test]
    fn eigen_residuals(entries in amplitudes(64)) {
        let n = 8;
        let m = CMatrix::from_fn(n, |i, j| {
            let z = entries[i.min(j) * n + i.max(j)];
            if i == j { C64::new(z.re, 0.0) } else if i < j { z } else { z.conj() }
        });
        let (values, vectors) = hermitian_eigen(&m).unwrap();
        let norm = m.frobenius_norm();
        for (k, &lambda) in values.iter().enumerate() {
            let v = vectors.column(k);
            let r: f64 = m.mul_vec(&v).iter().zip(&v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(r < 1e-8 * norm);
        }
        prop_assert!((values.iter().sum::<f64>() - m.trace().re).abs() < 1e-8);
        prop_assert!(values.windows(2).all(|w| w[0] >= w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn closed_lattice_conserves_photon_number(alpha in amplitudes(15), kerr in 0.0..0.5f64, tilt in 0.2..1.0f64) {
        let params = small_lattice(15).with_kerr(kerr).with_tilt(tilt).with_loss(0.0).with_pump(PumpProfile::none());
        let tol = Tolerances { rtol: 1e-10, atol: 1e-12 };
        let opts = EvolveOptions::new(Method::MeanField, 50.0).with_tolerances(tol).with_sampler(Sampler { dt: 5.0, record_from: 0.0, snapshot_stride: 0 });
        let traj = integrate(&InitialCondition::Coherent(alpha), &params, &opts).unwrap();
        let n0 = traj.samples[0].total;
        let budget = traj.diagnostics.steps.accepted as f64 * tol.rtol;
        for s in &traj.samples {
            prop_assert!((s.total - n0).abs() <= budget * n0, "N drifted from {n0} to {}", s.total);
        }
    }

    #[test]
    fn undriven_linear_lattice_decays_exponentially(alpha in amplitudes(15), loss in 0.001..0.1f64) {
        let params = small_lattice(15).with_kerr(0.0).with_loss(loss).with_pump(PumpProfile::none());
        let tol = Tolerances { rtol: 1e-10, atol: 1e-14 };
        let opts = EvolveOptions::new(Method::MeanField, 30.0).with_tolerances(tol).with_sampler(Sampler { dt: 3.0, record_from: 0.0, snapshot_stride: 0 });
        let traj = integrate(&InitialCondition::Coherent(alpha), &params, &opts).unwrap();
        let n0 = traj.samples[0].total;
        for s in &traj.samples {
            let want = n0 * (-2.0 * loss * s.time).exp();
            prop_assert!((s.total - want).abs() <= 1e-6 * want);
        }
    }
}

#[test]
fn cumulant_decay_law_holds_for_correlations() {
    // with chi = 0 the normal moments decay at 2 kappa independently of the means
    let params = small_lattice(7).with_kerr(0.0).with_loss(0.05).with_pump(PumpProfile::none());
    let mut start = CumulantState::coherent(&[C64::new(0.3, 0.1); 7]);
    for j in 0..7 {
        start.normal[(j, j)] += C64::new(0.5, 0.0);
    }
    let n0: f64 = (0..7).map(|j| start.normal[(j, j)].re).sum();
    let opts = EvolveOptions::new(Method::Cumulant2, 20.0).with_tolerances(Tolerances { rtol: 1e-10, atol: 1e-14 });
    let traj = integrate(&InitialCondition::Cumulant(start), &params, &opts).unwrap();
    for s in &traj.samples {
        let want = n0 * (-2.0 * 0.05 * s.time).exp();
        assert!((s.total - want).abs() <= 1e-6 * want, "t {}: {} vs {want}", s.time, s.total);
    }
}

#[test]
fn linear_lattice_follows_analytic_ws_evolution() {
    let params = LatticeParams::canonical().with_kerr(0.0);
    let basis = build_basis(&params, ModeRange::Interior).unwrap();
    let opts = EvolveOptions::new(Method::MeanField, 10.0 / params.loss)
        .with_tolerances(Tolerances { rtol: 1e-11, atol: 1e-13 })
        .with_sampler(Sampler { dt: 50.0, record_from: 0.0, snapshot_stride: 0 });
    let traj = integrate(&InitialCondition::Vacuum, &params, &opts).unwrap();
    let mut worst: f64 = 0.0;
    for s in traj.samples.iter().skip(1) {
        let numeric = basis.to_ws(&s.alpha).unwrap();
        let exact: Vec<C64> = basis.modes().iter().map(|&n| analytic_mode_evolution(&params, n, C64::new(0.0, 0.0), s.time).unwrap()).collect();
        let scale = exact.iter().map(|b| b.norm()).fold(0.0, f64::max);
        for (x, y) in numeric.iter().zip(&exact) {
            worst = worst.max((x - y).norm() / scale);
        }
    }
    assert!(worst < 1e-6, "max relative deviation {worst:e}");
}

#[test]
fn seeded_start_reaches_same_steady_state() {
    let params = LatticeParams::canonical();
    let opts = EvolveOptions::new(Method::MeanField, 1200.0);
    let vac = integrate(&InitialCondition::Vacuum, &params, &opts).unwrap();
    let seeded = integrate(&InitialCondition::Seeded { amplitude: 1e-6, seed: 9 }, &params, &opts).unwrap();
    let a = vac.samples.last().unwrap().total;
    let b = seeded.samples.last().unwrap().total;
    assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
}
