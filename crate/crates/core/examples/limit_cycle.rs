//! Interaction-induced limit cycle at chi = 0.13 and its breakdown at chi = 0.135.
//!
//!     cargo run --release --example limit_cycle

use tilted_cavities::dynamics::{integrate, EvolveOptions, InitialCondition, Method, Sampler};
use tilted_cavities::observables::{classify, delta_n, orbit_return, ClassifierSettings, OrbitSpace};
use tilted_cavities::wannier_stark::{build_basis, ModeRange};
use tilted_cavities::LatticeParams;

fn main() -> tilted_cavities::Result<()> {
    for kerr in [0.13, 0.135] {
        let params = LatticeParams::canonical().with_kerr(kerr);
        let t_end = 12.0 / params.loss;
        let transient = 6.0 / params.loss;
        let basis = build_basis(&params, ModeRange::All)?;

        let coarse = integrate(&InitialCondition::Vacuum, &params, &EvolveOptions::new(Method::MeanField, t_end))?;
        let verdict = classify(&coarse, &basis, transient, &ClassifierSettings::default())?;
        let window = coarse.window(transient);
        let totals: Vec<f64> = window.iter().map(|s| s.total).collect();
        let last_quarter = delta_n(&totals[3 * totals.len() / 4..])?;
        println!(
            "chi {kerr}: {}  delta_n {:.4} (last quarter {:.4})  comb share {:.3}",
            verdict.label,
            verdict.delta_n,
            last_quarter,
            verdict.spectral_concentration.unwrap_or(f64::NAN)
        );

        // resample the tail finely to trace the orbit of the amplitudes
        let fine = EvolveOptions::new(Method::MeanField, t_end).with_sampler(Sampler { dt: 0.05, record_from: t_end - 100.0, snapshot_stride: 0 });
        let traj = integrate(&InitialCondition::Vacuum, &params, &fine)?;
        let period = verdict.period.unwrap_or(20.7);
        let ret = orbit_return(&traj.samples, period, OrbitSpace::Amplitudes)?;
        println!("  period {period:.3}: return distance {:.4} of diameter {:.3} ({:.2}%)", ret.distance, ret.diameter, 100.0 * ret.relative());
    }
    Ok(())
}
