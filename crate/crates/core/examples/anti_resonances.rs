//! Pumping anti-resonances: at tilts where J_k(2J/dw) vanishes, WS mode `|n| = k`
//! decouples from the single-site pump and its occupation collapses.
//!
//!     cargo run --release --example anti_resonances

use tilted_cavities::dynamics::{integrate, EvolveOptions, InitialCondition, Method};
use tilted_cavities::observables::mean_fidelity_spectrum;
use tilted_cavities::wannier_stark::{build_basis, find_anti_resonances, ModeRange};
use tilted_cavities::LatticeParams;

fn main() -> tilted_cavities::Result<()> {
    for order in [0, 1] {
        let tilts = find_anti_resonances(1.0, 0.3, 0.6, order)?;
        println!("J_{order}(2/dw) = 0 at dw = {tilts:?}");
    }

    println!("\n{:>7} {:>12} {:>12} {:>12}", "dw", "P_-1", "P_0", "P_+1");
    for tilt in [0.5, 0.522, 0.362] {
        let params = LatticeParams::canonical().with_tilt(tilt);
        let t_end = 12.0 / params.loss;
        let traj = integrate(&InitialCondition::Vacuum, &params, &EvolveOptions::new(Method::MeanField, t_end))?;
        let basis = build_basis(&params, ModeRange::All)?;
        let p = mean_fidelity_spectrum(&traj, &basis, 6.0 / params.loss)?;
        let get = |n| p.get(n).unwrap_or(f64::NAN);
        println!("{tilt:>7} {:>12.4e} {:>12.4e} {:>12.4e}", get(-1), get(0), get(1));
    }
    Ok(())
}
