//! Second-order cumulant run: the single-particle density matrix has one
//! dominant eigenvalue, so the photons form a condensate.
//!
//!     cargo run --release --example cumulant_condensate

use std::time::Instant;

use tilted_cavities::dynamics::{integrate, EvolveOptions, InitialCondition, Method, StateSnapshot};
use tilted_cavities::observables::{condensate_fraction, hermitian_eigenvalues, single_particle_density_matrix};
use tilted_cavities::LatticeParams;

fn main() -> tilted_cavities::Result<()> {
    let params = LatticeParams::canonical();
    let clock = Instant::now();
    let traj = integrate(&InitialCondition::Vacuum, &params, &EvolveOptions::new(Method::Cumulant2, 12.0 / params.loss))?;
    let Some(StateSnapshot::Cumulant(state)) = &traj.final_state else { unreachable!() };
    let rho = single_particle_density_matrix(state);
    let eig = hermitian_eigenvalues(&rho)?;
    println!("integrated {} steps in {:.1}s", traj.diagnostics.steps.accepted, clock.elapsed().as_secs_f64());
    println!("N = {:.4}, N0 = {:.4}, N0/N = {:.6}", rho.trace().re, eig[0], condensate_fraction(&rho)?);
    println!("next eigenvalues: {:?}", &eig[1..4]);
    let coherent: f64 = state.alpha.iter().map(|a| a.norm_sqr()).sum();
    println!("coherent part |alpha|^2 = {coherent:.4}");
    Ok(())
}
