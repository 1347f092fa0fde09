//! Weakly interacting photons condense into the pumped Wannier-Stark state.
//!
//!     cargo run --release --example condensation

use tilted_cavities::dynamics::{integrate, EvolveOptions, InitialCondition, Method};
use tilted_cavities::observables::{classify, ws_fidelity, ClassifierSettings, Occupations};
use tilted_cavities::wannier_stark::{build_basis, ModeRange};
use tilted_cavities::LatticeParams;

fn main() -> tilted_cavities::Result<()> {
    let params = LatticeParams::canonical();
    let traj = integrate(&InitialCondition::Vacuum, &params, &EvolveOptions::new(Method::MeanField, 12.0 / params.loss))?;
    let basis = build_basis(&params, ModeRange::All)?;
    let verdict = classify(&traj, &basis, 6.0 / params.loss, &ClassifierSettings::default())?;
    println!("regime {}  delta_n {:.4}  <max P> {:.4}", verdict.label, verdict.delta_n, verdict.avg_max_fidelity.unwrap_or(f64::NAN));

    let last = traj.final_state.as_ref().expect("run keeps its final state");
    let fid = ws_fidelity(last.alpha(), &basis)?;
    let (n, p) = fid.max();
    println!("final N = {:.3}, dominant WS mode n = {n} with P = {p:.4}", last.total_photon_number());

    // site profile against the single-mode density |beta_{0,j}|^2
    let occ = last.site_occupations();
    let beta0: Vec<f64> = basis.row(basis.row_of(0).unwrap()).iter().map(|b| b * b).collect();
    let dot: f64 = occ.iter().zip(&beta0).map(|(a, b)| a * b).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!("cosine similarity with |beta_0|^2: {:.5}", dot / (norm(&occ) * norm(&beta0)));

    println!("\n{:>4} {:>10} {:>10}", "j", "n_j", "N|b0j|^2");
    let total: f64 = occ.iter().sum();
    for (pos, j) in params.site_indices().enumerate().filter(|(_, j)| j.abs() <= 6) {
        println!("{j:>4} {:>10.4} {:>10.4}", occ[pos], total * beta0[pos]);
    }
    Ok(())
}
