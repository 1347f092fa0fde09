//! Wannier-Stark basis of the tilted lattice and the exact non-interacting
//! steady state it predicts.
//!
//!     cargo run --release --example ws_basis

use tilted_cavities::wannier_stark::{build_basis, pump_projection, steady_state_occupation, ModeRange};
use tilted_cavities::LatticeParams;

fn main() -> tilted_cavities::Result<()> {
    let params = LatticeParams::canonical().with_kerr(0.0);
    let interior = build_basis(&params, ModeRange::Interior)?;
    println!(
        "L = {}, gamma = 2J/dw = {}, interior modes {}..={}, orthonormality defect {:.1e}",
        params.sites,
        params.gamma(),
        interior.modes()[0],
        interior.modes()[interior.len() - 1],
        interior.orthonormality_defect()
    );

    let basis = build_basis(&params, ModeRange::All)?;
    let row = basis.row_of(0).unwrap();
    println!("\nmode n = 0 on sites -6..=6:");
    for (pos, j) in params.site_indices().enumerate().filter(|(_, j)| j.abs() <= 6) {
        println!("  j = {j:>3}  beta = {:+.6}", basis.coefficient(row, pos));
    }

    println!("\n{:>4} {:>12} {:>14}", "n", "eta_n", "|b_n|^2");
    for n in -4..=4 {
        println!("{n:>4} {:>12.6} {:>14.6e}", pump_projection(&params, n)?, steady_state_occupation(&params, n)?);
    }
    Ok(())
}
