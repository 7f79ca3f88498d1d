//! Rank-one detection from the kernel alone: the second-log-derivative
//! identities hold for wave packets and fail loudly for mixtures.
//!
//! ```bash
//! cargo run --release --example purity_check
//! ```

use wigkit::grid::{SpatialGrid, TensorGrid};
use wigkit::purity::{closure_residual, rank_one_residuals, wave_form_residual_1d, DEFAULT_MASK_TAU};
use wigkit::states::{coherent_state, mixed_state, spectral_purity, BuildOpts, QuantumState};
use wigkit::wigner::{difference_grid_for, kernel_from_state};

fn main() -> wigkit::Result<()> {
    let hbar = 0.15;
    let grid = TensorGrid::line(SpatialGrid::centered(256, 16.0)?);

    let pure = QuantumState::pure(coherent_state(
        &grid,
        &[0.2],
        &[0.6],
        hbar,
        &BuildOpts::default(),
    )?);
    let sep = 2.5 * hbar.sqrt();
    let a = coherent_state(&grid, &[-sep / 2.0], &[0.0], hbar, &BuildOpts::default())?;
    let b = coherent_state(&grid, &[sep / 2.0], &[hbar.sqrt()], hbar, &BuildOpts::default())?;
    let mixed = mixed_state(vec![a, b], vec![0.6, 0.4])?;

    println!(
        "{:>8} {:>14} {:>16} {:>16} {:>12}",
        "state", "tr(R^2)", "max residual", "masked fraction", "verdict"
    );
    for (label, state) in [("pure", &pure), ("mixed", &mixed)] {
        let ygrid = difference_grid_for(state, 256, 0.0)?;
        let kernel = kernel_from_state(state, &ygrid)?;
        let report = rank_one_residuals(&kernel, spectral_purity(state), DEFAULT_MASK_TAU)?;
        println!(
            "{label:>8} {:>14.6} {:>16.3e} {:>16.3} {:?}",
            report.spectral_purity, report.max_residual, report.masked_fraction, report.verdict
        );
    }

    // the one-dimensional wave form of the same identity, magnitude and
    // phase residuals separated
    let ygrid = difference_grid_for(&pure, 256, 0.0)?;
    let kernel = kernel_from_state(&pure, &ygrid)?;
    let wave_form = wave_form_residual_1d(&kernel, DEFAULT_MASK_TAU)?;
    let mag = wave_form.magnitude_residual.iter().cloned().fold(0.0f64, f64::max);
    let ph = wave_form.phase_residual.iter().cloned().fold(0.0f64, f64::max);
    println!("\nwave-form residual of the packet: magnitude {mag:.3e}, phase {ph:.3e}");

    let closure = closure_residual(&kernel, DEFAULT_MASK_TAU)?;
    println!("second-derivative closure residual: {:.3e}", closure.max_normalized);
    Ok(())
}
