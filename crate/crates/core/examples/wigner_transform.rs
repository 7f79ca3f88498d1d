//! Build a boosted wave packet, take its phase-space transform, and verify
//! the moment and trace identities.
//!
//! ```bash
//! cargo run --release --example wigner_transform
//! ```

use wigkit::grid::{SpatialGrid, TensorGrid};
use wigkit::states::{coherent_state, BuildOpts, QuantumState};
use wigkit::wigner::{
    difference_grid_for, hilbert_schmidt_identity, kernel_from_state, moments,
    momentum_spectrum, wigner_from_kernel,
};

fn main() -> wigkit::Result<()> {
    let hbar = 0.1;
    let grid = TensorGrid::line(SpatialGrid::centered(256, 16.0)?);
    let wave = coherent_state(&grid, &[0.3], &[1.2], hbar, &BuildOpts::default())?;
    let state = QuantumState::pure(wave);

    let ygrid = difference_grid_for(&state, 256, 8.0)?;
    println!(
        "difference grid: {} points over length {:.1} (momentum reach {:.2})",
        ygrid.n(),
        ygrid.length(),
        std::f64::consts::PI / ygrid.spacing()
    );

    let kernel = kernel_from_state(&state, &ygrid)?;
    println!("kernel Hermitian defect: {:.3e}", kernel.hermitian_defect());

    let w = wigner_from_kernel(&kernel)?;
    println!("phase-space mass:        {:.12} (should be 1)", w.mass());
    let peak = w.values.iter().cloned().fold(f64::MIN, f64::max);
    let trough = w.values.iter().cloned().fold(f64::MAX, f64::min);
    println!("field range:             [{trough:.4}, {peak:.4}]");

    let m = moments(&w, 1.0)?;
    let cell = m.grid.cell();
    let mass: f64 = m.rho.iter().sum::<f64>() * cell;
    let momentum: f64 = m.current[0].iter().sum::<f64>() * cell;
    let energy: f64 = m.energy.iter().sum::<f64>() * cell;
    println!("density mass:            {mass:.12}");
    println!("mean momentum:           {momentum:.6} (packet momentum 1.2)");
    println!("kinetic energy:          {energy:.6}");

    let id = hilbert_schmidt_identity(&w, &state);
    println!(
        "trace identity:          |W|^2 = {:.9}, (2 pi hbar)^-1 tr(R^2) = {:.9}, gap {:.2e}",
        id.lhs, id.rhs, id.relative_gap
    );

    let (freqs, spectrum) = momentum_spectrum(&state)?;
    let (kmax, _) = freqs
        .iter()
        .zip(spectrum.iter())
        .fold((0.0, f64::MIN), |acc, (&k, &v)| if v > acc.1 { (k, v) } else { acc });
    println!("momentum spectrum peak:  {kmax:.4} (p/hbar = {:.4})", 1.2 / hbar);
    Ok(())
}
