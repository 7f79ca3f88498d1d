//! Cross-validate the three evolution backends on a harmonic trap: split-step
//! wavefunction, conjugation of the finite-rank state, and direct phase-space
//! transport with the exact difference-quotient phase.
//!
//! ```bash
//! cargo run --release --example evolution_backends
//! ```

use wigkit::evolution::{
    schrodinger_evolve, von_neumann_evolve, wigner_evolve, Backend, EvolutionConfig,
};
use wigkit::grid::{SpatialGrid, TensorGrid};
use wigkit::states::{coherent_state, hilbert_schmidt_trace, BuildOpts, Potential, QuantumState};
use wigkit::wigner::{difference_grid_for, kernel_from_state, wigner_from_kernel};

fn main() -> wigkit::Result<()> {
    let hbar = 0.1;
    let grid = TensorGrid::line(SpatialGrid::centered(256, 16.0)?);
    let wave = coherent_state(&grid, &[0.5], &[0.0], hbar, &BuildOpts::default())?;
    let state = QuantumState::pure(wave.clone());
    let v = Potential::harmonic(1.0, 1.0).with_supnorm(32.0).with_lipschitz(8.0);

    let cfg = EvolutionConfig {
        dt: 2.44e-4,
        t_final: 1.0,
        backend: Backend::Wigner,
        mass: 1.0,
        record_stride: 1024,
    };

    let ygrid = difference_grid_for(&state, 256, 4.0)?;
    let w0 = wigner_from_kernel(&kernel_from_state(&state, &ygrid)?)?;
    let wig = wigner_evolve(&w0, &v, &cfg)?;
    let sch = schrodinger_evolve(&wave, &v, &cfg)?;
    let von = von_neumann_evolve(&state, &v, &cfg)?;

    println!("{:>6} {:>14} {:>14} {:>14} {:>14}", "t", "mass err", "norm err", "tr(R^2) err", "L2 distance");
    let tr0 = hilbert_schmidt_trace(&state);
    for i in 0..wig.times.len() {
        let t = wig.times[i];
        let mass_err = (wig.frames[i].mass() - 1.0).abs();
        let norm_err = (sch.frames[i].norm() - 1.0).abs();
        let tr_err = (hilbert_schmidt_trace(&von.frames[i]) - tr0).abs();
        // transform the wavefunction frame and compare fields
        let evolved = QuantumState::pure(sch.frames[i].clone());
        let w_ref = wigner_from_kernel(&kernel_from_state(&evolved, &ygrid)?)?;
        let dist = wig.frames[i].l2_distance(&w_ref);
        println!("{t:6.3} {mass_err:14.3e} {norm_err:14.3e} {tr_err:14.3e} {dist:14.3e}");
    }
    println!("\nthe phase-space and wavefunction backends agree to the grid floor;");
    println!("mass, norm and the Hilbert-Schmidt trace are conserved to roundoff");
    Ok(())
}
