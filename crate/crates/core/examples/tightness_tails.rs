//! Tail-mass diagnostics across an ħ family: spatial tightness and the
//! oscillation bound tying the rescaled momentum tail to the kinetic energy.
//!
//! ```bash
//! cargo run --release --example tightness_tails
//! ```

use wigkit::grid::{SpatialGrid, TensorGrid};
use wigkit::states::{coherent_state, BuildOpts, QuantumState};
use wigkit::wigner::{moments_from_state, tail_masses};

fn main() -> wigkit::Result<()> {
    let grid = TensorGrid::line(SpatialGrid::centered(256, 16.0)?);
    let family: Vec<QuantumState> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&hbar| {
            Ok(QuantumState::pure(coherent_state(
                &grid,
                &[0.5],
                &[1.0],
                hbar,
                &BuildOpts::default(),
            )?))
        })
        .collect::<wigkit::Result<_>>()?;

    let radius = 3.0;
    let report = tail_masses(&family, radius)?;
    println!("radius R = {radius}; momentum tail is mass of the rescaled spectrum beyond R");
    println!("{:>8} {:>14} {:>14} {:>16}", "hbar", "spatial tail", "momentum tail", "2m*KE*(2pi)/R^2");
    for ((hbar, spatial, momentum), state) in report.per_state.iter().zip(&family) {
        let m = moments_from_state(state, 1.0);
        let ke: f64 = m.energy.iter().sum::<f64>() * m.grid.cell();
        let bound = 2.0 * std::f64::consts::PI * 2.0 * ke / (radius * radius);
        println!("{hbar:>8.3} {spatial:>14.3e} {momentum:>14.3e} {bound:>16.3e}");
    }
    println!(
        "\ntails vanish as the radius doubles: {}",
        report.vanishing
    );
    Ok(())
}
