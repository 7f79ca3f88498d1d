//! Quantum hydrodynamics against the wavefunction: evolve the same lifted
//! packet with the fluid solver and the split-step propagator, compare
//! moments, and measure the closure residual order.
//!
//! ```bash
//! cargo run --release --example madelung_hydro
//! ```

use wigkit::evolution::{schrodinger_evolve, Backend, EvolutionConfig, Trajectory};
use wigkit::grid::SpatialGrid;
use wigkit::madelung::{
    compare_with_wave_moments, lifted_packet, madelung_evolve, moment_closure_check,
    MadelungConfig,
};
use wigkit::semiclassics::fit_slope;
use wigkit::states::Potential;

fn main() -> wigkit::Result<()> {
    let grid = SpatialGrid::centered(512, 16.0)?;
    let hbar = 0.25;
    let (fluid0, wave0) = lifted_packet(&grid, 0.5, hbar, 1e-4)?;
    let v = Potential::confined_harmonic(1.0, 1.0, 4.0, 7.0);

    let horizon = 0.1;
    let wave_cfg = EvolutionConfig {
        dt: 5e-5,
        t_final: horizon,
        backend: Backend::Schrodinger,
        mass: 1.0,
        record_stride: 50,
    };
    let waves = schrodinger_evolve(&wave0, &v, &wave_cfg)?;
    let fluid_cfg = MadelungConfig {
        dt: 5e-5,
        t_final: horizon,
        record_stride: 50,
        ..Default::default()
    };
    let fluids = madelung_evolve(&fluid0, &v, &fluid_cfg)?;

    println!("{:>8} {:>14} {:>14} {:>14}", "t", "rho rel L2", "J rel L2", "bulk u rel L2");
    for row in compare_with_wave_moments(&fluids, &waves, 1.0)?.iter().step_by(8) {
        println!(
            "{:>8.4} {:>14.3e} {:>14.3e} {:>14.3e}",
            row.t, row.rho_rel_l2, row.current_rel_l2, row.u_rel_l2
        );
    }

    // closure residuals of the wave moments at three recording strides
    let mut pts_c = Vec::new();
    let mut pts_e = Vec::new();
    println!("\n{:>10} {:>14} {:>14}", "dt_rec", "continuity", "euler");
    for every in [4usize, 2, 1] {
        let times: Vec<f64> = waves.times.iter().copied().step_by(every).collect();
        let frames: Vec<_> = waves.frames.iter().cloned().step_by(every).collect();
        let sub = Trajectory { times, frames };
        let rows = moment_closure_check(&sub, &v, 1.0, 1e-6)?;
        let c = rows.iter().map(|r| r.continuity).fold(0.0f64, f64::max);
        let e = rows.iter().map(|r| r.euler).fold(0.0f64, f64::max);
        println!("{:>10.5} {c:>14.3e} {e:>14.3e}", sub.recording_dt());
        pts_c.push((sub.recording_dt().ln(), c.ln()));
        pts_e.push((sub.recording_dt().ln(), e.ln()));
    }
    println!(
        "measured residual orders: continuity {:.2}, euler {:.2} (second-order recording)",
        fit_slope(&pts_c).0,
        fit_slope(&pts_e).0
    );
    Ok(())
}
