//! Concentration diagnostics across a geometric ħ sweep for the three state
//! families: the gradient-density metric, the momentum-spread defect, and the
//! Bohm/pressure terms share one decay verdict.
//!
//! ```bash
//! cargo run --release --example concentration_sweep
//! ```

use wigkit::grid::TensorGrid;
use wigkit::semiclassics::{concentration_sweep, SweepOptions, SweepReport};
use wigkit::states::{coherent_state, scaled_state, BuildOpts, QuantumState};

fn show(label: &str, report: &SweepReport) {
    println!("\n{label}");
    println!(
        "{:>8} {:>14} {:>14} {:>14} {:>14}",
        "hbar", "grad metric^2", "defect L1", "rho^2 P L1", "rho^2 TrPi L1"
    );
    for (i, h) in report.hbars.iter().enumerate() {
        println!(
            "{h:>8.4} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            report.grad_rho_metric[i] * report.grad_rho_metric[i],
            report.defect_l1[i],
            report.rho2_bohm_l1[i],
            report.rho2_pressure_l1[i]
        );
    }
    println!(
        "exponents: grad^2 {:+.3}, defect {:+.3}, rho^2P {:+.3}, rho^2TrPi {:+.3}",
        report.grad_sq_exponent.0,
        report.defect_exponent.0,
        report.rho2_bohm_exponent.0,
        report.rho2_pressure_exponent.0
    );
    println!(
        "concentrating: {}; decay verdicts consistent: {}",
        report.monokinetic_pass, report.equivalence_consistent
    );
}

fn main() -> wigkit::Result<()> {
    let hbars = [0.2, 0.1, 0.05, 0.025];

    let d1 = concentration_sweep(
        &hbars,
        |hbar| {
            let grid = TensorGrid::isotropic(1, 1024, 16.0)?;
            Ok(QuantumState::pure(coherent_state(
                &grid,
                &[0.0],
                &[0.0],
                hbar,
                &BuildOpts::default(),
            )?))
        },
        &SweepOptions::default(),
    )?;
    show("wave packets, one dimension (expected grad^2 exponent 1/2):", &d1);

    let d2 = concentration_sweep(
        &hbars,
        |hbar| {
            let grid = TensorGrid::isotropic(2, 256, 12.0)?;
            Ok(QuantumState::pure(coherent_state(
                &grid,
                &[0.0, 0.0],
                &[0.0, 0.0],
                hbar,
                &BuildOpts::default(),
            )?))
        },
        &SweepOptions::default(),
    )?;
    show("wave packets, two dimensions (expected exponent 0 - no decay):", &d2);

    let alpha = 0.4;
    let scaled = concentration_sweep(
        &hbars,
        |hbar| {
            let grid = TensorGrid::isotropic(1, 1024, 16.0)?;
            let profile = |x: &[f64]| {
                (2.0 / std::f64::consts::PI).powf(0.25) * (-x[0] * x[0]).exp()
            };
            Ok(QuantumState::pure(scaled_state(
                &grid,
                profile,
                &[0.0],
                alpha,
                hbar,
                &BuildOpts::default(),
            )?))
        },
        &SweepOptions::default(),
    )?;
    show(
        &format!("concentrating profiles at alpha = {alpha} (expected exponent 2 - 3 alpha = {}):", 2.0 - 3.0 * alpha),
        &scaled,
    );
    Ok(())
}
