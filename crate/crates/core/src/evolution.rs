//! Time evolution on the line: split-step propagation of wavefunctions,
//! conjugation flow of finite-rank states, and direct phase-space transport
//! with the exact difference-quotient potential phase.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{PhaseGrid, SpatialGrid};
use crate::spectral;
use crate::states::{Potential, QuantumState, WaveFunction};
use crate::wigner::WignerField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Schrodinger,
    VonNeumann,
    Wigner,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub backend: Backend,
    pub mass: f64,
    /// record every `record_stride`-th step (plus the initial frame)
    pub record_stride: usize,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if self.t_final < self.dt {
            return Err(Error::InvalidParameter("t_final must be at least dt".into()));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParameter("mass must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }
}

/// Recorded frames at uniformly spaced times.
#[derive(Debug, Clone)]
pub struct Trajectory<F> {
    pub times: Vec<f64>,
    pub frames: Vec<F>,
}

impl<F> Trajectory<F> {
    pub fn recording_dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

/// Largest allowed phase advance per sub-step: an eighth of a full turn.
const MAX_PHASE: f64 = 2.0 * std::f64::consts::PI / 8.0;

fn sampled_sup(v: &Potential, grid: &SpatialGrid, reach: f64) -> f64 {
    let pad = (reach / grid.spacing()).ceil() as isize;
    let mut sup: f64 = 0.0;
    for j in -pad..grid.n() as isize + pad {
        sup = sup.max(v.value(grid.origin() + j as f64 * grid.spacing()).abs());
    }
    sup
}

fn check_schrodinger_dt(
    grid: &SpatialGrid,
    v: &Potential,
    hbar: f64,
    mass: f64,
    dt: f64,
) -> Result<()> {
    let kmax = std::f64::consts::PI / grid.spacing();
    let phase_kin = dt * hbar * kmax * kmax / (2.0 * mass);
    let vmax = v.supnorm.unwrap_or_else(|| sampled_sup(v, grid, 0.0));
    let phase_pot = dt * vmax / hbar;
    let phase = phase_kin.max(phase_pot);
    if phase > MAX_PHASE {
        return Err(Error::Stability {
            msg: format!(
                "kinetic/potential phases per step are {phase_kin:.3e}/{phase_pot:.3e} rad"
            ),
            suggested_dt: dt * MAX_PHASE / phase,
        });
    }
    Ok(())
}

/// One Strang step of the split-step propagator: half kinetic phase
/// `e^{-i dt ħ k²/4m}`, full potential phase `e^{-i dt V/ħ}`, half kinetic.
pub fn schrodinger_step(
    wf: &WaveFunction,
    v: &Potential,
    dt: f64,
    mass: f64,
) -> Result<WaveFunction> {
    if wf.dim() != 1 {
        return Err(Error::InvalidParameter("split-step propagator is one-dimensional".into()));
    }
    let grid = *wf.grid.axis(0);
    check_schrodinger_dt(&grid, v, wf.hbar, mass, dt.abs())?;
    let mut values: Vec<Complex64> = wf.line().to_vec();
    let kin = |k: f64| Complex64::from_polar(1.0, -dt * wf.hbar * k * k / (4.0 * mass));
    spectral::apply_multiplier(&mut values, &grid, kin);
    for (j, val) in values.iter_mut().enumerate() {
        let phase = -dt * v.value(grid.node(j)) / wf.hbar;
        *val *= Complex64::from_polar(1.0, phase);
    }
    spectral::apply_multiplier(&mut values, &grid, kin);
    let samples = ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&[grid.n()]), values).unwrap();
    Ok(WaveFunction { samples, grid: wf.grid.clone(), hbar: wf.hbar })
}

/// Split-step trajectory with frames recorded every `record_stride` steps.
pub fn schrodinger_evolve(
    wf: &WaveFunction,
    v: &Potential,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<WaveFunction>> {
    cfg.validate()?;
    if wf.dim() != 1 {
        return Err(Error::InvalidParameter("split-step propagator is one-dimensional".into()));
    }
    let grid = *wf.grid.axis(0);
    check_schrodinger_dt(&grid, v, wf.hbar, cfg.mass, cfg.dt)?;

    // precompute the two phase tables once per trajectory
    let n = grid.n();
    let bin_freqs = crate::wigner::bin_frequencies(n, grid.length());
    let kin: Vec<Complex64> = bin_freqs
        .iter()
        .map(|&k| Complex64::from_polar(1.0, -cfg.dt * wf.hbar * k * k / (4.0 * cfg.mass)))
        .collect();
    let pot: Vec<Complex64> = grid
        .nodes()
        .map(|x| Complex64::from_polar(1.0, -cfg.dt * v.value(x) / wf.hbar))
        .collect();

    let mut values: Vec<Complex64> = wf.line().to_vec();
    let mut times = vec![0.0];
    let mut frames = vec![wf.clone()];
    let steps = cfg.steps();
    let inv_n = 1.0 / n as f64;
    for step in 1..=steps {
        spectral::fft_in_place(&mut values);
        for (v, k) in values.iter_mut().zip(&kin) {
            *v *= k;
        }
        spectral::ifft_in_place(&mut values);
        for (v, p) in values.iter_mut().zip(&pot) {
            *v *= p * inv_n;
        }
        spectral::fft_in_place(&mut values);
        for (v, k) in values.iter_mut().zip(&kin) {
            *v *= k;
        }
        spectral::ifft_in_place(&mut values);
        for v in values.iter_mut() {
            *v *= inv_n;
        }
        if step % cfg.record_stride == 0 || step == steps {
            let samples =
                ndarray::ArrayD::from_shape_vec(ndarray::IxDyn(&[n]), values.clone()).unwrap();
            frames.push(WaveFunction { samples, grid: wf.grid.clone(), hbar: wf.hbar });
            times.push(step as f64 * cfg.dt);
        }
    }
    Ok(Trajectory { times, frames })
}

/// Conjugation flow of a finite-rank state: every eigenfunction follows the
/// split-step propagator while the weights stay fixed.
pub fn von_neumann_evolve(
    state: &QuantumState,
    v: &Potential,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<QuantumState>> {
    cfg.validate()?;
    let per_wave: Vec<Trajectory<WaveFunction>> = state
        .waves
        .iter()
        .map(|w| schrodinger_evolve(w, v, cfg))
        .collect::<Result<_>>()?;
    let times = per_wave[0].times.clone();
    let mut frames = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        frames.push(QuantumState {
            weights: state.weights.clone(),
            waves: per_wave.iter().map(|t| t.frames[i].clone()).collect(),
            hbar: state.hbar,
        });
    }
    Ok(Trajectory { times, frames })
}

/// Difference quotient of the potential at center `x` and difference `y`:
/// `(V(x + ħy/2) - V(x - ħy/2)) / (iħ)`.
pub fn potential_difference(v: &Potential, x: f64, y: f64, hbar: f64) -> Complex64 {
    let diff = v.value(x + 0.5 * hbar * y) - v.value(x - 0.5 * hbar * y);
    Complex64::new(0.0, -diff / hbar)
}

/// Momentum-space convolution kernel of the potential term: per position `x`,
/// `(2π)^{-1}` times the difference-variable transform of the quotient.
/// Meaningful for bounded potentials whose quotient decays on the box.
pub fn potential_kernel(
    v: &Potential,
    xgrid: &SpatialGrid,
    ygrid: &SpatialGrid,
    hbar: f64,
) -> Array2<Complex64> {
    let inv_2pi = 1.0 / (2.0 * std::f64::consts::PI);
    let mut out = Array2::<Complex64>::zeros((xgrid.n(), ygrid.n()));
    for (i, x) in xgrid.nodes().enumerate() {
        let row: Vec<Complex64> =
            ygrid.nodes().map(|y| potential_difference(v, x, y, hbar)).collect();
        let coeffs = spectral::forward(&row, ygrid);
        for (j, c) in coeffs.iter().enumerate() {
            out[[i, j]] = c * inv_2pi;
        }
    }
    out
}

/// Apply the potential term of the transport equation: transform to the
/// difference variable, multiply pointwise by the quotient, transform back.
/// This realizes the momentum convolution exactly on the discrete torus.
pub fn apply_potential_term(w: &WignerField, v: &Potential) -> Result<WignerField> {
    let ygrid = w.grid.y;
    let mut values = Array2::<f64>::zeros(w.values.raw_dim());
    for (i, x) in w.grid.x.nodes().enumerate() {
        let coeffs: Vec<Complex64> =
            w.values.row(i).iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let mut g = spectral::inverse(&coeffs, &ygrid);
        for (j, y) in ygrid.nodes().enumerate() {
            g[j] *= potential_difference(v, x, y, w.hbar);
        }
        let back = spectral::forward(&g, &ygrid);
        for (j, c) in back.iter().enumerate() {
            values[[i, j]] = c.re;
        }
    }
    Ok(WignerField { values, grid: w.grid.clone(), hbar: w.hbar })
}

fn check_wigner_dt(
    w: &WignerField,
    v: &Potential,
    mass: f64,
    dt: f64,
) -> Result<()> {
    let kx_max = std::f64::consts::PI / w.grid.x.spacing();
    let xi_max = w.grid.xi.max_abs();
    let phase_transport = dt * kx_max * xi_max / (2.0 * mass);
    let reach = 0.5 * w.hbar * 0.5 * w.grid.y.length();
    let vmax = v.supnorm.unwrap_or_else(|| sampled_sup(v, &w.grid.x, reach));
    let phase_pot = dt * 2.0 * vmax / w.hbar;
    let phase = phase_transport.max(phase_pot);
    if phase > std::f64::consts::PI {
        return Err(Error::Stability {
            msg: format!(
                "transport/potential phases per step are {phase_transport:.3e}/{phase_pot:.3e} rad"
            ),
            suggested_dt: dt * std::f64::consts::PI / phase,
        });
    }
    Ok(())
}

/// Strang-split transport of a phase-space density: exact spectral shift in
/// `x` by `ξ dt / 2m` per momentum slice, then the full potential phase
/// applied as a unitary multiplication in the difference variable, then the
/// second half shift. Mass is conserved to roundoff by both sub-steps.
pub fn wigner_evolve(
    w0: &WignerField,
    v: &Potential,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<WignerField>> {
    cfg.validate()?;
    check_wigner_dt(w0, v, cfg.mass, cfg.dt)?;
    let nx = w0.grid.x.n();
    let ny = w0.grid.y.n();
    let xi = w0.grid.xi.frequencies().to_vec();
    let kx = crate::wigner::bin_frequencies(nx, w0.grid.x.length());

    // potential phase over (x, y): exp(dt · δ[V]) with |phase| = 1
    let mut pot_phase = Array2::<Complex64>::zeros((nx, ny));
    for (i, x) in w0.grid.x.nodes().enumerate() {
        for (j, y) in w0.grid.y.nodes().enumerate() {
            let delta = potential_difference(v, x, y, w0.hbar);
            pot_phase[[i, j]] = (delta * cfg.dt).exp();
        }
    }
    let y_is_trivial = v.supnorm == Some(0.0);

    let mut values = w0.values.clone();
    let mut frames = vec![w0.clone()];
    let mut times = vec![0.0];
    let steps = cfg.steps();
    let half_shift = |values: &mut Array2<f64>| {
        let inv_n = 1.0 / nx as f64;
        for (k, &xi_k) in xi.iter().enumerate() {
            let shift = -xi_k * cfg.dt / (2.0 * cfg.mass);
            let mut col: Vec<Complex64> =
                values.column(k).iter().map(|&r| Complex64::new(r, 0.0)).collect();
            spectral::fft_in_place(&mut col);
            for (b, c) in col.iter_mut().enumerate() {
                // e^{+i k s} evaluates the slice at x + s = x - ξ dt/2m
                *c *= Complex64::from_polar(inv_n, kx[b] * shift);
            }
            spectral::ifft_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                values[[i, k]] = c.re;
            }
        }
    };
    for step in 1..=steps {
        half_shift(&mut values);
        if !y_is_trivial {
            for i in 0..nx {
                let coeffs: Vec<Complex64> =
                    values.row(i).iter().map(|&r| Complex64::new(r, 0.0)).collect();
                let mut g = spectral::inverse(&coeffs, &w0.grid.y);
                for (j, gv) in g.iter_mut().enumerate() {
                    *gv *= pot_phase[[i, j]];
                }
                let back = spectral::forward(&g, &w0.grid.y);
                for (j, c) in back.iter().enumerate() {
                    values[[i, j]] = c.re;
                }
            }
        }
        half_shift(&mut values);
        if step % cfg.record_stride == 0 || step == steps {
            frames.push(WignerField {
                values: values.clone(),
                grid: w0.grid.clone(),
                hbar: w0.hbar,
            });
            times.push(step as f64 * cfg.dt);
        }
    }
    Ok(Trajectory { times, frames })
}

/// Report of the divergence-form rewrite of the potential term.
#[derive(Debug, Clone, Copy)]
pub struct DivergenceFormReport {
    /// sup over the grid of the difference-quotient symbol modulus
    pub symbol_sup: f64,
    pub declared_lipschitz: f64,
    /// relative residual of `∇_ξ · L = K` evaluated through the transforms
    pub divergence_residual: f64,
}

/// Check that the symbol `δ[V](x,y) · y/|y|²` of the antiderivative kernel is
/// bounded by the declared Lipschitz constant, and that its momentum
/// divergence reproduces the convolution kernel.
pub fn divergence_form_check(
    v: &Potential,
    xgrid: &SpatialGrid,
    ygrid: &SpatialGrid,
    hbar: f64,
) -> Result<DivergenceFormReport> {
    let lip = v.lipschitz.ok_or_else(|| {
        Error::InvalidParameter("divergence-form check needs a declared Lipschitz constant".into())
    })?;
    let phase_grid = PhaseGrid::new(*xgrid, *ygrid)?;
    let nx = xgrid.n();
    let ny = ygrid.n();
    // symbol of the antiderivative kernel: (V(x+ħy/2) - V(x-ħy/2))/(ħ y),
    // with modulus bounded by the Lipschitz constant
    let mut symbol = Array2::<Complex64>::zeros((nx, ny));
    let mut symbol_sup: f64 = 0.0;
    let h = 1e-6 * (1.0 + xgrid.length());
    for (i, x) in xgrid.nodes().enumerate() {
        for (j, y) in ygrid.nodes().enumerate() {
            let s = if y == 0.0 {
                // limit y -> 0 of the quotient is the local slope
                Complex64::new((v.value(x + h) - v.value(x - h)) / (2.0 * h), 0.0)
            } else {
                let diff = v.value(x + 0.5 * hbar * y) - v.value(x - 0.5 * hbar * y);
                Complex64::new(diff / (hbar * y), 0.0)
            };
            symbol_sup = symbol_sup.max(s.norm());
            symbol[[i, j]] = s;
        }
    }
    if symbol_sup > lip * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::Metadata(format!(
            "symbol sup {symbol_sup:.6} exceeds declared Lipschitz constant {lip:.6}"
        )));
    }

    // Round trip: L = (2π)^{-1} F_y[σ·y...] is represented by its transform;
    // the momentum divergence maps back to multiplication by -i y.
    let k_kernel = potential_kernel(v, xgrid, ygrid, hbar);
    let inv_2pi = 1.0 / (2.0 * std::f64::consts::PI);
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..nx {
        // L row in momentum space
        let sym_row: Vec<Complex64> = (0..ny).map(|j| symbol[[i, j]]).collect();
        let l_row = spectral::forward(&sym_row, ygrid);
        // divergence: back to y, multiply by -i y, forward again
        let mut g = spectral::inverse(&l_row, ygrid);
        for (j, y) in ygrid.nodes().enumerate() {
            g[j] *= Complex64::new(0.0, -y);
        }
        let div_row = spectral::forward(&g, ygrid);
        for j in 0..phase_grid.xi.n() {
            let want = k_kernel[[i, j]];
            let got = div_row[j] * inv_2pi;
            residual = residual.max((got - want).norm());
            scale = scale.max(want.norm());
        }
    }
    Ok(DivergenceFormReport {
        symbol_sup,
        declared_lipschitz: lip,
        divergence_residual: residual / scale.max(1e-300),
    })
}
