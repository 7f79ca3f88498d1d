//! Velocity averages of phase-space trajectories and their fractional
//! Sobolev diagnostics: windowed space-time `H^s` norms, uniform-boundedness
//! sweeps over ħ, the one-dimensional density regularity estimate with its
//! Gaussian-mollifier machinery, and the homogeneous half-derivative bound.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::expr::Expr;
use crate::grid::{dual_grid, SpatialGrid};
use crate::semiclassics::fit_slope;
use crate::spectral;
use crate::wigner::{KernelField, WignerField};

/// Momentum cutoff ψ(ξ) used to average a phase-space density.
#[derive(Clone)]
pub struct Cutoff {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// ψ ≡ 1: the average is the raw density, flagged as untruncated
    pub untruncated: bool,
}

impl Cutoff {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), untruncated: false }
    }

    /// The default Gaussian cutoff `e^{-ξ²/2}`.
    pub fn gaussian() -> Self {
        Self::new(|xi| (-xi * xi / 2.0).exp())
    }

    pub fn one() -> Self {
        Self { f: Arc::new(|_| 1.0), untruncated: true }
    }

    /// Parse ψ(xi) from an expression in the variable `xi`.
    pub fn from_expr(src: &str) -> Result<Self> {
        let expr = Expr::parse(src, &["xi"])?;
        Ok(Self::new(move |xi| expr.eval(&[xi], 1.0)))
    }

    pub fn value(&self, xi: f64) -> f64 {
        (self.f)(xi)
    }
}

/// Real field over a uniform `(t, x)` product grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    /// row `i` is the spatial profile at time `t_i`
    pub values: Array2<f64>,
    pub t0: f64,
    pub dt: f64,
    pub xgrid: SpatialGrid,
}

/// Momentum average `∫ W(t, x, ξ) ψ(ξ) dξ` of a recorded trajectory.
pub fn velocity_average(
    traj: &Trajectory<WignerField>,
    cutoff: &Cutoff,
) -> Result<SpaceTimeField> {
    if traj.frames.len() < 2 {
        return Err(Error::InvalidParameter("trajectory needs at least two frames".into()));
    }
    let dt = traj.recording_dt();
    for w in traj.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(Error::InvalidParameter("recorded times must be uniform".into()));
        }
    }
    let grid = &traj.frames[0].grid;
    let samples: Vec<f64> = grid.xi.frequencies().iter().map(|&xi| cutoff.value(xi)).collect();
    if !cutoff.untruncated {
        let sup = samples.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let jump = samples.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0f64, f64::max);
        if sup > 0.0 && jump > 0.5 * sup {
            return Err(Error::Resolution(format!(
                "cutoff varies by {jump:.3e} between adjacent momentum nodes (sup {sup:.3e})"
            )));
        }
    }
    let dxi = grid.xi.spacing();
    let nx = grid.x.n();
    let mut values = Array2::<f64>::zeros((traj.frames.len(), nx));
    for (i, frame) in traj.frames.iter().enumerate() {
        for j in 0..nx {
            let acc: f64 = frame
                .values
                .row(j)
                .iter()
                .zip(&samples)
                .map(|(&w, &p)| w * p)
                .sum();
            values[[i, j]] = acc * dxi;
        }
    }
    Ok(SpaceTimeField { values, t0: traj.times[0], dt, xgrid: grid.x })
}

/// Smooth cosine taper: 1 on the interior, rolling to 0 over `fraction` of
/// the axis at each end.
fn taper_weight(j: usize, n: usize, fraction: f64) -> f64 {
    let w = (fraction * n as f64).max(1.0);
    let j = j as f64;
    let edge = n as f64 - 1.0;
    let d = j.min(edge - j);
    if d >= w {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * (1.0 - d / w)).cos())
    }
}

/// Windowed space-time fractional Sobolev norm of order `s ∈ [0, 1]`:
/// both axes are tapered (10% cosine roll-off) and the norm is
/// `(ΣΣ (1 + τ² + κ²)^s |F|² dτ dκ / (2π)²)^{1/2}` over the discrete
/// space-time frequencies.
pub fn hs_norm_time_space(f: &SpaceTimeField, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("order s = {s} must lie in [0, 1]")));
    }
    let (nt, nx) = f.values.dim();
    let mut work = Array2::<Complex64>::zeros((nt, nx));
    for i in 0..nt {
        let wt = taper_weight(i, nt, 0.1);
        for j in 0..nx {
            let wx = taper_weight(j, nx, 0.1);
            work[[i, j]] = Complex64::new(f.values[[i, j]] * wt * wx, 0.0);
        }
    }
    // transform in x (rows), then in t (columns)
    let dx = f.xgrid.spacing();
    let x0 = f.xgrid.origin();
    for i in 0..nt {
        let row: Vec<Complex64> = work.row(i).to_vec();
        let coeffs = spectral::forward_raw(&row, dx, x0);
        for (j, c) in coeffs.into_iter().enumerate() {
            work[[i, j]] = c;
        }
    }
    for j in 0..nx {
        let col: Vec<Complex64> = work.column(j).to_vec();
        let coeffs = spectral::forward_raw(&col, f.dt, f.t0);
        for (i, c) in coeffs.into_iter().enumerate() {
            work[[i, j]] = c;
        }
    }
    let taus = spectral::frequencies(nt, f.dt * nt as f64);
    let kappas = spectral::frequencies(nx, f.xgrid.length());
    let dtau = 2.0 * std::f64::consts::PI / (f.dt * nt as f64);
    let dkappa = f.xgrid.frequency_spacing();
    let cell = dtau * dkappa / (2.0 * std::f64::consts::PI).powi(2);
    let mut acc = 0.0;
    for (i, &tau) in taus.iter().enumerate() {
        for (j, &kappa) in kappas.iter().enumerate() {
            let weight = (1.0 + tau * tau + kappa * kappa).powf(s);
            acc += weight * work[[i, j]].norm_sqr();
        }
    }
    Ok((acc * cell).sqrt())
}

/// Static spatial `H^s` norm of a decaying field (no taper).
pub fn hs_norm_1d(values: &[f64], grid: &SpatialGrid, s: f64) -> f64 {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let coeffs = spectral::forward(&complex, grid);
    let freqs = dual_grid(grid);
    let cell = freqs.spacing() / (2.0 * std::f64::consts::PI);
    let acc: f64 = coeffs
        .iter()
        .zip(freqs.frequencies())
        .map(|(c, &k)| (1.0 + k * k).powf(s) * c.norm_sqr())
        .sum();
    (acc * cell).sqrt()
}

/// Homogeneous half-derivative norm `(Σ |κ| |f̂|² dκ / 2π)^{1/2}`.
pub fn homogeneous_half_norm_1d(values: &[f64], grid: &SpatialGrid) -> f64 {
    let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let coeffs = spectral::forward(&complex, grid);
    let freqs = dual_grid(grid);
    let cell = freqs.spacing() / (2.0 * std::f64::consts::PI);
    let acc: f64 = coeffs
        .iter()
        .zip(freqs.frequencies())
        .map(|(c, &k)| k.abs() * c.norm_sqr())
        .sum();
    (acc * cell).sqrt()
}

/// Sobolev order gained by averaging when the source has `n` momentum
/// derivatives: `s = 1/(2(n+1))`.
pub fn averaging_order(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 + 1.0))
}

/// One ħ-leg of a uniform-boundedness sweep.
pub struct SobolevSweepLeg {
    pub hbar: f64,
    /// tr(R²) of the underlying family member
    pub hs_trace: f64,
    pub field: SpaceTimeField,
}

/// Sweep outcome: weighted norms per ħ, the fitted log-log slope, and the
/// boundedness verdict (slope at least -0.05 and spread below a factor 3).
#[derive(Debug, Clone)]
pub struct SobolevReport {
    pub s: f64,
    pub beta: f64,
    pub per_hbar: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
    pub fit_residual: f64,
    pub spread: f64,
    pub bounded_pass: bool,
}

/// Evaluate `ħ^β ‖ρ_ψ‖_{H^s}` across a family. When `hs_constant = Some(C)`
/// every member must satisfy the scaling hypothesis
/// `tr(R²) ≤ C² (2πħ)^d`; passing `None` opts out (the bound then carries no
/// uniformity guarantee).
pub fn sobolev_sweep(
    legs: &[SobolevSweepLeg],
    s: f64,
    beta: f64,
    hs_constant: Option<f64>,
) -> Result<SobolevReport> {
    if legs.len() < 2 {
        return Err(Error::InvalidParameter("sweep needs at least two legs".into()));
    }
    if let Some(c) = hs_constant {
        for leg in legs {
            let cap = c * c * 2.0 * std::f64::consts::PI * leg.hbar;
            if leg.hs_trace > cap * (1.0 + 1e-9) {
                return Err(Error::HypothesisViolation(format!(
                    "tr(R²) = {:.6} exceeds C²(2πħ) = {cap:.6} at ħ = {}",
                    leg.hs_trace, leg.hbar
                )));
            }
        }
    }
    let mut per_hbar = Vec::new();
    for leg in legs {
        let norm = hs_norm_time_space(&leg.field, s)?;
        per_hbar.push((leg.hbar, leg.hbar.powf(beta) * norm));
    }
    let pts: Vec<(f64, f64)> =
        per_hbar.iter().map(|&(h, v)| (h.ln(), v.max(1e-300).ln())).collect();
    let (slope, residual) = fit_slope(&pts);
    let max = per_hbar.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let min = per_hbar.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let spread = max / min.max(1e-300);
    Ok(SobolevReport {
        s,
        beta,
        per_hbar,
        fitted_exponent: slope,
        fit_residual: residual,
        spread,
        bounded_pass: slope >= -0.05 && spread < 3.0,
    })
}

/// `γ_k = 2^k k! / ((2k+1) √(2π))`, the Gaussian tail moments entering the
/// mollifier estimate.
pub fn gaussian_moment_constant(k: usize) -> f64 {
    let factorial: f64 = (1..=k).map(|j| j as f64).product();
    2f64.powi(k as i32) * factorial
        / ((2 * k + 1) as f64 * (2.0 * std::f64::consts::PI).sqrt())
}

/// Per-momentum report of the mollifier inequality.
#[derive(Debug, Clone)]
pub struct MollifierReport {
    /// (ξ, lhs, rhs) per evaluated momentum
    pub per_xi: Vec<(f64, f64, f64)>,
    pub worst_ratio: f64,
}

/// Evaluate both sides of the pointwise estimate
///
/// `|f(ξ,0)|²/(n+2) ≤ (ε/2√π) ‖f(ξ,·)‖² + Σ_k γ_k ε^{-(2k+1)} |ξ|^{-2}
///  ‖β_k(ξ,·)‖²_{L²(0,∞)}`
///
/// with `β_k(ξ,z) = b_k(ξ,z) - (-1)^k b_k(ξ,-z)` and the equilibrated choice
/// `ε = |ξ|^{-1/(n+1)}` for `|ξ| ≥ 1`, `ε = 1/|ξ|` otherwise. Valid whenever
/// `ξ ∂_y f = Σ_k b_k y^k` holds.
pub fn mollifier_inequality(
    f: &Array2<Complex64>,
    sources: &[Array2<Complex64>],
    xi_values: &[f64],
    ygrid: &SpatialGrid,
) -> Result<MollifierReport> {
    let n = sources.len().checked_sub(1).ok_or_else(|| {
        Error::InvalidParameter("need at least one source".into())
    })?;
    let dy = ygrid.spacing();
    let j0 = ygrid.index_of_zero();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let gammas: Vec<f64> = (0..=n).map(gaussian_moment_constant).collect();
    let mut per_xi = Vec::new();
    let mut worst_ratio = 0.0f64;
    for (i, &xi) in xi_values.iter().enumerate() {
        if xi.abs() < 1e-12 {
            continue;
        }
        let eps = if xi.abs() >= 1.0 {
            xi.abs().powf(-1.0 / (n as f64 + 1.0))
        } else {
            1.0 / xi.abs()
        };
        let lhs = f[[i, j0]].norm_sqr() / (n as f64 + 2.0);
        let norm_f: f64 = f.row(i).iter().map(|v| v.norm_sqr()).sum::<f64>() * dy;
        let mut rhs = eps / (2.0 * sqrt_pi) * norm_f;
        for (k, b) in sources.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mut beta_sq = 0.0;
            for j in (j0 + 1)..ygrid.n() {
                let jm = 2 * j0 - j;
                let beta = b[[i, j]] - sign * b[[i, jm]];
                beta_sq += beta.norm_sqr();
            }
            beta_sq *= dy;
            rhs += gammas[k] * eps.powi(-(2 * k as i32 + 1)) / (xi * xi) * beta_sq;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst_ratio = worst_ratio.max(ratio);
        per_xi.push((xi, lhs, rhs));
    }
    Ok(MollifierReport { per_xi, worst_ratio })
}

fn kernel_axis_derivative(
    values: &Array2<Complex64>,
    grid: &SpatialGrid,
    axis: usize,
) -> Array2<Complex64> {
    let mut out = values.clone();
    match axis {
        0 => {
            for j in 0..values.ncols() {
                let col: Vec<Complex64> = values.column(j).to_vec();
                let d = spectral::derivative(&col, grid, 1);
                for (i, v) in d.into_iter().enumerate() {
                    out[[i, j]] = v;
                }
            }
        }
        1 => {
            for i in 0..values.nrows() {
                let row: Vec<Complex64> = values.row(i).to_vec();
                let d = spectral::derivative(&row, grid, 1);
                for (j, v) in d.into_iter().enumerate() {
                    out[[i, j]] = v;
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Partial transform of a kernel and its sources in the position variable,
/// producing the `(ξ, y)` data the mollifier estimate runs on.
pub fn transform_sources(
    kernel: &KernelField,
    sources: &[Array2<Complex64>],
) -> (Array2<Complex64>, Vec<Array2<Complex64>>, Vec<f64>) {
    let xgrid = &kernel.xgrid;
    let to_xi = |arr: &Array2<Complex64>| {
        let mut out = arr.clone();
        for j in 0..arr.ncols() {
            let col: Vec<Complex64> = arr.column(j).to_vec();
            let coeffs = spectral::forward(&col, xgrid);
            for (i, v) in coeffs.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        out
    };
    let f = to_xi(&kernel.values);
    let b: Vec<Array2<Complex64>> = sources.iter().map(to_xi).collect();
    let xi = dual_grid(xgrid).frequencies().to_vec();
    (f, b, xi)
}

/// Outcome of the one-dimensional density regularity estimate.
#[derive(Debug, Clone)]
pub struct DensityRegularityReport {
    pub n: usize,
    pub s: f64,
    /// `‖ρ‖_{H^s}`
    pub lhs: f64,
    /// squared bound assembled from the proof constants
    pub chain_bound_sq: f64,
    pub pass: bool,
    /// `tr|R| + ‖K‖ Σ ‖b_k‖²`, the right-hand side in product form
    pub theorem_rhs: f64,
    /// empirical constant `lhs / theorem_rhs`
    pub empirical_constant: f64,
    pub decomposition_residual: f64,
}

/// Verify `∂_y(-i∂_x) K = Σ u_k y^k` spectrally, then evaluate the Sobolev
/// bound `‖ρ‖²_{H^s} ≤ (1/π)[4 (tr|R|)² + (n+2)(√π ‖K‖² + 4π Σ γ_k ‖u_k‖²)]`
/// with `s = 1/(2(n+1))`, assembled from the factors of the mollifier chain.
pub fn density_regularity_1d(
    kernel: &KernelField,
    sources: &[Array2<Complex64>],
) -> Result<DensityRegularityReport> {
    let n = sources
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::InvalidParameter("need at least one source".into()))?;
    let dx_field = kernel_axis_derivative(&kernel.values, &kernel.xgrid, 0);
    let target = kernel_axis_derivative(&dx_field, &kernel.ygrid, 1)
        .mapv(|v| Complex64::new(0.0, -1.0) * v);
    let mut reconstructed = Array2::<Complex64>::zeros(target.raw_dim());
    for (j, y) in kernel.ygrid.nodes().enumerate() {
        for (k, u) in sources.iter().enumerate() {
            let yk = y.powi(k as i32);
            for i in 0..target.nrows() {
                reconstructed[[i, j]] += u[[i, j]] * yk;
            }
        }
    }
    let scale = target.iter().map(|v| v.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let residual = target
        .iter()
        .zip(reconstructed.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max)
        / scale;
    if residual > 1e-6 {
        return Err(Error::InvalidDecomposition { residual, tol: 1e-6 });
    }

    let s = averaging_order(n);
    let rho = kernel.diagonal();
    let lhs = hs_norm_1d(rho.as_slice().unwrap(), &kernel.xgrid, s);
    let dx = kernel.xgrid.spacing();
    let trace_abs: f64 = rho.iter().map(|v| v.abs()).sum::<f64>() * dx;
    let kernel_sq = kernel.l2_norm_sq();
    let cell = dx * kernel.ygrid.spacing();
    let pi = std::f64::consts::PI;
    let mut gamma_sum = 0.0;
    let mut bk_sum = 0.0;
    for (k, u) in sources.iter().enumerate() {
        let norm_sq: f64 = u.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
        gamma_sum += gaussian_moment_constant(k) * norm_sq;
        bk_sum += 2.0 * pi * norm_sq;
    }
    let chain_bound_sq = (4.0 * trace_abs * trace_abs
        + (n as f64 + 2.0) * (pi.sqrt() * kernel_sq + 4.0 * pi * gamma_sum))
        / pi;
    let theorem_rhs = trace_abs + kernel_sq.sqrt() * bk_sum;
    Ok(DensityRegularityReport {
        n,
        s,
        lhs,
        chain_bound_sq,
        pass: lhs * lhs <= chain_bound_sq * (1.0 + 1e-9),
        theorem_rhs,
        empirical_constant: lhs / theorem_rhs,
        decomposition_residual: residual,
    })
}

/// Homogeneous half-derivative bound: returns the `Ḣ^{1/2}` norm of the
/// density and the product `‖K‖^{1/2} ‖∂_x ∂_y K‖^{1/2}` controlling it.
pub fn homogeneous_half_bound(kernel: &KernelField) -> (f64, f64) {
    let rho = kernel.diagonal();
    let lhs = homogeneous_half_norm_1d(rho.as_slice().unwrap(), &kernel.xgrid);
    let dxdy = kernel_axis_derivative(
        &kernel_axis_derivative(&kernel.values, &kernel.xgrid, 0),
        &kernel.ygrid,
        1,
    );
    let cell = kernel.xgrid.spacing() * kernel.ygrid.spacing();
    let mixed_sq: f64 = dxdy.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell;
    let rhs = kernel.l2_norm_sq().sqrt().sqrt() * mixed_sq.sqrt().sqrt();
    (lhs, rhs)
}
