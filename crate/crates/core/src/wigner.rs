//! Phase-space transform engine: two-point kernels in center/difference
//! variables, their momentum transform, moments, and the L²/Hilbert–Schmidt
//! identity. The phase-space machinery lives on the line; moment extraction
//! from states is dimension-generic.

use ndarray::{Array1, Array2, ArrayD, Dimension};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{dual_grid, PhaseGrid, SpatialGrid, TensorGrid};
use crate::spectral;
use crate::states::QuantumState;

/// Two-point kernel in center/difference variables, sampled on `x × y`.
#[derive(Debug, Clone)]
pub struct KernelField {
    /// Row `i` holds the kernel at `x_i` as a function of `y`.
    pub values: Array2<Complex64>,
    pub xgrid: SpatialGrid,
    pub ygrid: SpatialGrid,
    pub hbar: f64,
}

impl KernelField {
    /// Worst violation of `K(x, -y) = conj K(x, y)` relative to the field max.
    pub fn hermitian_defect(&self) -> f64 {
        let ny = self.ygrid.n();
        let j0 = self.ygrid.index_of_zero();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for row in self.values.rows() {
            for j in 0..ny {
                scale = scale.max(row[j].norm());
                // mirror of node j around y = 0, modulo the periodic wrap
                let jm = (2 * j0).wrapping_sub(j) % ny;
                let d = (row[j] - row[jm].conj()).norm();
                worst = worst.max(d);
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Kernel diagonal (the position density): real part of the `y = 0` row.
    pub fn diagonal(&self) -> Array1<f64> {
        let j0 = self.ygrid.index_of_zero();
        self.values.column(j0).mapv(|v| v.re)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let cell = self.xgrid.spacing() * self.ygrid.spacing();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell
    }
}

/// Real phase-space density on `x × ξ` (momentum ascending).
#[derive(Debug, Clone)]
pub struct WignerField {
    pub values: Array2<f64>,
    pub grid: PhaseGrid,
    pub hbar: f64,
}

impl WignerField {
    pub fn mass(&self) -> f64 {
        let cell = self.grid.x.spacing() * self.grid.xi.spacing();
        self.values.sum() * cell
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let cell = self.grid.x.spacing() * self.grid.xi.spacing();
        self.values.iter().map(|v| v * v).sum::<f64>() * cell
    }

    pub fn l2_distance(&self, other: &WignerField) -> f64 {
        let cell = self.grid.x.spacing() * self.grid.xi.spacing();
        (self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * cell)
            .sqrt()
    }
}

/// Position density, current density and kinetic-energy density on the
/// position grid.
#[derive(Debug, Clone)]
pub struct MomentFields {
    pub rho: ArrayD<f64>,
    pub current: Vec<ArrayD<f64>>,
    pub energy: ArrayD<f64>,
    pub mass: f64,
    pub grid: TensorGrid,
    pub hbar: f64,
}

impl MomentFields {
    /// Pointwise `2mρE - m²|J|²`; nonnegative up to grid tolerance.
    pub fn cauchy_schwarz_defect(&self) -> ArrayD<f64> {
        let m = self.mass;
        let mut out = &self.rho * &self.energy * (2.0 * m);
        for j in &self.current {
            out = out - j * j * (m * m);
        }
        out
    }
}

/// Difference grid sized so the kernel of `state` decays inside the box and
/// the dual momentum grid reaches at least `xi_need`.
pub fn difference_grid_for(
    state: &QuantumState,
    min_points: usize,
    xi_need: f64,
) -> Result<SpatialGrid> {
    difference_grid_padded(state, min_points, xi_need, 0.0)
}

/// [`difference_grid_for`] with extra position padding, for trajectories
/// whose support will travel up to `pad` away from the initial state.
pub fn difference_grid_padded(
    state: &QuantumState,
    min_points: usize,
    xi_need: f64,
    pad: f64,
) -> Result<SpatialGrid> {
    if state.dim() != 1 {
        return Err(Error::InvalidParameter("phase-space machinery is one-dimensional".into()));
    }
    let rho = state.density();
    let grid = state.grid().axis(0);
    let peak = rho.iter().cloned().fold(0.0f64, f64::max);
    let mut r: f64 = grid.spacing();
    for (j, &v) in rho.iter().enumerate() {
        if v > 1e-26 * peak {
            r = r.max(grid.node(j).abs());
        }
    }
    let r = r + pad;
    // cover the kernel support |ħy| <= 2r with 10% margin, but never let the
    // shifted arguments reach the periodic image of the support (ghost mass
    // from the wrap corrupts log-derivative diagnostics)
    let ghost_free = 2.0 * (grid.length() - 2.0 * r).max(2.0 * grid.spacing());
    let ylen = (4.4 * r).min(ghost_free) / state.hbar;
    let mut n = min_points.max(8).next_power_of_two();
    if xi_need > 0.0 {
        while std::f64::consts::PI * n as f64 / ylen < 1.1 * xi_need {
            n *= 2;
        }
    }
    SpatialGrid::centered(n, ylen)
}

/// Kernel of a finite-rank state: `Σ λ_w ψ_w(x + ħy/2) conj ψ_w(x - ħy/2)`,
/// with band-limited evaluation of the shifted arguments.
pub fn kernel_from_state(state: &QuantumState, ygrid: &SpatialGrid) -> Result<KernelField> {
    if state.dim() != 1 {
        return Err(Error::InvalidParameter("phase-space machinery is one-dimensional".into()));
    }
    let xgrid = *state.grid().axis(0);
    let hbar = state.hbar;
    let max_shift = 0.5 * hbar * ygrid.nodes().fold(0.0f64, |a, y| a.max(y.abs()));
    if max_shift > 0.5 * xgrid.length() {
        let edge = state
            .waves
            .iter()
            .map(|w| w.boundary_magnitude())
            .fold(0.0f64, f64::max);
        if edge > 1e-10 {
            return Err(Error::Resolution(format!(
                "shifted argument reach {max_shift:.3} exceeds the box half-width with \
                 boundary magnitude {edge:.3e}"
            )));
        }
    }
    let n = xgrid.n();
    let ny = ygrid.n();
    let mut values = Array2::<Complex64>::zeros((n, ny));
    let bin_freqs = bin_frequencies(n, xgrid.length());
    for (weight, wave) in state.weights.iter().zip(&state.waves) {
        let mut psi_hat: Vec<Complex64> = wave.line().to_vec();
        spectral::fft_in_place(&mut psi_hat);
        let mut plus = vec![Complex64::default(); n];
        let mut minus = vec![Complex64::default(); n];
        for (j, y) in ygrid.nodes().enumerate() {
            let s = 0.5 * hbar * y;
            for b in 0..n {
                let phase = Complex64::from_polar(1.0, bin_freqs[b] * s);
                plus[b] = psi_hat[b] * phase;
                minus[b] = psi_hat[b] * phase.conj();
            }
            spectral::ifft_in_place(&mut plus);
            spectral::ifft_in_place(&mut minus);
            let inv_n = 1.0 / n as f64;
            for i in 0..n {
                let p = plus[i] * inv_n;
                let m = minus[i] * inv_n;
                values[[i, j]] += weight * p * m.conj();
            }
        }
    }
    Ok(KernelField { values, xgrid, ygrid: *ygrid, hbar })
}

/// Frequencies in FFT bin order for a grid of size `n` and length `L`.
pub(crate) fn bin_frequencies(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|b| {
            let k = if b <= n / 2 - 1 { b as isize } else { b as isize - n as isize };
            k as f64 * base
        })
        .collect()
}

/// Phase-space density of a kernel: `(2π)^{-1}` times its difference-variable
/// transform. Errors if the kernel fails Hermitian symmetry or the transform
/// has a material imaginary part.
pub fn wigner_from_kernel(kernel: &KernelField) -> Result<WignerField> {
    let defect = kernel.hermitian_defect();
    if defect > 1e-6 {
        return Err(Error::Inconsistency(format!(
            "kernel violates Hermitian symmetry: relative defect {defect:.3e}"
        )));
    }
    let grid = PhaseGrid::new(kernel.xgrid, kernel.ygrid)?;
    let n = kernel.xgrid.n();
    let ny = kernel.ygrid.n();
    let inv_2pi = 1.0 / (2.0 * std::f64::consts::PI);
    let mut values = Array2::<f64>::zeros((n, ny));
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for i in 0..n {
        let row: Vec<Complex64> = kernel.values.row(i).to_vec();
        let coeffs = spectral::forward(&row, &kernel.ygrid);
        for (j, c) in coeffs.iter().enumerate() {
            let w = c * inv_2pi;
            max_re = max_re.max(w.re.abs());
            max_im = max_im.max(w.im.abs());
            values[[i, j]] = w.re;
        }
    }
    if max_im > 1e-6 * max_re.max(1e-300) {
        return Err(Error::Inconsistency(format!(
            "transform has imaginary residue {:.3e} relative to {:.3e}",
            max_im, max_re
        )));
    }
    Ok(WignerField { values, grid, hbar: kernel.hbar })
}

/// Inverse of [`wigner_from_kernel`].
pub fn kernel_from_wigner(w: &WignerField) -> KernelField {
    let two_pi = 2.0 * std::f64::consts::PI;
    let n = w.grid.x.n();
    let ny = w.grid.y.n();
    let mut values = Array2::<Complex64>::zeros((n, ny));
    for i in 0..n {
        let coeffs: Vec<Complex64> = w
            .values
            .row(i)
            .iter()
            .map(|&v| Complex64::new(v * two_pi, 0.0))
            .collect();
        let row = spectral::inverse(&coeffs, &w.grid.y);
        for (j, v) in row.into_iter().enumerate() {
            values[[i, j]] = v;
        }
    }
    KernelField { values, xgrid: w.grid.x, ygrid: w.grid.y, hbar: w.hbar }
}

/// Moments of a phase-space density, computed both by momentum quadrature and
/// by spectral difference-variable derivatives of the kernel at `y = 0`; the
/// two routes must agree to 1e-8.
pub fn moments(w: &WignerField, mass: f64) -> Result<MomentFields> {
    let n = w.grid.x.n();
    let dxi = w.grid.xi.spacing();
    let xi = w.grid.xi.frequencies();
    let mut rho = vec![0.0; n];
    let mut current = vec![0.0; n];
    let mut energy = vec![0.0; n];
    for i in 0..n {
        let row = w.values.row(i);
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (k, &v) in row.iter().enumerate() {
            m0 += v;
            m1 += xi[k] * v;
            m2 += xi[k] * xi[k] * v;
        }
        rho[i] = m0 * dxi;
        current[i] = m1 * dxi / mass;
        energy[i] = m2 * dxi / (2.0 * mass);
    }

    // kernel route: rho = K(x,0), J = -i ∂_y K / m, E = -Δ_y K / 2m at y = 0
    let kernel = kernel_from_wigner(w);
    let j0 = kernel.ygrid.index_of_zero();
    let mut worst = 0.0f64;
    let scale = rho.iter().cloned().fold(1.0f64, f64::max);
    for i in 0..n {
        let row: Vec<Complex64> = kernel.values.row(i).to_vec();
        let d1 = spectral::derivative(&row, &kernel.ygrid, 1);
        let d2 = spectral::derivative(&row, &kernel.ygrid, 2);
        let rho_k = row[j0].re;
        let j_k = (Complex64::new(0.0, -1.0) * d1[j0]).re / mass;
        let e_k = -d2[j0].re / (2.0 * mass);
        worst = worst
            .max((rho_k - rho[i]).abs())
            .max((j_k - current[i]).abs())
            .max((e_k - energy[i]).abs());
    }
    if worst > 1e-8 * scale {
        return Err(Error::Inconsistency(format!(
            "moment cross-check failed: quadrature and kernel derivatives differ by {worst:.3e}"
        )));
    }
    let min_rho = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_rho < -1e-8 * scale {
        return Err(Error::Inconsistency(format!(
            "density went negative: min {min_rho:.3e}"
        )));
    }

    let grid = TensorGrid::line(w.grid.x);
    let shape = ndarray::IxDyn(&[n]);
    Ok(MomentFields {
        rho: ArrayD::from_shape_vec(shape.clone(), rho).unwrap(),
        current: vec![ArrayD::from_shape_vec(shape.clone(), current).unwrap()],
        energy: ArrayD::from_shape_vec(shape, energy).unwrap(),
        mass,
        grid,
        hbar: w.hbar,
    })
}

/// Moments straight from a state (any dimension): the difference-variable
/// derivatives of the kernel at `y = 0` expressed through ψ and its spectral
/// derivatives.
pub fn moments_from_state(state: &QuantumState, mass: f64) -> MomentFields {
    let grid = state.grid().clone();
    let d = grid.dim();
    let hbar = state.hbar;
    let shape = state.waves[0].samples.raw_dim();
    let mut rho = ArrayD::<f64>::zeros(shape.clone());
    let mut current = vec![ArrayD::<f64>::zeros(shape.clone()); d];
    let mut energy = ArrayD::<f64>::zeros(shape);
    for (weight, wave) in state.weights.iter().zip(&state.waves) {
        rho.zip_mut_with(&wave.samples, |r, v| *r += weight * v.norm_sqr());
        let grad = wave.gradient();
        let lap = wave.laplacian();
        for (k, g) in grad.iter().enumerate() {
            ndarray::Zip::from(&mut current[k])
                .and(&wave.samples)
                .and(g)
                .for_each(|j, &psi, &gpsi| {
                    *j += weight * hbar / mass * (psi.conj() * gpsi).im;
                });
        }
        let mut grad_sq = ArrayD::<f64>::zeros(wave.samples.raw_dim());
        for g in &grad {
            grad_sq.zip_mut_with(g, |a, v| *a += v.norm_sqr());
        }
        ndarray::Zip::from(&mut energy)
            .and(&wave.samples)
            .and(&lap)
            .and(&grad_sq)
            .for_each(|e, &psi, &lpsi, &gs| {
                *e += weight * hbar * hbar / (4.0 * mass) * (gs - (psi.conj() * lpsi).re);
            });
    }
    MomentFields { rho, current, energy, mass, grid, hbar }
}

/// Momentum distribution `Σ λ_w |F ψ_w(Ξ)|²` on the dual of the position grid
/// (one-dimensional). Integrates to `2π`.
pub fn momentum_spectrum(state: &QuantumState) -> Result<(Vec<f64>, Array1<f64>)> {
    if state.dim() != 1 {
        return Err(Error::InvalidParameter("momentum spectrum is one-dimensional".into()));
    }
    let grid = state.grid().axis(0);
    let freqs = dual_grid(grid);
    let mut out = Array1::<f64>::zeros(grid.n());
    for (weight, wave) in state.weights.iter().zip(&state.waves) {
        let coeffs = spectral::forward(&wave.line().to_vec(), grid);
        for (j, c) in coeffs.iter().enumerate() {
            out[j] += weight * c.norm_sqr();
        }
    }
    Ok((freqs.frequencies().to_vec(), out))
}

/// Both sides of `‖W‖² = (2πħ)^{-d} tr(R²)` and their relative gap.
#[derive(Debug, Clone, Copy)]
pub struct HsIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_gap: f64,
}

pub fn hilbert_schmidt_identity(w: &WignerField, state: &QuantumState) -> HsIdentity {
    let lhs = w.l2_norm_sq();
    let d = state.dim() as i32;
    let rhs = crate::states::hilbert_schmidt_trace(state)
        / (2.0 * std::f64::consts::PI * state.hbar).powi(d);
    HsIdentity { lhs, rhs, relative_gap: (lhs - rhs).abs() / rhs.max(1e-300) }
}

/// Spatial and momentum tail masses of a family of states at radius `R`.
///
/// The momentum tail is `∫_{|Ξ| > R/ħ} ρ̂(Ξ) dΞ` with `ρ̂` the (unnormalized)
/// momentum distribution of total mass `(2π)^d`; equivalently the mass of the
/// rescaled spectrum beyond radius `R`.
#[derive(Debug, Clone)]
pub struct TailReport {
    /// (hbar, spatial tail at R, momentum tail at R)
    pub per_state: Vec<(f64, f64, f64)>,
    /// Tails at radius 2R, used for the vanishing flag.
    pub per_state_2r: Vec<(f64, f64, f64)>,
    /// True when doubling the radius at least halves every nonzero tail.
    pub vanishing: bool,
}

pub fn tail_masses(family: &[QuantumState], radius: f64) -> Result<TailReport> {
    let mut per_state = Vec::new();
    let mut per_state_2r = Vec::new();
    for state in family {
        per_state.push(tails_at(state, radius)?);
        per_state_2r.push(tails_at(state, 2.0 * radius)?);
    }
    let vanishing = per_state.iter().zip(&per_state_2r).all(|(a, b)| {
        let ok = |t: f64, t2: f64| t2 <= 0.5 * t + 1e-12;
        ok(a.1, b.1) && ok(a.2, b.2)
    });
    Ok(TailReport { per_state, per_state_2r, vanishing })
}

fn tails_at(state: &QuantumState, radius: f64) -> Result<(f64, f64, f64)> {
    let grid = state.grid();
    let rho = state.density();
    let cell = grid.cell();
    let mut spatial = 0.0;
    for (idx, &v) in rho.indexed_iter() {
        let x = grid.point(idx.slice());
        let r2: f64 = x.iter().map(|c| c * c).sum();
        if r2.sqrt() > radius {
            spatial += v * cell;
        }
    }
    let (freqs, spec) = momentum_spectrum(state)?;
    let dxi = grid.axis(0).frequency_spacing();
    let cutoff = radius / state.hbar;
    let momentum: f64 = freqs
        .iter()
        .zip(spec.iter())
        .filter(|(k, _)| k.abs() > cutoff)
        .map(|(_, &v)| v * dxi)
        .sum();
    Ok((state.hbar, spatial, momentum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TensorGrid;
    use crate::states::{
        coherent_state, mixed_state, oscillator_eigenstate, wkb_state, BuildOpts,
    };

    fn line(n: usize, len: f64) -> TensorGrid {
        TensorGrid::line(SpatialGrid::centered(n, len).unwrap())
    }

    fn pure_coherent(hbar: f64, q: f64, p: f64) -> QuantumState {
        let grid = line(256, 16.0);
        QuantumState::pure(
            coherent_state(&grid, &[q], &[p], hbar, &BuildOpts::default()).unwrap(),
        )
    }

    #[test]
    fn kernel_diagonal_is_gaussian_density() {
        let hbar = 0.2;
        let q = 0.7;
        let state = pure_coherent(hbar, q, 0.0);
        let ygrid = difference_grid_for(&state, 128, 0.0).unwrap();
        let kernel = kernel_from_state(&state, &ygrid).unwrap();
        let diag = kernel.diagonal();
        let norm = (std::f64::consts::PI * hbar).powf(-0.5);
        for (i, &v) in diag.iter().enumerate() {
            let x = kernel.xgrid.node(i);
            let expected = norm * (-(x - q) * (x - q) / hbar).exp();
            assert!((v - expected).abs() < 1e-9, "x = {x}: {v} vs {expected}");
        }
    }

    #[test]
    fn kernel_diagonal_real_nonnegative_for_mixtures() {
        let grid = SpatialGrid::centered(256, 16.0).unwrap();
        let hbar = 0.15;
        let waves: Vec<_> = (0..3)
            .map(|n| oscillator_eigenstate(&grid, n, hbar, &BuildOpts::default()).unwrap())
            .collect();
        let state = mixed_state(waves, vec![0.5, 0.3, 0.2]).unwrap();
        let ygrid = difference_grid_for(&state, 128, 0.0).unwrap();
        let kernel = kernel_from_state(&state, &ygrid).unwrap();
        let j0 = kernel.ygrid.index_of_zero();
        for row in kernel.values.rows() {
            assert!(row[j0].im.abs() < 1e-12);
            assert!(row[j0].re > -1e-12);
        }
    }

    #[test]
    fn kernel_is_linear_in_the_state() {
        let grid = SpatialGrid::centered(256, 16.0).unwrap();
        let hbar = 0.2;
        let w0 = oscillator_eigenstate(&grid, 0, hbar, &BuildOpts::default()).unwrap();
        let w1 = oscillator_eigenstate(&grid, 1, hbar, &BuildOpts::default()).unwrap();
        let ygrid = SpatialGrid::centered(128, 60.0).unwrap();
        let mix = mixed_state(vec![w0.clone(), w1.clone()], vec![0.5, 0.5]).unwrap();
        let k_mix = kernel_from_state(&mix, &ygrid).unwrap();
        let k0 = kernel_from_state(&QuantumState::pure(w0), &ygrid).unwrap();
        let k1 = kernel_from_state(&QuantumState::pure(w1), &ygrid).unwrap();
        let err = k_mix
            .values
            .iter()
            .zip(k0.values.iter().zip(k1.values.iter()))
            .map(|(m, (a, b))| (m - 0.5 * (a + b)).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn wigner_of_coherent_state_matches_closed_form() {
        let hbar = 0.3;
        let state = pure_coherent(hbar, 0.0, 0.0);
        let ygrid = difference_grid_for(&state, 256, 0.0).unwrap();
        let kernel = kernel_from_state(&state, &ygrid).unwrap();
        let w = wigner_from_kernel(&kernel).unwrap();
        let norm = 1.0 / (std::f64::consts::PI * hbar);
        let mut worst = 0.0f64;
        for i in 0..w.grid.x.n() {
            let x = w.grid.x.node(i);
            for (j, &xi) in w.grid.xi.frequencies().iter().enumerate() {
                let expected = norm * (-(x * x + xi * xi) / hbar).exp();
                worst = worst.max((w.values[[i, j]] - expected).abs());
            }
        }
        assert!(worst < 1e-8, "sup error {worst}");
    }

    #[test]
    fn wigner_kernel_round_trip() {
        let state = pure_coherent(0.2, 0.5, 1.0);
        let ygrid = difference_grid_for(&state, 128, 0.0).unwrap();
        let kernel = kernel_from_state(&state, &ygrid).unwrap();
        let w = wigner_from_kernel(&kernel).unwrap();
        let back = kernel_from_wigner(&w);
        let scale = kernel.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        let err = kernel
            .values
            .iter()
            .zip(back.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-10 * scale);
    }

    #[test]
    fn wigner_mass_is_one() {
        let grid = SpatialGrid::centered(256, 16.0).unwrap();
        let hbar = 0.1;
        let waves: Vec<_> = (0..3)
            .map(|n| oscillator_eigenstate(&grid, n, hbar, &BuildOpts::default()).unwrap())
            .collect();
        let state = mixed_state(waves, vec![0.5, 0.25, 0.25]).unwrap();
        let ygrid = difference_grid_for(&state, 256, 0.0).unwrap();
        let w = wigner_from_kernel(&kernel_from_state(&state, &ygrid).unwrap()).unwrap();
        assert!((w.mass() - 1.0).abs() < 1e-8, "mass {}", w.mass());
    }

    #[test]
    fn moments_of_boosted_coherent_state() {
        // J = p rho / m at p = 2, m = 1, and J = 0 for the unboosted packet.
        let state = pure_coherent(0.2, 0.0, 2.0);
        let ygrid = difference_grid_for(&state, 256, 8.0).unwrap();
        let w = wigner_from_kernel(&kernel_from_state(&state, &ygrid).unwrap()).unwrap();
        let m = moments(&w, 1.0).unwrap();
        let peak = m.rho.iter().cloned().fold(0.0f64, f64::max);
        for (r, j) in m.rho.iter().zip(m.current[0].iter()) {
            assert!((j - 2.0 * r).abs() < 1e-7 * peak.max(*r));
        }
        let rest = pure_coherent(0.2, 0.0, 0.0);
        let w0 = wigner_from_kernel(
            &kernel_from_state(&rest, &difference_grid_for(&rest, 256, 4.0).unwrap()).unwrap(),
        )
        .unwrap();
        let m0 = moments(&w0, 1.0).unwrap();
        let jmax = m0.current[0].iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        assert!(jmax < 1e-10);
    }

    #[test]
    fn moments_match_state_route() {
        let state = pure_coherent(0.2, 0.3, 1.0);
        let ygrid = difference_grid_for(&state, 256, 8.0).unwrap();
        let w = wigner_from_kernel(&kernel_from_state(&state, &ygrid).unwrap()).unwrap();
        let a = moments(&w, 1.0).unwrap();
        let b = moments_from_state(&state, 1.0);
        let scale = b.rho.iter().cloned().fold(1.0f64, f64::max);
        for (x, y) in a.rho.iter().zip(b.rho.iter()) {
            assert!((x - y).abs() < 1e-8 * scale);
        }
        for (x, y) in a.current[0].iter().zip(b.current[0].iter()) {
            assert!((x - y).abs() < 1e-8 * scale);
        }
        for (x, y) in a.energy.iter().zip(b.energy.iter()) {
            assert!((x - y).abs() < 1e-7 * scale);
        }
    }

    #[test]
    fn wkb_velocity_is_phase_gradient() {
        // u = J/rho = S'/m for psi = a e^{iS/hbar}; finite-difference oracle.
        let grid = line(512, 16.0);
        let hbar = 0.1;
        let sfun = |x: f64| 0.4 * x + 0.05 * x * x;
        let wf = wkb_state(
            &grid,
            |x| (-x[0] * x[0] / 2.0).exp(),
            |x| sfun(x[0]),
            hbar,
            &BuildOpts::default(),
        )
        .unwrap();
        let state = QuantumState::pure(wf);
        let m = moments_from_state(&state, 1.0);
        let g = grid.axis(0);
        let h = 1e-5;
        for (i, (&r, &j)) in m.rho.iter().zip(m.current[0].iter()).enumerate() {
            if r > 1e-4 {
                let x = g.node(i);
                let sp = (sfun(x + h) - sfun(x - h)) / (2.0 * h);
                assert!(((j / r) - sp).abs() < 1e-4, "x = {x}");
            }
        }
    }

    #[test]
    fn momentum_spectrum_of_pure_state() {
        let hbar = 0.25;
        let p = 1.0;
        let state = pure_coherent(hbar, 0.0, p);
        let (freqs, spec) = momentum_spectrum(&state).unwrap();
        // mass: ∫ rho_hat = 2π
        let dxi = state.grid().axis(0).frequency_spacing();
        let total: f64 = spec.iter().sum::<f64>() * dxi;
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-8);
        // Gaussian centered at p / hbar with variance 1/(2 hbar)... compare
        // against the transform-side closed form |F psi|^2.
        let amp = 2.0 * (std::f64::consts::PI * hbar).sqrt();
        for (k, &v) in freqs.iter().zip(spec.iter()) {
            let arg = hbar * (k - p / hbar).powi(2);
            let expected = amp * (-arg).exp();
            assert!((v - expected).abs() < 1e-8 * amp, "k = {k}");
        }
    }

    #[test]
    fn hs_identity_pure_and_mixed() {
        let hbar = 0.1;
        let state = pure_coherent(hbar, 0.0, 0.0);
        let ygrid = difference_grid_for(&state, 256, 0.0).unwrap();
        let w = wigner_from_kernel(&kernel_from_state(&state, &ygrid).unwrap()).unwrap();
        let id = hilbert_schmidt_identity(&w, &state);
        let expected = 1.0 / (2.0 * std::f64::consts::PI * hbar);
        assert!((id.lhs - expected).abs() < 1e-8 * expected, "lhs = {}", id.lhs);
        assert!(id.relative_gap < 1e-8);

        let grid = SpatialGrid::centered(256, 16.0).unwrap();
        let waves: Vec<_> = (0..4)
            .map(|n| oscillator_eigenstate(&grid, n, hbar, &BuildOpts::default()).unwrap())
            .collect();
        let mix = mixed_state(waves, vec![0.25; 4]).unwrap();
        let ygrid = difference_grid_for(&mix, 256, 0.0).unwrap();
        let wm = wigner_from_kernel(&kernel_from_state(&mix, &ygrid).unwrap()).unwrap();
        let idm = hilbert_schmidt_identity(&wm, &mix);
        assert!((idm.rhs - expected / 4.0).abs() < 1e-12);
        assert!(idm.relative_gap < 1e-8, "gap {}", idm.relative_gap);
    }

    #[test]
    fn hs_identity_against_double_sum_oracle() {
        // Independent oracle: tr(R²) computed from the raw two-point kernel
        // R(X, Y) = Σ λ ψ(X) conj ψ(Y) summed over the full (X, Y) grid.
        let grid = SpatialGrid::centered(128, 16.0).unwrap();
        let hbar = 0.2;
        let waves: Vec<_> = (0..3)
            .map(|n| oscillator_eigenstate(&grid, n, hbar, &BuildOpts::default()).unwrap())
            .collect();
        let state = mixed_state(waves, vec![0.6, 0.3, 0.1]).unwrap();
        let n = grid.n();
        let dx = grid.spacing();
        let mut tr2 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut r = Complex64::default();
                for (w, wave) in state.weights.iter().zip(&state.waves) {
                    let line = wave.line();
                    r += w * line[a] * line[b].conj();
                }
                tr2 += r.norm_sqr() * dx * dx;
            }
        }
        let direct = crate::states::hilbert_schmidt_trace(&state);
        assert!((tr2 - direct).abs() < 1e-10, "oracle {tr2} vs {direct}");
    }

    #[test]
    fn coherent_tails_vanish() {
        let family: Vec<QuantumState> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&h| pure_coherent(h, 0.5, 1.0))
            .collect();
        let report = tail_masses(&family, 3.0).unwrap();
        assert!(report.vanishing);
        for (_, s, m) in &report.per_state {
            assert!(*s < 1e-6);
            assert!(*m < 1e-4);
        }
    }

    #[test]
    fn kinetic_energy_bounds_momentum_tail() {
        // bounded kinetic energy forces the rescaled momentum tail below
        // (2π)^d 2mC / R².
        let mass = 1.0;
        for &hbar in &[0.4, 0.2, 0.1] {
            let state = pure_coherent(hbar, 0.0, 1.0);
            let m = moments_from_state(&state, mass);
            let ke: f64 = m.energy.iter().sum::<f64>() * m.grid.cell();
            for &r in &[1.5f64, 2.0, 3.0] {
                let report = tail_masses(std::slice::from_ref(&state), r).unwrap();
                let bound = (2.0 * std::f64::consts::PI) * 2.0 * mass * ke / (r * r);
                assert!(
                    report.per_state[0].2 <= bound + 1e-12,
                    "hbar {hbar} R {r}: tail {} bound {bound}",
                    report.per_state[0].2
                );
            }
        }
    }

    #[test]
    fn compact_support_spatial_tail_is_zero() {
        let grid = line(256, 16.0);
        let bump = |x: &[f64]| {
            let r = 1.0 - x[0] * x[0];
            if r > 0.0 {
                r * r
            } else {
                0.0
            }
        };
        let wf = wkb_state(&grid, bump, |_| 0.0, 0.1, &BuildOpts::default()).unwrap();
        let state = QuantumState::pure(wf);
        let report = tail_masses(std::slice::from_ref(&state), 1.5).unwrap();
        assert_eq!(report.per_state[0].1, 0.0);
    }
}
