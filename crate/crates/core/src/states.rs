//! State constructors: wave packets, WKB profiles, concentrating profiles,
//! harmonic-oscillator eigenfunctions, and finite-rank mixtures.

use std::sync::Arc;

use ndarray::{ArrayD, Dimension};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{check_hbar, SpatialGrid, TensorGrid};
use crate::spectral;

/// What to do when a constructed state fails the boundary-decay check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Log and continue. Periodic aliasing then degrades Sobolev diagnostics
    /// silently, so the warning should not be ignored in sweeps.
    #[default]
    Warn,
    Error,
}

/// Options shared by the state constructors.
#[derive(Debug, Clone, Copy)]
pub struct BuildOpts {
    pub boundary: BoundaryPolicy,
    /// Maximum |ψ| allowed on the box edge.
    pub decay_threshold: f64,
}

impl Default for BuildOpts {
    fn default() -> Self {
        Self { boundary: BoundaryPolicy::Warn, decay_threshold: 1e-12 }
    }
}

impl BuildOpts {
    pub fn strict() -> Self {
        Self { boundary: BoundaryPolicy::Error, ..Self::default() }
    }
}

/// Complex samples of a normalized wavefunction on a tensor grid, together
/// with the Planck constant it was built for.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub samples: ArrayD<Complex64>,
    pub grid: TensorGrid,
    pub hbar: f64,
}

impl WaveFunction {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Discrete L² norm.
    pub fn norm(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }

    /// Discrete L² inner product `<self, other>`.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        self.samples
            .iter()
            .zip(other.samples.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.samples.mapv_inplace(|v| v / n);
        }
    }

    /// Position density |ψ|².
    pub fn density(&self) -> ArrayD<f64> {
        self.samples.mapv(|v| v.norm_sqr())
    }

    pub fn gradient(&self) -> Vec<ArrayD<Complex64>> {
        spectral::gradient(&self.samples, &self.grid)
    }

    pub fn laplacian(&self) -> ArrayD<Complex64> {
        spectral::laplacian(&self.samples, &self.grid)
    }

    /// Largest |ψ| over the nodes on the edge of the box.
    pub fn boundary_magnitude(&self) -> f64 {
        let shape = self.grid.shape();
        let mut worst: f64 = 0.0;
        for (idx, v) in self.samples.indexed_iter() {
            let on_edge =
                (0..shape.len()).any(|k| idx[k] == 0 || idx[k] == shape[k] - 1);
            if on_edge {
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// One-dimensional view of the samples; panics on higher dimensions.
    pub fn line(&self) -> ndarray::Array1<Complex64> {
        assert_eq!(self.dim(), 1, "line() requires a one-dimensional state");
        self.samples.clone().into_dimensionality::<ndarray::Ix1>().unwrap()
    }
}

fn finish(mut wf: WaveFunction, opts: &BuildOpts) -> Result<WaveFunction> {
    wf.normalize();
    let edge = wf.boundary_magnitude();
    if edge > opts.decay_threshold {
        match opts.boundary {
            BoundaryPolicy::Error => {
                return Err(Error::BoundaryDecay { edge, threshold: opts.decay_threshold })
            }
            BoundaryPolicy::Warn => log::warn!(
                "state does not decay at the box edge: |psi| = {edge:.3e} > {:.3e}",
                opts.decay_threshold
            ),
        }
    }
    Ok(wf)
}

fn check_momentum_resolved(
    grid: &TensorGrid,
    p: &[f64],
    hbar: f64,
    spectral_width: f64,
) -> Result<()> {
    for (k, axis) in grid.axes().iter().enumerate() {
        let kmax = std::f64::consts::PI / axis.spacing();
        let reach = p[k].abs() / hbar + spectral_width;
        if reach > kmax {
            return Err(Error::Resolution(format!(
                "momentum content reaches wavenumber {reach:.3}, past the axis-{k} \
                 Nyquist limit {kmax:.3}"
            )));
        }
    }
    Ok(())
}

/// Gaussian wave packet centered at position `q` with mean momentum `p`:
/// `(πħ)^{-d/4} e^{-|x-q|²/2ħ} e^{i p·(x - q/2)/ħ}`.
pub fn coherent_state(
    grid: &TensorGrid,
    q: &[f64],
    p: &[f64],
    hbar: f64,
    opts: &BuildOpts,
) -> Result<WaveFunction> {
    check_hbar(hbar)?;
    let d = grid.dim();
    if q.len() != d || p.len() != d {
        return Err(Error::InvalidParameter(format!(
            "center/momentum must have {d} components"
        )));
    }
    let margin = 6.0 * hbar.sqrt();
    for (k, axis) in grid.axes().iter().enumerate() {
        let lo = q[k] - axis.origin();
        let hi = axis.origin() + axis.length() - q[k];
        if lo < margin || hi < margin {
            return Err(Error::BoundaryDecay {
                edge: (-(lo.min(hi)).powi(2) / (2.0 * hbar)).exp(),
                threshold: (-(margin * margin) / (2.0 * hbar)).exp(),
            });
        }
    }
    check_momentum_resolved(grid, p, hbar, 3.0 / hbar.sqrt())?;
    let amp = (std::f64::consts::PI * hbar).powf(-(d as f64) / 4.0);
    let shape = grid.shape();
    let mut samples = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&shape));
    for (idx, v) in samples.indexed_iter_mut() {
        let x = grid.point(idx.slice());
        let mut arg = 0.0;
        let mut phase = 0.0;
        for k in 0..d {
            let dxk = x[k] - q[k];
            arg += dxk * dxk;
            phase += p[k] * (x[k] - 0.5 * q[k]);
        }
        *v = Complex64::from_polar(amp * (-arg / (2.0 * hbar)).exp(), phase / hbar);
    }
    finish(WaveFunction { samples, grid: grid.clone(), hbar }, opts)
}

/// Slowly modulated plane-like state `a(x) e^{i S(x)/ħ}`, renormalized on the
/// grid. The amplitude must be nonnegative and not identically zero.
pub fn wkb_state(
    grid: &TensorGrid,
    amplitude: impl Fn(&[f64]) -> f64,
    phase: impl Fn(&[f64]) -> f64,
    hbar: f64,
    opts: &BuildOpts,
) -> Result<WaveFunction> {
    check_hbar(hbar)?;
    let shape = grid.shape();
    let mut samples = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&shape));
    let mut max_amp: f64 = 0.0;
    for (idx, v) in samples.indexed_iter_mut() {
        let x = grid.point(idx.slice());
        let a = amplitude(&x);
        if a < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be nonnegative, got {a} at {x:?}"
            )));
        }
        max_amp = max_amp.max(a);
        *v = Complex64::from_polar(a, phase(&x) / hbar);
    }
    if max_amp == 0.0 {
        return Err(Error::InvalidParameter("amplitude vanishes everywhere".into()));
    }
    finish(WaveFunction { samples, grid: grid.clone(), hbar }, opts)
}

/// Profile concentrating at rate `ħ^α` under a plane phase:
/// `ħ^{-dα/2} a(x/ħ^α) e^{i p·x/ħ}`. `α = 0` degenerates to a WKB state with
/// linear phase.
pub fn scaled_state(
    grid: &TensorGrid,
    profile: impl Fn(&[f64]) -> f64,
    p: &[f64],
    alpha: f64,
    hbar: f64,
    opts: &BuildOpts,
) -> Result<WaveFunction> {
    check_hbar(hbar)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let d = grid.dim();
    if p.len() != d {
        return Err(Error::InvalidParameter(format!("momentum must have {d} components")));
    }
    let width = hbar.powf(alpha);
    for axis in grid.axes() {
        if width / axis.spacing() < 8.0 {
            return Err(Error::Resolution(format!(
                "profile width hbar^alpha = {width:.3e} spans fewer than 8 grid points \
                 (spacing {:.3e})",
                axis.spacing()
            )));
        }
    }
    check_momentum_resolved(grid, p, hbar, 3.0 / width)?;
    let amp = width.powf(-(d as f64) / 2.0);
    let shape = grid.shape();
    let mut samples = ArrayD::<Complex64>::zeros(ndarray::IxDyn(&shape));
    for (idx, v) in samples.indexed_iter_mut() {
        let x = grid.point(idx.slice());
        let scaled: Vec<f64> = x.iter().map(|&xk| xk / width).collect();
        let a = profile(&scaled);
        let phase: f64 = x.iter().zip(p).map(|(&xk, &pk)| xk * pk).sum();
        *v = Complex64::from_polar(amp * a, phase / hbar);
    }
    finish(WaveFunction { samples, grid: grid.clone(), hbar }, opts)
}

/// n-th harmonic oscillator eigenfunction at unit mass and frequency,
/// `(πħ)^{-1/4} (2^n n!)^{-1/2} H_n(x/√ħ) e^{-x²/2ħ}` (one-dimensional).
pub fn oscillator_eigenstate(
    grid: &SpatialGrid,
    n: usize,
    hbar: f64,
    opts: &BuildOpts,
) -> Result<WaveFunction> {
    check_hbar(hbar)?;
    let scale = hbar.sqrt();
    let norm = (std::f64::consts::PI * hbar).powf(-0.25)
        / (2f64.powi(n as i32) * factorial(n)).sqrt();
    let values: Vec<Complex64> = grid
        .nodes()
        .map(|x| {
            let z = x / scale;
            Complex64::new(norm * hermite(n, z) * (-z * z / 2.0).exp(), 0.0)
        })
        .collect();
    let samples = ArrayD::from_shape_vec(ndarray::IxDyn(&[grid.n()]), values).unwrap();
    finish(WaveFunction { samples, grid: TensorGrid::line(*grid), hbar }, opts)
}

fn hermite(n: usize, z: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * z;
    for k in 1..n {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Finite-rank density operator: convex weights over orthonormal waves.
#[derive(Debug, Clone)]
pub struct QuantumState {
    pub weights: Vec<f64>,
    pub waves: Vec<WaveFunction>,
    pub hbar: f64,
}

impl QuantumState {
    pub fn pure(wave: WaveFunction) -> Self {
        let hbar = wave.hbar;
        Self { weights: vec![1.0], waves: vec![wave], hbar }
    }

    pub fn rank(&self) -> usize {
        self.waves.len()
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.waves[0].grid
    }

    pub fn dim(&self) -> usize {
        self.waves[0].dim()
    }

    /// Σ λ_j |ψ_j|².
    pub fn density(&self) -> ArrayD<f64> {
        let mut rho = ArrayD::<f64>::zeros(self.waves[0].samples.raw_dim());
        for (w, wave) in self.weights.iter().zip(&self.waves) {
            rho.zip_mut_with(&wave.samples, |r, v| *r += w * v.norm_sqr());
        }
        rho
    }

    /// Worst pairwise orthonormality defect |<ψ_i, ψ_j> - δ_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.waves.len() {
            for j in i..self.waves.len() {
                let g = self.waves[i].inner(&self.waves[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("weights sum to {sum}, not 1")));
        }
        if self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter("negative weight".into()));
        }
        let defect = self.orthonormality_defect();
        if defect > 1e-8 {
            return Err(Error::Inconsistency(format!(
                "waves are not orthonormal: defect {defect:.3e}"
            )));
        }
        Ok(())
    }
}

/// Σ λ_j² — the squared Hilbert–Schmidt norm of the density operator.
pub fn hilbert_schmidt_trace(state: &QuantumState) -> f64 {
    state.weights.iter().map(|w| w * w).sum()
}

/// Purity ratio tr(R²)/(tr R)²; equals 1 exactly for rank-one states.
pub fn spectral_purity(state: &QuantumState) -> f64 {
    let tr: f64 = state.weights.iter().sum();
    hilbert_schmidt_trace(state) / (tr * tr)
}

/// Weighted mixture of the given waves. Waves are orthonormalized by a
/// modified Gram–Schmidt pass with one re-orthogonalization sweep; the pass
/// is a no-op (to roundoff) on already orthonormal input.
pub fn mixed_state(waves: Vec<WaveFunction>, weights: Vec<f64>) -> Result<QuantumState> {
    if waves.is_empty() || waves.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "need equally many waves and weights, at least one".into(),
        ));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!("weights sum to {sum}, expected 1")));
    }
    let weights: Vec<f64> = weights.iter().map(|w| w / sum).collect();
    let hbar = waves[0].hbar;
    let grid = waves[0].grid.clone();
    for w in &waves {
        if w.hbar != hbar || w.grid != grid {
            return Err(Error::InvalidParameter(
                "all waves must share one grid and one hbar".into(),
            ));
        }
    }
    let waves = gram_schmidt(waves)?;
    let state = QuantumState { weights, waves, hbar };
    state.validate()?;
    Ok(state)
}

/// Modified Gram–Schmidt with a re-orthogonalization pass. Tolerance 1e-10 on
/// the surviving norms.
fn gram_schmidt(mut waves: Vec<WaveFunction>) -> Result<Vec<WaveFunction>> {
    for _ in 0..2 {
        for i in 0..waves.len() {
            for j in 0..i {
                let coeff = waves[j].inner(&waves[i]);
                let (head, tail) = waves.split_at_mut(i);
                tail[0]
                    .samples
                    .zip_mut_with(&head[j].samples, |a, b| *a -= coeff * b);
            }
            let n = waves[i].norm();
            if n < 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "wave {i} is linearly dependent on earlier waves"
                )));
            }
            let inv = 1.0 / n;
            waves[i].samples.mapv_inplace(|v| v * inv);
        }
    }
    Ok(waves)
}

/// Smallest admissible rank of a density operator whose phase-space transform
/// has squared L² norm at most `c`: `⌈1 / ((2πħ)^d c)⌉`.
pub fn rank_lower_bound(c: f64, hbar: f64, dim: u32) -> Result<usize> {
    check_hbar(hbar)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("norm bound {c} must be positive")));
    }
    let v = 1.0 / ((2.0 * std::f64::consts::PI * hbar).powi(dim as i32) * c);
    // snap near-integer values so exact arithmetic cases do not round up
    let snapped = if (v - v.round()).abs() < 1e-9 * v.max(1.0) { v.round() } else { v.ceil() };
    Ok(snapped.max(1.0) as usize)
}

/// External potential on the line. The evaluator is an analytic callable so
/// the kernel machinery can sample it at shifted arguments off the grid.
#[derive(Clone)]
pub struct Potential {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub supnorm: Option<f64>,
    pub lipschitz: Option<f64>,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("supnorm", &self.supnorm)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl Potential {
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), supnorm: None, lipschitz: None }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0).with_supnorm(0.0).with_lipschitz(0.0)
    }

    /// `m ω² x² / 2`.
    pub fn harmonic(mass: f64, omega: f64) -> Self {
        Self::new(move |x| 0.5 * mass * omega * omega * x * x)
    }

    /// Harmonic well flattened to a constant plateau: exactly `m ω² x²/2` on
    /// `|x| <= core`, a C³ blend on `core < |x| < plateau`, constant outside.
    /// The force vanishes at the box edge, so the analytic evaluation has no
    /// derivative kink at the periodic wrap (the caveat that matters for
    /// fluid backgrounds; wavefunctions with mass inside the core never see
    /// the difference).
    pub fn confined_harmonic(mass: f64, omega: f64, core: f64, plateau: f64) -> Self {
        assert!(plateau > core && core > 0.0);
        let k = mass * omega * omega;
        let h = plateau - core;
        // quintic slope profile: s(core) = k·core, s'(core) = k, s''(core) = 0,
        // all derivatives zero at the plateau
        let slope = move |t: f64| {
            let h0 = 1.0 - 10.0 * t.powi(3) + 15.0 * t.powi(4) - 6.0 * t.powi(5);
            let h1 = t - 6.0 * t.powi(3) + 8.0 * t.powi(4) - 3.0 * t.powi(5);
            k * core * h0 + h * k * h1
        };
        let slope_integral = move |t: f64| {
            let i0 = t - 2.5 * t.powi(4) + 3.0 * t.powi(5) - t.powi(6);
            let i1 = 0.5 * t * t - 1.5 * t.powi(4) + 1.6 * t.powi(5) - 0.5 * t.powi(6);
            k * core * i0 + h * k * i1
        };
        let v_core = 0.5 * k * core * core;
        let v_plateau = v_core + h * slope_integral(1.0);
        let lipschitz = (0..=400)
            .map(|i| slope(i as f64 / 400.0))
            .fold(k * core, f64::max);
        Self::new(move |x| {
            let r = x.abs();
            if r <= core {
                0.5 * k * r * r
            } else if r >= plateau {
                v_plateau
            } else {
                v_core + h * slope_integral((r - core) / h)
            }
        })
        .with_supnorm(v_plateau)
        .with_lipschitz(lipschitz * (1.0 + 1e-12))
    }

    pub fn from_expr(src: &str) -> Result<Self> {
        Self::from_expr_with_hbar(src, 1.0)
    }

    /// Parse `V(x)`; the `hbar` constant inside the expression is bound here.
    pub fn from_expr_with_hbar(src: &str, hbar: f64) -> Result<Self> {
        let expr = Expr::parse(src, &["x"])?;
        Ok(Self::new(move |x| expr.eval(&[x], hbar)))
    }

    pub fn with_supnorm(mut self, v: f64) -> Self {
        self.supnorm = Some(v);
        self
    }

    pub fn with_lipschitz(mut self, v: f64) -> Self {
        self.lipschitz = Some(v);
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Check declared metadata against samples on the grid (with shifted
    /// arguments up to `reach` beyond the box).
    pub fn validate_on(&self, grid: &SpatialGrid, reach: f64) -> Result<()> {
        let pad = (reach / grid.spacing()).ceil() as isize;
        let mut prev: Option<(f64, f64)> = None;
        let mut max_abs: f64 = 0.0;
        let mut max_slope: f64 = 0.0;
        for j in -pad..grid.n() as isize + pad {
            let x = grid.origin() + j as f64 * grid.spacing();
            let v = self.value(x);
            max_abs = max_abs.max(v.abs());
            if let Some((xp, vp)) = prev {
                max_slope = max_slope.max(((v - vp) / (x - xp)).abs());
            }
            prev = Some((x, v));
        }
        if let Some(s) = self.supnorm {
            if max_abs > s * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::Metadata(format!(
                    "declared supnorm {s} exceeded: sampled {max_abs}"
                )));
            }
        }
        if let Some(l) = self.lipschitz {
            if max_slope > l * (1.0 + 1e-6) + 1e-12 {
                return Err(Error::Metadata(format!(
                    "declared Lipschitz constant {l} exceeded: sampled slope {max_slope}"
                )));
            }
        }
        Ok(())
    }
}
