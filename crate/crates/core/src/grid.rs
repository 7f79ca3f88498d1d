//! Periodic uniform grids, their Fourier duals, and the center/difference
//! change of variables for two-point kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Uniform periodic grid on `[origin, origin + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n: usize,
    length: f64,
    origin: f64,
}

impl SpatialGrid {
    /// `n` must be a power of two, at least 8.
    pub fn new(n: usize, length: f64, origin: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size {n} must be a power of two >= 8"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!("grid length {length} must be positive")));
        }
        Ok(Self { n, length, origin })
    }

    /// Grid of size `n` on `[-length/2, length/2)`.
    pub fn centered(n: usize, length: f64) -> Result<Self> {
        Self::new(n, length, -0.5 * length)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Spacing of the dual frequency grid, `2π / L`.
    pub fn frequency_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Index of the node closest to zero (exact when the grid straddles 0).
    pub fn index_of_zero(&self) -> usize {
        let j = (-self.origin / self.spacing()).round() as isize;
        j.clamp(0, self.n as isize - 1) as usize
    }
}

/// Frequency grid exactly dual to a [`SpatialGrid`]: angular wavenumbers
/// `2π k / L` for `k` in the symmetric integer range `[-n/2, n/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    n: usize,
    length: f64,
    frequencies: Vec<f64>,
}

impl FrequencyGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn frequency(&self, j: usize) -> f64 {
        self.frequencies[j]
    }

    /// Largest resolvable |frequency| (the Nyquist magnitude).
    pub fn max_abs(&self) -> f64 {
        self.frequencies[0].abs()
    }
}

/// Dual frequency grid of a spatial grid.
pub fn dual_grid(g: &SpatialGrid) -> FrequencyGrid {
    FrequencyGrid {
        n: g.n(),
        length: g.length(),
        frequencies: spectral::frequencies(g.n(), g.length()),
    }
}

/// Grids underlying a phase-space field: positions `x`, kernel differences
/// `y`, and the momentum grid `ξ` dual to `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub x: SpatialGrid,
    pub y: SpatialGrid,
    pub xi: FrequencyGrid,
}

impl PhaseGrid {
    /// The `y` grid must straddle zero so that the kernel diagonal is a grid
    /// row; the momentum grid is always the exact dual of `y`.
    pub fn new(x: SpatialGrid, y: SpatialGrid) -> Result<Self> {
        let zero = y.node(y.index_of_zero());
        if zero.abs() > 1e-12 * y.spacing().max(1.0) {
            return Err(Error::InvalidParameter(
                "difference grid must contain y = 0 as a node".into(),
            ));
        }
        let xi = dual_grid(&y);
        Ok(Self { x, y, xi })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.n(), self.xi.n())
    }
}

/// Center/difference variables of a two-point kernel: maps kernel arguments
/// `(X, Y)` to the midpoint `x = (X+Y)/2` and the scaled difference
/// `y = (X-Y)/ħ`.
pub fn weyl_forward(left: f64, right: f64, hbar: f64) -> Result<(f64, f64)> {
    check_hbar(hbar)?;
    Ok((0.5 * (left + right), (left - right) / hbar))
}

/// Inverse of [`weyl_forward`]: `(x, y) -> (x + ħy/2, x - ħy/2)`.
pub fn weyl_inverse(x: f64, y: f64, hbar: f64) -> Result<(f64, f64)> {
    check_hbar(hbar)?;
    Ok((x + 0.5 * hbar * y, x - 0.5 * hbar * y))
}

pub(crate) fn check_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::InvalidParameter(format!("hbar = {hbar} must be positive")));
    }
    Ok(())
}

/// Tensor product of per-axis spatial grids; the sampling domain for
/// wavefunctions in any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<SpatialGrid>,
}

impl TensorGrid {
    pub fn new(axes: Vec<SpatialGrid>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParameter("tensor grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn line(g: SpatialGrid) -> Self {
        Self { axes: vec![g] }
    }

    /// Isotropic grid: the same centered axis repeated `dim` times.
    pub fn isotropic(dim: usize, n: usize, length: f64) -> Result<Self> {
        let axis = SpatialGrid::centered(n, length)?;
        Self::new(vec![axis; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &SpatialGrid {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[SpatialGrid] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n()).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `Π dx_k`.
    pub fn cell(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    /// Position of the node with the given multi-index.
    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index.iter().zip(&self.axes).map(|(&j, a)| a.node(j)).collect()
    }
}
