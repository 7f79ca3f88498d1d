//! Rank-one detection through the second-logarithmic-derivative identities of
//! the two-point kernel. All log derivatives are formed as quotients of raw
//! spectral derivatives; no branch of the logarithm is ever taken.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral;
use crate::wigner::KernelField;

/// Residual field below which a state is declared rank one.
pub const PURE_RESIDUAL_MAX: f64 = 1e-6;
/// Residual above which a state is declared mixed (10x the pure baseline).
pub const MIXED_RESIDUAL_MIN: f64 = 1e-5;
/// Default relative smallness mask threshold.
pub const DEFAULT_MASK_TAU: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pure,
    Mixed,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct PurityReport {
    /// normalized residual per (x, y) node; zero on masked nodes
    pub residual: Array2<f64>,
    /// true where the kernel magnitude exceeded the mask threshold
    pub mask: Array2<bool>,
    /// masked fraction within the bounding window of the unmasked set
    pub masked_fraction: f64,
    pub max_residual: f64,
    /// tr(R²)/(tr R)² supplied by the caller
    pub spectral_purity: f64,
    pub verdict: Verdict,
}

struct KernelDerivatives {
    dx: Array2<Complex64>,
    dy: Array2<Complex64>,
    dxx: Array2<Complex64>,
    dyy: Array2<Complex64>,
    /// x-derivative of the y-derivative
    dxy: Array2<Complex64>,
    /// y-derivative of the x-derivative (must match `dxy`)
    dyx: Array2<Complex64>,
}

fn derive_all(kernel: &KernelField) -> KernelDerivatives {
    let d_x = |arr: &Array2<Complex64>, order| {
        let mut out = arr.clone();
        for j in 0..arr.ncols() {
            let col: Vec<Complex64> = arr.column(j).to_vec();
            let d = spectral::derivative(&col, &kernel.xgrid, order);
            for (i, v) in d.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        out
    };
    let d_y = |arr: &Array2<Complex64>, order| {
        let mut out = arr.clone();
        for i in 0..arr.nrows() {
            let row: Vec<Complex64> = arr.row(i).to_vec();
            let d = spectral::derivative(&row, &kernel.ygrid, order);
            for (j, v) in d.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        out
    };
    let dx = d_x(&kernel.values, 1);
    let dy = d_y(&kernel.values, 1);
    KernelDerivatives {
        dxx: d_x(&kernel.values, 2),
        dyy: d_y(&kernel.values, 2),
        dxy: d_x(&dy, 1),
        dyx: d_y(&dx, 1),
        dx,
        dy,
    }
}

fn smallness_mask(kernel: &KernelField, tau: f64) -> (Array2<bool>, f64) {
    let peak = kernel.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let mask = kernel.values.mapv(|v| v.norm() > tau * peak);
    (mask, peak)
}

/// Fraction of nodes excluded by the mask, measured inside the bounding
/// window of the unmasked set (kernels on a padded box are mostly empty, so
/// the raw grid fraction would drown the verdict).
fn masked_fraction(mask: &Array2<bool>) -> f64 {
    let (nr, nc) = mask.dim();
    let mut imin = nr;
    let mut imax = 0;
    let mut jmin = nc;
    let mut jmax = 0;
    let mut count = 0usize;
    for ((i, j), &m) in mask.indexed_iter() {
        if m {
            imin = imin.min(i);
            imax = imax.max(i);
            jmin = jmin.min(j);
            jmax = jmax.max(j);
            count += 1;
        }
    }
    if count == 0 {
        return 1.0;
    }
    let window = (imax - imin + 1) * (jmax - jmin + 1);
    1.0 - count as f64 / window as f64
}

/// Rank-one identity residuals. For each unmasked node the two families
///
/// `(4/ħ²) ∂_y(∂_y K / K) = ∂_x(∂_x K / K)` and
/// `∂_y(∂_x K / K) = ∂_x(∂_y K / K)`
///
/// are evaluated through the quotient expansion and normalized by the local
/// second-log-derivative scale, so thresholds are ħ-independent.
pub fn rank_one_residuals(
    kernel: &KernelField,
    spectral_purity: f64,
    tau: f64,
) -> Result<PurityReport> {
    let (mask, peak) = smallness_mask(kernel, tau);
    if peak == 0.0 {
        return Err(Error::InvalidParameter("kernel vanishes identically".into()));
    }
    let d = derive_all(kernel);
    let c = 4.0 / (kernel.hbar * kernel.hbar);
    let mut residual = Array2::<f64>::zeros(kernel.values.raw_dim());
    let mut max_residual = 0.0f64;
    for ((i, j), &m) in mask.indexed_iter() {
        if !m {
            continue;
        }
        let k = kernel.values[[i, j]];
        let qx = d.dx[[i, j]] / k;
        let qy = d.dy[[i, j]] / k;
        let log_yy = d.dyy[[i, j]] / k - qy * qy;
        let log_xx = d.dxx[[i, j]] / k - qx * qx;
        let r1 = c * log_yy - log_xx;
        let mixed_y = d.dyx[[i, j]] / k - qx * qy;
        let mixed_x = d.dxy[[i, j]] / k - qx * qy;
        let r2 = mixed_y - mixed_x;
        let scale = c * (log_yy.norm() + qy.norm() * qy.norm())
            + log_xx.norm()
            + qx.norm() * qx.norm()
            + 1e-300;
        let r = r1.norm().max(r2.norm()) / scale;
        residual[[i, j]] = r;
        max_residual = max_residual.max(r);
    }
    let masked_fraction = masked_fraction(&mask);
    let verdict = if masked_fraction > 0.5 {
        Verdict::Inconclusive
    } else if max_residual <= PURE_RESIDUAL_MAX {
        Verdict::Pure
    } else if max_residual >= MIXED_RESIDUAL_MIN {
        Verdict::Mixed
    } else {
        Verdict::Inconclusive
    };
    Ok(PurityReport { residual, mask, masked_fraction, max_residual, spectral_purity, verdict })
}

/// One-dimensional wave-form residual: the single identity
/// `(4/ħ²) ∂_y² log K = ∂_x² log K`, evaluated separately on the log
/// magnitude (real part of the quotient) and the phase (imaginary part, which
/// is the branch-free phase derivative), then combined.
#[derive(Debug, Clone)]
pub struct WaveFormReport {
    pub magnitude_residual: Array2<f64>,
    pub phase_residual: Array2<f64>,
    pub combined: Array2<f64>,
    pub mask: Array2<bool>,
    /// unmasked cells adjacent to the mask boundary, where the phase
    /// derivative crosses a region with no reliable value
    pub flagged: Array2<bool>,
    pub max_combined: f64,
}

pub fn wave_form_residual_1d(kernel: &KernelField, tau: f64) -> Result<WaveFormReport> {
    let (mask, peak) = smallness_mask(kernel, tau);
    if peak == 0.0 {
        return Err(Error::InvalidParameter("kernel vanishes identically".into()));
    }
    let d = derive_all(kernel);
    let c = 4.0 / (kernel.hbar * kernel.hbar);
    let shape = kernel.values.raw_dim();
    let mut magnitude = Array2::<f64>::zeros(shape.clone());
    let mut phase = Array2::<f64>::zeros(shape.clone());
    let mut combined = Array2::<f64>::zeros(shape);
    let mut max_combined = 0.0f64;
    for ((i, j), &m) in mask.indexed_iter() {
        if !m {
            continue;
        }
        let k = kernel.values[[i, j]];
        let qx = d.dx[[i, j]] / k;
        let qy = d.dy[[i, j]] / k;
        let log_yy = d.dyy[[i, j]] / k - qy * qy;
        let log_xx = d.dxx[[i, j]] / k - qx * qx;
        let r = c * log_yy - log_xx;
        let scale = c * (log_yy.norm() + qy.norm() * qy.norm())
            + log_xx.norm()
            + qx.norm() * qx.norm()
            + 1e-300;
        magnitude[[i, j]] = r.re.abs() / scale;
        phase[[i, j]] = r.im.abs() / scale;
        combined[[i, j]] = r.norm() / scale;
        max_combined = max_combined.max(combined[[i, j]]);
    }
    // cells next to masked territory: the quotient is fine but any phase
    // continuation across the gap is not
    let (nr, nc) = mask.dim();
    let mut flagged = Array2::<bool>::from_elem(mask.raw_dim(), false);
    for i in 0..nr {
        for j in 0..nc {
            if !mask[[i, j]] {
                continue;
            }
            let neighbors = [
                (i.wrapping_sub(1), j),
                ((i + 1) % nr, j),
                (i, j.wrapping_sub(1)),
                (i, (j + 1) % nc),
            ];
            for (a, b) in neighbors {
                let a = if a >= nr { nr - 1 } else { a };
                let b = if b >= nc { nc - 1 } else { b };
                if !mask[[a, b]] {
                    flagged[[i, j]] = true;
                }
            }
        }
    }
    Ok(WaveFormReport { magnitude_residual: magnitude, phase_residual: phase, combined, mask, flagged, max_combined })
}

/// Second-derivative closure residual
/// `∂_y∂_y K - (∂_y K)²/K - (ħ²/4) K ∂_x(∂_x K / K)` per unmasked node,
/// raw (complex) and normalized.
#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub raw: Array2<Complex64>,
    pub normalized: Array2<f64>,
    pub mask: Array2<bool>,
    pub max_normalized: f64,
}

pub fn closure_residual(kernel: &KernelField, tau: f64) -> Result<ClosureReport> {
    let (mask, peak) = smallness_mask(kernel, tau);
    if peak == 0.0 {
        return Err(Error::InvalidParameter("kernel vanishes identically".into()));
    }
    let d = derive_all(kernel);
    let quarter_h2 = kernel.hbar * kernel.hbar / 4.0;
    let shape = kernel.values.raw_dim();
    let mut raw = Array2::<Complex64>::zeros(shape.clone());
    let mut normalized = Array2::<f64>::zeros(shape);
    let mut max_normalized = 0.0f64;
    for ((i, j), &m) in mask.indexed_iter() {
        if !m {
            continue;
        }
        let k = kernel.values[[i, j]];
        let qx = d.dx[[i, j]] / k;
        let log_xx = d.dxx[[i, j]] / k - qx * qx;
        let term_yy = d.dyy[[i, j]];
        let term_prod = d.dy[[i, j]] * d.dy[[i, j]] / k;
        let term_x = quarter_h2 * k * log_xx;
        let r = term_yy - term_prod - term_x;
        let scale = term_yy.norm() + term_prod.norm() + term_x.norm() + 1e-300;
        raw[[i, j]] = r;
        normalized[[i, j]] = r.norm() / scale;
        max_normalized = max_normalized.max(normalized[[i, j]]);
    }
    Ok(ClosureReport { raw, normalized, mask, max_normalized })
}
