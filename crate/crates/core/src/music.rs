//! Subspace DOA estimation on the smoothed matrix: SVD split into signal
//! and noise subspaces, pseudospectrum evaluation on an angle grid, and
//! peak extraction with parabolic refinement.
//!
//! The estimator never forms Y*Y^H; it works from the SVD of Y directly.
//! The noise projection is evaluated as `||U_n^H a||^2` (not via the
//! complement `||a||^2 - ||U_s^H a||^2`), so true nulls reach the 1e-18
//! level instead of drowning in cancellation.

use crate::geometry::SensorPositions;
use crate::manifold::steering_for_sin;
use crate::smoothing::SmoothedMatrix;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pseudospectrum values are clamped where the noise projection drops
/// below this threshold (true nulls of the projection).
pub const NULL_CLAMP: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MusicError {
    #[error("requested subspace dimension {k} leaves no noise subspace (N_s = {n_s})")]
    NoiseSubspaceEmpty { k: usize, n_s: usize },
    #[error("requested subspace dimension must be at least 1")]
    ZeroSources,
    #[error("steering dimension {steering} does not match subspace rows {rows}")]
    DimensionMismatch { steering: usize, rows: usize },
}

/// Signal/noise subspace split of a smoothed matrix.
///
/// `signal_basis` holds the top `k` left singular vectors for the
/// requested source count; `noise_basis` holds an orthonormal basis of the
/// complement, so `[U_s U_n]` is unitary. `k_hat` is the numerically
/// detected rank (singular values above `max(N_s, L) * eps * sigma_1`),
/// reported independently of the requested `k`: `k_hat < k` signals rank
/// collapse (an ambiguity) or fewer true sources.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    pub signal_basis: DMatrix<Complex64>,
    pub noise_basis: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    pub k_hat: usize,
}

/// Splits the smoothed matrix at the requested source count `k`
/// (`1 <= k < N_s`).
pub fn subspace_split(y: &SmoothedMatrix, k: usize) -> Result<SubspaceSplit, MusicError> {
    let n_s = y.n_s();
    if k == 0 {
        return Err(MusicError::ZeroSources);
    }
    if k >= n_s {
        return Err(MusicError::NoiseSubspaceEmpty { k, n_s });
    }
    let svd = crate::linalg::thin_svd(y.matrix());
    let u_thin = svd.u;
    let singular_values = svd.singular_values;

    let sigma_1 = singular_values.first().copied().unwrap_or(0.0);
    let tol = (n_s.max(y.l())) as f64 * f64::EPSILON * sigma_1;
    let k_hat = if sigma_1 == 0.0 {
        0
    } else {
        singular_values.iter().filter(|&&s| s > tol).count()
    };

    let u_full = complete_unitary(&u_thin, n_s);
    let signal_basis = u_full.columns(0, k).into_owned();
    let noise_basis = u_full.columns(k, n_s - k).into_owned();
    Ok(SubspaceSplit {
        signal_basis,
        noise_basis,
        singular_values,
        k_hat,
    })
}

/// Extends the thin-SVD column set to a full orthonormal basis of C^n by
/// modified Gram-Schmidt against the identity columns. Deterministic.
fn complete_unitary(u_thin: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    let mut columns: Vec<DVector<Complex64>> =
        u_thin.column_iter().map(|c| c.into_owned()).collect();
    let mut candidate = 0usize;
    while columns.len() < n {
        assert!(candidate < n, "basis completion exhausted candidates");
        let mut v = DVector::zeros(n);
        v[candidate] = Complex64::new(1.0, 0.0);
        candidate += 1;
        // two rounds of projection for orthogonality near machine precision
        for _ in 0..2 {
            for b in &columns {
                let coefficient = b.dotc(&v);
                v -= b * coefficient;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            columns.push(v / Complex64::new(norm, 0.0));
        }
    }
    DMatrix::from_columns(&columns)
}

/// Evaluation grid, uniform in angle (degrees). The default spans
/// [-90, 90) with a 0.02 degree step (9000 points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub start_deg: f64,
    pub step_deg: f64,
    pub count: usize,
}

impl AngleGrid {
    pub fn with_step(step_deg: f64) -> Self {
        assert!(step_deg > 0.0, "grid step must be positive");
        let count = (180.0 / step_deg).round() as usize;
        Self {
            start_deg: -90.0,
            step_deg,
            count,
        }
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.start_deg + i as f64 * self.step_deg)
            .collect()
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self::with_step(0.02)
    }
}

/// Normalized MUSIC pseudospectrum on a grid, in dB relative to its peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pseudospectrum {
    pub grid_deg: Vec<f64>,
    pub values_db: Vec<f64>,
}

impl Pseudospectrum {
    /// CSV export with header `theta_deg,p_db`, six decimal places.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "theta_deg,p_db")?;
        for (theta, v) in self.grid_deg.iter().zip(&self.values_db) {
            writeln!(out, "{theta:.6},{v:.6}")?;
        }
        Ok(())
    }
}

/// Raw noise-subspace projection `a^H U_n U_n^H a` at one steering vector.
pub fn noise_projection(split: &SubspaceSplit, a: &[Complex64]) -> Result<f64, MusicError> {
    if a.len() != split.noise_basis.nrows() {
        return Err(MusicError::DimensionMismatch {
            steering: a.len(),
            rows: split.noise_basis.nrows(),
        });
    }
    let av = DVector::from_column_slice(a);
    let projected = split.noise_basis.adjoint() * av;
    Ok(projected.norm_squared())
}

/// Evaluates `P(theta) = 1 / (a^H U_n U_n^H a)` over the grid with
/// `a = steering_vector(s_b, theta)`, normalized so the maximum is 0 dB.
/// Projections below [`NULL_CLAMP`] are clamped (true nulls).
pub fn pseudospectrum(
    split: &SubspaceSplit,
    s_b: &SensorPositions,
    grid: &AngleGrid,
) -> Result<Pseudospectrum, MusicError> {
    if s_b.len() != split.noise_basis.nrows() {
        return Err(MusicError::DimensionMismatch {
            steering: s_b.len(),
            rows: split.noise_basis.nrows(),
        });
    }
    let grid_deg = grid.angles_deg();
    let mut p: Vec<f64> = Vec::with_capacity(grid_deg.len());
    for &theta_deg in &grid_deg {
        let a = steering_for_sin(s_b, theta_deg.to_radians().sin());
        let av = DVector::from_column_slice(&a);
        let projected = split.noise_basis.adjoint() * av;
        let q = projected.norm_squared().max(NULL_CLAMP);
        p.push(1.0 / q);
    }
    let p_max = p.iter().cloned().fold(f64::MIN, f64::max);
    let values_db = p.iter().map(|&v| 10.0 * (v / p_max).log10()).collect();
    Ok(Pseudospectrum {
        grid_deg,
        values_db,
    })
}

/// Peak extraction result. `shortfall` is set when fewer than the
/// requested number of local maxima exist, which is itself diagnostic of
/// ambiguity or peak merging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    /// Refined peak angles, sorted by peak value descending.
    pub angles_deg: Vec<f64>,
    pub shortfall: bool,
    /// Values (dB) at the selected peaks, same order as `angles_deg`.
    pub values_db: Vec<f64>,
    /// All detected local maxima as `(angle_deg, value_db)`, value-sorted
    /// descending. Used by dominance-based post-processing.
    pub all_maxima: Vec<(f64, f64)>,
}

/// Finds local maxima (strictly greater than both neighbors; boundary
/// points tested one-sided), sorts by value descending, and returns the
/// top `k` with angles refined by 3-point parabolic interpolation in the
/// dB domain.
pub fn find_peaks(ps: &Pseudospectrum, k: usize) -> Result<PeakSet, MusicError> {
    if k == 0 {
        return Err(MusicError::ZeroSources);
    }
    let v = &ps.values_db;
    let n = v.len();
    let mut maxima: Vec<usize> = Vec::new();
    for i in 0..n {
        let left_ok = i == 0 || v[i] > v[i - 1];
        let right_ok = i == n - 1 || v[i] > v[i + 1];
        if n == 1 || (left_ok && right_ok) {
            maxima.push(i);
        }
    }
    maxima.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));

    let refine = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            return ps.grid_deg[i];
        }
        let (y0, y1, y2) = (v[i - 1], v[i], v[i + 1]);
        let denominator = y0 - 2.0 * y1 + y2;
        if denominator.abs() < 1e-300 {
            return ps.grid_deg[i];
        }
        let offset = (0.5 * (y0 - y2) / denominator).clamp(-0.5, 0.5);
        let step = if n > 1 {
            ps.grid_deg[1] - ps.grid_deg[0]
        } else {
            0.0
        };
        ps.grid_deg[i] + offset * step
    };

    let all_maxima: Vec<(f64, f64)> = maxima.iter().map(|&i| (refine(i), v[i])).collect();
    let selected = &all_maxima[..maxima.len().min(k)];
    Ok(PeakSet {
        angles_deg: selected.iter().map(|&(a, _)| a).collect(),
        shortfall: maxima.len() < k,
        values_db: selected.iter().map(|&(_, v)| v).collect(),
        all_maxima,
    })
}

/// Full estimate returned by the pipeline entry point.
#[derive(Debug, Clone)]
pub struct DoaEstimate {
    pub peaks: PeakSet,
    pub pseudospectrum: Pseudospectrum,
    pub split: SubspaceSplit,
}

/// Pipeline composition: smooth -> subspace split -> pseudospectrum ->
/// peak extraction. Single entry point for the CLI.
pub fn estimate_doa(
    snap: &crate::manifold::Snapshot,
    deco: &crate::geometry::Decomposition,
    k: usize,
    grid: &AngleGrid,
) -> Result<DoaEstimate, EstimateError> {
    let smoothed = crate::smoothing::smooth(snap, deco)?;
    let split = subspace_split(&smoothed, k)?;
    let ps = pseudospectrum(&split, deco.basic(), grid)?;
    let peaks = find_peaks(&ps, k)?;
    Ok(DoaEstimate {
        peaks,
        pseudospectrum: ps,
        split,
    })
}

/// Errors from the composed pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Smoothing(#[from] crate::smoothing::SmoothingError),
    #[error(transparent)]
    Music(#[from] MusicError),
}
