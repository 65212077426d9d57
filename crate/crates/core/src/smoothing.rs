//! Forward spatial smoothing: rearranging one snapshot into the N_s x L
//! matrix whose columns are the measurements on the shifted copies of the
//! basic subarray.
//!
//! Only the forward construction is implemented; there is no
//! forward-backward averaging and no covariance forming here. The
//! subspace estimator consumes the SVD of Y directly.

use crate::geometry::Decomposition;
use crate::manifold::{manifold_matrix, AngleSet, Snapshot, SourceAmplitudes};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmoothingError {
    #[error(
        "position {position} required by the decomposition is absent from the snapshot geometry"
    )]
    MissingPosition { position: i64 },
}

/// The spatially smoothed measurement matrix together with the
/// decomposition that produced it and the provenance of its snapshot.
#[derive(Debug, Clone)]
pub struct SmoothedMatrix {
    y_matrix: DMatrix<Complex64>,
    decomposition: Decomposition,
    /// Noise level of the source snapshot (0 for noiseless provenance).
    pub noise_sigma: f64,
    /// Seed of the source snapshot.
    pub source_seed: u64,
}

impl SmoothedMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.y_matrix
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    pub fn n_s(&self) -> usize {
        self.y_matrix.nrows()
    }

    pub fn l(&self) -> usize {
        self.y_matrix.ncols()
    }

    /// Debug dump as CSV: one row per basic-subarray element, with the
    /// real and imaginary parts interleaved per shift column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "position")?;
        for delta in self.decomposition.shifts().iter() {
            write!(out, ",re_shift{delta},im_shift{delta}")?;
        }
        writeln!(out)?;
        for (row, b) in self.decomposition.basic().iter().enumerate() {
            write!(out, "{b}")?;
            for col in 0..self.l() {
                let v = self.y_matrix[(row, col)];
                write!(out, ",{:.12e},{:.12e}", v.re, v.im)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Builds the smoothed matrix: entry `(m, i)` is the snapshot value at
/// position `basic[m] + shifts[i]`. Positions may be read multiple times
/// (overlapping subarrays are allowed). Fails naming the offending
/// position if any required read falls outside the snapshot geometry.
pub fn smooth(snap: &Snapshot, deco: &Decomposition) -> Result<SmoothedMatrix, SmoothingError> {
    let index: HashMap<i64, usize> = snap
        .geometry
        .iter()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    let basic = deco.basic().as_slice();
    let shifts = deco.shifts().as_slice();
    let mut y = DMatrix::zeros(basic.len(), shifts.len());
    for (col, &delta) in shifts.iter().enumerate() {
        for (row, &b) in basic.iter().enumerate() {
            let position = b + delta;
            let &i = index
                .get(&position)
                .ok_or(SmoothingError::MissingPosition { position })?;
            y[(row, col)] = snap.y[i];
        }
    }
    Ok(SmoothedMatrix {
        y_matrix: y,
        decomposition: deco.clone(),
        noise_sigma: snap.noise_sigma,
        source_seed: snap.seed,
    })
}

/// Frobenius norm of `Y - A_{S_b}(theta) diag(x) A_{S_c}(theta)^T`, where
/// the shift set is treated as an array in its own right. Vanishes (to
/// rounding) exactly when the smoothed matrix came from a noiseless
/// snapshot; on noisy input it measures the reshaped noise energy.
pub fn factorization_residual(
    smoothed: &SmoothedMatrix,
    thetas: &AngleSet,
    x: &SourceAmplitudes,
) -> f64 {
    let a_b = manifold_matrix(smoothed.decomposition().basic(), thetas);
    let a_c = manifold_matrix(smoothed.decomposition().shifts(), thetas);
    let dx = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(x.as_slice()));
    let product = a_b * dx * a_c.transpose();
    (smoothed.matrix() - product).norm()
}
