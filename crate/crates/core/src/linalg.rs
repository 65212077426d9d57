//! Small-matrix complex SVD via one-sided Jacobi rotations.
//!
//! The matrices appearing in this crate are tall and narrow (a smoothed
//! matrix is N_s x L with L of order 3; falsification manifolds have at
//! most four columns). One-sided Jacobi orthogonalizes column pairs until
//! convergence, which gives singular values with high relative accuracy --
//! small singular values stay trustworthy down to the rounding floor,
//! which the rank decisions in this crate depend on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative column-orthogonality threshold at which sweeps stop.
const CONVERGENCE_EPS: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// Thin SVD `A = U S V^H` with singular values sorted descending.
/// `u` has one column per column of `A` (zero columns for exactly-zero
/// singular values).
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
}

/// Computes the thin SVD of a tall-or-square matrix (`nrows >= ncols`).
pub fn thin_svd(a: &DMatrix<Complex64>) -> ThinSvd {
    assert!(
        a.nrows() >= a.ncols(),
        "thin_svd expects a tall or square matrix"
    );
    let n = a.ncols();
    let mut work = a.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let ci = work.column(i).into_owned();
                let cj = work.column(j).into_owned();
                let alpha = ci.norm_squared();
                let beta = cj.norm_squared();
                let gamma = ci.dotc(&cj); // c_i^H c_j
                let g = gamma.norm();
                if g <= CONVERGENCE_EPS * alpha.sqrt() * beta.sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // zero the off-diagonal of the 2x2 Gram block
                let theta = (beta - alpha) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let phase = gamma / g; // e^{j phi}
                let s = phase * t * c;
                let new_i = ci.map(|z| z * c) - cj.map(|z| z * s.conj());
                let new_j = ci.map(|z| z * s) + cj.map(|z| z * c);
                work.set_column(i, &new_i);
                work.set_column(j, &new_j);
                let vi = v.column(i).into_owned();
                let vj = v.column(j).into_owned();
                let nvi = vi.map(|z| z * c) - vj.map(|z| z * s.conj());
                let nvj = vi.map(|z| z * s) + vj.map(|z| z * c);
                v.set_column(i, &nvi);
                v.set_column(j, &nvj);
            }
        }
        if !rotated {
            break;
        }
    }

    // column norms are the singular values; sort descending
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|i| work.column(i).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = DMatrix::<Complex64>::zeros(a.nrows(), n);
    let mut v_sorted = DMatrix::<Complex64>::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (out_col, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        singular_values.push(sigma);
        if sigma > 0.0 {
            let col: DVector<Complex64> = work.column(src).map(|z| z / sigma);
            u.set_column(out_col, &col);
        }
        v_sorted.set_column(out_col, &v.column(src).into_owned());
    }
    ThinSvd {
        u,
        v: v_sorted,
        singular_values,
    }
}

/// Singular values of an arbitrary matrix, sorted descending.
pub fn singular_values(a: &DMatrix<Complex64>) -> Vec<f64> {
    if a.nrows() >= a.ncols() {
        thin_svd(a).singular_values
    } else {
        thin_svd(&a.adjoint()).singular_values
    }
}

/// In-place one-sided Jacobi on a set of equal-length columns; returns
/// their singular values sorted descending. Allocation-free inner loop
/// for search-style callers that evaluate many small matrices.
pub fn singular_values_of_columns(columns: &mut [Vec<Complex64>]) -> Vec<f64> {
    let n = columns.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (head, tail) = columns.split_at_mut(j);
                let ci = &mut head[i];
                let cj = &mut tail[0];
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = Complex64::ZERO;
                for (x, y) in ci.iter().zip(cj.iter()) {
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                let g = gamma.norm();
                if g <= CONVERGENCE_EPS * alpha.sqrt() * beta.sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let theta = (beta - alpha) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = gamma / g * (t * c);
                let s_conj = s.conj();
                for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                    let new_x = *x * c - *y * s_conj;
                    let new_y = *x * s + *y * c;
                    *x = new_x;
                    *y = new_y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    values
}
