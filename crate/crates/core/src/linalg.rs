//! Small dense symmetric-matrix helpers shared by the projection, regularizer
//! and lemma modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Symmetric eigendecomposition with a diagnostic error instead of a panic.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let non_finite = m.iter().filter(|v| !v.is_finite()).count();
    let failure = || Error::Eigen {
        dim: m.nrows(),
        max_abs: m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
        non_finite,
    };
    if non_finite > 0 || m.nrows() != m.ncols() {
        return Err(failure());
    }
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS).ok_or_else(failure)
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(sym_eigen(m)?.eigenvalues)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `V diag(f(λ)) Vᵀ`.
pub fn spectral_map(
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (mut col, &lambda) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= f(lambda);
    }
    let mut out = scaled * v.transpose();
    symmetrize_in_place(&mut out);
    out
}

pub fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for r in 0..d {
        for c in (r + 1)..d {
            let avg = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = avg;
            m[(c, r)] = avg;
        }
    }
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    symmetrize_in_place(&mut out);
    out
}

/// Frobenius inner product `⟨X, Y⟩ = Σ X_rc Y_rc`.
pub fn frobenius_inner(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

pub fn frobenius_distance(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0_f64;
    for r in 0..d {
        for c in (r + 1)..d {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst
}

/// Natural-log determinant of a symmetric positive definite matrix, via its
/// eigenvalues. Fails if any eigenvalue is not strictly positive.
pub fn ln_det_spd(m: &DMatrix<f64>) -> Result<f64> {
    let eig = eigenvalues(m)?;
    let mut acc = 0.0;
    for &lambda in eig.iter() {
        if lambda <= 0.0 {
            return Err(Error::Domain(format!(
                "matrix is not positive definite (eigenvalue {lambda:e})"
            )));
        }
        acc += lambda.ln();
    }
    Ok(acc)
}

/// Euclidean projection of `v` onto `{x : x ≥ 0, Σx = total}` (sort-based).
pub fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (idx, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - total) / (idx as f64 + 1.0);
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
