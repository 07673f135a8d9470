//! Random instance generators shared by the property suites, the lemma
//! trials and multi-start optimization.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pseudodist::{
    check_feasibility, project_feasible, DykstraSettings, LabelIndexing, PseudoDistribution,
    FEASIBILITY_TOL,
};

pub fn random_symmetric<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    });
    linalg::symmetrized(&m)
}

pub fn random_labeling<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Random point of the feasible set. Alternates between exact convex
/// combinations of labelings (and the uniform point) and projections of
/// random symmetric perturbations of the uniform point, so that both the
/// interior and the boundary get exercised.
pub fn random_feasible<R: Rng + ?Sized>(
    indexing: LabelIndexing,
    rng: &mut R,
) -> Result<PseudoDistribution> {
    if rng.random_bool(0.5) {
        return random_labeling_mixture(indexing, 3, rng);
    }
    loop {
        let scale = rng.random_range(0.05..1.0);
        let m = PseudoDistribution::uniform(indexing).into_matrix()
            + random_symmetric(indexing.dim(), scale, rng);
        match project_feasible(&m, indexing, DykstraSettings::default()) {
            Err(Error::Convergence { last, .. }) => {
                if check_feasibility(&last, indexing, FEASIBILITY_TOL)?.pass {
                    return Ok(PseudoDistribution::from_matrix_unchecked(*last, indexing));
                }
            }
            other => return other,
        }
    }
}

/// Random symmetric positive definite matrix with eigenvalues drawn
/// log-uniformly from `[lo, hi]` and a random orthonormal basis.
pub fn random_spd<R: Rng + ?Sized>(d: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    let eig: DMatrix<f64> = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
        (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
    }));
    linalg::symmetrized(&(&q * eig * q.transpose()))
}

/// Random probability vector of length `len`; each coordinate is zero with
/// probability `sparsity`.
pub fn random_distribution<R: Rng + ?Sized>(len: usize, sparsity: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut p: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(sparsity) {
                    0.0
                } else {
                    -rng.random::<f64>().max(1e-300).ln()
                }
            })
            .collect();
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter_mut().for_each(|x| *x /= total);
            return p;
        }
    }
}

/// Random convex combination of the uniform point and between one and
/// `max_parts` random labelings. Exactly feasible, no projection needed.
pub fn random_labeling_mixture<R: Rng + ?Sized>(
    indexing: LabelIndexing,
    max_parts: usize,
    rng: &mut R,
) -> Result<PseudoDistribution> {
    let (n, k) = (indexing.n(), indexing.k());
    let parts = rng.random_range(1..=max_parts.max(1));
    // Sometimes drop the uniform component so pure labelings and their
    // mixtures on the boundary show up too.
    let uniform_weight = if rng.random_bool(0.3) { 0.0 } else { 1.0 };
    let mut weights: Vec<f64> = (0..=parts).map(|_| rng.random::<f64>() + 1e-3).collect();
    weights[0] *= uniform_weight;
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut m = PseudoDistribution::uniform(indexing).into_matrix() * weights[0];
    for w in &weights[1..] {
        let labeled = PseudoDistribution::from_labeling(&random_labeling(n, k, rng), k)?;
        m += labeled.into_matrix() * *w;
    }
    Ok(PseudoDistribution::from_matrix_unchecked(m, indexing))
}
