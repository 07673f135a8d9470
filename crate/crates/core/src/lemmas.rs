//! Numerical forms of the inequalities behind the regret bound: strong
//! concavity of entropy, the characteristic-function lower bound on gaussian
//! total variation, strong concavity of `ln det`, and gaussian maximum
//! entropy. Everything here is in natural-log units.

use std::f64::consts::{E, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Constant of the entropy strong concavity bound, `¼ε(1−ε)δ²` with
/// `δ = Σ|pᵢ − qᵢ|`.
pub const ENTROPY_CONCAVITY_CONSTANT: f64 = 0.25;

/// Calibrated constant `c` in
/// `ln det((1−ε)Σ₁ + εΣ₂) ≥ (1−ε) ln det Σ₁ + ε ln det Σ₂ + c·ε(1−ε)δ²`,
/// `δ = |(Σ₁ − Σ₂)ᵢⱼ| / ((Σ₁)ᵢᵢ + (Σ₁)ⱼⱼ + (Σ₂)ᵢᵢ + (Σ₂)ⱼⱼ)`.
/// Calibrated like [`crate::regularizer::PAYOFF_MODULUS_CONSTANT`].
pub const LOGDET_CONCAVITY_CONSTANT: f64 = 1.0 / 16.0;

const DIST_TOL: f64 = 1e-9;

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Input("empty distribution".into()));
    }
    if let Some(bad) = p.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Input(format!("probability {bad} is negative or non-finite")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DIST_TOL {
        return Err(Error::Input(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn entropy_with(p: &[f64], log: impl Fn(f64) -> f64) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * log(x)).sum()
}

/// Shannon entropy in bits, with `0·log 0 = 0`.
pub fn discrete_entropy(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    Ok(entropy_with(p, f64::log2))
}

/// Shannon entropy in nats.
pub fn entropy_nats(p: &[f64]) -> Result<f64> {
    check_distribution(p)?;
    Ok(entropy_with(p, f64::ln))
}

/// `H(εP + (1−ε)Q) − εH(P) − (1−ε)H(Q) − ¼ε(1−ε)δ²` in nats, `δ = Σ|pᵢ − qᵢ|`.
/// Distributions of different lengths are zero-padded to a common support.
pub fn entropy_concavity_gap(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    entropy_concavity_gap_with(p, q, eps, ENTROPY_CONCAVITY_CONSTANT)
}

pub fn entropy_concavity_gap_with(p: &[f64], q: &[f64], eps: f64, constant: f64) -> Result<f64> {
    check_eps(eps)?;
    check_distribution(p)?;
    check_distribution(q)?;
    let len = p.len().max(q.len());
    let pad = |v: &[f64]| {
        let mut out = v.to_vec();
        out.resize(len, 0.0);
        out
    };
    let (p, q) = (pad(p), pad(q));
    let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| eps * a + (1.0 - eps) * b).collect();
    let delta: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
    let h = |v: &[f64]| entropy_with(v, f64::ln);
    Ok(h(&mix) - eps * h(&p) - (1.0 - eps) * h(&q) - constant * eps * (1.0 - eps) * delta * delta)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Input(format!("mixing weight {eps} not in (0, 1)")));
    }
    Ok(())
}

fn check_pair(s1: &DMatrix<f64>, s2: &DMatrix<f64>, i: usize, j: usize) -> Result<()> {
    let d = s1.nrows();
    for s in [s1, s2] {
        if s.nrows() != d || s.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                rows: s.nrows(),
                cols: s.ncols(),
            });
        }
    }
    if i >= d || j >= d {
        return Err(Error::Index { index: i.max(j), n: d });
    }
    Ok(())
}

/// `(Σ₁)ᵢᵢ + (Σ₁)ⱼⱼ + (Σ₂)ᵢᵢ + (Σ₂)ⱼⱼ`.
pub fn diagonal_scale(s1: &DMatrix<f64>, s2: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    s1[(i, i)] + s1[(j, j)] + s2[(i, i)] + s2[(j, j)]
}

/// Lower bound on the total variation distance between the centered
/// gaussians with covariances `Σ₁`, `Σ₂`, from the characteristic function
/// `φₖ(u) = exp(−½uᵀΣₖu)` at `u = v/√(α₁ + α₂)` for `v ∈ {eᵢ, eⱼ, eᵢ + eⱼ}`,
/// `αₖ = vᵀΣₖv`. Returns `½ max_v |φ₁(u) − φ₂(u)|`.
pub fn gaussian_tv_lower_bound(
    s1: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    i: usize,
    j: usize,
) -> Result<f64> {
    check_pair(s1, s2, i, j)?;
    if diagonal_scale(s1, s2, i, j) <= 0.0 {
        return Err(Error::Degenerate("diagonal normalization is not positive".into()));
    }
    let quad = |s: &DMatrix<f64>, v: &[(usize, f64)]| -> f64 {
        v.iter()
            .flat_map(|&(r, x)| v.iter().map(move |&(c, y)| x * y * s[(r, c)]))
            .sum()
    };
    let directions: [Vec<(usize, f64)>; 3] = [
        vec![(i, 1.0)],
        vec![(j, 1.0)],
        vec![(i, 1.0), (j, 1.0)],
    ];
    let mut best: Option<f64> = None;
    for v in &directions {
        let (a1, a2) = (quad(s1, v), quad(s2, v));
        let total = a1 + a2;
        if total <= 0.0 {
            continue;
        }
        let gap = ((-a1 / (2.0 * total)).exp() - (-a2 / (2.0 * total)).exp()).abs();
        best = Some(best.map_or(gap, |b: f64| b.max(gap)));
    }
    best.map(|g| 0.5 * g)
        .ok_or_else(|| Error::Degenerate("αₖ sums vanish in every direction".into()))
}

/// `δ = |(Σ₁ − Σ₂)ᵢⱼ| / ((Σ₁)ᵢᵢ + (Σ₁)ⱼⱼ + (Σ₂)ᵢᵢ + (Σ₂)ⱼⱼ)`.
pub fn normalized_entry_gap(s1: &DMatrix<f64>, s2: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (s1[(i, j)] - s2[(i, j)]).abs() / diagonal_scale(s1, s2, i, j)
}

/// `ln det((1−ε)Σ₁ + εΣ₂) − (1−ε) ln det Σ₁ − ε ln det Σ₂ − c·ε(1−ε)δ²`.
pub fn logdet_concavity_gap(
    s1: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    i: usize,
    j: usize,
    eps: f64,
    c: f64,
) -> Result<f64> {
    check_eps(eps)?;
    check_pair(s1, s2, i, j)?;
    let l1 = linalg::ln_det_spd(s1)?;
    let l2 = linalg::ln_det_spd(s2)?;
    let mix = s1 * (1.0 - eps) + s2 * eps;
    let lm = linalg::ln_det_spd(&mix)?;
    let delta = normalized_entry_gap(s1, s2, i, j);
    Ok(lm - (1.0 - eps) * l1 - eps * l2 - c * eps * (1.0 - eps) * delta * delta)
}

// ---------------------------------------------------------------------------
// Quadrature in one and two dimensions
// ---------------------------------------------------------------------------

/// Differential entropy of `N(0, Σ)` in nats: `½ ln det Σ + (d/2) ln(2πe)`.
pub fn gaussian_entropy(sigma: &DMatrix<f64>) -> Result<f64> {
    let d = sigma.nrows() as f64;
    Ok(0.5 * linalg::ln_det_spd(sigma)? + 0.5 * d * (2.0 * PI * E).ln())
}

/// A gaussian density in one or two dimensions.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    mean: DVector<f64>,
    inv: DMatrix<f64>,
    norm: f64,
}

impl GaussianDensity {
    pub fn new(mean: DVector<f64>, sigma: &DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if !(1..=2).contains(&d) || mean.len() != d {
            return Err(Error::Unsupported(format!("quadrature in dimension {d}")));
        }
        let ln_det = linalg::ln_det_spd(sigma)?;
        let inv = sigma
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("singular covariance".into()))?;
        let norm = (-0.5 * (d as f64 * (2.0 * PI).ln() + ln_det)).exp();
        Ok(Self { mean, inv, norm })
    }

    pub fn centered(sigma: &DMatrix<f64>) -> Result<Self> {
        Self::new(DVector::zeros(sigma.nrows()), sigma)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn at(&self, point: &[f64]) -> f64 {
        let q = if self.dim() == 1 {
            let x = point[0] - self.mean[0];
            x * x * self.inv[(0, 0)]
        } else {
            let x = point[0] - self.mean[0];
            let y = point[1] - self.mean[1];
            x * x * self.inv[(0, 0)] + 2.0 * x * y * self.inv[(0, 1)] + y * y * self.inv[(1, 1)]
        };
        self.norm * (-0.5 * q).exp()
    }
}

/// Midpoint-rule integral of `f` over the box `[−hᵢ, hᵢ]` with `cells` cells
/// per axis (dimension 1 or 2).
pub fn integrate_box(half_widths: &[f64], cells: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let steps: Vec<f64> = half_widths.iter().map(|h| 2.0 * h / cells as f64).collect();
    let coord = |axis: usize, idx: usize| -half_widths[axis] + (idx as f64 + 0.5) * steps[axis];
    match half_widths.len() {
        1 => (0..cells).map(|a| f(&[coord(0, a)])).sum::<f64>() * steps[0],
        2 => {
            let mut total = 0.0;
            let mut point = [0.0; 2];
            for a in 0..cells {
                point[0] = coord(0, a);
                let mut row = 0.0;
                for b in 0..cells {
                    point[1] = coord(1, b);
                    row += f(&point);
                }
                total += row;
            }
            total * steps[0] * steps[1]
        }
        d => panic!("integrate_box supports dimensions 1 and 2, got {d}"),
    }
}

/// Total variation `½∫|p₁ − p₂|` between centered gaussians by grid
/// integration over `±width` standard deviations.
pub fn gaussian_tv_by_grid(
    s1: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    width: f64,
    cells: usize,
) -> Result<f64> {
    let g1 = GaussianDensity::centered(s1)?;
    let g2 = GaussianDensity::centered(s2)?;
    let half: Vec<f64> = (0..s1.nrows())
        .map(|a| width * s1[(a, a)].max(s2[(a, a)]).sqrt())
        .collect();
    Ok(0.5 * integrate_box(&half, cells, |x| (g1.at(x) - g2.at(x)).abs()))
}

/// `−∫ p ln p` by grid integration over the box `[−hᵢ, hᵢ]`.
pub fn differential_entropy_by_grid(
    half_widths: &[f64],
    cells: usize,
    density: impl Fn(&[f64]) -> f64,
) -> f64 {
    integrate_box(half_widths, cells, |x| {
        let p = density(x);
        if p > 0.0 {
            -p * p.ln()
        } else {
            0.0
        }
    })
}

/// A finite mixture of gaussians.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    pub components: Vec<(f64, GaussianDensity)>,
}

impl GaussianMixture {
    pub fn at(&self, x: &[f64]) -> f64 {
        self.components.iter().map(|(w, g)| w * g.at(x)).sum()
    }
}

/// Two-component mixture with zero mean and covariance exactly `Σ`: weights
/// `w, 1 − w`, means `±m` scaled so the between-component covariance is
/// `mmᵀ`, and common component covariance `Σ − mmᵀ` (which must be PD).
pub fn matched_covariance_mixture(sigma: &DMatrix<f64>, m: &DVector<f64>, w: f64) -> Result<GaussianMixture> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::Input(format!("weight {w} not in (0, 1)")));
    }
    let inner = sigma - m * m.transpose();
    let mu1 = m * ((1.0 - w) / w).sqrt();
    let mu2 = -m * (w / (1.0 - w)).sqrt();
    Ok(GaussianMixture {
        components: vec![
            (w, GaussianDensity::new(mu1, &inner)?),
            (1.0 - w, GaussianDensity::new(mu2, &inner)?),
        ],
    })
}
