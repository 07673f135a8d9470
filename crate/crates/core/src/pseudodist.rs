//! Pseudodistributions over labelings: the feasible set of the relaxation,
//! feasibility reporting and Euclidean projection onto the set.
//!
//! A pseudodistribution over labelings of `n` items with `k` labels is a
//! symmetric `nk × nk` matrix `A` whose rows and columns are indexed by
//! item-label pairs `(i, a) ↦ i·k + a`. The feasible set is
//!
//! * `A` positive semidefinite,
//! * every entry nonnegative,
//! * every `k × k` block `(i, j)` sums to one,
//! * every diagonal block `(i, i)` is a diagonal matrix.
//!
//! Together these force `Tr(A) = n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Default tolerance for declaring a matrix feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Maps item-label pairs onto matrix rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelIndexing {
    n: usize,
    k: usize,
}

impl LabelIndexing {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Input(format!(
                "label indexing needs n >= 1 and k >= 1 (got n = {n}, k = {k})"
            )));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Side length `nk` of the matrices over this indexing.
    pub fn dim(&self) -> usize {
        self.n * self.k
    }

    #[inline]
    pub fn index(&self, item: usize, label: usize) -> usize {
        debug_assert!(item < self.n && label < self.k);
        item * self.k + label
    }

    /// Inverse of [`index`](Self::index).
    #[inline]
    pub fn item_label(&self, row: usize) -> (usize, usize) {
        (row / self.k, row % self.k)
    }

    fn check_item(&self, item: usize) -> Result<()> {
        if item >= self.n {
            return Err(Error::Index {
                index: item,
                n: self.n,
            });
        }
        Ok(())
    }

    fn check_matrix(&self, m: &DMatrix<f64>) -> Result<()> {
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        Ok(())
    }
}

/// A feasible point of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoDistribution {
    indexing: LabelIndexing,
    matrix: DMatrix<f64>,
}

impl PseudoDistribution {
    /// Moment matrix `vvᵀ` of a deterministic labeling, where `v` is the
    /// indicator vector `v_(i,a) = 1[labels[i] = a]`.
    pub fn from_labeling(labels: &[usize], k: usize) -> Result<Self> {
        let indexing = LabelIndexing::new(labels.len(), k)?;
        if let Some((item, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::Input(format!(
                "label {label} of item {item} is outside 0..{k}"
            )));
        }
        let d = indexing.dim();
        let mut matrix = DMatrix::zeros(d, d);
        for (i, &a) in labels.iter().enumerate() {
            for (j, &b) in labels.iter().enumerate() {
                matrix[(indexing.index(i, a), indexing.index(j, b))] = 1.0;
            }
        }
        Ok(Self { indexing, matrix })
    }

    /// Moment matrix of independent uniform labels: diagonal blocks `I/k`,
    /// off-diagonal blocks `J/k²`.
    pub fn uniform(indexing: LabelIndexing) -> Self {
        let (n, k) = (indexing.n(), indexing.k());
        let d = indexing.dim();
        let kf = k as f64;
        let mut matrix = DMatrix::from_element(d, d, 1.0 / (kf * kf));
        for i in 0..n {
            for a in 0..k {
                for b in 0..k {
                    let r = indexing.index(i, a);
                    let c = indexing.index(i, b);
                    matrix[(r, c)] = if a == b { 1.0 / kf } else { 0.0 };
                }
            }
        }
        Self { indexing, matrix }
    }

    /// Wraps a matrix after checking it is feasible at `tol`.
    pub fn from_matrix(matrix: DMatrix<f64>, indexing: LabelIndexing, tol: f64) -> Result<Self> {
        let report = check_feasibility(&matrix, indexing, tol)?;
        if !report.pass {
            return Err(Error::Input(format!("matrix is not feasible: {report}")));
        }
        Ok(Self { indexing, matrix })
    }

    /// Wraps a matrix without checking feasibility. Used for iterates that
    /// were produced by a projection and for restored checkpoints.
    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>, indexing: LabelIndexing) -> Self {
        debug_assert_eq!(matrix.nrows(), indexing.dim());
        Self { indexing, matrix }
    }

    pub fn indexing(&self) -> LabelIndexing {
        self.indexing
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// The pairwise label distribution for items `(i, j)`.
    pub fn block(&self, i: usize, j: usize) -> Result<DMatrix<f64>> {
        extract_block(&self.matrix, self.indexing, i, j)
    }

    /// Convex combination `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.indexing != other.indexing {
            return Err(Error::Input("mixing pseudodistributions of different shapes".into()));
        }
        Ok(Self {
            indexing: self.indexing,
            matrix: &self.matrix * w + &other.matrix * (1.0 - w),
        })
    }
}

/// Per-constraint violation magnitudes of a candidate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub min_entry: f64,
    pub max_block_sum_deviation: f64,
    pub max_diagonal_block_off_diagonal: f64,
    pub trace_deviation: f64,
    pub tolerance: f64,
    /// Additive allowance for eigensolver rounding on the PSD test.
    pub eigen_floor: f64,
    pub pass: bool,
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "asym {:.3e}, min eig {:.3e}, min entry {:.3e}, block sum dev {:.3e}, \
             diag-block off-diag {:.3e}, trace dev {:.3e} (tol {:.1e}) -> {}",
            self.max_asymmetry,
            self.min_eigenvalue,
            self.min_entry,
            self.max_block_sum_deviation,
            self.max_diagonal_block_off_diagonal,
            self.trace_deviation,
            self.tolerance,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Measures every constraint of the feasible set on `m`.
///
/// The PSD test allows `tol` plus the eigensolver rounding floor
/// `dim · ε · max(1, ‖m‖_F)`, so exact feasible matrices pass at `tol = 0`.
pub fn check_feasibility(
    m: &DMatrix<f64>,
    indexing: LabelIndexing,
    tol: f64,
) -> Result<FeasibilityReport> {
    indexing.check_matrix(m)?;
    let (n, k) = (indexing.n(), indexing.k());

    let max_asymmetry = linalg::max_asymmetry(m);
    let min_eigenvalue = linalg::min_eigenvalue(&linalg::symmetrized(m))?;
    let min_entry = m.iter().copied().fold(f64::INFINITY, f64::min);

    let mut max_block_sum_deviation = 0.0_f64;
    let mut max_diagonal_block_off_diagonal = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let block = m.view((i * k, j * k), (k, k));
            max_block_sum_deviation = max_block_sum_deviation.max((block.sum() - 1.0).abs());
            if i == j {
                for a in 0..k {
                    for b in 0..k {
                        if a != b {
                            max_diagonal_block_off_diagonal =
                                max_diagonal_block_off_diagonal.max(block[(a, b)].abs());
                        }
                    }
                }
            }
        }
    }
    let trace_deviation = (m.trace() - n as f64).abs();
    let eigen_floor = indexing.dim() as f64 * f64::EPSILON * m.norm().max(1.0);

    let pass = max_asymmetry <= tol
        && -min_eigenvalue <= tol + eigen_floor
        && -min_entry <= tol
        && max_block_sum_deviation <= tol
        && max_diagonal_block_off_diagonal <= tol;

    Ok(FeasibilityReport {
        max_asymmetry,
        min_eigenvalue,
        min_entry,
        max_block_sum_deviation,
        max_diagonal_block_off_diagonal,
        trace_deviation,
        tolerance: tol,
        eigen_floor,
        pass,
    })
}

/// The `k × k` label distribution for items `(i, j)`: the symmetrized block
/// `½(B_ij + B_jiᵀ)`, clamped at zero and renormalized to sum to one.
pub fn extract_block(
    m: &DMatrix<f64>,
    indexing: LabelIndexing,
    i: usize,
    j: usize,
) -> Result<DMatrix<f64>> {
    indexing.check_matrix(m)?;
    indexing.check_item(i)?;
    indexing.check_item(j)?;
    let k = indexing.k();
    let forward = m.view((i * k, j * k), (k, k));
    let backward = m.view((j * k, i * k), (k, k));
    let mut block = DMatrix::from_fn(k, k, |a, b| {
        (0.5 * (forward[(a, b)] + backward[(b, a)])).max(0.0)
    });
    let total = block.sum();
    if total > 0.0 && total.is_finite() {
        block /= total;
    } else {
        // Nothing to renormalize; fall back to the uniform pair distribution.
        let uniform = if i == j {
            DMatrix::from_diagonal_element(k, k, 1.0 / k as f64)
        } else {
            DMatrix::from_element(k, k, 1.0 / (k * k) as f64)
        };
        block = uniform;
    }
    Ok(block)
}

/// Frobenius projection onto the PSD cone: negative eigenvalues clamped to 0.
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = linalg::sym_eigen(&linalg::symmetrized(m))?;
    Ok(linalg::spectral_map(&eig, |lambda| lambda.max(0.0)))
}

/// Frobenius projection onto the block constraints (nonnegativity, unit block
/// sums, diagonal diagonal-blocks). Off-diagonal blocks are projected onto
/// the `k²`-simplex, diagonal blocks onto diagonal matrices with a diagonal in
/// the `k`-simplex. The output satisfies every block constraint exactly.
pub fn project_blocks(m: &DMatrix<f64>, indexing: LabelIndexing) -> Result<DMatrix<f64>> {
    indexing.check_matrix(m)?;
    let (n, k) = (indexing.n(), indexing.k());
    let d = indexing.dim();
    let mut out = DMatrix::zeros(d, d);
    let mut buf = vec![0.0; k * k];
    for i in 0..n {
        let diag: Vec<f64> = (0..k).map(|a| m[(i * k + a, i * k + a)]).collect();
        for (a, p) in linalg::project_simplex(&diag, 1.0).into_iter().enumerate() {
            out[(i * k + a, i * k + a)] = p;
        }
        for j in (i + 1)..n {
            for a in 0..k {
                for b in 0..k {
                    buf[a * k + b] =
                        0.5 * (m[(i * k + a, j * k + b)] + m[(j * k + b, i * k + a)]);
                }
            }
            let p = linalg::project_simplex(&buf, 1.0);
            for a in 0..k {
                for b in 0..k {
                    out[(i * k + a, j * k + b)] = p[a * k + b];
                    out[(j * k + b, i * k + a)] = p[a * k + b];
                }
            }
        }
    }
    Ok(out)
}

/// Orthogonal projector onto the complement of the block-constant vectors
/// with zero total. Every feasible matrix annihilates those vectors, since
/// `vᵀAv = (Σ c_i)²` when `v` equals `c_i` on the rows of item `i`.
fn face_projector(indexing: LabelIndexing) -> DMatrix<f64> {
    let (n, k) = (indexing.n(), indexing.k());
    let d = indexing.dim();
    DMatrix::from_fn(d, d, |r, c| {
        let same_item = if r / k == c / k { 1.0 / k as f64 } else { 0.0 };
        let q = same_item - 1.0 / (n * k) as f64;
        if r == c {
            1.0 - q
        } else {
            -q
        }
    })
}

/// Frobenius projection onto the face of the PSD cone that contains the
/// feasible set: compress to the complement of the forced null space, clamp
/// eigenvalues there, and expand back.
fn project_psd_face(m: &DMatrix<f64>, face: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let compressed = face * m * face;
    let clamped = project_psd(&compressed)?;
    Ok(linalg::symmetrized(&(face * clamped * face)))
}

/// Stopping rule and acceleration depth for [`project_feasible`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraSettings {
    /// Bound on both the change between successive iterates and the gap
    /// between the cone-side and block-side iterates (Frobenius norm).
    pub tol: f64,
    pub max_iters: usize,
    /// Anderson acceleration memory; 0 runs the plain iteration.
    pub memory: usize,
}

impl Default for DykstraSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 5000,
            memory: 10,
        }
    }
}

/// Result of a projection run, with its iteration count.
#[derive(Debug, Clone)]
pub struct Projection {
    pub point: PseudoDistribution,
    pub iterations: usize,
    pub residual: f64,
}

/// Euclidean projection onto the feasible set by Dykstra-type alternating
/// projections between the PSD cone and the block constraint set.
///
/// The cone step projects onto the face of the PSD cone whose matrices vanish
/// on block-constant zero-sum vectors. The feasible set lies inside that face,
/// so the limit is unchanged, but the two sets then meet transversally.
///
/// The alternation is written as a Douglas-Rachford fixed-point map
/// `w -> w + P_B(2x - w) - x` with `x = P_K((M + w) / 2)`, whose plain
/// iteration tracks Dykstra's. Points where some label has vanishing marginal
/// still converge slowly, so the map is driven by safeguarded Anderson
/// acceleration: an extrapolated step is kept only if it shrinks the
/// fixed-point residual.
pub fn project_feasible(
    m: &DMatrix<f64>,
    indexing: LabelIndexing,
    settings: DykstraSettings,
) -> Result<PseudoDistribution> {
    Ok(project_feasible_detailed(m, indexing, settings)?.point)
}

struct SplitStep {
    w: DMatrix<f64>,
    blocks: DMatrix<f64>,
    residual: DMatrix<f64>,
}

/// [`project_feasible`], also reporting iterations and the final residual.
pub fn project_feasible_detailed(
    m: &DMatrix<f64>,
    indexing: LabelIndexing,
    settings: DykstraSettings,
) -> Result<Projection> {
    Ok(project_feasible_warm(m, indexing, settings, None)?.0)
}

/// Splitting state left by a finished projection, reusable as the starting
/// point for a nearby target.
#[derive(Debug, Clone)]
pub struct ProjectionHint {
    w: DMatrix<f64>,
}

/// [`project_feasible_detailed`] started from the state of an earlier
/// projection. The limit does not depend on the start; only the iteration
/// count does.
pub fn project_feasible_warm(
    m: &DMatrix<f64>,
    indexing: LabelIndexing,
    settings: DykstraSettings,
    hint: Option<&ProjectionHint>,
) -> Result<(Projection, ProjectionHint)> {
    indexing.check_matrix(m)?;
    let m = linalg::symmetrized(m);
    let face = face_projector(indexing);
    let apply = |w: DMatrix<f64>| -> Result<SplitStep> {
        let cone = project_psd_face(&((&m + &w) * 0.5), &face)?;
        let blocks = project_blocks(&(&cone * 2.0 - &w), indexing)?;
        let residual = &blocks - &cone;
        Ok(SplitStep { w, blocks, residual })
    };

    let start = match hint {
        Some(h) if h.w.shape() == m.shape() => h.w.clone(),
        _ => project_blocks(&m, indexing)?,
    };
    let mut current = apply(start)?;
    let mut dw: Vec<DVector<f64>> = Vec::new();
    let mut df: Vec<DVector<f64>> = Vec::new();
    let mut residual = f64::INFINITY;

    for iter in 1..=settings.max_iters {
        let plain = &current.w + &current.residual;
        let mut next = None;
        if !dw.is_empty() {
            let candidate = anderson_step(&plain, &current.residual, &dw, &df);
            let step = apply(candidate)?;
            if step.residual.norm() <= current.residual.norm() {
                next = Some(step);
            } else {
                dw.clear();
                df.clear();
            }
        }
        let next = match next {
            Some(step) => step,
            None => apply(plain)?,
        };

        let step = linalg::frobenius_distance(&next.blocks, &current.blocks);
        let gap = next.residual.norm();
        residual = step.max(gap);
        if settings.memory > 0 {
            dw.push(flatten(&(&next.w - &current.w)));
            df.push(flatten(&(&next.residual - &current.residual)));
            if dw.len() > settings.memory {
                dw.remove(0);
                df.remove(0);
            }
        }
        current = next;
        if residual <= settings.tol {
            let hint = ProjectionHint { w: current.w };
            let projection = Projection {
                point: PseudoDistribution::from_matrix_unchecked(current.blocks, indexing),
                iterations: iter,
                residual,
            };
            return Ok((projection, hint));
        }
    }
    Err(Error::Convergence {
        iterations: settings.max_iters,
        residual,
        last: Box::new(current.blocks),
    })
}


fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Type-II Anderson extrapolation from the plain step `w + f`.
fn anderson_step(
    plain: &DMatrix<f64>,
    f: &DMatrix<f64>,
    dw: &[DVector<f64>],
    df: &[DVector<f64>],
) -> DMatrix<f64> {
    let cols = df.len();
    let a = DMatrix::from_columns(df);
    let mut normal = a.transpose() * &a;
    let ridge = 1e-10 * normal.diagonal().max().max(f64::MIN_POSITIVE);
    for c in 0..cols {
        normal[(c, c)] += ridge;
    }
    let rhs = a.transpose() * flatten(f);
    let Some(gamma) = normal.cholesky().map(|ch| ch.solve(&rhs)) else {
        return plain.clone();
    };
    let mut out = flatten(plain);
    for c in 0..cols {
        out -= (&dw[c] + &df[c]) * gamma[c];
    }
    DMatrix::from_column_slice(plain.nrows(), plain.ncols(), out.as_slice())
}
