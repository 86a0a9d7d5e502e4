//! Dense symmetric kernels and the convex projections used by the
//! partitioning, localization and registration stages.
//!
//! Matrices are stored as `nalgebra::DMatrix<f64>`. Symmetric
//! eigendecompositions are delegated to `faer`, which is several times
//! faster than the pure-nalgebra solver at the orders the registration
//! SDP produces (a few hundred).

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SnlError};

/// Tolerance on orthogonality / reconstruction used throughout.
pub const KERNEL_TOL: f64 = 1e-9;

/// Smallest singular value below which a d×d block is considered
/// rank deficient when rounded onto the orthogonal group.
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// A real symmetric matrix. Symmetry is exact: every constructor mirrors
/// one triangle onto the other.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        Self(DMatrix::zeros(order, order))
    }

    pub fn identity(order: usize) -> Self {
        Self(DMatrix::identity(order, order))
    }

    /// Builds from the upper triangle produced by `f(i, j)` with `i <= j`.
    pub fn from_upper_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(order, order);
        for j in 0..order {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    /// Symmetric part `(M + Mᵀ) / 2` of a square matrix.
    pub fn symmetrize(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(SnlError::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        Ok(Self::from_upper_fn(n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        }))
    }

    /// Wraps a matrix that the caller guarantees is exactly symmetric.
    /// Checked in debug builds.
    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square());
        debug_assert!((0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)])));
        Self(m)
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `Trace(self · other)` for symmetric operands (elementwise inner product).
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SymMatrix) -> SymMatrix {
        Self(&self.0 + &other.0 * alpha)
    }

    /// The `d×d` diagonal block with block index `i`.
    pub fn diagonal_block(&self, i: usize, d: usize) -> DMatrix<f64> {
        self.0.view((i * d, i * d), (d, d)).into_owned()
    }

    fn check_finite(&self) -> Result<()> {
        if self.0.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SnlError::InvalidInput("matrix has non-finite entries".into()))
        }
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues, sorted descending.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors; column `k` pairs with `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// `Q diag(f(λ)) Qᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        let mut keep = Vec::with_capacity(n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w != 0.0 {
                scaled.column_mut(k).scale_mut(w);
                keep.push(k);
            }
        }
        if keep.is_empty() {
            return SymMatrix::zeros(n);
        }
        let left = scaled.select_columns(&keep);
        let right = self.vectors.select_columns(&keep);
        let m = left * right.transpose();
        SymMatrix::symmetrize(&m).expect("square by construction")
    }
}

#[derive(Debug, Clone)]
pub struct SvdDecomposition {
    pub u: DMatrix<f64>,
    /// Singular values, nonnegative and sorted descending.
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Full symmetric eigendecomposition, eigenvalues sorted descending.
pub fn sym_eig(s: &SymMatrix) -> Result<EigenDecomposition> {
    s.check_finite()?;
    let n = s.order();
    if n == 0 {
        return Err(SnlError::InvalidInput("empty matrix".into()));
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| s[(i, j)]);
    let eig = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| SnlError::Internal(format!("eigensolver failed: {e:?}")))?;
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    // faer returns ascending order; flip.
    let values = DVector::from_fn(n, |k, _| vals[n - 1 - k]);
    let vectors = DMatrix::from_fn(n, n, |i, k| vecs[(i, n - 1 - k)]);
    Ok(EigenDecomposition { values, vectors })
}

/// SVD of a small dense matrix with singular values sorted descending.
pub fn svd_small(m: &DMatrix<f64>) -> Result<SvdDecomposition> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(SnlError::InvalidInput("matrix has non-finite entries".into()));
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(SnlError::Internal("SVD did not return factors".into())),
    };
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i]));
    let u = u.select_columns(&order);
    let v = v_t.transpose().select_columns(&order);
    Ok(SvdDecomposition { u, sigma, v })
}

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues
/// are set to zero.
pub fn project_psd(s: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(s)?;
    Ok(eig.reconstruct_with(|l| if l > 0.0 { l } else { 0.0 }))
}

/// Overwrites every `d×d` diagonal block with `I_d`.
pub fn project_block_identity(s: &SymMatrix, d: usize) -> Result<SymMatrix> {
    let n = s.order();
    if d == 0 || n % d != 0 {
        return Err(SnlError::DimensionMismatch(format!(
            "order {n} is not a multiple of block size {d}"
        )));
    }
    let mut m = s.0.clone();
    for b in 0..n / d {
        let mut block = m.view_mut((b * d, b * d), (d, d));
        block.fill(0.0);
        block.fill_diagonal(1.0);
    }
    Ok(SymMatrix(m))
}

/// Nearest orthogonal matrix `U Vᵀ` (reflections allowed).
#[derive(Debug, Clone)]
pub struct OrthogonalRounding {
    pub matrix: DMatrix<f64>,
    /// Set when the input was numerically rank deficient, in which case the
    /// nearest orthogonal matrix is not unique.
    pub degenerate: bool,
}

pub fn project_orthogonal(m: &DMatrix<f64>) -> Result<OrthogonalRounding> {
    if !m.is_square() {
        return Err(SnlError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = svd_small(m)?;
    let degenerate = svd.sigma.iter().any(|&s| s < DEGENERATE_SIGMA);
    Ok(OrthogonalRounding {
        matrix: &svd.u * svd.v.transpose(),
        degenerate,
    })
}

/// Euclidean projection onto the unit simplex `{x ≥ 0, Σx = 1}`.
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = x.iter().map(|&v| (v - theta).max(0.0)).collect();
    // Cancellation in the running sum can leave the total off by a few ulps.
    let total: f64 = out.iter().sum();
    if total > 0.0 && total != 1.0 {
        let k = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap();
        out[k] += 1.0 - total;
    }
    out
}

/// Affine rank of a set of points given as columns, with a relative
/// singular-value threshold.
pub fn affine_rank(points: &DMatrix<f64>, rel_tol: f64) -> usize {
    let n = points.ncols();
    if n <= 1 {
        return 0;
    }
    let mean = points.column_mean();
    let mut centered = points.clone();
    for mut c in centered.column_iter_mut() {
        c -= &mean;
    }
    let sv = centered.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}
