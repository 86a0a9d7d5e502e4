//! Per-clique localization: classical MDS, Procrustes alignment to anchors
//! and strain refinement.

use nalgebra::{DMatrix, DVector};

use crate::cliques::Clique;
use crate::error::{Result, SnlError};
use crate::graph::{MeasurementGraph, NodeId};
use crate::numerics::{svd_small, sym_eig, SymMatrix};

/// Eigenvalues below this fraction of the largest count as zero when
/// reporting the rank of an embedding.
pub const RANK_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PatchQuality {
    /// Number of the top `d` eigenvalues that are numerically positive.
    pub rank_used: usize,
    /// `Σ|negative eigenvalues| / Σ|eigenvalues|` of the centered Gram matrix.
    pub neg_eigen_mass: f64,
}

/// A clique with coordinates in its own frame. Column `k` of
/// `local_coords` belongs to `clique.members[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub clique: Clique,
    pub local_coords: DMatrix<f64>,
    pub quality: PatchQuality,
}

impl Patch {
    pub fn coord(&self, v: NodeId) -> Option<DVector<f64>> {
        let k = self.clique.members.binary_search(&v).ok()?;
        Some(self.local_coords.column(k).into_owned())
    }
}

/// An orthogonal map followed by a translation, `x ↦ O x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl RigidTransform {
    pub fn identity(d: usize) -> Self {
        Self {
            rotation: DMatrix::identity(d, d),
            translation: DVector::zeros(d),
        }
    }

    pub fn apply(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.rotation * p + &self.translation
    }

    /// Applies the transform to every column.
    pub fn apply_columns(&self, pts: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = &self.rotation * pts;
        for mut c in out.column_iter_mut() {
            c += &self.translation;
        }
        out
    }
}

/// Centered Gram matrix `B = −½ J D J` of the squared distances.
pub fn double_centered_gram(dist: &DMatrix<f64>) -> DMatrix<f64> {
    let n = dist.nrows();
    let sq = dist.map(|v| v * v);
    let row_means: DVector<f64> = sq.column_mean();
    let col_means = sq.row_mean();
    let total = sq.mean();
    DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - col_means[j] + total))
}

/// Classical MDS into `d` dimensions. Returns a `d × n` coordinate matrix.
pub fn cmds(dist: &DMatrix<f64>, d: usize) -> Result<(DMatrix<f64>, PatchQuality)> {
    let n = dist.nrows();
    if n == 0 || d == 0 {
        return Err(SnlError::InvalidInput("cMDS needs at least one point and d ≥ 1".into()));
    }
    if dist.ncols() != n {
        return Err(SnlError::DimensionMismatch(format!(
            "distance matrix is {}×{}",
            n,
            dist.ncols()
        )));
    }
    let b = SymMatrix::symmetrize(&double_centered_gram(dist))?;
    let eig = sym_eig(&b)?;
    let lambda_max = eig.values.iter().copied().fold(0.0, f64::max);
    let abs_total: f64 = eig.values.iter().map(|v| v.abs()).sum();
    let neg: f64 = eig.values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let mut coords = DMatrix::zeros(d, n);
    let mut rank_used = 0;
    for k in 0..d.min(n) {
        let lam = eig.values[k];
        if lam > RANK_REL_TOL * lambda_max && lam > 0.0 {
            rank_used += 1;
        }
        let s = lam.max(0.0).sqrt();
        for i in 0..n {
            coords[(k, i)] = s * eig.vectors[(i, k)];
        }
    }
    let quality = PatchQuality {
        rank_used,
        neg_eigen_mass: if abs_total > 0.0 { neg / abs_total } else { 0.0 },
    };
    Ok((coords, quality))
}

/// Least-squares rigid map (reflections allowed) sending the columns of
/// `x` onto the columns of `targets`. A single pair gives a translation.
pub fn procrustes_align(x: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<RigidTransform> {
    if x.ncols() == 0 {
        return Err(SnlError::InvalidInput("Procrustes needs at least one point".into()));
    }
    if x.shape() != targets.shape() {
        return Err(SnlError::DimensionMismatch(format!(
            "source {:?} vs target {:?}",
            x.shape(),
            targets.shape()
        )));
    }
    let d = x.nrows();
    let mu = x.column_mean();
    let nu = targets.column_mean();
    if x.ncols() == 1 {
        return Ok(RigidTransform {
            rotation: DMatrix::identity(d, d),
            translation: nu - mu,
        });
    }
    let mut c = DMatrix::zeros(d, d);
    for (xi, ai) in x.column_iter().zip(targets.column_iter()) {
        c += (xi - &mu) * (ai - &nu).transpose();
    }
    let svd = svd_small(&c)?;
    let rotation = &svd.v * svd.u.transpose();
    let translation = nu - &rotation * mu;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// Sum of squared residuals of `t` applied to `x` against `targets`.
pub fn alignment_residual(t: &RigidTransform, x: &DMatrix<f64>, targets: &DMatrix<f64>) -> f64 {
    (t.apply_columns(x) - targets).norm_squared()
}

/// Pairwise distances of a clique. Anchor–anchor pairs are never measured,
/// so they come from the known anchor positions.
pub fn clique_distances(c: &Clique, g: &MeasurementGraph) -> Result<DMatrix<f64>> {
    let m = c.len();
    let mut dist = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a + 1..m {
            let (i, j) = (c.members[a], c.members[b]);
            let v = match (g.anchor_position(i), g.anchor_position(j)) {
                (Some(p), Some(q)) => (p - q).norm(),
                _ => g.distance(i, j).ok_or_else(|| {
                    SnlError::Internal(format!("clique members {} and {} are not adjacent", i + 1, j + 1))
                })?,
            };
            dist[(a, b)] = v;
            dist[(b, a)] = v;
        }
    }
    Ok(dist)
}

/// cMDS on the clique, alignment to any anchors it holds, exact anchor
/// placement, then strain refinement with anchors fixed.
pub fn localize_patch(c: &Clique, g: &MeasurementGraph, d: usize) -> Result<Patch> {
    let dist = clique_distances(c, g)?;
    let (mut coords, quality) = cmds(&dist, d)?;
    let anchor_cols: Vec<usize> = (0..c.len()).filter(|&k| g.is_anchor(c.members[k])).collect();
    if !anchor_cols.is_empty() {
        let src = DMatrix::from_columns(&anchor_cols.iter().map(|&k| coords.column(k)).collect::<Vec<_>>());
        let dst = DMatrix::from_columns(
            &anchor_cols
                .iter()
                .map(|&k| g.anchor_position(c.members[k]).expect("anchor").clone())
                .collect::<Vec<_>>(),
        );
        coords = procrustes_align(&src, &dst)?.apply_columns(&coords);
        for (&k, a) in anchor_cols.iter().zip(dst.column_iter()) {
            coords.set_column(k, &a);
        }
    }
    let mut fixed = vec![false; c.len()];
    for &k in &anchor_cols {
        fixed[k] = true;
    }
    let edges: Vec<(usize, usize, f64)> = (0..c.len())
        .flat_map(|a| (a + 1..c.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| !(fixed[a] && fixed[b]))
        .map(|(a, b)| (a, b, dist[(a, b)]))
        .collect();
    refine_patch_stress(&mut coords, &edges, &fixed);
    Ok(Patch {
        clique: c.clone(),
        local_coords: coords,
        quality,
    })
}

/// Strain `Σ (‖x_i − x_j‖² − d_ij²)²` over `edges`, points as columns.
pub fn strain(x: &DMatrix<f64>, edges: &[(usize, usize, f64)]) -> f64 {
    edges
        .iter()
        .map(|&(i, j, d)| {
            let r = (x.column(i) - x.column(j)).norm_squared() - d * d;
            r * r
        })
        .sum()
}

/// Gradient of [`strain`]; columns of fixed points are zeroed.
pub fn strain_gradient(x: &DMatrix<f64>, edges: &[(usize, usize, f64)], fixed: &[bool]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for &(i, j, d) in edges {
        let diff = x.column(i) - x.column(j);
        let w = 4.0 * (diff.norm_squared() - d * d);
        if !fixed[i] {
            let mut c = g.column_mut(i);
            c.axpy(w, &diff, 1.0);
        }
        if !fixed[j] {
            let mut c = g.column_mut(j);
            c.axpy(-w, &diff, 1.0);
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentParams {
    pub max_iter: usize,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentTrace {
    pub initial: f64,
    pub last: f64,
    pub iters: usize,
}

/// Gradient descent with Armijo backtracking on the strain. Steps are
/// only taken when they decrease the objective, so the strain never rises.
pub fn strain_descent(x: &mut DMatrix<f64>, edges: &[(usize, usize, f64)], fixed: &[bool], params: DescentParams) -> DescentTrace {
    const ARMIJO_C: f64 = 1e-4;
    let initial = strain(x, edges);
    let mut f = initial;
    let mut step = 1.0;
    let mut iters = 0;
    while iters < params.max_iter {
        let g = strain_gradient(x, edges, fixed);
        let gn2 = g.norm_squared();
        if gn2.sqrt() <= params.grad_tol {
            break;
        }
        let mut accepted = false;
        while step > 1e-20 {
            let trial = &*x - step * &g;
            let ft = strain(&trial, edges);
            if ft <= f - ARMIJO_C * step * gn2 {
                *x = trial;
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        iters += 1;
        step *= 2.0;
    }
    DescentTrace {
        initial,
        last: f,
        iters,
    }
}

/// Patch-level refinement: at most 200 iterations, gradient norm 1e-10.
pub fn refine_patch_stress(coords: &mut DMatrix<f64>, edges: &[(usize, usize, f64)], fixed: &[bool]) -> DescentTrace {
    strain_descent(
        coords,
        edges,
        fixed,
        DescentParams {
            max_iter: 200,
            grad_tol: 1e-10,
        },
    )
}
