//! Global registration of localized patches.
//!
//! Unknowns are the sensor positions `Z = [x_1 … x_N t_1 … t_M]` and the
//! patch frames `O = [O_1 … O_{M+1}]`, the last one belonging to the anchor
//! patch. The least-squares registration error is the quadratic form
//! `Trace([Z O] [[J, −Bᵀ], [−B, D]] [Z O]ᵀ)`. Eliminating `Z` leaves
//! `Trace(C OᵀO)` with `C = D − B J⁻¹ Bᵀ`, which is relaxed to an SDP in
//! `G = OᵀO` and solved by [`admm_solve`].

mod admm;
pub mod pipeline;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Result, SnlError};
use crate::graph::{MeasurementGraph, Point};
use crate::mds::{strain_descent, DescentParams, DescentTrace, Patch};
use crate::numerics::{project_orthogonal, sym_eig, SymMatrix};

pub use crate::mds::RigidTransform;
pub use admm::{admm_solve, block_infeasibility, AdmmOptions, AdmmResult, HUpdateSign};

/// The matrices of the registration quadratic form. Columns of `J` and `B`
/// are ordered sensors first, then patch translations; rows of `B` and `D`
/// are `d`-blocks for patches `1..M` and the anchor patch last.
#[derive(Debug, Clone)]
pub struct RegistrationOperator {
    pub dim: usize,
    pub n_sensors: usize,
    pub n_patches: usize,
    pub lambda: f64,
    pub j: SymMatrix,
    pub b: DMatrix<f64>,
    pub d: SymMatrix,
    pub c: SymMatrix,
    chol: Cholesky<f64, Dyn>,
}

impl RegistrationOperator {
    /// Order `(M+1)d` of the SDP variable.
    pub fn order(&self) -> usize {
        (self.n_patches + 1) * self.dim
    }

    /// `J⁻¹ Mᵀ` for a right-hand side stored row-wise as `M`.
    pub fn solve_j_transposed(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(&m.transpose())
    }

    /// `Z = O B J⁻¹` for stacked frames `O` of shape `d × (M+1)d`.
    pub fn optimal_z(&self, o: &DMatrix<f64>) -> DMatrix<f64> {
        self.solve_j_transposed(&(o * &self.b)).transpose()
    }

    /// Value of the quadratic form at `(Z, O)`.
    pub fn objective(&self, z: &DMatrix<f64>, o: &DMatrix<f64>) -> f64 {
        let zj = z * self.j.as_matrix();
        let ob = o * &self.b;
        let od = o * self.d.as_matrix();
        zj.dot(z) - 2.0 * ob.dot(z) + od.dot(o)
    }
}

/// Connected components of the sensor/patch membership graph that contain
/// no anchor, as (patch indices, sensor ids). Any such component leaves `J`
/// singular.
fn anchorless_components(n_sensors: usize, patches: &[Patch], is_anchor: impl Fn(usize) -> bool) -> Vec<(Vec<usize>, Vec<usize>)> {
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let total = n_sensors + patches.len();
    let mut parent: Vec<usize> = (0..total).collect();
    let mut anchored = vec![false; total];
    for (i, p) in patches.iter().enumerate() {
        for &k in &p.clique.members {
            if is_anchor(k) {
                anchored[n_sensors + i] = true;
            } else {
                let (a, b) = (find(&mut parent, k), find(&mut parent, n_sensors + i));
                parent[a] = b;
            }
        }
    }
    let mut root_anchored = vec![false; total];
    for v in 0..total {
        let r = find(&mut parent, v);
        root_anchored[r] |= anchored[v];
    }
    let mut comps: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for v in 0..total {
        let r = find(&mut parent, v);
        if !root_anchored[r] {
            let e = comps.entry(r).or_default();
            if v < n_sensors {
                e.1.push(v);
            } else {
                e.0.push(v - n_sensors);
            }
        }
    }
    comps.into_values().collect()
}

/// Builds `J`, `B`, `D` and `C`. Anchor members of a patch enter with their
/// true positions, which is where patch localization puts them.
pub fn assemble_operator(patches: &[Patch], g: &MeasurementGraph, lambda: f64) -> Result<RegistrationOperator> {
    if !(lambda > 0.0) {
        return Err(SnlError::InvalidInput(format!("anchor weight must be positive, got {lambda}")));
    }
    let d = g.dim();
    let n = g.n_sensors();
    let m = patches.len();
    if m == 0 {
        return Err(SnlError::InvalidInput("no patches to register".into()));
    }
    let cols = n + m;
    let rows = (m + 1) * d;
    let anchor_rows = m * d;
    let mut j = DMatrix::zeros(cols, cols);
    let mut b = DMatrix::zeros(rows, cols);
    let mut dm = DMatrix::zeros(rows, rows);
    for (i, p) in patches.iter().enumerate() {
        if p.local_coords.nrows() != d || p.local_coords.ncols() != p.clique.len() {
            return Err(SnlError::DimensionMismatch(format!(
                "patch {i} has coordinates of shape {:?}",
                p.local_coords.shape()
            )));
        }
        let t = n + i;
        let r = i * d;
        for (col, &k) in p.clique.members.iter().enumerate() {
            let x = p.local_coords.column(col);
            if let Some(a) = g.anchor_position(k) {
                j[(t, t)] += lambda;
                // w = (f_i ⊗ I) ā: +ā in the anchor block, −ā in block i
                for q in 0..d {
                    b[(anchor_rows + q, t)] += lambda * a[q];
                    b[(r + q, t)] -= lambda * a[q];
                }
                for p1 in 0..d {
                    for p2 in 0..d {
                        let v = lambda * a[p1] * a[p2];
                        dm[(anchor_rows + p1, anchor_rows + p2)] += v;
                        dm[(r + p1, r + p2)] += v;
                        dm[(anchor_rows + p1, r + p2)] -= v;
                        dm[(r + p1, anchor_rows + p2)] -= v;
                    }
                }
            } else {
                j[(k, k)] += 1.0;
                j[(t, t)] += 1.0;
                j[(k, t)] -= 1.0;
                j[(t, k)] -= 1.0;
                for q in 0..d {
                    b[(r + q, k)] += x[q];
                    b[(r + q, t)] -= x[q];
                }
                for p1 in 0..d {
                    for p2 in 0..d {
                        dm[(r + p1, r + p2)] += x[p1] * x[p2];
                    }
                }
            }
        }
    }
    let orphans = anchorless_components(n, patches, |v| g.is_anchor(v));
    if !orphans.is_empty() {
        let desc: Vec<String> = orphans
            .iter()
            .map(|(ps, ss)| {
                format!(
                    "patches {:?} with sensors {:?}",
                    ps.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    ss.iter().map(|k| k + 1).collect::<Vec<_>>()
                )
            })
            .collect();
        return Err(SnlError::DisconnectedConfiguration(format!(
            "components without an anchor: {}",
            desc.join("; ")
        )));
    }
    let chol = Cholesky::new(j.clone()).ok_or_else(|| {
        SnlError::DisconnectedConfiguration("J is not positive definite".into())
    })?;
    let x = chol.solve(&b.transpose());
    let c = &dm - &b * x;
    Ok(RegistrationOperator {
        dim: d,
        n_sensors: n,
        n_patches: m,
        lambda,
        j: SymMatrix::symmetrize(&j)?,
        b,
        d: SymMatrix::symmetrize(&dm)?,
        c: SymMatrix::symmetrize(&c)?,
        chol,
    })
}

/// Stacks the orthogonal projections of the `d`-column blocks of `w`.
fn orthogonal_blocks(w: &DMatrix<f64>, d: usize) -> Result<(DMatrix<f64>, usize)> {
    let blocks = w.ncols() / d;
    let mut o = DMatrix::zeros(d, w.ncols());
    let mut degenerate = 0;
    for i in 0..blocks {
        let r = project_orthogonal(&w.columns(i * d, d).into_owned())?;
        degenerate += usize::from(r.degenerate);
        o.columns_mut(i * d, d).copy_from(&r.matrix);
    }
    Ok((o, degenerate))
}

/// `H₀ = OᵀO` where the blocks of `O` are the orthogonal projections of
/// the blocks of the `d` bottom eigenvectors of `C`.
pub fn spectral_init(c: &SymMatrix, d: usize) -> Result<SymMatrix> {
    let l = c.order();
    if d == 0 || l % d != 0 {
        return Err(SnlError::DimensionMismatch(format!("order {l} is not a multiple of d = {d}")));
    }
    let eig = sym_eig(c)?;
    let w = DMatrix::from_fn(d, l, |r, col| eig.vectors[(col, l - d + r)]);
    let (o, _) = orthogonal_blocks(&w, d)?;
    Ok(SymMatrix::from_symmetric_unchecked(o.transpose() * o))
}

#[derive(Debug, Clone)]
pub struct Recovery {
    /// Gauge-fixed frames; the last block is the identity.
    pub frames: DMatrix<f64>,
    /// `Z = O B J⁻¹`, sensors then translations.
    pub z: DMatrix<f64>,
    /// Positions of all nodes, anchors at their known positions.
    pub positions: Vec<Point>,
    /// `G` had fewer than `d` numerically positive eigenvalues.
    pub degenerate_gram: bool,
}

impl Recovery {
    pub fn rotation(&self, i: usize, d: usize) -> DMatrix<f64> {
        self.frames.columns(i * d, d).into_owned()
    }
}

/// Factors `G` by its top `d` eigenpairs, rounds each block onto `O(d)`,
/// moves the anchor patch frame to the identity and solves for `Z`.
pub fn round_and_recover(gm: &SymMatrix, op: &RegistrationOperator, g: &MeasurementGraph) -> Result<Recovery> {
    let d = op.dim;
    if gm.order() != op.order() {
        return Err(SnlError::DimensionMismatch(format!(
            "G has order {}, operator expects {}",
            gm.order(),
            op.order()
        )));
    }
    let eig = sym_eig(gm)?;
    let top = eig.values[0].max(0.0);
    let degenerate_gram = (0..d).any(|k| eig.values[k] <= 1e-9 * top.max(1e-300));
    let l = gm.order();
    let v = DMatrix::from_fn(d, l, |r, col| eig.values[r].max(0.0).sqrt() * eig.vectors[(col, r)]);
    let (o, _) = orthogonal_blocks(&v, d)?;
    let last = o.columns(op.n_patches * d, d).into_owned();
    let frames = last.transpose() * o;
    let z = op.optimal_z(&frames);
    let mut positions: Vec<Point> = (0..op.n_sensors).map(|k| z.column(k).into_owned()).collect();
    positions.extend(g.anchor_positions().iter().cloned());
    Ok(Recovery {
        frames,
        z,
        positions,
        degenerate_gram,
    })
}

/// Strain refinement over every measured edge with anchors held fixed:
/// at most 500 iterations, gradient norm 1e-10.
pub fn global_stress_refine(positions: &mut Vec<Point>, g: &MeasurementGraph) -> DescentTrace {
    global_stress_refine_with(positions, g, DescentParams {
        max_iter: 500,
        grad_tol: 1e-10,
    })
}

pub fn global_stress_refine_with(positions: &mut Vec<Point>, g: &MeasurementGraph, params: DescentParams) -> DescentTrace {
    let mut x = DMatrix::from_columns(positions);
    let fixed: Vec<bool> = (0..g.n_nodes()).map(|v| g.is_anchor(v)).collect();
    let edges: Vec<(usize, usize, f64)> = g.edges().collect();
    let trace = strain_descent(&mut x, &edges, &fixed, params);
    *positions = x.column_iter().map(|c| c.into_owned()).collect();
    trace
}
