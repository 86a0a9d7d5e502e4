//! ADMM for `min Trace(CG)` over PSD `G` with identity diagonal blocks.

use crate::error::{Result, SnlError};
use crate::numerics::{project_block_identity, project_psd, SymMatrix};

/// Sign convention of the multiplier. `Minus` is the scheme
/// `G ← Π₊[H − (C − Λ)/ρ]`, `H ← Π_Ω[G − Λ/ρ]`, `Λ ← Λ + ρ(H − G)`.
/// `Plus` uses the opposite sign for `Λ` throughout; its iterates are the
/// same with `Λ` negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HUpdateSign {
    #[default]
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Also require every diagonal block of `G` within this Frobenius
    /// distance of the identity before stopping.
    pub feas_tol: f64,
    pub sign: HUpdateSign,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            rho: 0.01,
            eps_abs: 1e-8,
            eps_rel: 1e-6,
            max_iter: 20_000,
            feas_tol: 1e-7,
            sign: HUpdateSign::Minus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmResult {
    pub g: SymMatrix,
    pub h: SymMatrix,
    pub lambda: SymMatrix,
    pub iters: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `Trace(C G_k)` for the last iterations, oldest first.
    pub recent_objectives: Vec<f64>,
}

impl AdmmResult {
    /// Largest Frobenius distance of a diagonal block of `G` from `I_d`.
    pub fn block_infeasibility(&self, d: usize) -> f64 {
        block_infeasibility(&self.g, d)
    }
}

pub fn block_infeasibility(g: &SymMatrix, d: usize) -> f64 {
    (0..g.order() / d)
        .map(|i| {
            let mut b = g.diagonal_block(i, d);
            for k in 0..d {
                b[(k, k)] -= 1.0;
            }
            b.norm()
        })
        .fold(0.0, f64::max)
}

const OBJECTIVE_HISTORY: usize = 200;

pub fn admm_solve(c: &SymMatrix, h0: SymMatrix, d: usize, opts: &AdmmOptions) -> Result<AdmmResult> {
    if !(opts.rho > 0.0) {
        return Err(SnlError::InvalidInput(format!("rho must be positive, got {}", opts.rho)));
    }
    let l = c.order();
    if h0.order() != l || d == 0 || l % d != 0 {
        return Err(SnlError::DimensionMismatch(format!(
            "C has order {l}, H₀ order {}, d = {d}",
            h0.order()
        )));
    }
    let inv_rho = 1.0 / opts.rho;
    let s = match opts.sign {
        HUpdateSign::Minus => 1.0,
        HUpdateSign::Plus => -1.0,
    };
    let mut h = h0;
    let mut lambda = SymMatrix::zeros(l);
    let mut g = h.clone();
    let mut recent = Vec::with_capacity(OBJECTIVE_HISTORY);
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iter {
        iters += 1;
        // G ← Π₊[H − (C − sΛ)/ρ]
        let arg = h.add_scaled(-inv_rho, &c.add_scaled(-s, &lambda));
        g = project_psd(&arg)?;
        // H ← Π_Ω[G − sΛ/ρ]
        let h_next = project_block_identity(&g.add_scaled(-s * inv_rho, &lambda), d)?;
        let diff = h_next.add_scaled(-1.0, &g);
        // Λ ← Λ + sρ(H − G)
        lambda = lambda.add_scaled(s * opts.rho, &diff);
        r_norm = diff.frobenius_norm();
        s_norm = opts.rho * h_next.add_scaled(-1.0, &h).frobenius_norm();
        h = h_next;

        if recent.len() == OBJECTIVE_HISTORY {
            recent.remove(0);
        }
        recent.push(c.trace_product(&g));

        let eps_pri = l as f64 * opts.eps_abs + opts.eps_rel * g.frobenius_norm().max(h.frobenius_norm());
        let eps_dual = l as f64 * opts.eps_abs + opts.eps_rel * lambda.frobenius_norm();
        if r_norm <= eps_pri && s_norm <= eps_dual && block_infeasibility(&g, d) <= opts.feas_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("ADMM stopped after {iters} iterations without meeting the tolerances (primal {r_norm:.3e}, dual {s_norm:.3e})");
    }
    Ok(AdmmResult {
        g,
        h,
        lambda,
        iters,
        converged,
        primal_residual: r_norm,
        dual_residual: s_norm,
        recent_objectives: recent,
    })
}
