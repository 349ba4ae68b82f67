//! Ground-truth Lasso solutions by cyclic coordinate descent with a
//! duality-gap certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, solve_dense, DenseMatrix};
use crate::mpalm::soft_threshold;

use super::problem::LassoProblem;

const MAX_PASSES: usize = 10_000_000;

/// Primal solution together with the duality gap that certifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoCertificate {
    pub w: Vec<f64>,
    pub gap: f64,
}

/// Dual-feasible pair built from the rescaled residual `ξ − Dw`:
/// `y2 = s(ξ − Dw)`, `y1 = −Dᵀy2`, with `s` the largest scale in `[0, 1]`
/// keeping `‖y1‖_∞ ≤ μ`.
pub fn dual_certificate(problem: &LassoProblem, signal: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dw = problem.dictionary().matvec(w);
    let resid: Vec<f64> = signal.iter().zip(&dw).map(|(s, d)| s - d).collect();
    let corr = problem.dictionary().tr_matvec(&resid);
    let peak = norm_inf(&corr);
    let scale = if peak > problem.mu() {
        problem.mu() / peak
    } else {
        1.0
    };
    let y2: Vec<f64> = resid.iter().map(|r| scale * r).collect();
    let y1: Vec<f64> = corr.iter().map(|c| -scale * c).collect();
    (y1, y2)
}

/// Primal objective plus dual objective `½‖y2‖² − ⟨ξ, y2⟩`; nonnegative for
/// any dual-feasible `(y1, y2)` and zero at optimality.
pub fn duality_gap(
    problem: &LassoProblem,
    signal: &[f64],
    w: &[f64],
    y1: &[f64],
    y2: &[f64],
) -> Result<f64> {
    problem.check_signal(signal)?;
    if w.len() != problem.n() || y1.len() != problem.n() || y2.len() != problem.m() {
        return Err(Error::invalid("dimension mismatch in duality gap"));
    }
    let box_violation = norm_inf(y1) - problem.mu();
    if box_violation > 1e-8 {
        return Err(Error::InfeasibleCertificate(format!(
            "‖y1‖∞ exceeds mu by {box_violation:.3e}"
        )));
    }
    let dty2 = problem.dictionary().tr_matvec(y2);
    let eq: Vec<f64> = y1.iter().zip(&dty2).map(|(a, b)| a + b).collect();
    let eq_violation = norm2(&eq);
    if eq_violation > 1e-8 {
        return Err(Error::InfeasibleCertificate(format!(
            "‖y1 + Dᵀy2‖ = {eq_violation:.3e}"
        )));
    }
    let dual = 0.5 * dot(y2, y2) - dot(signal, y2);
    Ok(problem.primal_objective(signal, w) + dual)
}

fn certified_gap(problem: &LassoProblem, signal: &[f64], w: &[f64]) -> f64 {
    let (y1, y2) = dual_certificate(problem, signal, w);
    duality_gap(problem, signal, w, &y1, &y2).unwrap_or(f64::INFINITY)
}

/// Re-solves the stationarity equations on the current support with fixed
/// signs. Returns `None` if the system is singular or a sign flips.
fn polish(problem: &LassoProblem, signal: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    if support.is_empty() || support.len() > problem.m() {
        return None;
    }
    let dt = problem.dictionary_t();
    let k = support.len();
    let gram = DenseMatrix::from_fn(k, k, |a, b| dot(dt.row(support[a]), dt.row(support[b])));
    let rhs: Vec<f64> = support
        .iter()
        .map(|&j| dot(dt.row(j), signal) - problem.mu() * w[j].signum())
        .collect();
    let sol = solve_dense(&gram, &rhs).ok()?;
    if sol
        .iter()
        .zip(&support)
        .any(|(v, &j)| v.signum() != w[j].signum())
    {
        return None;
    }
    let mut out = vec![0.0; w.len()];
    for (v, &j) in sol.iter().zip(&support) {
        out[j] = *v;
    }
    Some(out)
}

/// Solves the Lasso by cyclic coordinate descent until the certified
/// duality gap is at most `tol`, then polishes on the detected support.
pub fn lasso_oracle(problem: &LassoProblem, signal: &[f64], tol: f64) -> Result<LassoCertificate> {
    problem.check_signal(signal)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let dt = problem.dictionary_t();
    let d = problem.dictionary();
    let mu = problem.mu();
    let n = problem.n();
    let col_sq: Vec<f64> = (0..n).map(|j| dot(dt.row(j), dt.row(j))).collect();

    let mut w = vec![0.0; n];
    let mut resid = signal.to_vec();
    for pass in 0..MAX_PASSES {
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let old = w[j];
            let rho = dot(dt.row(j), &resid) + col_sq[j] * old;
            let new = soft_threshold(rho, mu) / col_sq[j];
            let delta = new - old;
            if delta != 0.0 {
                w[j] = new;
                for (r, dij) in resid.iter_mut().zip(dt.row(j)) {
                    *r -= delta * dij;
                }
            }
        }
        if pass % 10 == 9 || pass < 10 {
            // refresh the residual to avoid drift
            let dw = d.matvec(&w);
            for ((r, s), v) in resid.iter_mut().zip(signal).zip(&dw) {
                *r = s - v;
            }
            let gap = certified_gap(problem, signal, &w);
            if gap <= tol {
                let mut best = LassoCertificate { w, gap };
                if let Some(polished) = polish(problem, signal, &best.w) {
                    let pg = certified_gap(problem, signal, &polished);
                    if pg <= best.gap {
                        best = LassoCertificate {
                            w: polished,
                            gap: pg,
                        };
                    }
                }
                return Ok(best);
            }
        }
    }
    Err(Error::NoConvergence {
        what: "lasso coordinate descent",
        iterations: MAX_PASSES,
    })
}
