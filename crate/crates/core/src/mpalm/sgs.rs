//! Symmetric Gauss-Seidel decomposition of the proximal ALM subproblem.
//!
//! With `Q̃ = σAA* + S̃ + Σ = 𝒰 + 𝒟 + 𝒰*` and `Ŝ = 𝒰𝒟⁻¹𝒰*`, one backward
//! block sweep followed by one forward block sweep minimizes
//!
//! `φ(y) = ½⟨y, (Q̃ + Ŝ) y⟩ + ⟨∇f(yᵏ) − Σyᵏ + Axᵏ − σAc − (S̃ + Ŝ)yᵏ, y⟩ + g(y₁)`
//!
//! exactly, without ever forming `Ŝ` inside the sweep.

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eig, DenseMatrix, Lu};

use super::instance::{BlockDiagonal, DenseBlockInstance};

/// Positive-definiteness threshold for the diagonal blocks.
const PD_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum BlockSolver {
    Lu(Lu),
    /// Diagonal of a diagonal block, used for the closed-form prox on block 1.
    Diagonal(Vec<f64>),
}

/// The decomposition `Q̃ = 𝒰 + 𝒟 + 𝒰*` together with the SGS operator
/// `Ŝ = 𝒰𝒟⁻¹𝒰*`, built for one penalty `σ`.
#[derive(Debug, Clone)]
pub struct SgsDecomposition {
    pub sigma: f64,
    pub qtilde: DenseMatrix,
    pub dblock: DenseMatrix,
    pub upper: DenseMatrix,
    pub shat: DenseMatrix,
    pub stilde: DenseMatrix,
    block_solvers: Vec<BlockSolver>,
    ranges: Vec<std::ops::Range<usize>>,
}

impl SgsDecomposition {
    /// `(𝒟 + 𝒰) 𝒟⁻¹ (𝒟 + 𝒰)ᵀ`, which equals `Q̃ + Ŝ`.
    pub fn factored_form(&self) -> DenseMatrix {
        let lower_t = self.dblock.add(&self.upper);
        let dinv_lt = self.apply_dinv(&lower_t.transpose());
        lower_t.matmul(&dinv_lt)
    }

    /// `Q̃ + Ŝ`, the Hessian of the subproblem objective.
    pub fn hessian(&self) -> DenseMatrix {
        self.qtilde.add(&self.shat)
    }

    /// `S̃ + Ŝ`.
    pub fn proximal_operator(&self) -> DenseMatrix {
        self.stilde.add(&self.shat)
    }

    /// Applies `𝒟⁻¹` column-wise.
    fn apply_dinv(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rhs.rows(), rhs.cols());
        for (solver, r) in self.block_solvers.iter().zip(&self.ranges) {
            for col in 0..rhs.cols() {
                let b: Vec<f64> = r.clone().map(|i| rhs[(i, col)]).collect();
                let x = solve_block(solver, &b);
                for (k, i) in r.clone().enumerate() {
                    out[(i, col)] = x[k];
                }
            }
        }
        out
    }
}

fn solve_block(solver: &BlockSolver, b: &[f64]) -> Vec<f64> {
    match solver {
        BlockSolver::Lu(lu) => lu.solve(b),
        BlockSolver::Diagonal(d) => b.iter().zip(d).map(|(v, di)| v / di).collect(),
    }
}

/// Per-block minimum eigenvalues behind the convergence conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `λ_min(½Σᵢᵢ + σAᵢAᵢ* + S̃ᵢᵢ)` for each block.
    pub block_min_eigs: Vec<f64>,
    /// `λ_min(S̃ + ½Σ)`.
    pub stilde_half_sigma_min_eig: f64,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.block_min_eigs.iter().all(|&e| e > PD_TOL) && self.stilde_half_sigma_min_eig >= -PD_TOL
    }
}

fn check_stilde(instance: &DenseBlockInstance, stilde: &BlockDiagonal) -> Result<()> {
    if !stilde.matches(instance.block_dims()) {
        return Err(Error::invalid("S̃ block sizes do not match the instance"));
    }
    if stilde.blocks.iter().any(|b| !b.is_symmetric(1e-12)) {
        return Err(Error::invalid("S̃ blocks must be symmetric"));
    }
    Ok(())
}

fn gram_block(instance: &DenseBlockInstance, i: usize, j: usize) -> DenseMatrix {
    // Aᵢ Aⱼ* as a dim(Yᵢ) × dim(Yⱼ) matrix
    instance.adjoint(i).transpose().matmul(instance.adjoint(j))
}

/// Reports the minimum eigenvalues behind the positive-definiteness
/// conditions for `(instance, σ, S̃)`.
pub fn check_assumptions(
    instance: &DenseBlockInstance,
    sigma: f64,
    stilde: &BlockDiagonal,
) -> Result<AssumptionReport> {
    check_stilde(instance, stilde)?;
    let sf = instance.sigma_f();
    let mut block_min_eigs = Vec::with_capacity(instance.num_blocks());
    for i in 0..instance.num_blocks() {
        let r = instance.block_range(i);
        let m = sf
            .block(r.start, r.start, r.len(), r.len())
            .scaled(0.5)
            .add(&gram_block(instance, i, i).scaled(sigma))
            .add(&stilde.blocks[i]);
        block_min_eigs.push(sym_eig(&m)?.min_eigenvalue());
    }
    let whole = stilde.to_dense().add(&sf.scaled(0.5));
    Ok(AssumptionReport {
        block_min_eigs,
        stilde_half_sigma_min_eig: sym_eig(&whole)?.min_eigenvalue(),
    })
}

/// Builds the SGS decomposition for penalty `sigma`.
///
/// Fails with [`Error::AssumptionViolation`] (1-based block index) when a
/// block `½Σᵢᵢ + σAᵢAᵢ* + S̃ᵢᵢ` is not positive definite, and with
/// [`Error::NonDiagonalProxBlock`] when `g` is nonsmooth but the first
/// diagonal block is not diagonal.
pub fn build_sgs(
    instance: &DenseBlockInstance,
    sigma: f64,
    stilde: &BlockDiagonal,
) -> Result<SgsDecomposition> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("penalty {sigma} must be positive")));
    }
    let report = check_assumptions(instance, sigma, stilde)?;
    if let Some((i, &e)) = report
        .block_min_eigs
        .iter()
        .enumerate()
        .find(|(_, &e)| !(e > PD_TOL))
    {
        return Err(Error::AssumptionViolation {
            block: i + 1,
            min_eig: e,
        });
    }

    let p = instance.num_blocks();
    let n = instance.dim_y();
    let ranges: Vec<_> = (0..p).map(|i| instance.block_range(i)).collect();
    let stilde_dense = stilde.to_dense();

    let a_star = instance.a_star();
    let qtilde = a_star
        .transpose()
        .matmul(&a_star)
        .scaled(sigma)
        .add(&stilde_dense)
        .add(instance.sigma_f());

    let mut dblock = DenseMatrix::zeros(n, n);
    let mut upper = DenseMatrix::zeros(n, n);
    for (i, ri) in ranges.iter().enumerate() {
        for (j, rj) in ranges.iter().enumerate() {
            let blk = qtilde.block(ri.start, rj.start, ri.len(), rj.len());
            if i == j {
                dblock.set_block(ri.start, rj.start, &blk);
            } else if i < j {
                upper.set_block(ri.start, rj.start, &blk);
            }
        }
    }

    let mut block_solvers = Vec::with_capacity(p);
    for (i, r) in ranges.iter().enumerate() {
        let d = dblock.block(r.start, r.start, r.len(), r.len());
        if i == 0 && !instance.g().is_smooth() {
            if !d.is_diagonal(1e-12 * (1.0 + d.max_abs())) {
                return Err(Error::NonDiagonalProxBlock { block: 1 });
            }
            block_solvers.push(BlockSolver::Diagonal(d.diag()));
        } else {
            block_solvers.push(BlockSolver::Lu(Lu::factor(&d)?));
        }
    }

    let mut decomp = SgsDecomposition {
        sigma,
        qtilde,
        dblock,
        upper,
        shat: DenseMatrix::zeros(n, n),
        stilde: stilde_dense,
        block_solvers,
        ranges,
    };
    let dinv_ut = decomp.apply_dinv(&decomp.upper.transpose());
    let shat = decomp.upper.matmul(&dinv_ut);
    // exact symmetry for downstream eigen-solves
    decomp.shat = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (shat[(i, j)] + shat[(j, i)]));
    Ok(decomp)
}

/// Linear term `∇f(yᵏ) − Σyᵏ + Axᵏ − σAc − S̃yᵏ` shared by every block
/// subproblem. For quadratic `f` the first two terms collapse to `b`.
fn block_linear_term(
    instance: &DenseBlockInstance,
    decomp: &SgsDecomposition,
    x: &[f64],
    y: &[f64],
) -> Vec<f64> {
    let sigma = decomp.sigma;
    let ax = instance.apply_a(x);
    let ac = instance.apply_a(instance.c());
    let sy = decomp.stilde.matvec(y);
    instance
        .linear()
        .iter()
        .zip(&ax)
        .zip(&ac)
        .zip(&sy)
        .map(|(((b, ax), ac), sy)| b + ax - sigma * ac - sy)
        .collect()
}

/// One symmetric Gauss-Seidel cycle (backward sweep over blocks `p..2`,
/// forward sweep over `1..p`) from the state `(x, y)`.
pub fn sgs_sweep(
    instance: &DenseBlockInstance,
    decomp: &SgsDecomposition,
    x: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != instance.dim_x() || y.len() != instance.dim_y() {
        return Err(Error::invalid("state dimensions do not match the instance"));
    }
    let lin = block_linear_term(instance, decomp, x, y);
    let mut w = y.to_vec();
    let p = instance.num_blocks();
    let g = instance.g();

    let update = |i: usize, w: &mut Vec<f64>| {
        let r = decomp.ranges[i].clone();
        // rhs = −(linᵢ + Σ_{j≠i} Q̃ᵢⱼ wⱼ)
        let rhs: Vec<f64> = r
            .clone()
            .map(|row| {
                let q = decomp.qtilde.row(row);
                let full = dot(q, w);
                let own = dot(&q[r.clone()], &w[r.clone()]);
                -(lin[row] + full - own)
            })
            .collect();
        let new = match &decomp.block_solvers[i] {
            BlockSolver::Diagonal(d) => rhs
                .iter()
                .zip(d)
                .map(|(v, di)| g.prox_scalar(v / di, *di))
                .collect(),
            solver => solve_block(solver, &rhs),
        };
        w[r].copy_from_slice(&new);
    };

    for i in (1..p).rev() {
        update(i, &mut w);
    }
    for i in 0..p {
        update(i, &mut w);
    }
    Ok(w)
}

/// Full linear term of `φ` (including `−Ŝyᵏ`), for comparing the sweep with
/// a direct minimization of `½⟨y, (Q̃+Ŝ)y⟩ + ⟨r, y⟩ + g(y₁)`.
pub fn subproblem_linear_term(
    instance: &DenseBlockInstance,
    decomp: &SgsDecomposition,
    x: &[f64],
    y: &[f64],
) -> Vec<f64> {
    let mut lin = block_linear_term(instance, decomp, x, y);
    crate::linalg::axpy(-1.0, &decomp.shat.matvec(y), &mut lin);
    lin
}
