use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, DenseMatrix};

/// The nonsmooth term `g`, acting on the first block only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GSpec {
    Zero,
    /// Indicator of `{ y : ‖y‖_∞ ≤ radius }`.
    BoxIndicator { radius: f64 },
    /// Indicator of the nonnegative orthant.
    NonNegative,
    /// `weight · ‖y‖₁`.
    L1 { weight: f64 },
}

impl GSpec {
    pub fn is_smooth(&self) -> bool {
        matches!(self, GSpec::Zero)
    }

    /// Scalar prox `argmin_t g_i(t) + (d/2)(t − v)²` for one coordinate.
    #[inline]
    pub fn prox_scalar(&self, v: f64, d: f64) -> f64 {
        match *self {
            GSpec::Zero => v,
            GSpec::BoxIndicator { radius } => v.clamp(-radius, radius),
            GSpec::NonNegative => v.max(0.0),
            GSpec::L1 { weight } => soft_threshold(v, weight / d),
        }
    }

    /// Unit-step proximal map.
    pub fn prox(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&t| self.prox_scalar(t, 1.0)).collect()
    }

    /// Value of `g`, `+∞` outside its domain (with a small feasibility slack).
    pub fn value(&self, y: &[f64]) -> f64 {
        const SLACK: f64 = 1e-12;
        match *self {
            GSpec::Zero => 0.0,
            GSpec::BoxIndicator { radius } => {
                if y.iter().all(|t| t.abs() <= radius + SLACK) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GSpec::NonNegative => {
                if y.iter().all(|&t| t >= -SLACK) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            GSpec::L1 { weight } => weight * y.iter().map(|t| t.abs()).sum::<f64>(),
        }
    }
}

#[inline]
pub fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// A fully materialized instance of the multi-block problem
///
/// `min f(y) + g(y₁)  s.t.  Σᵢ Aᵢ* yᵢ = c`
///
/// with quadratic `f(y) = ½⟨y, Σy⟩ + ⟨b, y⟩`, so that `Σ` is an exact
/// majorization of `f`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseBlockInstance {
    block_dims: Vec<usize>,
    /// Matrices of `Aᵢ*`, each `dim(X) × dim(Yᵢ)`.
    adjoints: Vec<DenseMatrix>,
    c: Vec<f64>,
    sigma_f: DenseMatrix,
    linear: Vec<f64>,
    g: GSpec,
}

impl DenseBlockInstance {
    pub fn new(
        adjoints: Vec<DenseMatrix>,
        c: Vec<f64>,
        sigma_f: DenseMatrix,
        linear: Vec<f64>,
        g: GSpec,
    ) -> Result<Self> {
        if adjoints.is_empty() {
            return Err(Error::invalid("at least one block is required"));
        }
        let dim_x = c.len();
        if adjoints.iter().any(|a| a.rows() != dim_x) {
            return Err(Error::invalid("every Aᵢ* must have dim(X) rows"));
        }
        let block_dims: Vec<usize> = adjoints.iter().map(DenseMatrix::cols).collect();
        if block_dims.contains(&0) {
            return Err(Error::invalid("blocks must be nonempty"));
        }
        let dim_y: usize = block_dims.iter().sum();
        if sigma_f.rows() != dim_y || sigma_f.cols() != dim_y {
            return Err(Error::invalid(format!(
                "Σ must be {dim_y}x{dim_y}, got {}x{}",
                sigma_f.rows(),
                sigma_f.cols()
            )));
        }
        if linear.len() != dim_y {
            return Err(Error::invalid("linear term length must equal dim(Y)"));
        }
        if !sigma_f.is_symmetric(1e-12) {
            return Err(Error::invalid("Σ must be symmetric"));
        }
        if c.iter().chain(&linear).any(|v| !v.is_finite()) {
            return Err(Error::invalid("c and b must be finite"));
        }
        match g {
            GSpec::BoxIndicator { radius } if !(radius > 0.0) => {
                return Err(Error::invalid("box radius must be positive"))
            }
            GSpec::L1 { weight } if !(weight >= 0.0) => {
                return Err(Error::invalid("l1 weight must be nonnegative"))
            }
            _ => {}
        }
        let min_eig = sym_eig(&sigma_f)?.min_eigenvalue();
        if min_eig < -1e-10 {
            return Err(Error::invalid(format!(
                "Σ must be positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self {
            block_dims,
            adjoints,
            c,
            sigma_f,
            linear,
            g,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn dim_x(&self) -> usize {
        self.c.len()
    }

    pub fn dim_y(&self) -> usize {
        self.block_dims.iter().sum()
    }

    /// Index range of block `i` (0-based) inside a flat `y`.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        let start: usize = self.block_dims[..i].iter().sum();
        start..start + self.block_dims[i]
    }

    pub fn adjoint(&self, i: usize) -> &DenseMatrix {
        &self.adjoints[i]
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn sigma_f(&self) -> &DenseMatrix {
        &self.sigma_f
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn g(&self) -> GSpec {
        self.g
    }

    /// The full `dim(X) × dim(Y)` matrix of `A* = [A₁* … A_p*]`.
    pub fn a_star(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.dim_x(), self.dim_y());
        for (i, a) in self.adjoints.iter().enumerate() {
            out.set_block(0, self.block_range(i).start, a);
        }
        out
    }

    /// `A* y`.
    pub fn apply_a_star(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_x()];
        for (i, a) in self.adjoints.iter().enumerate() {
            let yi = &y[self.block_range(i)];
            for (r, o) in out.iter_mut().enumerate() {
                *o += crate::linalg::dot(a.row(r), yi);
            }
        }
        out
    }

    /// `A x`.
    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim_y());
        for a in &self.adjoints {
            out.extend(a.tr_matvec(x));
        }
        out
    }

    /// `∇f(y) = Σ y + b`.
    pub fn grad_f(&self, y: &[f64]) -> Vec<f64> {
        let mut g = self.sigma_f.matvec(y);
        crate::linalg::axpy(1.0, &self.linear, &mut g);
        g
    }

    /// `f(y) + g(y₁)`.
    pub fn objective(&self, y: &[f64]) -> f64 {
        let sy = self.sigma_f.matvec(y);
        0.5 * crate::linalg::dot(y, &sy)
            + crate::linalg::dot(&self.linear, y)
            + self.g.value(&y[self.block_range(0)])
    }

    /// Splits a flat vector into per-block vectors.
    pub fn split_blocks(&self, y: &[f64]) -> Vec<Vec<f64>> {
        (0..self.num_blocks())
            .map(|i| y[self.block_range(i)].to_vec())
            .collect()
    }
}

/// Block-diagonal proximal operator `S̃ = Diag(S̃₁₁, …, S̃_pp)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagonal {
    pub blocks: Vec<DenseMatrix>,
}

impl BlockDiagonal {
    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| DenseMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::block_diag(&self.blocks)
    }

    pub fn matches(&self, dims: &[usize]) -> bool {
        self.blocks.len() == dims.len()
            && self
                .blocks
                .iter()
                .zip(dims)
                .all(|(b, &d)| b.rows() == d && b.cols() == d)
    }

    /// Replaces the first block with `λ_max(M)·I − M`, where
    /// `M = σA₁A₁* + Σ₁₁`, so that the first diagonal block of the SGS
    /// decomposition becomes a multiple of the identity and the block-1
    /// update reduces to a closed-form prox.
    pub fn with_scalar_first_block(
        mut self,
        instance: &DenseBlockInstance,
        sigma: f64,
    ) -> Result<Self> {
        let a1 = instance.adjoint(0);
        let r = instance.block_range(0);
        let m = a1
            .transpose()
            .matmul(a1)
            .scaled(sigma)
            .add(&instance.sigma_f().block(r.start, r.start, r.len(), r.len()));
        let lmax = sym_eig(&m)?.max_eigenvalue().max(0.0);
        // keep the block strictly positive even when M vanishes
        let level = lmax.max(sigma);
        self.blocks[0] = DenseMatrix::identity(r.len()).scaled(level).sub(&m);
        Ok(self)
    }
}

/// Settings for [`random_instance`].
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub blocks: usize,
    pub max_block_dim: usize,
    pub g: GSpec,
    /// Adds `½I` to `Σ` so `f` is strongly convex and a KKT point exists.
    pub strongly_convex: bool,
}

/// A random instance together with a proximal operator satisfying the
/// positive-definiteness condition at `sigma`.
pub fn random_instance(
    seed: u64,
    spec: RandomSpec,
    sigma: f64,
) -> Result<(DenseBlockInstance, BlockDiagonal)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims: Vec<usize> = (0..spec.blocks)
        .map(|_| rng.random_range(1..=spec.max_block_dim))
        .collect();
    let dim_y: usize = dims.iter().sum();
    let dim_x = rng.random_range(1..=dim_y.div_ceil(2).max(1));
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    let adjoints: Vec<DenseMatrix> = dims
        .iter()
        .map(|&d| DenseMatrix::from_fn(dim_x, d, |_, _| normal(&mut rng)))
        .collect();

    let rank = rng.random_range(0..=dim_y);
    let factor = DenseMatrix::from_fn(dim_y, rank, |_, _| normal(&mut rng) / (dim_y as f64).sqrt());
    let mut sigma_f = factor.gram_rows();
    if spec.strongly_convex {
        sigma_f = sigma_f.add(&DenseMatrix::identity(dim_y).scaled(0.5));
    }
    let linear: Vec<f64> = (0..dim_y).map(|_| normal(&mut rng)).collect();

    // feasible point strictly inside dom g
    let mut y_feas: Vec<f64> = (0..dim_y).map(|_| normal(&mut rng)).collect();
    for v in &mut y_feas[..dims[0]] {
        *v = match spec.g {
            GSpec::BoxIndicator { radius } => rng.random_range(-0.5..0.5) * radius,
            GSpec::NonNegative => rng.random_range(0.1..1.0),
            _ => *v,
        };
    }
    let mut c = vec![0.0; dim_x];
    let mut offset = 0;
    for (a, &d) in adjoints.iter().zip(&dims) {
        crate::linalg::axpy(1.0, &a.matvec(&y_feas[offset..offset + d]), &mut c);
        offset += d;
    }

    let instance = DenseBlockInstance::new(adjoints, c, sigma_f, linear, spec.g)?;

    let mut stilde = BlockDiagonal::zeros(&dims);
    for (i, &d) in dims.iter().enumerate() {
        let r = instance.block_range(i);
        let a = instance.adjoint(i);
        let block = a
            .transpose()
            .matmul(a)
            .scaled(sigma)
            .add(&instance.sigma_f().block(r.start, r.start, d, d).scaled(0.5));
        if sym_eig(&block)?.min_eigenvalue() <= 1e-3 {
            stilde.blocks[i] = DenseMatrix::identity(d);
        }
    }
    if !spec.g.is_smooth() {
        stilde = stilde.with_scalar_first_block(&instance, sigma)?;
    }
    Ok((instance, stilde))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prox_scalar_cases() {
        assert_eq!(GSpec::Zero.prox_scalar(3.0, 2.0), 3.0);
        assert_eq!(GSpec::BoxIndicator { radius: 0.1 }.prox_scalar(3.0, 2.0), 0.1);
        assert_eq!(GSpec::NonNegative.prox_scalar(-1.0, 2.0), 0.0);
        // weight 1, curvature 2 → threshold 0.5
        assert_eq!(GSpec::L1 { weight: 1.0 }.prox_scalar(2.0, 2.0), 1.5);
        assert_eq!(GSpec::L1 { weight: 1.0 }.prox_scalar(-0.2, 2.0), 0.0);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let a = DenseMatrix::identity(2);
        let r = DenseBlockInstance::new(
            vec![a.clone()],
            vec![0.0; 3],
            DenseMatrix::zeros(2, 2),
            vec![0.0; 2],
            GSpec::Zero,
        );
        assert!(r.is_err());
        let r = DenseBlockInstance::new(
            vec![a],
            vec![0.0; 2],
            DenseMatrix::from_diag(&[1.0, -1.0]),
            vec![0.0; 2],
            GSpec::Zero,
        );
        assert!(r.is_err(), "indefinite Σ must be rejected");
    }

    #[test]
    fn adjoint_pair_is_consistent() {
        let (inst, _) = random_instance(
            3,
            RandomSpec {
                blocks: 3,
                max_block_dim: 4,
                g: GSpec::Zero,
                strongly_convex: false,
            },
            1.0,
        )
        .unwrap();
        let x: Vec<f64> = (0..inst.dim_x()).map(|i| i as f64 - 1.0).collect();
        let y: Vec<f64> = (0..inst.dim_y()).map(|i| (i as f64).sin()).collect();
        let lhs = crate::linalg::dot(&inst.apply_a_star(&y), &x);
        let rhs = crate::linalg::dot(&y, &inst.apply_a(&x));
        assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        assert_eq!(inst.a_star().matvec(&y), inst.apply_a_star(&y));
    }
}
