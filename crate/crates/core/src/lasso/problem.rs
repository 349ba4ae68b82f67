use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, DenseMatrix};

/// Gaussian dictionary with unit-norm columns, deterministic per seed.
pub fn gen_dictionary(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("dictionary dims must be positive, got ({m}, {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    for j in 0..n {
        let norm = d.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..m {
            d[(i, j)] /= norm;
        }
    }
    Ok(d)
}

/// Eigendecomposition `DDᵀ = P Λ Pᵀ`, computed once per dictionary so that
/// `(I + σDDᵀ)⁻¹` can be applied for any `σ` by diagonal rescaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralCache {
    pub p: DenseMatrix,
    pub lambda: Vec<f64>,
}

impl SpectralCache {
    pub fn new(dictionary: &DenseMatrix) -> Result<Self> {
        let eig = sym_eig(&dictionary.gram_rows())?;
        // DDᵀ is PSD; clip round-off below zero
        let lambda = eig.eigvals.iter().map(|&l| l.max(0.0)).collect();
        Ok(Self {
            p: eig.eigvecs,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `λ_max(DDᵀ) = λ_max(DᵀD)`.
    pub fn max_eigenvalue(&self) -> f64 {
        self.lambda.first().copied().unwrap_or(0.0)
    }

    /// The diagonal `1 / (1 + σλᵢ)` for one penalty.
    pub fn factors(&self, sigma: f64) -> Vec<f64> {
        self.lambda.iter().map(|l| 1.0 / (1.0 + sigma * l)).collect()
    }

    /// `P diag(factors) Pᵀ v`.
    pub fn apply_factors(&self, factors: &[f64], v: &[f64]) -> Vec<f64> {
        let mut coeffs = self.p.tr_matvec(v);
        for (c, f) in coeffs.iter_mut().zip(factors) {
            *c *= f;
        }
        self.p.matvec(&coeffs)
    }
}

/// `(I + σDDᵀ)⁻¹ v` through the spectral cache.
pub fn inv_apply(cache: &SpectralCache, sigma: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::invalid(format!("sigma = {sigma} must be nonnegative")));
    }
    if v.len() != cache.dim() {
        return Err(Error::invalid("vector length does not match the cache"));
    }
    Ok(cache.apply_factors(&cache.factors(sigma), v))
}

/// Componentwise clamp onto `[−μ, μ]`.
pub fn project_box(v: &[f64], mu: f64) -> Vec<f64> {
    v.iter().map(|t| t.clamp(-mu, mu)).collect()
}

/// Shared data for a family of Lasso problems `½‖Dw − ξ‖² + μ‖w‖₁` that
/// differ only in the signal `ξ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoProblem {
    dictionary: DenseMatrix,
    /// `Dᵀ`, kept for column access.
    dictionary_t: DenseMatrix,
    mu: f64,
    cache: SpectralCache,
}

impl LassoProblem {
    pub fn new(dictionary: DenseMatrix, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("mu = {mu} must be positive")));
        }
        if dictionary.rows() == 0 || dictionary.cols() == 0 {
            return Err(Error::invalid("dictionary must be nonempty"));
        }
        let cache = SpectralCache::new(&dictionary)?;
        Ok(Self {
            dictionary_t: dictionary.transpose(),
            dictionary,
            mu,
            cache,
        })
    }

    pub fn dictionary(&self) -> &DenseMatrix {
        &self.dictionary
    }

    pub fn dictionary_t(&self) -> &DenseMatrix {
        &self.dictionary_t
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn cache(&self) -> &SpectralCache {
        &self.cache
    }

    /// Rows of `D` (signal length).
    pub fn m(&self) -> usize {
        self.dictionary.rows()
    }

    /// Columns of `D` (coefficient length).
    pub fn n(&self) -> usize {
        self.dictionary.cols()
    }

    pub(crate) fn check_signal(&self, signal: &[f64]) -> Result<()> {
        if signal.len() != self.m() {
            return Err(Error::invalid(format!(
                "signal has length {}, dictionary has {} rows",
                signal.len(),
                self.m()
            )));
        }
        if signal.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signal must be finite"));
        }
        Ok(())
    }

    /// `½‖Dw − ξ‖² + μ‖w‖₁`.
    pub fn primal_objective(&self, signal: &[f64], w: &[f64]) -> f64 {
        let dw = self.dictionary.matvec(w);
        let fit: f64 = dw.iter().zip(signal).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * fit + self.mu * w.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// A single Lasso problem with its own copy of the dictionary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoInstance {
    pub dictionary: DenseMatrix,
    pub signal: Vec<f64>,
    pub mu: f64,
}

impl LassoInstance {
    pub fn problem(&self) -> Result<LassoProblem> {
        let p = LassoProblem::new(self.dictionary.clone(), self.mu)?;
        p.check_signal(&self.signal)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_dense;

    #[test]
    fn dictionary_columns_have_unit_norm() {
        for (m, n, seed) in [(10, 20, 0), (3, 7, 42), (1, 5, 9)] {
            let d = gen_dictionary(m, n, seed).unwrap();
            for j in 0..n {
                let norm: f64 = d.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn scalar_dictionary_is_plus_or_minus_one() {
        let d = gen_dictionary(1, 1, 5).unwrap();
        assert_eq!(d[(0, 0)].abs(), 1.0);
    }

    #[test]
    fn dictionary_is_deterministic() {
        assert_eq!(gen_dictionary(4, 6, 3).unwrap(), gen_dictionary(4, 6, 3).unwrap());
        assert_ne!(gen_dictionary(4, 6, 3).unwrap(), gen_dictionary(4, 6, 4).unwrap());
        assert!(gen_dictionary(0, 6, 3).is_err());
    }

    #[test]
    fn inv_apply_special_cases() {
        let d = gen_dictionary(3, 5, 1).unwrap();
        let cache = SpectralCache::new(&d).unwrap();
        let v = [1.0, -2.0, 0.5];
        let same = inv_apply(&cache, 0.0, &v).unwrap();
        for (a, b) in same.iter().zip(&v) {
            assert!((a - b).abs() <= 1e-14);
        }
        // orthonormal rows → DDᵀ = I
        let q = DenseMatrix::from_rows(&[vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let cache = SpectralCache::new(&q).unwrap();
        let out = inv_apply(&cache, 3.0, &[4.0, 8.0]).unwrap();
        assert!((out[0] - 1.0).abs() <= 1e-14 && (out[1] - 2.0).abs() <= 1e-14);
        assert!(inv_apply(&cache, -1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn inv_apply_matches_dense_solve() {
        let d = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, 0.1]]).unwrap();
        let cache = SpectralCache::new(&d).unwrap();
        let v = [0.2, -1.0, 3.0];
        let got = inv_apply(&cache, 0.7, &v).unwrap();
        let m = DenseMatrix::identity(3).add(&d.gram_rows().scaled(0.7));
        let want = solve_dense(&m, &v).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn box_projection() {
        assert_eq!(project_box(&[0.05, -0.02], 0.1), vec![0.05, -0.02]);
        assert_eq!(project_box(&[3.0, -0.05, 0.1], 0.1), vec![0.1, -0.05, 0.1]);
        let v = [5.0, -7.0, 0.01];
        let once = project_box(&v, 0.5);
        assert_eq!(project_box(&once, 0.5), once);
    }

    #[test]
    fn spectral_cache_reconstructs_gram() {
        let d = gen_dictionary(6, 9, 2).unwrap();
        let cache = SpectralCache::new(&d).unwrap();
        let eig = crate::linalg::SymEig {
            eigvecs: cache.p.clone(),
            eigvals: cache.lambda.clone(),
        };
        let gram = d.gram_rows();
        assert!(eig.reconstruct().sub(&gram).max_abs() <= 1e-8 * (1.0 + gram.max_abs()));
        assert!(cache.lambda.iter().all(|&l| l >= -1e-10));
    }
}
