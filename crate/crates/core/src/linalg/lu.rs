use super::DenseMatrix;
use crate::error::{Error, Result};

/// Ratio of largest to smallest pivot above which a matrix is treated as
/// singular.
const MAX_CONDITION: f64 = 1e14;

/// LU factorization with partial pivoting, `PA = LU`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs == 0.0 {
                return Err(Error::SingularMatrix {
                    condition: f64::INFINITY,
                });
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        let pivots = lu.diag();
        let max = pivots.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        let min = pivots.iter().fold(f64::INFINITY, |a, p| a.min(p.abs()));
        if n > 0 {
            let condition = max / min;
            if !(condition <= MAX_CONDITION) {
                return Err(Error::SingularMatrix { condition });
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_permuted_in_place(&mut x);
        x
    }

    fn solve_permuted_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n, "rhs dimension mismatch");
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve(&b.column(j));
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Solves `M x = b` for square nonsingular `M`.
pub fn solve_dense(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != m.rows() {
        return Err(Error::invalid("right-hand side length does not match matrix"));
    }
    Ok(Lu::factor(m)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve_returns_rhs() {
        let b = [1.5, -2.0, 3.25];
        assert_eq!(solve_dense(&DenseMatrix::identity(3), &b).unwrap(), b.to_vec());
    }

    #[test]
    fn diagonal_solve() {
        let m = DenseMatrix::from_diag(&[2.0, 4.0]);
        assert_eq!(solve_dense(&m, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn singular_is_reported() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_dense(&m, &[1.0, 1.0]),
            Err(Error::SingularMatrix { .. })
        ));
        let nearly = DenseMatrix::from_diag(&[1.0, 1e-16]);
        assert!(matches!(
            solve_dense(&nearly, &[1.0, 1.0]),
            Err(Error::SingularMatrix { .. })
        ));
    }

    #[test]
    fn residual_bound_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let m = DenseMatrix::from_fn(n, n, |i, j| {
                rng.random_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 }
            });
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = solve_dense(&m, &b).unwrap();
            let r: Vec<f64> = m.matvec(&x).iter().zip(&b).map(|(a, c)| a - c).collect();
            assert!(norm2(&r) <= 1e-10 * (1.0 + norm2(&b)));
        }
    }
}
