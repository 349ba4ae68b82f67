use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `M = P diag(Λ) Pᵀ` of a symmetric matrix, eigenvalues
/// sorted in descending order and eigenvectors stored as columns of `P`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymEig {
    pub eigvecs: DenseMatrix,
    pub eigvals: Vec<f64>,
}

impl SymEig {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigvals.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigvals.last().copied().unwrap_or(0.0)
    }

    /// `P diag(Λ) Pᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let p = &self.eigvecs;
        let n = p.rows();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| p[(i, k)] * self.eigvals[k] * p[(j, k)]).sum()
        })
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "sym_eig needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_symmetric(1e-12) {
        return Err(Error::invalid("sym_eig needs a symmetric matrix"));
    }
    let n = m.rows();
    // symmetrize to kill round-off asymmetry
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    // off-diagonal entries below this are flushed to zero
    let tiny = 1e-3 * f64::EPSILON * a.frobenius() / (n.max(1) as f64);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= tiny {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigvals = order.iter().map(|&k| a[(k, k)]).collect();
    let eigvecs = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEig { eigvecs, eigvals })
}

/// Applies the Jacobi rotation in the (p, q) plane: `A ← JᵀAJ`, `V ← VJ`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn orthogonality_error(p: &DenseMatrix) -> f64 {
        p.transpose().matmul(p).sub(&DenseMatrix::identity(p.rows())).max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = sym_eig(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(e.eigvals, vec![1.0, 1.0, 1.0]);
        assert!(orthogonality_error(&e.eigvecs) <= 1e-15);
    }

    #[test]
    fn diagonal_input_is_sorted_descending() {
        let e = sym_eig(&DenseMatrix::from_diag(&[1.0, 4.0])).unwrap();
        assert_eq!(e.eigvals, vec![4.0, 1.0]);
        assert_eq!(e.eigvecs.max_abs(), 1.0);
        assert!(orthogonality_error(&e.eigvecs) == 0.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            sym_eig(&DenseMatrix::zeros(2, 3)),
            Err(Error::InvalidArgument(_))
        ));
        let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&asym), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn empty_matrix() {
        let e = sym_eig(&DenseMatrix::zeros(0, 0)).unwrap();
        assert!(e.eigvals.is_empty());
    }

    fn symmetric(max_n: usize) -> impl Strategy<Value = DenseMatrix> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |raw| {
                let b = DenseMatrix::from_row_major(n, n, raw).unwrap();
                b.add(&b.transpose()).scaled(0.5)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_and_orthogonality(m in symmetric(20)) {
            let e = sym_eig(&m).unwrap();
            let resid = e.reconstruct().sub(&m).max_abs();
            prop_assert!(resid <= 1e-8 * (1.0 + m.max_abs()), "resid {resid}");
            prop_assert!(orthogonality_error(&e.eigvecs) <= 1e-10);
            prop_assert!(e.eigvals.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
