use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, sub};

use super::instance::DenseBlockInstance;

/// Relative KKT residuals of a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `‖A*y − c‖ / (1 + ‖c‖)`.
    pub primal_infeas: f64,
    /// Prox residual on block 1 and gradient norm on the other blocks, each
    /// scaled by `1 + ‖yᵢ‖`; the largest of them.
    pub dual_infeas: f64,
    pub max_resid: f64,
}

impl KktResidual {
    pub fn new(primal_infeas: f64, dual_infeas: f64) -> Self {
        Self {
            primal_infeas,
            dual_infeas,
            max_resid: primal_infeas.max(dual_infeas),
        }
    }
}

/// KKT residual of `(x, y)` for the generic instance.
pub fn kkt_residual(instance: &DenseBlockInstance, x: &[f64], y: &[f64]) -> Result<KktResidual> {
    if x.len() != instance.dim_x() || y.len() != instance.dim_y() {
        return Err(Error::invalid("state dimensions do not match the instance"));
    }
    let c = instance.c();
    let primal = norm2(&sub(&instance.apply_a_star(y), c)) / (1.0 + norm2(c));

    let mut grad = instance.grad_f(y);
    crate::linalg::axpy(1.0, &instance.apply_a(x), &mut grad);

    let mut dual: f64 = 0.0;
    for i in 0..instance.num_blocks() {
        let r = instance.block_range(i);
        let yi = &y[r.clone()];
        let gi = &grad[r];
        let resid = if i == 0 {
            let shifted = sub(yi, gi);
            norm2(&sub(yi, &instance.g().prox(&shifted)))
        } else {
            norm2(gi)
        };
        dual = dual.max(resid / (1.0 + norm2(yi)));
    }
    Ok(KktResidual::new(primal, dual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::mpalm::instance::GSpec;

    fn tiny(linear: Vec<f64>, c: Vec<f64>) -> DenseBlockInstance {
        DenseBlockInstance::new(
            vec![DenseMatrix::identity(1), DenseMatrix::identity(1)],
            c,
            DenseMatrix::identity(2),
            linear,
            GSpec::Zero,
        )
        .unwrap()
    }

    #[test]
    fn zero_problem_has_zero_residual() {
        let inst = tiny(vec![0.0, 0.0], vec![0.0]);
        let r = kkt_residual(&inst, &[0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r, KktResidual::new(0.0, 0.0));
    }

    #[test]
    fn hand_solved_kkt_point() {
        // min ½(y₁² + y₂²) + y₁ − y₂ s.t. y₁ + y₂ = 1
        // stationarity: y₁ + 1 + x = 0, y₂ − 1 + x = 0 → y₁ = y₂ − 2, y = (−½, 3/2), x = −½
        let inst = tiny(vec![1.0, -1.0], vec![1.0]);
        let r = kkt_residual(&inst, &[-0.5], &[-0.5, 1.5]).unwrap();
        assert!(r.max_resid <= 1e-15);
    }

    #[test]
    fn nonzero_gradient_shows_up_as_dual_infeasibility() {
        let inst = tiny(vec![1.0, -1.0], vec![1.0]);
        let r = kkt_residual(&inst, &[0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(r.primal_infeas, 0.0);
        assert!(r.dual_infeas > 0.0);
    }
}
