use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::instance::{BlockDiagonal, DenseBlockInstance};
use super::kkt::{kkt_residual, KktResidual};
use super::schedule::PenaltySchedule;
use super::sgs::{build_sgs, sgs_sweep, SgsDecomposition};

/// Iterates of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrajectory {
    /// `x⁰, x¹, …, x^K`.
    pub x_iters: Vec<Vec<f64>>,
    /// Final `y`, one vector per block.
    pub y_final: Vec<Vec<f64>>,
    /// KKT residual after each iteration `1..=K`.
    pub kkt_history: Vec<KktResidual>,
}

impl SolverTrajectory {
    pub fn final_x(&self) -> &[f64] {
        self.x_iters.last().expect("trajectory always holds x⁰")
    }
}

/// Runs the SGS-based majorized proximal ALM with a piecewise-constant
/// penalty schedule. The decomposition is rebuilt once per segment.
pub fn mpalm_run(
    instance: &DenseBlockInstance,
    schedule: &PenaltySchedule,
    stilde: &BlockDiagonal,
    x0: &[f64],
    y0: &[f64],
) -> Result<SolverTrajectory> {
    if x0.len() != instance.dim_x() || y0.len() != instance.dim_y() {
        return Err(Error::invalid("initial point dimensions do not match the instance"));
    }
    let tau = schedule.step_size();
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut x_iters = Vec::with_capacity(schedule.total_iters() + 1);
    let mut kkt_history = Vec::with_capacity(schedule.total_iters());
    x_iters.push(x.clone());

    let mut current: Option<(usize, SgsDecomposition)> = None;
    for k in 0..schedule.total_iters() {
        let seg = schedule.segment_of(k);
        if current.as_ref().map(|(s, _)| *s) != Some(seg) {
            current = Some((seg, build_sgs(instance, schedule.sigma_at(k), stilde)?));
        }
        let (_, decomp) = current.as_ref().expect("decomposition built above");
        let sigma = decomp.sigma;

        y = sgs_sweep(instance, decomp, &x, &y)?;
        let resid = instance.apply_a_star(&y);
        for ((xi, ri), ci) in x.iter_mut().zip(&resid).zip(instance.c()) {
            *xi += tau * sigma * (ri - ci);
        }
        x_iters.push(x.clone());
        kkt_history.push(kkt_residual(instance, &x, &y)?);
    }

    Ok(SolverTrajectory {
        x_iters,
        y_final: instance.split_blocks(&y),
        kkt_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::mpalm::instance::GSpec;

    fn tiny() -> DenseBlockInstance {
        DenseBlockInstance::new(
            vec![DenseMatrix::identity(1), DenseMatrix::identity(1)],
            vec![1.0],
            DenseMatrix::identity(2),
            vec![1.0, -1.0],
            GSpec::Zero,
        )
        .unwrap()
    }

    #[test]
    fn zero_iterations_return_the_start() {
        let inst = tiny();
        let s = PenaltySchedule::new(vec![], 1, 0, 1.0).unwrap();
        let t = mpalm_run(&inst, &s, &BlockDiagonal::zeros(&[1, 1]), &[0.3], &[0.1, 0.2]).unwrap();
        assert_eq!(t.x_iters, vec![vec![0.3]]);
        assert_eq!(t.y_final, vec![vec![0.1], vec![0.2]]);
        assert!(t.kkt_history.is_empty());
    }

    #[test]
    fn kkt_point_is_a_fixed_point() {
        let inst = tiny();
        let s = PenaltySchedule::constant(1.0, 100, 1.618).unwrap();
        let t = mpalm_run(&inst, &s, &BlockDiagonal::zeros(&[1, 1]), &[-0.5], &[-0.5, 1.5]).unwrap();
        for x in &t.x_iters {
            assert!((x[0] + 0.5).abs() <= 1e-12);
        }
        assert!((t.y_final[0][0] + 0.5).abs() <= 1e-12);
        assert!((t.y_final[1][0] - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn converges_on_tiny_problem() {
        let inst = tiny();
        let s = PenaltySchedule::constant(1.0, 200, 1.0).unwrap();
        let t = mpalm_run(&inst, &s, &BlockDiagonal::zeros(&[1, 1]), &[0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(t.x_iters.len(), 201);
        assert!(t.kkt_history.last().unwrap().max_resid <= 1e-10);
        assert!((t.final_x()[0] + 0.5).abs() <= 1e-9);
    }
}
