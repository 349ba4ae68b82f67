use crate::error::Result;
use crate::lasso::{lasso_mpalm_final, lasso_mpalm_observe, LassoDualState, LassoProblem};
use crate::mpalm::PenaltySchedule;
use crate::ot::{ot_mpalm_final, ot_mpalm_observe, OtDualState, OtInstance};

/// A solver family whose output depends on a penalty schedule.
pub trait ScheduleSolver: Sync {
    type Instance: Sync;

    /// `x^K` under `schedule`, from the zero initial state.
    fn terminal(&self, instance: &Self::Instance, schedule: &PenaltySchedule) -> Result<Vec<f64>>;

    /// Calls `observe(k, x^k)` for `k = 1..=K`.
    fn trajectory(
        &self,
        instance: &Self::Instance,
        schedule: &PenaltySchedule,
        observe: &mut dyn FnMut(usize, &[f64]),
    ) -> Result<()>;
}

/// Lasso instances sharing one dictionary; each instance is a signal.
#[derive(Debug, Clone)]
pub struct LassoSolver {
    pub problem: LassoProblem,
}

impl ScheduleSolver for LassoSolver {
    type Instance = Vec<f64>;

    fn terminal(&self, signal: &Vec<f64>, schedule: &PenaltySchedule) -> Result<Vec<f64>> {
        let init = LassoDualState::zeros(&self.problem);
        Ok(lasso_mpalm_final(&self.problem, signal, schedule, init)?.x)
    }

    fn trajectory(
        &self,
        signal: &Vec<f64>,
        schedule: &PenaltySchedule,
        observe: &mut dyn FnMut(usize, &[f64]),
    ) -> Result<()> {
        let init = LassoDualState::zeros(&self.problem);
        lasso_mpalm_observe(&self.problem, signal, schedule, init, observe)?;
        Ok(())
    }
}

/// Optimal transport instances; `x` is the plan flattened row-major.
#[derive(Debug, Clone, Copy, Default)]
pub struct OtSolver;

impl ScheduleSolver for OtSolver {
    type Instance = OtInstance;

    fn terminal(&self, instance: &OtInstance, schedule: &PenaltySchedule) -> Result<Vec<f64>> {
        let init = OtDualState::zeros(instance);
        Ok(ot_mpalm_final(instance, schedule, init)?.x.into_vec())
    }

    fn trajectory(
        &self,
        instance: &OtInstance,
        schedule: &PenaltySchedule,
        observe: &mut dyn FnMut(usize, &[f64]),
    ) -> Result<()> {
        let init = OtDualState::zeros(instance);
        ot_mpalm_observe(instance, schedule, init, |k, x| observe(k, x.as_slice()))?;
        Ok(())
    }
}
