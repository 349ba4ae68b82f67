use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::mpalm::{
    BlockDiagonal, DenseBlockInstance, GSpec, KktResidual, PenaltySchedule, SolverTrajectory,
};

use super::problem::{row_col_sums, OtInstance};

/// Iterate of the proximal ALM on the OT dual. `x` is the multiplier and
/// converges to an optimal plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtDualState {
    pub x: DenseMatrix,
    pub y1: DenseMatrix,
    pub y2: Vec<f64>,
    pub y3: Vec<f64>,
}

impl OtDualState {
    pub fn zeros(instance: &OtInstance) -> Self {
        let (m, n) = (instance.m(), instance.n());
        Self {
            x: DenseMatrix::zeros(m, n),
            y1: DenseMatrix::zeros(m, n),
            y2: vec![0.0; m],
            y3: vec![0.0; n],
        }
    }

    fn check(&self, instance: &OtInstance) -> Result<()> {
        let (m, n) = (instance.m(), instance.n());
        let ok = self.x.rows() == m
            && self.x.cols() == n
            && self.y1.rows() == m
            && self.y1.cols() == n
            && self.y2.len() == m
            && self.y3.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("initial state dimensions do not match the instance"))
        }
    }
}

/// `y3 = (1/m)(β/σ − colsum(y1 + y2eₙᵀ − c + x/σ))`.
fn y3_update(inst: &OtInstance, s: &OtDualState, y2: &[f64], sigma: f64) -> Vec<f64> {
    let (m, n) = (inst.m(), inst.n());
    let mut col = vec![0.0; n];
    for i in 0..m {
        let (y1, c, x) = (s.y1.row(i), inst.cost().row(i), s.x.row(i));
        for j in 0..n {
            col[j] += y1[j] + y2[i] - c[j] + x[j] / sigma;
        }
    }
    let mf = m as f64;
    inst.beta()
        .iter()
        .zip(col)
        .map(|(b, s)| (b / sigma - s) / mf)
        .collect()
}

/// `y2 = (1/n)(α/σ − rowsum(y1 + eₘy3ᵀ − c + x/σ))`.
fn y2_update(inst: &OtInstance, s: &OtDualState, y3: &[f64], sigma: f64) -> Vec<f64> {
    let nf = inst.n() as f64;
    (0..inst.m())
        .map(|i| {
            let (y1, c, x) = (s.y1.row(i), inst.cost().row(i), s.x.row(i));
            let row: f64 = (0..inst.n())
                .map(|j| y1[j] + y3[j] - c[j] + x[j] / sigma)
                .sum();
            (inst.alpha()[i] / sigma - row) / nf
        })
        .collect()
}

fn step(inst: &OtInstance, s: &mut OtDualState, sigma: f64, tau: f64) {
    let y3_half = y3_update(inst, s, &s.y2, sigma);
    let y2_half = y2_update(inst, s, &y3_half, sigma);
    for i in 0..inst.m() {
        let c = inst.cost().row(i);
        let x = s.x.row(i);
        let row: Vec<f64> = (0..inst.n())
            .map(|j| (c[j] - y2_half[i] - y3_half[j] - x[j] / sigma).max(0.0))
            .collect();
        s.y1.row_mut(i).copy_from_slice(&row);
    }
    s.y2 = y2_update(inst, s, &y3_half, sigma);
    s.y3 = y3_update(inst, s, &s.y2, sigma);
    let scale = tau * sigma;
    for i in 0..inst.m() {
        let c = inst.cost().row(i).to_vec();
        let y1 = s.y1.row(i).to_vec();
        for (j, x) in s.x.row_mut(i).iter_mut().enumerate() {
            *x += scale * (y1[j] + s.y2[i] + s.y3[j] - c[j]);
        }
    }
}

/// KKT residual of the OT dual at `(x, y1, y2, y3)`.
pub fn ot_kkt(inst: &OtInstance, s: &OtDualState) -> KktResidual {
    let (m, n) = (inst.m(), inst.n());
    let c = inst.cost();
    let resid =
        DenseMatrix::from_fn(m, n, |i, j| s.y1[(i, j)] + s.y2[i] + s.y3[j] - c[(i, j)]);
    let primal = resid.frobenius() / (1.0 + c.frobenius());
    let prox = DenseMatrix::from_fn(m, n, |i, j| {
        let y = s.y1[(i, j)];
        y - (y - s.x[(i, j)]).max(0.0)
    });
    let (rows, cols) = row_col_sums(&s.x);
    let g2: Vec<f64> = rows.iter().zip(inst.alpha()).map(|(r, a)| r - a).collect();
    let g3: Vec<f64> = cols.iter().zip(inst.beta()).map(|(c, b)| c - b).collect();
    let dual = (prox.frobenius() / (1.0 + s.y1.frobenius()))
        .max(norm2(&g2) / (1.0 + norm2(&s.y2)))
        .max(norm2(&g3) / (1.0 + norm2(&s.y3)));
    KktResidual::new(primal, dual)
}

/// Runs the proximal ALM on the OT dual, recording every multiplier (plan)
/// iterate flattened row-major and the KKT residuals.
pub fn ot_mpalm_run(
    inst: &OtInstance,
    schedule: &PenaltySchedule,
    init: OtDualState,
) -> Result<SolverTrajectory> {
    init.check(inst)?;
    let mut state = init;
    let mut x_iters = Vec::with_capacity(schedule.total_iters() + 1);
    let mut kkt_history = Vec::with_capacity(schedule.total_iters());
    x_iters.push(state.x.as_slice().to_vec());
    for k in 0..schedule.total_iters() {
        step(inst, &mut state, schedule.sigma_at(k), schedule.step_size());
        x_iters.push(state.x.as_slice().to_vec());
        kkt_history.push(ot_kkt(inst, &state));
    }
    Ok(SolverTrajectory {
        x_iters,
        y_final: vec![state.y1.into_vec(), state.y2, state.y3],
        kkt_history,
    })
}

/// Runs the iteration calling `observe(k, x^k)` for `k = 1..=K` and returns
/// the final state.
pub fn ot_mpalm_observe(
    inst: &OtInstance,
    schedule: &PenaltySchedule,
    init: OtDualState,
    mut observe: impl FnMut(usize, &DenseMatrix),
) -> Result<OtDualState> {
    init.check(inst)?;
    let mut state = init;
    for k in 0..schedule.total_iters() {
        step(inst, &mut state, schedule.sigma_at(k), schedule.step_size());
        observe(k + 1, &state.x);
    }
    Ok(state)
}

/// Same iteration as [`ot_mpalm_run`] returning only the final state.
pub fn ot_mpalm_final(
    inst: &OtInstance,
    schedule: &PenaltySchedule,
    init: OtDualState,
) -> Result<OtDualState> {
    ot_mpalm_observe(inst, schedule, init, |_, _| {})
}

/// The OT dual as a generic three-block instance over
/// `y = (vec(y1), y2, y3)` with row-major `vec`, `A* = (I, eₙ⊗I, I⊗eₘ)`,
/// `c = vec(C)`, `Σ = 0`, `b = (0, −α, −β)` and `g` the nonnegativity
/// indicator on `y1`.
pub fn ot_block_instance(inst: &OtInstance) -> Result<(DenseBlockInstance, BlockDiagonal)> {
    let (m, n) = (inst.m(), inst.n());
    let mn = m * n;
    let a2 = DenseMatrix::from_fn(mn, m, |cell, i| f64::from(u8::from(cell / n == i)));
    let a3 = DenseMatrix::from_fn(mn, n, |cell, j| f64::from(u8::from(cell % n == j)));
    let dim_y = mn + m + n;
    let mut linear = vec![0.0; mn];
    linear.extend(inst.alpha().iter().map(|a| -a));
    linear.extend(inst.beta().iter().map(|b| -b));
    let block = DenseBlockInstance::new(
        vec![DenseMatrix::identity(mn), a2, a3],
        inst.cost().as_slice().to_vec(),
        DenseMatrix::zeros(dim_y, dim_y),
        linear,
        GSpec::NonNegative,
    )?;
    Ok((block, BlockDiagonal::zeros(&[mn, m, n])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::problem::cost_matrix;

    #[test]
    fn single_cell_plan() {
        let inst = OtInstance::new(cost_matrix(1, 1).unwrap(), vec![1.0], vec![1.0]).unwrap();
        let s = PenaltySchedule::constant(1.0, 200, 1.618).unwrap();
        let t = ot_mpalm_run(&inst, &s, OtDualState::zeros(&inst)).unwrap();
        assert!((t.final_x()[0] - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn y1_stays_nonnegative() {
        let inst = OtInstance::random(4, 5, 2).unwrap();
        let mut s = OtDualState::zeros(&inst);
        for k in 0..50 {
            step(&inst, &mut s, if k < 25 { 0.1 } else { 5.0 }, 1.618);
            assert!(s.y1.as_slice().iter().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn block_updates_are_stationary() {
        // after a sweep, y2 and y3 zero their block gradients of the
        // augmented Lagrangian given the other blocks' latest values
        let inst = OtInstance::random(3, 4, 5).unwrap();
        let sigma = 0.7;
        let mut s = OtDualState::zeros(&inst);
        for _ in 0..5 {
            step(&inst, &mut s, sigma, 1.0);
        }
        let prev_x = s.x.clone();
        let mut next = s.clone();
        step(&inst, &mut next, sigma, 1.0);
        let (m, n) = (inst.m(), inst.n());
        let c = inst.cost();
        let lin = |i: usize, j: usize| {
            next.y1[(i, j)] + next.y2[i] + next.y3[j] - c[(i, j)] + prev_x[(i, j)] / sigma
        };
        for j in 0..n {
            let g: f64 = (0..m).map(|i| lin(i, j)).sum::<f64>() * sigma - inst.beta()[j];
            assert!(g.abs() <= 1e-12);
        }
        // y1 satisfies the nonnegative prox optimality
        for i in 0..m {
            for j in 0..n {
                let y = next.y1[(i, j)];
                assert!(y >= 0.0);
            }
        }
    }

    #[test]
    fn final_only_matches_full_trajectory() {
        let inst = OtInstance::random(3, 3, 1).unwrap();
        let s = PenaltySchedule::with_restarts(vec![0.5, 2.0], 40, 1.618).unwrap();
        let t = ot_mpalm_run(&inst, &s, OtDualState::zeros(&inst)).unwrap();
        let f = ot_mpalm_final(&inst, &s, OtDualState::zeros(&inst)).unwrap();
        assert_eq!(t.final_x(), f.x.as_slice());
    }
}
