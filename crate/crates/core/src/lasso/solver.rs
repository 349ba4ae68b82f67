use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::mpalm::{
    BlockDiagonal, DenseBlockInstance, GSpec, KktResidual, PenaltySchedule, SolverTrajectory,
};

use super::problem::LassoProblem;

/// Iterate of the proximal ALM on the Lasso dual: `x` is the multiplier
/// (it converges to the primal Lasso solution), `y1 ∈ ℝⁿ`, `y2 ∈ ℝᵐ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoDualState {
    pub x: Vec<f64>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

impl LassoDualState {
    pub fn zeros(problem: &LassoProblem) -> Self {
        Self {
            x: vec![0.0; problem.n()],
            y1: vec![0.0; problem.n()],
            y2: vec![0.0; problem.m()],
        }
    }

    fn check(&self, problem: &LassoProblem) -> Result<()> {
        if self.x.len() != problem.n() || self.y1.len() != problem.n() || self.y2.len() != problem.m()
        {
            return Err(Error::invalid("initial state dimensions do not match the dictionary"));
        }
        Ok(())
    }
}

struct Workspace {
    factors: Vec<f64>,
    segment: Option<usize>,
    shifted: Vec<f64>,
    rhs: Vec<f64>,
    dty: Vec<f64>,
}

impl Workspace {
    fn new(problem: &LassoProblem) -> Self {
        Self {
            factors: Vec::new(),
            segment: None,
            shifted: vec![0.0; problem.n()],
            rhs: vec![0.0; problem.m()],
            dty: vec![0.0; problem.n()],
        }
    }
}

/// `(I + σDDᵀ)⁻¹ (ξ − D(x + σ y1))`.
fn y2_update(
    problem: &LassoProblem,
    ws: &mut Workspace,
    signal: &[f64],
    x: &[f64],
    y1: &[f64],
    sigma: f64,
) -> Vec<f64> {
    for ((s, xi), yi) in ws.shifted.iter_mut().zip(x).zip(y1) {
        *s = xi + sigma * yi;
    }
    problem.dictionary().matvec_into(&ws.shifted, &mut ws.rhs);
    for (r, s) in ws.rhs.iter_mut().zip(signal) {
        *r = s - *r;
    }
    problem.cache().apply_factors(&ws.factors, &ws.rhs)
}

/// One iteration of the proximal ALM on the Lasso dual.
fn step(
    problem: &LassoProblem,
    ws: &mut Workspace,
    signal: &[f64],
    state: &mut LassoDualState,
    schedule: &PenaltySchedule,
    k: usize,
) {
    let seg = schedule.segment_of(k);
    let sigma = schedule.sigma_at(k);
    if ws.segment != Some(seg) {
        ws.factors = problem.cache().factors(sigma);
        ws.segment = Some(seg);
    }
    let mu = problem.mu();
    let dt = problem.dictionary();

    let y2_half = y2_update(problem, ws, signal, &state.x, &state.y1, sigma);

    dt.tr_matvec_into(&y2_half, &mut ws.dty);
    for ((y1, d), x) in state.y1.iter_mut().zip(&ws.dty).zip(&state.x) {
        *y1 = -(d + x / sigma).clamp(-mu, mu);
    }

    state.y2 = y2_update(problem, ws, signal, &state.x, &state.y1, sigma);

    dt.tr_matvec_into(&state.y2, &mut ws.dty);
    let scale = schedule.step_size() * sigma;
    for ((x, y1), d) in state.x.iter_mut().zip(&state.y1).zip(&ws.dty) {
        *x += scale * (y1 + d);
    }
}

/// KKT residual of the Lasso dual at `(x, y1, y2)`.
pub fn lasso_kkt(problem: &LassoProblem, signal: &[f64], state: &LassoDualState) -> KktResidual {
    let dty2 = problem.dictionary().tr_matvec(&state.y2);
    let primal: Vec<f64> = state.y1.iter().zip(&dty2).map(|(a, b)| a + b).collect();
    let mu = problem.mu();
    let block1: Vec<f64> = state
        .y1
        .iter()
        .zip(&state.x)
        .map(|(y, x)| y - (y - x).clamp(-mu, mu))
        .collect();
    let dx = problem.dictionary().matvec(&state.x);
    let block2: Vec<f64> = state
        .y2
        .iter()
        .zip(signal)
        .zip(&dx)
        .map(|((y, s), d)| y - s + d)
        .collect();
    let dual = (norm2(&block1) / (1.0 + norm2(&state.y1)))
        .max(norm2(&block2) / (1.0 + norm2(&state.y2)));
    KktResidual::new(norm2(&primal), dual)
}

/// Runs the proximal ALM on the Lasso dual and records every multiplier
/// iterate and KKT residual.
pub fn lasso_mpalm_run(
    problem: &LassoProblem,
    signal: &[f64],
    schedule: &PenaltySchedule,
    init: LassoDualState,
) -> Result<SolverTrajectory> {
    problem.check_signal(signal)?;
    init.check(problem)?;
    let mut state = init;
    let mut ws = Workspace::new(problem);
    let mut x_iters = Vec::with_capacity(schedule.total_iters() + 1);
    let mut kkt_history = Vec::with_capacity(schedule.total_iters());
    x_iters.push(state.x.clone());
    for k in 0..schedule.total_iters() {
        step(problem, &mut ws, signal, &mut state, schedule, k);
        x_iters.push(state.x.clone());
        kkt_history.push(lasso_kkt(problem, signal, &state));
    }
    Ok(SolverTrajectory {
        x_iters,
        y_final: vec![state.y1, state.y2],
        kkt_history,
    })
}

/// Same iteration as [`lasso_mpalm_run`] returning only the final state.
pub fn lasso_mpalm_final(
    problem: &LassoProblem,
    signal: &[f64],
    schedule: &PenaltySchedule,
    init: LassoDualState,
) -> Result<LassoDualState> {
    lasso_mpalm_observe(problem, signal, schedule, init, |_, _| {})
}

/// Runs the iteration calling `observe(k, x^k)` for `k = 1..=K`.
pub fn lasso_mpalm_observe(
    problem: &LassoProblem,
    signal: &[f64],
    schedule: &PenaltySchedule,
    init: LassoDualState,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<LassoDualState> {
    problem.check_signal(signal)?;
    init.check(problem)?;
    let mut state = init;
    let mut ws = Workspace::new(problem);
    for k in 0..schedule.total_iters() {
        step(problem, &mut ws, signal, &mut state, schedule, k);
        observe(k + 1, &state.x);
    }
    Ok(state)
}

/// The Lasso dual as a generic two-block instance: `y = (y1, y2)`,
/// `A* = [I, Dᵀ]`, `c = 0`, `Σ = Diag(0, I)`, `b = (0, −ξ)` and `g` the
/// indicator of the `μ`-box on `y1`.
pub fn lasso_block_instance(
    problem: &LassoProblem,
    signal: &[f64],
) -> Result<(DenseBlockInstance, BlockDiagonal)> {
    problem.check_signal(signal)?;
    let (m, n) = (problem.m(), problem.n());
    let sigma_f = DenseMatrix::block_diag(&[DenseMatrix::zeros(n, n), DenseMatrix::identity(m)]);
    let mut linear = vec![0.0; n];
    linear.extend(signal.iter().map(|v| -v));
    let inst = DenseBlockInstance::new(
        vec![DenseMatrix::identity(n), problem.dictionary_t().clone()],
        vec![0.0; n],
        sigma_f,
        linear,
        GSpec::BoxIndicator {
            radius: problem.mu(),
        },
    )?;
    Ok((inst, BlockDiagonal::zeros(&[n, m])))
}
