use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm2, sub};
use crate::mpalm::PenaltySchedule;

use super::erm::Sample;
use super::solver::ScheduleSolver;

/// Lower clamp on the relative error, i.e. a floor of −160 dB.
pub const NMSE_FLOOR: f64 = 1e-16;

/// `10·log₁₀(max(‖x − x*‖/‖x*‖, 1e-16))`.
pub fn relative_error_db(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid("prediction and truth lengths differ"));
    }
    let scale = norm2(truth);
    if !(scale > 0.0) {
        return Err(Error::invalid("truth vector has zero norm"));
    }
    let ratio = norm2(&sub(predicted, truth)) / scale;
    Ok(10.0 * ratio.max(NMSE_FLOOR).log10())
}

/// Log-normalized mean squared error in dB over paired vectors.
pub fn nmse(predicted: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(Error::invalid("nmse needs equally many (≥ 1) predictions and truths"));
    }
    let mut total = 0.0;
    for (p, t) in predicted.iter().zip(truth) {
        total += relative_error_db(p, t)?;
    }
    Ok(total / truth.len() as f64)
}

/// NMSE of the solver output under `schedule`.
pub fn schedule_nmse<S: ScheduleSolver>(
    schedule: &PenaltySchedule,
    samples: &[&Sample<S::Instance>],
    solver: &S,
) -> Result<f64> {
    let db: Vec<f64> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let x = solver.terminal(&s.instance, schedule).map_err(|e| e.at_instance(i))?;
            relative_error_db(&x, &s.solution).map_err(|e| e.at_instance(i))
        })
        .collect::<Result<_>>()?;
    if db.is_empty() {
        return Err(Error::invalid("nmse needs at least one sample"));
    }
    Ok(db.iter().sum::<f64>() / db.len() as f64)
}

/// NMSE after every iteration `k = 1..=K`.
pub fn nmse_curve<S: ScheduleSolver>(
    schedule: &PenaltySchedule,
    samples: &[&Sample<S::Instance>],
    solver: &S,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::invalid("nmse needs at least one sample"));
    }
    let per_instance: Vec<Vec<f64>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut curve = Vec::with_capacity(schedule.total_iters());
            let mut failure = None;
            solver
                .trajectory(&s.instance, schedule, &mut |_, x| {
                    match relative_error_db(x, &s.solution) {
                        Ok(v) => curve.push(v),
                        Err(e) => failure = failure.take().or(Some(e)),
                    }
                })
                .map_err(|e| e.at_instance(i))?;
            match failure {
                Some(e) => Err(e.at_instance(i)),
                None => Ok(curve),
            }
        })
        .collect::<Result<_>>()?;
    Ok(average_curves(&per_instance))
}

/// Pointwise mean of equally long curves, summed in index order.
pub fn average_curves(curves: &[Vec<f64>]) -> Vec<f64> {
    let len = curves.first().map_or(0, Vec::len);
    let mut out = vec![0.0; len];
    for c in curves {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v;
        }
    }
    let count = curves.len().max(1) as f64;
    out.iter().map(|v| v / count).collect()
}
