//! Learn a four-segment penalty schedule for small Lasso problems and compare
//! it with the best constant penalty.

use palm_l2o::datasets::build_lasso_dataset;
use palm_l2o::learn::{grid_search, schedule_nmse, train, SolverConfig, TrainConfig, SIGMA_GRID};

fn main() -> palm_l2o::Result<()> {
    let ds = build_lasso_dataset(10, 20, 100, 0.1, 0)?;
    let (solver, tr, te) = ds.lasso_split()?;
    let solver_cfg = SolverConfig { iters: 32, tau: 1.618 };
    let cfg = TrainConfig {
        lr: 0.05,
        beta1: 0.9,
        epochs: 15,
        batch_size: 30,
        restarts: 4,
        ..TrainConfig::default()
    };

    let (sigma, fixed) = grid_search(&tr, &solver, &solver_cfg, &SIGMA_GRID)?;
    let test: Vec<_> = te.iter().collect();
    println!("best constant sigma {sigma}: test {:.2} dB", schedule_nmse(&fixed, &test, &solver)?);

    let report = train(&tr, &te, &solver, &solver_cfg, &cfg)?;
    for (e, (loss, nmse)) in report.loss_history.iter().zip(&report.test_nmse_history).enumerate() {
        println!("epoch {:>2}  train loss {loss:.3e}  test {nmse:.2} dB", e + 1);
    }
    let learned = report.final_schedule(&solver_cfg)?;
    println!("learned sigmas {:.3?}", report.final_sigmas);
    println!("learned schedule: test {:.2} dB", schedule_nmse(&learned, &test, &solver)?);
    Ok(())
}
