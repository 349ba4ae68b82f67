use palm_l2o::datasets::build_lasso_dataset;
use palm_l2o::lasso::LassoProblem;
use palm_l2o::learn::{
    adam_step, erm_loss, fd_gradient, fd_gradient_with, grid_search, schedule_loss, train,
    AdamConfig, AdamState, LassoSolver, Sample, ScheduleParams, SolverConfig, TrainConfig,
};
use palm_l2o::linalg::DenseMatrix;
use palm_l2o::mpalm::PenaltySchedule;

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn scalar_lasso(signals: &[f64], mu: f64) -> (LassoSolver, Vec<Sample<Vec<f64>>>) {
    let d = DenseMatrix::from_rows(&[vec![1.0]]).unwrap();
    let problem = LassoProblem::new(d, mu).unwrap();
    let samples = signals
        .iter()
        .map(|&xi| Sample {
            instance: vec![xi],
            solution: vec![soft(xi, mu)],
        })
        .collect();
    (LassoSolver { problem }, samples)
}

#[test]
fn scalar_lasso_loss_vanishes() {
    let (solver, samples) = scalar_lasso(&[0.7, -0.3, 0.05, 2.0], 0.1);
    let refs: Vec<_> = samples.iter().collect();
    let cfg = SolverConfig { iters: 200, tau: 1.618 };
    let loss = erm_loss(&ScheduleParams::ones(4), &refs, &solver, &cfg).unwrap();
    assert!(loss <= 1e-10, "loss {loss}");
}

#[test]
fn zero_iterations_give_zero_gradient() {
    let (solver, samples) = scalar_lasso(&[0.7, -0.3], 0.1);
    let refs: Vec<_> = samples.iter().collect();
    let cfg = SolverConfig { iters: 0, tau: 1.618 };
    let params = ScheduleParams::from_sigmas(&[0.5, 3.0]).unwrap();
    let g = fd_gradient(&params, &refs, &solver, &cfg, 1e-4).unwrap();
    assert_eq!(g, vec![0.0, 0.0]);
}

#[test]
fn fd_gradient_refines_under_halving() {
    // central differences are second order: halving h shrinks the error by ~4
    let ds = build_lasso_dataset(4, 6, 8, 0.1, 1).unwrap();
    let (solver, tr, _) = ds.lasso_split().unwrap();
    let refs: Vec<_> = tr.iter().collect();
    let cfg = SolverConfig { iters: 16, tau: 1.618 };
    let params = ScheduleParams::from_sigmas(&[0.5, 2.0]).unwrap();
    let g1 = fd_gradient(&params, &refs, &solver, &cfg, 1e-2).unwrap();
    let g2 = fd_gradient(&params, &refs, &solver, &cfg, 5e-3).unwrap();
    let g3 = fd_gradient(&params, &refs, &solver, &cfg, 1e-5).unwrap();
    for j in 0..2 {
        let (e1, e2) = ((g1[j] - g3[j]).abs(), (g2[j] - g3[j]).abs());
        assert!(e2 <= 0.3 * e1 + 1e-9, "coord {j}: {e1} vs {e2}");
    }
    // against a smooth closed form
    let g = fd_gradient_with(&[0.3, -1.2], 1e-4, |t| Ok(t[0].sin() + t[1] * t[1] * t[1])).unwrap();
    assert!((g[0] - 0.3f64.cos()).abs() <= 1e-7);
    assert!((g[1] - 3.0 * 1.44).abs() <= 1e-6);
}

#[test]
fn adam_minimizes_a_quadratic() {
    let cfg = AdamConfig {
        lr: 0.05,
        beta1: 0.9,
        beta2: 0.999,
        weight_decay: 0.0,
    };
    let mut theta = vec![2.0, -1.5];
    let mut state = AdamState::new(2);
    for _ in 0..2000 {
        let grad: Vec<f64> = theta.iter().map(|t| 2.0 * t).collect();
        adam_step(&mut state, &mut theta, &grad, &cfg);
    }
    assert!(theta.iter().all(|t| t.abs() <= 1e-3), "{theta:?}");
}

#[test]
fn zero_epochs_keep_unit_schedule() {
    let ds = build_lasso_dataset(4, 6, 12, 0.1, 2).unwrap();
    let (solver, tr, te) = ds.lasso_split().unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        batch_size: 4,
        restarts: 3,
        ..TrainConfig::default()
    };
    let report = train(&tr, &te, &solver, &SolverConfig { iters: 12, tau: 1.618 }, &cfg).unwrap();
    assert_eq!(report.final_sigmas, vec![1.0; 3]);
    assert_eq!(report.best_epoch, 0);
    assert!(report.loss_history.is_empty());
}

#[test]
fn grid_search_picks_the_lowest_loss() {
    let ds = build_lasso_dataset(5, 8, 20, 0.1, 4).unwrap();
    let (solver, tr, _) = ds.lasso_split().unwrap();
    let refs: Vec<_> = tr.iter().collect();
    let cfg = SolverConfig { iters: 20, tau: 1.618 };
    let grid = [1e-2, 1e-1, 1.0, 1e1, 1e2];
    let (sigma, _) = grid_search(&tr, &solver, &cfg, &grid).unwrap();
    let loss = |s: f64| {
        schedule_loss(&PenaltySchedule::constant(s, 20, 1.618).unwrap(), &refs, &solver).unwrap()
    };
    assert!(grid.iter().all(|&s| loss(sigma) <= loss(s)));
    assert_eq!(grid_search(&tr, &solver, &cfg, &[0.3]).unwrap().0, 0.3);
    let mut shuffled = grid;
    shuffled.reverse();
    assert_eq!(grid_search(&tr, &solver, &cfg, &shuffled).unwrap().0, sigma);
    assert!(grid_search(&tr, &solver, &cfg, &[]).is_err());
}

#[test]
fn training_reduces_the_loss() {
    let ds = build_lasso_dataset(6, 10, 40, 0.1, 5).unwrap();
    let (solver, tr, te) = ds.lasso_split().unwrap();
    let cfg = TrainConfig {
        lr: 0.05,
        beta1: 0.9,
        epochs: 10,
        batch_size: 12,
        restarts: 4,
        ..TrainConfig::default()
    };
    let scfg = SolverConfig { iters: 24, tau: 1.618 };
    let report = train(&tr, &te, &solver, &scfg, &cfg).unwrap();
    let last = *report.loss_history.last().unwrap();
    assert!(last < report.initial_train_loss, "{last} vs {}", report.initial_train_loss);
    let again = train(&tr, &te, &solver, &scfg, &cfg).unwrap();
    assert_eq!(again, report);
}
