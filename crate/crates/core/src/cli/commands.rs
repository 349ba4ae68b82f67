use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::datasets::{
    build_lasso_dataset, build_ot_dataset, load_dataset, save_dataset, write_atomic, Dataset,
    DatasetKind, OtSource,
};
use crate::error::{Error, Result};
use crate::lasso::{ista_run, lasso_oracle};
use crate::learn::{
    average_curves, nmse_curve, relative_error_db, train, Sample, ScheduleSolver, SolverConfig,
    TrainReport, NMSE_FLOOR, SIGMA_GRID,
};
use crate::linalg::{norm2, sub};
use crate::mpalm::PenaltySchedule;
use crate::ot::{default_lambda_grid, ot_exact, read_marginals, sinkhorn_observe, OtInstance};

use super::config::{ExperimentConfig, Problem};

/// A penalty schedule as stored in `schedule.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub sigmas: Vec<f64>,
    pub k0: usize,
    #[serde(rename = "K")]
    pub iters: usize,
    pub tau: f64,
}

impl ScheduleFile {
    pub fn from_schedule(s: &PenaltySchedule) -> Self {
        Self {
            sigmas: s.sigmas().to_vec(),
            k0: s.segment_length(),
            iters: s.total_iters(),
            tau: s.step_size(),
        }
    }

    pub fn schedule(&self) -> Result<PenaltySchedule> {
        PenaltySchedule::new(self.sigmas.clone(), self.k0, self.iters, self.tau)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}

fn kind_name(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::Lasso => "lasso",
        DatasetKind::Ot => "ot",
    }
}

/// Loads `--dataset` and returns a config whose problem matches it, so
/// problem-dependent defaults follow the dataset.
fn load_for(cfg: &ExperimentConfig) -> Result<(Dataset, ExperimentConfig)> {
    let dataset = load_dataset(cfg.dataset()?)?;
    let kind = match dataset.kind() {
        DatasetKind::Lasso => Problem::Lasso,
        DatasetKind::Ot => Problem::Ot,
    };
    if let Some(p) = cfg.problem {
        if p != kind {
            return Err(Error::Validation(format!(
                "--problem {} does not match the {} dataset",
                kind_name(match p {
                    Problem::Lasso => DatasetKind::Lasso,
                    Problem::Ot => DatasetKind::Ot,
                }),
                kind_name(dataset.kind())
            )));
        }
    }
    let mut cfg = cfg.clone();
    cfg.problem = Some(kind);
    Ok((dataset, cfg))
}

fn solver_config(cfg: &ExperimentConfig) -> Result<SolverConfig> {
    let tau = cfg.tau();
    if !(tau > 0.0 && tau < 2.0) {
        return Err(Error::Validation(format!("tau = {tau} must lie in (0, 2)")));
    }
    Ok(SolverConfig {
        iters: cfg.iters(),
        tau,
    })
}

/// `gen`: builds a dataset and writes it to the output directory.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<Value> {
    let (m, n) = cfg.dims();
    let count = match (&cfg.marginals, cfg.count) {
        (Some(path), None) => read_marginals(path)?.len(),
        _ => cfg.count(),
    };
    let seed = cfg.seed();
    if m == 0 || n == 0 {
        return Err(Error::Validation(format!("dims must be positive, got ({m}, {n})")));
    }
    if count < 2 {
        return Err(Error::Validation(format!("count must be at least 2, got {count}")));
    }
    if m * n * count > 50_000_000 {
        eprintln!(
            "{}",
            json!({"warning": "paper-scale dataset", "instances": count, "m": m, "n": n})
        );
    }
    let dataset = match cfg.problem() {
        Problem::Lasso => build_lasso_dataset(m, n, count, cfg.mu(), seed)?,
        Problem::Ot => {
            let source = cfg
                .marginals
                .clone()
                .map_or(OtSource::Random, OtSource::Csv);
            build_ot_dataset(m, n, count, seed, &source)?
        }
    };
    let out = cfg.out();
    let manifest = save_dataset(&dataset, &out)?;
    Ok(json!({
        "command": "gen",
        "kind": manifest.kind,
        "m": m,
        "n": n,
        "count": count,
        "train": manifest.split.train.len(),
        "test": manifest.split.test.len(),
        "mu": manifest.mu,
        "seed": seed,
        "max_certificate": manifest.max_certificate,
        "checksums": manifest.checksums,
    }))
}

fn report_csv(report: &TrainReport) -> String {
    let mut s = String::from("epoch,train_loss,test_nmse\n");
    let _ = writeln!(s, "0,{},{}", report.initial_train_loss, report.initial_test_nmse);
    for (e, (l, t)) in report.loss_history.iter().zip(&report.test_nmse_history).enumerate() {
        let _ = writeln!(s, "{},{l},{t}", e + 1);
    }
    s
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn create_out(cfg: &ExperimentConfig) -> Result<std::path::PathBuf> {
    let out = cfg.out();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}

/// `train`: learns a schedule and writes `schedule.json` and
/// `train_report.csv`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Value> {
    let (dataset, cfg) = load_for(cfg)?;
    let cfg = &cfg;
    let solver_cfg = solver_config(cfg)?;
    let mut train_cfg = cfg.train_config()?;
    let explicit_batch = cfg.train.as_ref().and_then(|t| t.batch_size).is_some();
    if !explicit_batch {
        train_cfg.batch_size = train_cfg.batch_size.min(dataset.train.len());
    }
    let report = match dataset.kind() {
        DatasetKind::Lasso => {
            let (solver, tr, te) = dataset.lasso_split()?;
            train(&tr, &te, &solver, &solver_cfg, &train_cfg)?
        }
        DatasetKind::Ot => {
            let (solver, tr, te) = dataset.ot_split()?;
            train(&tr, &te, &solver, &solver_cfg, &train_cfg)?
        }
    };
    let schedule = ScheduleFile::from_schedule(&report.final_schedule(&solver_cfg)?);
    let out = create_out(cfg)?;
    write_json(&out.join("schedule.json"), &schedule)?;
    write_atomic(&out.join("train_report.csv"), report_csv(&report).as_bytes())?;
    let best_test = match report.best_epoch {
        0 => report.initial_test_nmse,
        e => report.test_nmse_history[e - 1],
    };
    Ok(json!({
        "command": "train",
        "kind": dataset.kind(),
        "epochs": train_cfg.epochs,
        "best_epoch": report.best_epoch,
        "initial_test_nmse": report.initial_test_nmse,
        "best_test_nmse": best_test,
        "schedule": schedule,
    }))
}

struct Curve {
    method: String,
    values: Vec<f64>,
}

fn mpalm_curves<S: ScheduleSolver>(
    cfg: &ExperimentConfig,
    solver: &S,
    test: &[Sample<S::Instance>],
) -> Result<Vec<Curve>> {
    let solver_cfg = solver_config(cfg)?;
    let refs: Vec<&Sample<S::Instance>> = test.iter().collect();
    let mut curves = Vec::new();
    if let Some(path) = &cfg.schedule {
        let schedule = ScheduleFile::read(path)?.schedule()?;
        curves.push(Curve {
            method: "learned".into(),
            values: nmse_curve(&schedule, &refs, solver)?,
        });
    }
    let sigmas: Vec<f64> = if cfg.sigmas.is_empty() {
        SIGMA_GRID.to_vec()
    } else {
        cfg.sigmas.clone()
    };
    for sigma in sigmas {
        let schedule = PenaltySchedule::constant(sigma, solver_cfg.iters, solver_cfg.tau)?;
        curves.push(Curve {
            method: format!("mpalm_sigma={sigma}"),
            values: nmse_curve(&schedule, &refs, solver)?,
        });
    }
    if cfg.baselines.oracle {
        curves.push(Curve {
            method: "oracle".into(),
            values: vec![10.0 * NMSE_FLOOR.log10(); solver_cfg.iters],
        });
    }
    Ok(curves)
}

fn ista_curve(dataset: &Dataset, iters: usize) -> Result<Curve> {
    let problem = dataset.lasso_problem()?;
    let per: Vec<Vec<f64>> = dataset
        .test
        .par_iter()
        .map(|&i| {
            let it = ista_run(&problem, &dataset.instances[i], iters, None)?;
            it[1..]
                .iter()
                .map(|w| relative_error_db(w, &dataset.solutions[i]))
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| e.at_instance(i))
        })
        .collect::<Result<_>>()?;
    Ok(Curve {
        method: "ista".into(),
        values: average_curves(&per),
    })
}

fn sinkhorn_curves(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    test: &[Sample<OtInstance>],
) -> Result<Vec<Curve>> {
    let iters = cfg.baselines.sinkhorn_iters;
    let Some(first) = test.first() else {
        return Ok(Vec::new());
    };
    let lambdas = if cfg.lambdas.is_empty() {
        default_lambda_grid(first.instance.cost())
    } else {
        cfg.lambdas.clone()
    };
    let _ = dataset;
    let mut curves = Vec::new();
    for lambda in lambdas {
        let per: Vec<Vec<f64>> = test
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut curve = Vec::with_capacity(iters);
                let truth_norm = norm2(&s.solution);
                sinkhorn_observe(&s.instance, lambda, iters, 0.0, |_, plan| {
                    let ratio = norm2(&sub(plan.as_slice(), &s.solution)) / truth_norm;
                    curve.push(10.0 * ratio.max(NMSE_FLOOR).log10());
                })
                .map_err(|e| e.at_instance(i))?;
                // pad if the scaling hit the marginals exactly
                let last = curve.last().copied().unwrap_or(0.0);
                curve.resize(iters, last);
                Ok(curve)
            })
            .collect::<Result<_>>()?;
        curves.push(Curve {
            method: format!("sinkhorn_lambda={lambda}"),
            values: average_curves(&per),
        });
    }
    Ok(curves)
}

/// `eval`: writes `curves.csv` with columns `k,method,nmse_db` on the test
/// split.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<Value> {
    let (dataset, cfg) = load_for(cfg)?;
    let cfg = &cfg;
    let iters = solver_config(cfg)?.iters;
    let curves = match dataset.kind() {
        DatasetKind::Lasso => {
            let (solver, _, test) = dataset.lasso_split()?;
            let mut c = mpalm_curves(cfg, &solver, &test)?;
            if cfg.baselines.ista {
                c.push(ista_curve(&dataset, iters)?);
            }
            c
        }
        DatasetKind::Ot => {
            let (solver, _, test) = dataset.ot_split()?;
            let mut c = mpalm_curves(cfg, &solver, &test)?;
            c.extend(sinkhorn_curves(cfg, &dataset, &test)?);
            c
        }
    };
    let mut csv = String::from("k,method,nmse_db\n");
    let mut finals = serde_json::Map::new();
    for curve in &curves {
        for (k, v) in curve.values.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{v}", k + 1, curve.method);
        }
        finals.insert(curve.method.clone(), json!(curve.values.last()));
    }
    let out = create_out(cfg)?;
    write_atomic(&out.join("curves.csv"), csv.as_bytes())?;
    Ok(json!({
        "command": "eval",
        "kind": dataset.kind(),
        "test_instances": dataset.test.len(),
        "final_nmse_db": finals,
    }))
}

/// `oracle-check`: reloads the dataset (which re-verifies every stored
/// certificate) and re-solves each instance from scratch.
pub fn cmd_oracle_check(cfg: &ExperimentConfig) -> Result<Value> {
    let (dataset, _) = load_for(cfg)?;
    let max_certificate = dataset.verify()?;
    let diffs: Vec<f64> = match dataset.kind() {
        DatasetKind::Lasso => {
            let problem = dataset.lasso_problem()?;
            dataset
                .instances
                .par_iter()
                .zip(&dataset.solutions)
                .enumerate()
                .map(|(i, (xi, w))| {
                    let fresh = lasso_oracle(&problem, xi, crate::datasets::ORACLE_TOL).map_err(|e| e.at_instance(i))?;
                    Ok(norm2(&sub(&fresh.w, w)) / norm2(w).max(1.0))
                })
                .collect::<Result<_>>()?
        }
        DatasetKind::Ot => (0..dataset.len())
            .into_par_iter()
            .map(|i| {
                let inst = dataset.ot_instance(i)?;
                let fresh = ot_exact(&inst, 1e-12).map_err(|e| e.at_instance(i))?;
                let stored = &dataset.solutions[i];
                Ok(norm2(&sub(fresh.plan.plan.as_slice(), stored)) / norm2(stored).max(1.0))
            })
            .collect::<Result<_>>()?,
    };
    let max_diff = diffs.iter().copied().fold(0.0, f64::max);
    Ok(json!({
        "command": "oracle-check",
        "kind": dataset.kind(),
        "count": dataset.len(),
        "max_certificate": max_certificate,
        "certificate_tolerance": crate::datasets::CERTIFICATE_TOL,
        "max_resolve_difference": max_diff,
        "ok": true,
    }))
}
