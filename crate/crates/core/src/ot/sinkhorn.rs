use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::problem::{OtInstance, TransportPlan};

/// Kernel exponents beyond this magnitude switch to log-domain updates.
const MAX_EXPONENT: f64 = 600.0;

/// Result of a Sinkhorn run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkhornResult {
    pub plan: TransportPlan,
    pub iterations: usize,
    /// `‖plan·e − α‖₁ + ‖planᵀe − β‖₁` at termination.
    pub marginal_error: f64,
    pub log_domain: bool,
}

/// Relative entropic regularization grid `{1e-1, 1e-2, 1e-3, 1e-4}·max(c)`.
pub fn default_lambda_grid(cost: &DenseMatrix) -> Vec<f64> {
    let cmax = cost.max_abs().max(f64::MIN_POSITIVE);
    [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|s| s * cmax).collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let peak = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + v.iter().map(|x| (x - peak).exp()).sum::<f64>().ln()
}

/// Scaling iteration on the restricted support where both marginals are
/// positive.
struct Scaling<'a> {
    cost: &'a DenseMatrix,
    alpha: &'a [f64],
    beta: &'a [f64],
    rows: &'a [usize],
    cols: &'a [usize],
    lambda: f64,
    log_domain: bool,
    // multiplicative scalings or log-domain potentials f, g
    u: Vec<f64>,
    v: Vec<f64>,
    kernel: Vec<f64>,
}

impl<'a> Scaling<'a> {
    fn c(&self, a: usize, b: usize) -> f64 {
        self.cost[(self.rows[a], self.cols[b])]
    }

    fn new(
        cost: &'a DenseMatrix,
        alpha: &'a [f64],
        beta: &'a [f64],
        rows: &'a [usize],
        cols: &'a [usize],
        lambda: f64,
    ) -> Self {
        let (mr, nc) = (rows.len(), cols.len());
        let cmin = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| cost[(i, j)]))
            .fold(f64::INFINITY, f64::min);
        let cmax = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| cost[(i, j)]))
            .fold(f64::NEG_INFINITY, f64::max);
        let log_domain = (cmax - cmin) / lambda > MAX_EXPONENT;
        let mut s = Self {
            cost,
            alpha,
            beta,
            rows,
            cols,
            lambda,
            log_domain,
            u: vec![if log_domain { 0.0 } else { 1.0 }; mr],
            v: vec![if log_domain { 0.0 } else { 1.0 }; nc],
            kernel: Vec::new(),
        };
        if !log_domain {
            // shift by cmin so the largest kernel entry is 1
            s.kernel = (0..mr * nc)
                .map(|k| (-(s.c(k / nc, k % nc) - cmin) / lambda).exp())
                .collect();
        }
        s
    }

    fn iterate(&mut self) -> Result<()> {
        let (mr, nc) = (self.rows.len(), self.cols.len());
        if self.log_domain {
            let lam = self.lambda;
            for a in 0..mr {
                let lse = log_sum_exp((0..nc).map(|b| (self.v[b] - self.c(a, b)) / lam));
                self.u[a] = lam * self.alpha[self.rows[a]].ln() - lam * lse;
            }
            for b in 0..nc {
                let lse = log_sum_exp((0..mr).map(|a| (self.u[a] - self.c(a, b)) / lam));
                self.v[b] = lam * self.beta[self.cols[b]].ln() - lam * lse;
            }
        } else {
            for a in 0..mr {
                let kv: f64 = (0..nc).map(|b| self.kernel[a * nc + b] * self.v[b]).sum();
                self.u[a] = self.alpha[self.rows[a]] / kv;
            }
            for b in 0..nc {
                let ktu: f64 = (0..mr).map(|a| self.kernel[a * nc + b] * self.u[a]).sum();
                self.v[b] = self.beta[self.cols[b]] / ktu;
            }
        }
        if self.u.iter().chain(&self.v).any(|x| !x.is_finite()) {
            return Err(Error::NumericalInstability(format!(
                "Sinkhorn scaling became non-finite at lambda = {:e}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn plan(&self, m: usize, n: usize) -> DenseMatrix {
        let mut plan = DenseMatrix::zeros(m, n);
        let nc = self.cols.len();
        for (a, &i) in self.rows.iter().enumerate() {
            for (b, &j) in self.cols.iter().enumerate() {
                plan[(i, j)] = if self.log_domain {
                    ((self.u[a] + self.v[b] - self.c(a, b)) / self.lambda).exp()
                } else {
                    self.u[a] * self.kernel[a * nc + b] * self.v[b]
                };
            }
        }
        plan
    }
}

/// Sinkhorn matrix scaling for the entropy-regularized problem with weight
/// `lambda`, calling `observe(k, plan^k)` after every iteration. Stops once
/// the marginal error is at most `tol` or after `iters` iterations.
pub fn sinkhorn_observe(
    instance: &OtInstance,
    lambda: f64,
    iters: usize,
    tol: f64,
    mut observe: impl FnMut(usize, &DenseMatrix),
) -> Result<SinkhornResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be nonnegative"));
    }
    let (m, n) = (instance.m(), instance.n());
    let rows: Vec<usize> = (0..m).filter(|&i| instance.alpha()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| instance.beta()[j] > 0.0).collect();
    let mut scaling = Scaling::new(
        instance.cost(),
        instance.alpha(),
        instance.beta(),
        &rows,
        &cols,
        lambda,
    );
    let mut plan = scaling.plan(m, n);
    let mut err = instance.marginal_error(&plan);
    let mut done = 0;
    while done < iters && err > tol {
        scaling.iterate()?;
        done += 1;
        plan = scaling.plan(m, n);
        err = instance.marginal_error(&plan);
        observe(done, &plan);
    }
    if plan.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalInstability("Sinkhorn plan is not finite".into()));
    }
    Ok(SinkhornResult {
        plan: TransportPlan::new(instance, plan),
        iterations: done,
        marginal_error: err,
        log_domain: scaling.log_domain,
    })
}

/// [`sinkhorn_observe`] without an observer.
pub fn sinkhorn(instance: &OtInstance, lambda: f64, iters: usize, tol: f64) -> Result<SinkhornResult> {
    sinkhorn_observe(instance, lambda, iters, tol, |_, _| {})
}
