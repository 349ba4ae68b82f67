use crate::error::{Error, Result};
use crate::mpalm::soft_threshold;

use super::problem::LassoProblem;

/// ISTA with the fixed step `1/α`, `α = λ_max(DᵀD)`. Returns `w⁰, …, w^K`.
pub fn ista_run(
    problem: &LassoProblem,
    signal: &[f64],
    iters: usize,
    w0: Option<&[f64]>,
) -> Result<Vec<Vec<f64>>> {
    problem.check_signal(signal)?;
    let mut w = match w0 {
        Some(w0) if w0.len() != problem.n() => {
            return Err(Error::invalid("initial point length does not match the dictionary"))
        }
        Some(w0) => w0.to_vec(),
        None => vec![0.0; problem.n()],
    };
    let alpha = problem.cache().max_eigenvalue();
    if !(alpha > 0.0) {
        return Err(Error::invalid("dictionary has no positive singular value"));
    }
    let d = problem.dictionary();
    let threshold = problem.mu() / alpha;
    let mut out = Vec::with_capacity(iters + 1);
    out.push(w.clone());
    let mut resid = vec![0.0; problem.m()];
    let mut grad = vec![0.0; problem.n()];
    for _ in 0..iters {
        d.matvec_into(&w, &mut resid);
        for (r, s) in resid.iter_mut().zip(signal) {
            *r -= s;
        }
        d.tr_matvec_into(&resid, &mut grad);
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi = soft_threshold(*wi - gi / alpha, threshold);
        }
        out.push(w.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::oracle::lasso_oracle;
    use crate::lasso::problem::gen_dictionary;
    use crate::linalg::DenseMatrix;

    #[test]
    fn scalar_converges_to_soft_threshold() {
        let p = LassoProblem::new(DenseMatrix::identity(1), 0.1).unwrap();
        let it = ista_run(&p, &[1.0], 5, None).unwrap();
        assert!((it.last().unwrap()[0] - 0.9).abs() <= 1e-15);
    }

    #[test]
    fn solution_is_a_fixed_point() {
        let p = LassoProblem::new(gen_dictionary(6, 10, 1).unwrap(), 0.1).unwrap();
        let signal: Vec<f64> = (0..6).map(|i| (i as f64 * 1.3).cos()).collect();
        let sol = lasso_oracle(&p, &signal, 1e-14).unwrap();
        let it = ista_run(&p, &signal, 20, Some(&sol.w)).unwrap();
        for w in &it {
            for (a, b) in w.iter().zip(&sol.w) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn objective_is_monotone() {
        for seed in 0..10 {
            let p = LassoProblem::new(gen_dictionary(10, 20, seed).unwrap(), 0.1).unwrap();
            let signal: Vec<f64> = (0..10).map(|i| ((i as u64 + seed) as f64).sin()).collect();
            let it = ista_run(&p, &signal, 200, None).unwrap();
            let objs: Vec<f64> = it.iter().map(|w| p.primal_objective(&signal, w)).collect();
            for pair in objs.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "seed {seed}");
            }
        }
    }
}
