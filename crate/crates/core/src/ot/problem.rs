use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

const MASS_TOL: f64 = 1e-10;

/// Squared index distance `C_ij = |i − j|²`.
pub fn cost_matrix(m: usize, n: usize) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("cost dims must be positive, got ({m}, {n})")));
    }
    Ok(DenseMatrix::from_fn(m, n, |i, j| {
        let d = i as f64 - j as f64;
        d * d
    }))
}

fn uniform_probability(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.sample(Open01)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Two random probability vectors, Uniform(0, 1) entries normalized to sum
/// to one.
pub fn gen_marginals(m: usize, n: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 || n == 0 {
        return Err(Error::invalid(format!("marginal dims must be positive, got ({m}, {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = uniform_probability(&mut rng, m);
    let beta = uniform_probability(&mut rng, n);
    Ok((alpha, beta))
}

fn check_probability(v: &[f64], name: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid(format!("{name} sums to {total}, expected 1")));
    }
    Ok(())
}

/// Discrete optimal transport between `alpha` and `beta` under `cost`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtInstance {
    cost: DenseMatrix,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl OtInstance {
    pub fn new(cost: DenseMatrix, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        check_probability(&alpha, "alpha")?;
        check_probability(&beta, "beta")?;
        if cost.rows() != alpha.len() || cost.cols() != beta.len() {
            return Err(Error::invalid(format!(
                "cost is {}×{} but marginals have lengths {} and {}",
                cost.rows(),
                cost.cols(),
                alpha.len(),
                beta.len()
            )));
        }
        if cost.as_slice().iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("cost must be finite"));
        }
        Ok(Self { cost, alpha, beta })
    }

    /// Seeded instance with the squared-distance cost.
    pub fn random(m: usize, n: usize, seed: u64) -> Result<Self> {
        let (alpha, beta) = gen_marginals(m, n, seed)?;
        Self::new(cost_matrix(m, n)?, alpha, beta)
    }

    pub fn cost(&self) -> &DenseMatrix {
        &self.cost
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    /// `⟨c, plan⟩`.
    pub fn objective(&self, plan: &DenseMatrix) -> f64 {
        dot(self.cost.as_slice(), plan.as_slice())
    }

    /// `‖plan·e − α‖₁ + ‖planᵀe − β‖₁`.
    pub fn marginal_error(&self, plan: &DenseMatrix) -> f64 {
        let (rows, cols) = row_col_sums(plan);
        let r: f64 = rows.iter().zip(&self.alpha).map(|(a, b)| (a - b).abs()).sum();
        let c: f64 = cols.iter().zip(&self.beta).map(|(a, b)| (a - b).abs()).sum();
        r + c
    }

    /// `αβᵀ`, the independent coupling.
    pub fn product_plan(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.m(), self.n(), |i, j| self.alpha[i] * self.beta[j])
    }
}

pub(crate) fn row_col_sums(x: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut rows = vec![0.0; x.rows()];
    let mut cols = vec![0.0; x.cols()];
    for (i, r) in rows.iter_mut().enumerate() {
        for (j, v) in x.row(i).iter().enumerate() {
            *r += v;
            cols[j] += v;
        }
    }
    (rows, cols)
}

/// A transport plan and its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub plan: DenseMatrix,
    pub objective: f64,
}

impl TransportPlan {
    pub fn new(instance: &OtInstance, plan: DenseMatrix) -> Self {
        let objective = instance.objective(&plan);
        Self { plan, objective }
    }
}

fn parse_row(line: &str, path: &Path, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("bad number {:?}: {e}", tok.trim()),
            })
        })
        .collect()
}

fn normalize(v: Vec<f64>, path: &Path, line: usize) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: "marginal entries must be finite and nonnegative".into(),
        });
    }
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: "marginal has zero mass".into(),
        });
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Parses marginal pairs: each consecutive pair of non-empty lines holds
/// `α` then `β` as comma-separated decimals. Each vector is normalized to
/// unit mass.
pub fn parse_marginals(text: &str, path: &Path) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let rows: Vec<(usize, Vec<f64>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_row(l, path, i + 1).map(|r| (i + 1, r)))
        .collect::<Result<_>>()?;
    if rows.is_empty() || rows.len() % 2 != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: rows.last().map_or(0, |r| r.0),
            message: format!("expected pairs of rows (alpha, beta), found {} rows", rows.len()),
        });
    }
    let mut out = Vec::with_capacity(rows.len() / 2);
    let mut it = rows.into_iter();
    while let (Some((la, a)), Some((lb, b))) = (it.next(), it.next()) {
        out.push((normalize(a, path, la)?, normalize(b, path, lb)?));
    }
    Ok(out)
}

/// Reads marginal pairs from a CSV file; see [`parse_marginals`].
pub fn read_marginals(path: &Path) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_marginals(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_examples() {
        let c = cost_matrix(3, 3).unwrap();
        assert_eq!(c.as_slice(), &[0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]);
        assert_eq!(cost_matrix(1, 1).unwrap().as_slice(), &[0.0]);
        let c = cost_matrix(6, 6).unwrap();
        assert_eq!(c, c.transpose());
        assert!(cost_matrix(0, 2).is_err());
    }

    #[test]
    fn marginals_are_probabilities() {
        for seed in 0..50 {
            let (a, b) = gen_marginals(1 + seed as usize % 7, 3, seed).unwrap();
            assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(a.iter().chain(&b).all(|&v| v > 0.0));
        }
        assert_eq!(gen_marginals(1, 2, 9).unwrap().0, vec![1.0]);
        assert_eq!(gen_marginals(4, 5, 3).unwrap(), gen_marginals(4, 5, 3).unwrap());
    }

    #[test]
    fn instance_validation() {
        let c = cost_matrix(2, 2).unwrap();
        assert!(OtInstance::new(c.clone(), vec![0.5, 0.5], vec![0.2, 0.8]).is_ok());
        assert!(OtInstance::new(c.clone(), vec![0.5, 0.6], vec![0.2, 0.8]).is_err());
        assert!(OtInstance::new(c.clone(), vec![1.5, -0.5], vec![0.2, 0.8]).is_err());
        assert!(OtInstance::new(c, vec![1.0], vec![0.2, 0.8]).is_err());
    }

    #[test]
    fn csv_pairs_are_normalized() {
        let p = Path::new("m.csv");
        let got = parse_marginals("1,1,2\n3,1\n\n1\n2,2\n", p).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, vec![0.25, 0.25, 0.5]);
        assert_eq!(got[0].1, vec![0.75, 0.25]);
        assert_eq!(got[1].0, vec![1.0]);
        assert!(matches!(parse_marginals("1,2\n", p), Err(Error::Parse { .. })));
        assert!(matches!(parse_marginals("1,x\n1\n", p), Err(Error::Parse { line: 1, .. })));
        assert!(parse_marginals("0,0\n1\n", p).is_err());
        assert!(parse_marginals("1,-1,3\n1\n", p).is_err());
    }
}
