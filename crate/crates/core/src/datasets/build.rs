use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{dual_certificate, duality_gap, gen_dictionary, lasso_oracle, LassoProblem};
use crate::learn::{LassoSolver, OtSolver, Sample};
use crate::linalg::DenseMatrix;
use crate::ot::{cost_matrix, gen_marginals, ot_exact, read_marginals, OtInstance};

/// Tolerance of the Lasso oracle's duality gap.
pub const ORACLE_TOL: f64 = 1e-10;
/// Largest certificate accepted when a dataset is built or reloaded.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Row and column sums of stored plans must match the marginals this well.
pub const PLAN_FEASIBILITY_TOL: f64 = 1e-9;

const SIGNAL_STREAM: u64 = 1;
const SPLIT_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Lasso,
    Ot,
}

/// Data shared by every instance of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shared {
    Lasso { dictionary: DenseMatrix, mu: f64 },
    Ot { cost: DenseMatrix },
}

/// Where OT marginals come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OtSource {
    Random,
    Csv(PathBuf),
}

/// Instances, oracle solutions with their certificates, and a train/test
/// split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub shared: Shared,
    /// Signals `ξ` (Lasso) or `α` followed by `β` (OT).
    pub instances: Vec<Vec<f64>>,
    /// Oracle solutions `w*` (Lasso) or row-major plans (OT).
    pub solutions: Vec<Vec<f64>>,
    /// Duality gap (Lasso) or the simplex certificate (OT) per solution.
    pub certificates: Vec<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded 90/10 split with at least one instance on each side.
pub fn split_indices(count: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if count < 2 {
        return Err(Error::invalid(format!("need at least 2 instances, got {count}")));
    }
    let test_size = (count / 10).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut rng);
    let mut test = order[..test_size].to_vec();
    let mut train = order[test_size..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

fn lasso_certificate(problem: &LassoProblem, signal: &[f64], w: &[f64]) -> Result<f64> {
    let (y1, y2) = dual_certificate(problem, signal, w);
    duality_gap(problem, signal, w, &y1, &y2)
}

/// Lasso dataset: one Gaussian dictionary with unit columns, standard
/// Gaussian signals and coordinate-descent solutions.
pub fn build_lasso_dataset(m: usize, n: usize, count: usize, mu: f64, seed: u64) -> Result<Dataset> {
    let (train, test) = split_indices(count, seed)?;
    let dictionary = gen_dictionary(m, n, seed)?;
    let problem = LassoProblem::new(dictionary.clone(), mu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SIGNAL_STREAM);
    let instances: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let solved: Vec<(Vec<f64>, f64)> = instances
        .par_iter()
        .enumerate()
        .map(|(i, xi)| {
            let sol = lasso_oracle(&problem, xi, ORACLE_TOL).map_err(|e| e.at_instance(i))?;
            Ok((sol.w, sol.gap))
        })
        .collect::<Result<_>>()?;
    let (solutions, certificates) = solved.into_iter().unzip();
    Ok(Dataset {
        m,
        n,
        seed,
        shared: Shared::Lasso { dictionary, mu },
        instances,
        solutions,
        certificates,
        train,
        test,
    })
}

/// OT dataset with the squared-distance cost; marginals are random or read
/// from a CSV file (first `count` pairs).
pub fn build_ot_dataset(
    m: usize,
    n: usize,
    count: usize,
    seed: u64,
    source: &OtSource,
) -> Result<Dataset> {
    let cost = cost_matrix(m, n)?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = match source {
        OtSource::Random => {
            split_indices(count, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SIGNAL_STREAM);
            (0..count)
                .map(|_| gen_marginals(m, n, rng.random()))
                .collect::<Result<_>>()?
        }
        OtSource::Csv(path) => {
            let mut pairs = read_marginals(path)?;
            if pairs.len() < count {
                return Err(Error::Validation(format!(
                    "{} holds {} marginal pairs, {count} requested",
                    path.display(),
                    pairs.len()
                )));
            }
            pairs.truncate(count);
            if let Some((i, _)) = pairs
                .iter()
                .enumerate()
                .find(|(_, (a, b))| a.len() != m || b.len() != n)
            {
                return Err(Error::Validation(format!(
                    "marginal pair {i} does not have dims ({m}, {n})"
                )));
            }
            pairs
        }
    };
    let (train, test) = split_indices(count, seed)?;
    let solved: Vec<(Vec<f64>, f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let inst = OtInstance::new(cost.clone(), a.clone(), b.clone())
                .map_err(|e| Error::Validation(e.to_string()).at_instance(i))?;
            let sol = ot_exact(&inst, 1e-12).map_err(|e| e.at_instance(i))?;
            let cert = sol.certificate(&inst);
            Ok((sol.plan.plan.into_vec(), cert))
        })
        .collect::<Result<_>>()?;
    let (solutions, certificates) = solved.into_iter().unzip();
    let instances = pairs
        .into_iter()
        .map(|(mut a, b)| {
            a.extend(b);
            a
        })
        .collect();
    Ok(Dataset {
        m,
        n,
        seed,
        shared: Shared::Ot { cost },
        instances,
        solutions,
        certificates,
        train,
        test,
    })
}

impl Dataset {
    pub fn kind(&self) -> DatasetKind {
        match self.shared {
            Shared::Lasso { .. } => DatasetKind::Lasso,
            Shared::Ot { .. } => DatasetKind::Ot,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn mu(&self) -> Option<f64> {
        match self.shared {
            Shared::Lasso { mu, .. } => Some(mu),
            Shared::Ot { .. } => None,
        }
    }

    pub fn max_certificate(&self) -> f64 {
        self.certificates.iter().copied().fold(0.0, f64::max)
    }

    pub fn lasso_problem(&self) -> Result<LassoProblem> {
        match &self.shared {
            Shared::Lasso { dictionary, mu } => LassoProblem::new(dictionary.clone(), *mu),
            Shared::Ot { .. } => Err(Error::invalid("dataset holds OT instances")),
        }
    }

    pub fn ot_instance(&self, index: usize) -> Result<OtInstance> {
        let Shared::Ot { cost } = &self.shared else {
            return Err(Error::invalid("dataset holds Lasso instances"));
        };
        let payload = self
            .instances
            .get(index)
            .ok_or_else(|| Error::invalid(format!("no instance {index}")))?;
        let (a, b) = payload.split_at(self.m);
        OtInstance::new(cost.clone(), a.to_vec(), b.to_vec())
    }

    fn lasso_samples(&self, idx: &[usize]) -> Vec<Sample<Vec<f64>>> {
        idx.iter()
            .map(|&i| Sample {
                instance: self.instances[i].clone(),
                solution: self.solutions[i].clone(),
            })
            .collect()
    }

    /// Solver plus train and test samples of a Lasso dataset.
    #[allow(clippy::type_complexity)]
    pub fn lasso_split(&self) -> Result<(LassoSolver, Vec<Sample<Vec<f64>>>, Vec<Sample<Vec<f64>>>)> {
        let problem = self.lasso_problem()?;
        Ok((
            LassoSolver { problem },
            self.lasso_samples(&self.train),
            self.lasso_samples(&self.test),
        ))
    }

    fn ot_samples(&self, idx: &[usize]) -> Result<Vec<Sample<OtInstance>>> {
        idx.iter()
            .map(|&i| {
                Ok(Sample {
                    instance: self.ot_instance(i)?,
                    solution: self.solutions[i].clone(),
                })
            })
            .collect()
    }

    /// Solver plus train and test samples of an OT dataset.
    #[allow(clippy::type_complexity)]
    pub fn ot_split(&self) -> Result<(OtSolver, Vec<Sample<OtInstance>>, Vec<Sample<OtInstance>>)> {
        Ok((OtSolver, self.ot_samples(&self.train)?, self.ot_samples(&self.test)?))
    }

    /// Re-derives every certificate from the stored data and checks it
    /// against [`CERTIFICATE_TOL`]. Returns the largest one.
    pub fn verify(&self) -> Result<f64> {
        self.check_shape()?;
        let certs: Vec<f64> = match &self.shared {
            Shared::Lasso { .. } => {
                let problem = self.lasso_problem()?;
                self.instances
                    .par_iter()
                    .zip(&self.solutions)
                    .enumerate()
                    .map(|(i, (xi, w))| {
                        lasso_certificate(&problem, xi, w).map_err(|e| e.at_instance(i))
                    })
                    .collect::<Result<_>>()?
            }
            Shared::Ot { .. } => (0..self.len())
                .into_par_iter()
                .map(|i| self.verify_plan(i).map_err(|e| e.at_instance(i)))
                .collect::<Result<_>>()?,
        };
        if let Some((i, c)) = certs
            .iter()
            .enumerate()
            .find(|(_, c)| !(**c <= CERTIFICATE_TOL))
        {
            return Err(Error::Validation(format!(
                "instance {i}: certificate {c:e} exceeds {CERTIFICATE_TOL:e}"
            )));
        }
        Ok(certs.iter().copied().fold(0.0, f64::max))
    }

    /// Feasibility of the stored plan plus its objective gap to a fresh
    /// exact solve.
    fn verify_plan(&self, i: usize) -> Result<f64> {
        let inst = self.ot_instance(i)?;
        let plan = DenseMatrix::from_row_major(self.m, self.n, self.solutions[i].clone())?;
        if plan.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::Validation("stored plan has negative entries".into()));
        }
        let (rows, cols) = crate::ot::row_col_sums(&plan);
        let row_err = rows.iter().zip(inst.alpha()).map(|(a, b)| (a - b).abs());
        let col_err = cols.iter().zip(inst.beta()).map(|(a, b)| (a - b).abs());
        let feas = row_err.chain(col_err).fold(0.0, f64::max);
        if feas > PLAN_FEASIBILITY_TOL {
            return Err(Error::Validation(format!("stored plan violates marginals by {feas:e}")));
        }
        let exact = ot_exact(&inst, 1e-12)?;
        let gap = (inst.objective(&plan) - exact.plan.objective).abs();
        Ok(gap.max(exact.certificate(&inst)))
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        let count = self.instances.len();
        if self.solutions.len() != count || self.certificates.len() != count {
            return Err(Error::Validation("instances, solutions and certificates differ in count".into()));
        }
        let (inst_len, sol_len) = match self.kind() {
            DatasetKind::Lasso => (self.m, self.n),
            DatasetKind::Ot => (self.m + self.n, self.m * self.n),
        };
        if self.instances.iter().any(|v| v.len() != inst_len)
            || self.solutions.iter().any(|v| v.len() != sol_len)
        {
            return Err(Error::Validation("payload rows have the wrong length".into()));
        }
        let mut seen = vec![false; count];
        for &i in self.train.iter().chain(&self.test) {
            if i >= count || seen[i] {
                return Err(Error::Validation("split is not a partition of the instances".into()));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Validation("split does not cover every instance".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        assert_eq!(split_indices(2, 0).unwrap().0.len(), 1);
        assert_eq!(split_indices(2, 0).unwrap().1.len(), 1);
        let (tr, te) = split_indices(20, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (18, 2));
        let (tr, te) = split_indices(500, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (450, 50));
        assert!(split_indices(1, 0).is_err());
    }

    #[test]
    fn split_is_a_partition() {
        for count in 2..60 {
            let (tr, te) = split_indices(count, count as u64).unwrap();
            let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..count).collect::<Vec<_>>());
        }
    }

    #[test]
    fn lasso_dataset_certifies() {
        let d = build_lasso_dataset(5, 8, 12, 0.1, 7).unwrap();
        assert_eq!(d.mu(), Some(0.1));
        assert!(d.max_certificate() <= ORACLE_TOL);
        assert!(d.verify().unwrap() <= CERTIFICATE_TOL);
        assert_eq!(d, build_lasso_dataset(5, 8, 12, 0.1, 7).unwrap());
    }

    #[test]
    fn ot_dataset_certifies() {
        let d = build_ot_dataset(4, 5, 10, 1, &OtSource::Random).unwrap();
        assert_eq!(d.kind(), DatasetKind::Ot);
        assert!(d.verify().unwrap() <= CERTIFICATE_TOL);
        let inst = d.ot_instance(3).unwrap();
        assert_eq!(inst.m(), 4);
    }

    #[test]
    fn bad_sizes_are_rejected() {
        assert!(build_lasso_dataset(0, 5, 10, 0.1, 0).is_err());
        assert!(build_lasso_dataset(3, 5, 1, 0.1, 0).is_err());
        assert!(build_ot_dataset(3, 3, 1, 0, &OtSource::Random).is_err());
    }
}
