//! Exact transportation LP by the network (transportation) simplex method.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

use super::problem::{OtInstance, TransportPlan};

const BALANCE_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

/// Optimal plan with the dual potentials that certify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactTransport {
    pub plan: TransportPlan,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `max(0, −min_ij (c_ij − u_i − v_j))`.
    pub dual_violation: f64,
    /// `|⟨c, x⟩ − ⟨α, u⟩ − ⟨β, v⟩|`.
    pub gap: f64,
    pub pivots: usize,
}

impl ExactTransport {
    /// Largest of the dual violation, gap and marginal error.
    pub fn certificate(&self, instance: &OtInstance) -> f64 {
        self.dual_violation
            .max(self.gap)
            .max(instance.marginal_error(&self.plan.plan))
    }
}

struct Basis {
    m: usize,
    n: usize,
    // basic cells and their flow
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
}

impl Basis {
    fn northwest(alpha: &[f64], beta: &[f64]) -> Self {
        let (m, n) = (alpha.len(), beta.len());
        let mut supply = alpha.to_vec();
        let mut demand = beta.to_vec();
        let (mut i, mut j) = (0, 0);
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        loop {
            let q = supply[i].min(demand[j]).max(0.0);
            cells.push((i, j));
            flow.push(q);
            supply[i] -= q;
            demand[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && supply[i] <= demand[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { m, n, cells, flow }
    }

    /// Adjacency lists over row nodes `0..m` and column nodes `m..m+n`;
    /// each entry is `(neighbor, basic index)`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push((self.m + j, k));
            adj[self.m + j].push((i, k));
        }
        adj
    }

    fn potentials(&self, cost: &DenseMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let adj = self.adjacency();
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, k) in &adj[node] {
                if pot[next].is_nan() {
                    let (i, j) = self.cells[k];
                    pot[next] = cost[(i, j)] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        if pot.iter().any(|p| p.is_nan()) {
            return Err(Error::Internal("transportation basis is not a spanning tree".into()));
        }
        let v = pot.split_off(self.m);
        Ok((pot, v))
    }

    /// Basic indices on the tree path from row node `i` to column node
    /// `m + j`, in order.
    fn path(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        let adj = self.adjacency();
        let target = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, k) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        if !seen[target] {
            return Err(Error::Internal("no tree path for entering cell".into()));
        }
        let mut edges = Vec::new();
        let mut node = target;
        while let Some((prev, k)) = parent[node] {
            edges.push(k);
            node = prev;
        }
        edges.reverse();
        Ok(edges)
    }
}

/// Solves the transportation LP exactly. `tol` bounds the reduced-cost
/// violation accepted at optimality.
pub fn ot_exact(instance: &OtInstance, tol: f64) -> Result<ExactTransport> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let alpha = instance.alpha();
    let beta = instance.beta();
    let (sa, sb) = (alpha.iter().sum::<f64>(), beta.iter().sum::<f64>());
    if (sa - sb).abs() > BALANCE_TOL {
        return Err(Error::invalid(format!("unbalanced marginals: {sa} vs {sb}")));
    }
    let cost = instance.cost();
    let (m, n) = (instance.m(), instance.n());
    let mut basis = Basis::northwest(alpha, beta);
    let max_pivots = 100 * (m * n + 10) * (m + n);
    let mut degenerate_run = 0;
    let mut pivots = 0;
    loop {
        let (u, v) = basis.potentials(cost)?;
        let bland = degenerate_run >= DEGENERATE_LIMIT;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                let r = cost[(i, j)] - u[i] - v[j];
                if r < -tol && entering.is_none_or(|(_, _, best)| r < best) {
                    entering = Some((i, j, r));
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            let mut plan = DenseMatrix::zeros(m, n);
            for (&(i, j), &f) in basis.cells.iter().zip(&basis.flow) {
                plan[(i, j)] = f.max(0.0);
            }
            let min_reduced = (0..m)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| cost[(i, j)] - u[i] - v[j])
                .fold(0.0, f64::min);
            let primal = instance.objective(&plan);
            let gap = (primal - dot(alpha, &u) - dot(beta, &v)).abs();
            return Ok(ExactTransport {
                plan: TransportPlan::new(instance, plan),
                u,
                v,
                dual_violation: -min_reduced,
                gap,
                pivots,
            });
        };
        if pivots >= max_pivots {
            return Err(Error::Internal(format!(
                "network simplex exceeded {max_pivots} pivots"
            )));
        }
        // cycle: entering (+), then alternating −, +, … along the tree path
        let path = basis.path(ei, ej)?;
        let mut leave_pos = None;
        let mut theta = f64::INFINITY;
        for (pos, &k) in path.iter().enumerate().step_by(2) {
            let f = basis.flow[k];
            let better = match leave_pos {
                None => true,
                Some(lp) => {
                    let kk: usize = path[lp];
                    f < theta || (f == theta && basis.cells[k] < basis.cells[kk])
                }
            };
            if better {
                theta = f;
                leave_pos = Some(pos);
            }
        }
        let leave_pos = leave_pos.expect("cycle has at least one backward edge");
        let theta = theta.max(0.0);
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.flow[k] -= theta;
            } else {
                basis.flow[k] += theta;
            }
        }
        let leave = path[leave_pos];
        basis.cells[leave] = (ei, ej);
        basis.flow[leave] = theta;
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        pivots += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::problem::cost_matrix;

    #[test]
    fn uniform_marginals_give_diagonal_plan() {
        for n in 1..8 {
            let u = vec![1.0 / n as f64; n];
            let inst = OtInstance::new(cost_matrix(n, n).unwrap(), u.clone(), u).unwrap();
            let sol = ot_exact(&inst, 1e-12).unwrap();
            assert_eq!(sol.plan.objective, 0.0);
            for i in 0..n {
                assert!((sol.plan.plan[(i, i)] - 1.0 / n as f64).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn single_route() {
        let c = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let inst = OtInstance::new(c, vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let sol = ot_exact(&inst, 1e-12).unwrap();
        assert_eq!(sol.plan.plan.as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(sol.plan.objective, 1.0);
    }

    #[test]
    fn certificates_hold_on_random_instances() {
        for seed in 0..40 {
            let inst = OtInstance::random(2 + seed as usize % 9, 2 + seed as usize % 7, seed).unwrap();
            let sol = ot_exact(&inst, 1e-12).unwrap();
            assert!(sol.certificate(&inst) <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // integral marginals make the NW corner basis heavily degenerate
        let n = 8;
        let u = vec![1.0 / n as f64; n];
        let c = DenseMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let inst = OtInstance::new(c, u.clone(), u).unwrap();
        let sol = ot_exact(&inst, 1e-12).unwrap();
        assert!(sol.certificate(&inst) <= 1e-12);
    }
}
