//! Independent reference solvers used only by the test suites.
#![allow(dead_code)]

use palm_l2o::linalg::{dot, norm2, solve_dense, sym_eig, DenseMatrix};
use palm_l2o::mpalm::GSpec;

/// Minimizes `½⟨y, H y⟩ + ⟨r, y⟩ + g(y[..n1])` by accelerated proximal
/// gradient with gradient-based adaptive restart, until the step
/// `‖y⁺ − y‖` falls below `tol`.
pub fn apg_minimize(h: &DenseMatrix, r: &[f64], g: GSpec, n1: usize, tol: f64) -> Vec<f64> {
    let n = r.len();
    let lip = sym_eig(h).unwrap().max_eigenvalue();
    let step = 1.0 / lip;
    let prox = |v: &mut [f64]| {
        for t in v[..n1].iter_mut() {
            *t = match g {
                GSpec::Zero => *t,
                GSpec::BoxIndicator { radius } => t.clamp(-radius, radius),
                GSpec::NonNegative => t.max(0.0),
                GSpec::L1 { weight } => {
                    let k = weight * step;
                    if *t > k {
                        *t - k
                    } else if *t < -k {
                        *t + k
                    } else {
                        0.0
                    }
                }
            };
        }
    };
    let mut y = vec![0.0; n];
    prox(&mut y);
    let mut z = y.clone();
    let mut t = 1.0f64;
    for _ in 0..1_000_000 {
        let grad: Vec<f64> = h.matvec(&z).iter().zip(r).map(|(a, b)| a + b).collect();
        let mut y_next: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi).collect();
        prox(&mut y_next);
        let diff: Vec<f64> = y_next.iter().zip(&y).map(|(a, b)| a - b).collect();
        let moved = norm2(&diff);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // restart when momentum points uphill
        let mapping: Vec<f64> = z.iter().zip(&y_next).map(|(a, b)| a - b).collect();
        let uphill = dot(&mapping, &diff) > 0.0;
        if uphill {
            t = 1.0;
            z = y_next.clone();
        } else {
            let beta = (t - 1.0) / t_next;
            z = y_next
                .iter()
                .zip(&y)
                .map(|(a, b)| a + beta * (a - b))
                .collect();
            t = t_next;
        }
        y = y_next;
        if moved <= tol {
            break;
        }
    }
    y
}

/// Minimizer of an unconstrained strictly convex quadratic.
pub fn quadratic_minimizer(h: &DenseMatrix, r: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
    solve_dense(h, &neg).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `U D⁻¹ Uᵀ` from an assembled `Q̃` and its block sizes, computed with
/// dense solves only.
pub fn sgs_operator_reference(qtilde: &DenseMatrix, dims: &[usize]) -> DenseMatrix {
    let n = qtilde.rows();
    let mut d = DenseMatrix::zeros(n, n);
    let mut u = DenseMatrix::zeros(n, n);
    let mut starts = vec![0];
    for dim in dims {
        starts.push(starts.last().unwrap() + dim);
    }
    let block_of = |k: usize| starts.iter().rposition(|&s| s <= k).unwrap().min(dims.len() - 1);
    for i in 0..n {
        for j in 0..n {
            let (bi, bj) = (block_of(i), block_of(j));
            if bi == bj {
                d[(i, j)] = qtilde[(i, j)];
            } else if bi < bj {
                u[(i, j)] = qtilde[(i, j)];
            }
        }
    }
    let ut = u.transpose();
    let mut dinv_ut = DenseMatrix::zeros(n, n);
    for col in 0..n {
        let x = solve_dense(&d, &ut.column(col)).unwrap();
        for (row, v) in x.into_iter().enumerate() {
            dinv_ut[(row, col)] = v;
        }
    }
    u.matmul(&dinv_ut)
}

/// Optimal value of a small transportation LP by enumerating every basis of
/// `m + n − 1` cells and keeping the nonnegative ones.
pub fn transport_vertex_enumeration(cost: &DenseMatrix, alpha: &[f64], beta: &[f64]) -> f64 {
    let (m, n) = (alpha.len(), beta.len());
    let cells = m * n;
    let basis_size = m + n - 1;
    // drop the last column-sum constraint, which is implied by the others
    let rows = m + n - 1;
    let mut rhs: Vec<f64> = alpha.to_vec();
    rhs.extend_from_slice(&beta[..n - 1]);
    let coeff = |row: usize, cell: usize| -> f64 {
        let (i, j) = (cell / n, cell % n);
        if row < m {
            f64::from(u8::from(i == row))
        } else {
            f64::from(u8::from(j == row - m))
        }
    };
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..basis_size).collect();
    loop {
        let mat = DenseMatrix::from_fn(rows, basis_size, |r, k| coeff(r, subset[k]));
        if let Ok(sol) = solve_dense(&mat, &rhs) {
            if sol.iter().all(|&v| v >= -1e-12) {
                let obj: f64 = subset
                    .iter()
                    .zip(&sol)
                    .map(|(&cell, v)| cost.as_slice()[cell] * v)
                    .sum();
                best = best.min(obj);
            }
        }
        // next combination in lexicographic order
        let mut advanced = false;
        for k in (0..basis_size).rev() {
            if subset[k] < cells - basis_size + k {
                subset[k] += 1;
                for l in k + 1..basis_size {
                    subset[l] = subset[l - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            return best;
        }
    }
}
