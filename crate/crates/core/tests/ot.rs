mod common;

use common::{max_abs_diff, transport_vertex_enumeration};
use palm_l2o::linalg::DenseMatrix;
use palm_l2o::mpalm::{mpalm_run, PenaltySchedule};
use palm_l2o::ot::{
    cost_matrix, ot_block_instance, ot_exact, ot_mpalm_run, sinkhorn, OtDualState, OtInstance,
};

fn rel_frobenius(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

#[test]
fn specialized_iteration_matches_generic_encoding() {
    for seed in 0..8 {
        let (m, n) = if seed < 4 { (3, 3) } else { (2 + seed as usize % 3, 4) };
        let inst = OtInstance::random(m, n, seed).unwrap();
        let schedule = PenaltySchedule::new(vec![1.0, 0.2, 3.0], 10, 30, 1.618).unwrap();
        let fast = ot_mpalm_run(&inst, &schedule, OtDualState::zeros(&inst)).unwrap();
        let (block, stilde) = ot_block_instance(&inst).unwrap();
        let generic = mpalm_run(
            &block,
            &schedule,
            &stilde,
            &vec![0.0; m * n],
            &vec![0.0; m * n + m + n],
        )
        .unwrap();
        for (k, (a, b)) in fast.x_iters.iter().zip(&generic.x_iters).enumerate() {
            assert!(max_abs_diff(a, b) <= 1e-9, "seed {seed} iteration {k}");
        }
        for (a, b) in fast.y_final.iter().zip(&generic.y_final) {
            assert!(max_abs_diff(a, b) <= 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn exact_matches_vertex_enumeration() {
    for seed in 0..30 {
        let (m, n) = if seed % 2 == 0 { (2, 2) } else { (3, 3) };
        let inst = OtInstance::random(m, n, 100 + seed).unwrap();
        let exact = ot_exact(&inst, 1e-12).unwrap();
        let brute = transport_vertex_enumeration(inst.cost(), inst.alpha(), inst.beta());
        assert!((exact.plan.objective - brute).abs() <= 1e-10, "seed {seed}");
    }
    // a non-square case with a generic cost
    let c = DenseMatrix::from_rows(&[vec![3.0, 1.0, 7.0, 4.0], vec![2.0, 6.0, 5.0, 9.0], vec![8.0, 3.0, 3.0, 2.0]])
        .unwrap();
    let inst = OtInstance::new(c, vec![0.3, 0.5, 0.2], vec![0.2, 0.3, 0.25, 0.25]).unwrap();
    let exact = ot_exact(&inst, 1e-12).unwrap();
    let brute = transport_vertex_enumeration(inst.cost(), inst.alpha(), inst.beta());
    assert!((exact.plan.objective - brute).abs() <= 1e-10);
}

#[test]
fn mpalm_plan_approaches_exact_plan() {
    for seed in 0..3 {
        let inst = OtInstance::random(10, 10, seed).unwrap();
        let exact = ot_exact(&inst, 1e-12).unwrap();
        let target = exact.plan.plan.as_slice();
        for (sigma, k_max, final_tol) in [(1.0, 2000, 1.0), (0.01, 20000, 1e-8)] {
            let schedule = PenaltySchedule::constant(sigma, k_max, 1.618).unwrap();
            let t = ot_mpalm_run(&inst, &schedule, OtDualState::zeros(&inst)).unwrap();
            let checkpoints: &[usize] = if sigma < 1.0 { &[0, k_max / 10, k_max] } else { &[0, k_max] };
            let errs: Vec<f64> = checkpoints
                .iter()
                .map(|&k| rel_frobenius(&t.x_iters[k], target))
                .collect();
            assert!(errs.windows(2).all(|w| w[1] < w[0]), "seed {seed} sigma {sigma}: {errs:?}");
            assert!(errs[errs.len() - 1] <= final_tol, "seed {seed} sigma {sigma}: {errs:?}");
        }
    }
}

#[test]
fn identical_marginals_give_identity_coupling() {
    let inst = OtInstance::random(5, 5, 9).unwrap();
    let a = inst.alpha().to_vec();
    let inst = OtInstance::new(cost_matrix(5, 5).unwrap(), a.clone(), a.clone()).unwrap();
    let schedule = PenaltySchedule::constant(1.0, 3000, 1.618).unwrap();
    let t = ot_mpalm_run(&inst, &schedule, OtDualState::zeros(&inst)).unwrap();
    let diag = DenseMatrix::from_diag(&a);
    assert!(max_abs_diff(t.final_x(), diag.as_slice()) <= 1e-6);
}

/// Entropic objective `⟨c, x⟩ + λ Σ x log x` on the 2×2 feasible segment
/// `x11 = t`, minimized by bisection on its derivative.
fn entropic_2x2(c: &DenseMatrix, a: &[f64], b: &[f64], lam: f64) -> [f64; 4] {
    let lo = (a[0] - b[1]).max(0.0);
    let hi = a[0].min(b[0]);
    let cells = |t: f64| [t, a[0] - t, b[0] - t, a[1] - b[0] + t];
    let deriv = |t: f64| {
        let x = cells(t);
        let s = [1.0, -1.0, -1.0, 1.0];
        (0..4)
            .map(|k| s[k] * (c.as_slice()[k] + lam * (x[k].ln() + 1.0)))
            .sum::<f64>()
    };
    let (mut l, mut h) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (l + h);
        if deriv(mid) > 0.0 {
            h = mid;
        } else {
            l = mid;
        }
    }
    cells(0.5 * (l + h))
}

#[test]
fn sinkhorn_matches_entropic_brute_force() {
    for seed in 0..10 {
        let inst = OtInstance::random(2, 2, seed).unwrap();
        let c = DenseMatrix::from_rows(&[vec![0.3, 1.0], vec![2.0, 0.1]]).unwrap();
        let inst = OtInstance::new(c.clone(), inst.alpha().to_vec(), inst.beta().to_vec()).unwrap();
        for lam in [1.0, 0.3, 0.1] {
            let r = sinkhorn(&inst, lam, 100_000, 1e-14).unwrap();
            let brute = entropic_2x2(&c, inst.alpha(), inst.beta(), lam);
            assert!(max_abs_diff(r.plan.plan.as_slice(), &brute) <= 1e-8, "seed {seed} lam {lam}");
        }
    }
}

#[test]
fn sinkhorn_is_feasible_and_biased_upward() {
    for seed in 0..5 {
        let inst = OtInstance::random(8, 8, seed).unwrap();
        let exact = ot_exact(&inst, 1e-12).unwrap();
        let cmax = inst.cost().max_abs();
        for scale in [1e-1, 1e-2] {
            let r = sinkhorn(&inst, scale * cmax, 200_000, 1e-12).unwrap();
            assert!(r.marginal_error <= 1e-12);
            assert!(r.plan.objective >= exact.plan.objective - 1e-12, "seed {seed}");
        }
    }
}

#[test]
fn sinkhorn_error_shrinks_with_lambda() {
    let inst = OtInstance::random(10, 10, 0).unwrap();
    let exact = ot_exact(&inst, 1e-12).unwrap();
    let cmax = inst.cost().max_abs();
    let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|s| {
            let r = sinkhorn(&inst, s * cmax, 1_000_000, 1e-10).unwrap();
            rel_frobenius(r.plan.plan.as_slice(), exact.plan.plan.as_slice())
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn unbalanced_marginals_are_rejected() {
    // the instance constructor enforces unit mass, so go through the LP directly
    let c = cost_matrix(2, 2).unwrap();
    assert!(OtInstance::new(c, vec![0.5, 0.5], vec![0.5, 0.6]).is_err());
}
