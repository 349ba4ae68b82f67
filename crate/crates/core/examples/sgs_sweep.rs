//! Generic three-block instance with an l1 term: run the SGS proximal ALM
//! and watch the KKT residual fall.

use palm_l2o::mpalm::{check_assumptions, mpalm_run, random_instance, GSpec, PenaltySchedule, RandomSpec};

fn main() -> palm_l2o::Result<()> {
    let spec = RandomSpec {
        blocks: 3,
        max_block_dim: 5,
        g: GSpec::L1 { weight: 0.2 },
        strongly_convex: true,
    };
    let sigma = 1.0;
    let (inst, stilde) = random_instance(2, spec, sigma)?;
    let report = check_assumptions(&inst, sigma, &stilde)?;
    println!("blocks {:?}, dim x {}", inst.block_dims(), inst.dim_x());
    println!("min block eigenvalues {:?}", report.block_min_eigs);

    let schedule = PenaltySchedule::constant(sigma, 400, 1.618)?;
    let x0 = vec![0.0; inst.dim_x()];
    let y0 = vec![0.0; inst.dim_y()];
    let traj = mpalm_run(&inst, &schedule, &stilde, &x0, &y0)?;
    for k in [1, 10, 50, 100, 200, 400] {
        let r = traj.kkt_history[k - 1];
        println!("k = {k:>3}  primal {:.3e}  dual {:.3e}", r.primal_infeas, r.dual_infeas);
    }
    Ok(())
}
