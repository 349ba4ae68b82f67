//! Sparse recovery through the Lasso dual: proximal ALM against ISTA and the
//! coordinate-descent oracle.

use palm_l2o::lasso::{gen_dictionary, ista_run, lasso_mpalm_run, lasso_oracle, LassoDualState, LassoProblem};
use palm_l2o::learn::relative_error_db;
use palm_l2o::mpalm::PenaltySchedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> palm_l2o::Result<()> {
    let (m, n) = (10, 20);
    let problem = LassoProblem::new(gen_dictionary(m, n, 1)?, 0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let signal: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();

    let oracle = lasso_oracle(&problem, &signal, 1e-12)?;
    let support = oracle.w.iter().filter(|v| **v != 0.0).count();
    println!("oracle gap {:.2e}, {support} of {n} coefficients nonzero", oracle.gap);

    let iters = 64;
    let ista = ista_run(&problem, &signal, iters, None)?;
    for sigma in [0.1, 1.0, 10.0] {
        let schedule = PenaltySchedule::constant(sigma, iters, 1.618)?;
        let traj = lasso_mpalm_run(&problem, &signal, &schedule, LassoDualState::zeros(&problem))?;
        println!(
            "sigma {sigma:>4}: error after {iters} iterations {:7.2} dB",
            relative_error_db(traj.final_x(), &oracle.w)?
        );
    }
    println!("ista:       error after {iters} iterations {:7.2} dB", relative_error_db(&ista[iters], &oracle.w)?);
    Ok(())
}
