//! Transport between two random histograms: exact simplex plan against the
//! proximal ALM iterate.

use palm_l2o::learn::relative_error_db;
use palm_l2o::mpalm::PenaltySchedule;
use palm_l2o::ot::{ot_exact, ot_kkt, ot_mpalm_final, OtDualState, OtInstance};

fn main() -> palm_l2o::Result<()> {
    let inst = OtInstance::random(10, 10, 3)?;
    let exact = ot_exact(&inst, 1e-12)?;
    println!(
        "exact cost {:.6}, certificate {:.1e}, {} pivots",
        exact.plan.objective,
        exact.certificate(&inst),
        exact.pivots
    );

    for iters in [100, 1000, 5000] {
        let schedule = PenaltySchedule::constant(0.01, iters, 1.618)?;
        let state = ot_mpalm_final(&inst, &schedule, OtDualState::zeros(&inst))?;
        let kkt = ot_kkt(&inst, &state);
        println!(
            "K = {iters:>4}: cost {:.6}, plan error {:7.2} dB, marginal error {:.1e}, kkt {:.1e}",
            inst.objective(&state.x),
            relative_error_db(state.x.as_slice(), exact.plan.plan.as_slice())?,
            inst.marginal_error(&state.x),
            kkt.max_resid
        );
    }
    Ok(())
}
