//! Sinkhorn's plan error depends on the entropic weight: large weights blur
//! the plan, small ones converge slowly.

use palm_l2o::learn::relative_error_db;
use palm_l2o::ot::{default_lambda_grid, ot_exact, sinkhorn, OtInstance};

fn main() -> palm_l2o::Result<()> {
    let inst = OtInstance::random(10, 10, 0)?;
    let exact = ot_exact(&inst, 1e-12)?;
    println!("{:>10} {:>8} {:>12} {:>12}", "lambda", "iters", "marg err", "plan dB");
    for lambda in default_lambda_grid(inst.cost()) {
        let r = sinkhorn(&inst, lambda, 5000, 1e-12)?;
        println!(
            "{lambda:>10.4} {:>8} {:>12.2e} {:>12.2}{}",
            r.iterations,
            r.marginal_error,
            relative_error_db(r.plan.plan.as_slice(), exact.plan.plan.as_slice())?,
            if r.log_domain { "  (log domain)" } else { "" }
        );
    }
    Ok(())
}
