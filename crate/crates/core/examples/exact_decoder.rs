//! Exhaustive minimal-support decoding on a small instance, compared with the Lasso.
use lasso_sse::oracle::default_tolerance;
use lasso_sse::{default_lambda, exact_decode, generate_random_instance, predict_lasso_success, refine_state, solve_lasso};
use lasso_sse::{InstanceConfig, SolverConfig};

fn main() -> lasso_sse::Result<()> {
    let inst = generate_random_instance(4, 8, 2, 3, &InstanceConfig::default(), 11)?;
    let (model, y, _) = inst.first_window()?;

    let res = exact_decode(&model, &y, 3, default_tolerance(&model, &y, 0.0))?;
    println!("oracle: sensors {:?}  unique {}  residual {:.2e}", res.support, res.unique, res.residual);
    println!("oracle state error {:.2e}", (&res.x_exact - &inst.x0).norm() / inst.x0.norm());

    let est = solve_lasso(&model, &y, &SolverConfig::new(default_lambda(&model, &y, 1e-4)?))?;
    let x = refine_state(&model, &y, &est.support_hat)?;
    println!(
        "lasso:  sensors {:?}  certificate predicts success: {}",
        est.attacked_sensors(&model),
        predict_lasso_success(&model, &inst.scenario)?
    );
    println!("lasso state error vs oracle {:.2e}", (&x - &res.x_exact).norm() / res.x_exact.norm());
    Ok(())
}
