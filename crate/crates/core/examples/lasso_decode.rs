//! Decode a random attacked instance with the partial Lasso, then refine the
//! state by least squares on the rows flagged as safe.
use lasso_sse::{default_lambda, generate_random_instance, refine_state, solve_lasso, InstanceConfig, SolverConfig};

fn main() -> lasso_sse::Result<()> {
    let inst = generate_random_instance(20, 30, 4, 20, &InstanceConfig::default(), 7)?;
    let (model, y, _) = inst.first_window()?;

    let lambda = default_lambda(&model, &y, 1e-4)?;
    let est = solve_lasso(&model, &y, &SolverConfig::new(lambda))?;
    let x = refine_state(&model, &y, &est.support_hat)?;

    println!("true attacked sensors:      {:?}", inst.scenario.support);
    println!("estimated attacked sensors: {:?}", est.attacked_sensors(&model));
    println!("iterations {}  converged {}  objective {:.6e}", est.iterations, est.converged, est.objective);
    println!("relative state error, lasso:   {:.3e}", (&est.x_hat - &inst.x0).norm() / inst.x0.norm());
    println!("relative state error, refined: {:.3e}", (&x - &inst.x0).norm() / inst.x0.norm());
    Ok(())
}
