//! Build a plant, stack a window and check (sparse) observability.
use lasso_sse::{build_stacked_model, is_observable, is_sparse_observable, LtiSystem};
use nalgebra::dmatrix;

fn main() -> lasso_sse::Result<()> {
    // Rotation plant with three position sensors.
    let a = dmatrix![0.0, -1.0; 1.0, 0.0];
    let c = dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0];
    let sys = LtiSystem::new(a, c)?;
    let model = build_stacked_model(&sys, 2)?;

    println!("O ({} x {}) =\n{}", model.rows(), model.n(), model.omega());
    println!("observable: {}", is_observable(&model));
    println!("rows of sensor 2: {:?}", model.sensor_rows(&[2]));
    for q in 0..3 {
        println!("observable after removing any {q} sensor(s): {}", is_sparse_observable(&sys, 2, q)?);
    }
    Ok(())
}
