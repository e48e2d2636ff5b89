//! Track a marginally stable plant under a constant three-sensor attack with
//! the sparse soft observer and the block-hard baseline.
use lasso_sse::{generate_random_instance, run_observer, InstanceConfig, ObserverConfig, ObserverVariant};

fn main() -> lasso_sse::Result<()> {
    let cfg = InstanceConfig { horizon: Some(300), ..Default::default() };
    let inst = generate_random_instance(10, 15, 3, 10, &cfg, 5)?;
    let model = inst.stacked_model()?;
    let traj = inst.trajectory()?;
    let first = traj.stacked_measurements(0, model.tau());

    for variant in [ObserverVariant::Soft, ObserverVariant::BlockHard { s_assumed: 3 }] {
        let oc = ObserverConfig::calibrated(&model, &first, variant)?;
        let records = run_observer(&model, &traj, &oc)?;
        println!("{variant:?} (lambda {:.2e}, {} inner steps)", oc.lambda, oc.inner_steps);
        for r in records.iter().filter(|r| (r.k + 1) % 50 == 0) {
            println!("  k {:>3}  state error {:.3e}  support error {}", r.k, r.state_error, r.support_error);
        }
    }
    Ok(())
}
