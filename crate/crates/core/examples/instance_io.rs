//! Instances round-trip through JSON and regenerate bit for bit from their seed.
use lasso_sse::{generate_random_instance, Instance, InstanceConfig};

fn main() -> lasso_sse::Result<()> {
    let cfg = InstanceConfig { horizon: Some(20), noise_bound: 1e-4, ..Default::default() };
    let inst = generate_random_instance(5, 8, 2, 3, &cfg, 42)?;

    let path = std::env::temp_dir().join("lasso-sse-example.json");
    inst.write(&path)?;
    let back = Instance::read(&path)?;
    assert_eq!(back, inst);
    assert_eq!(generate_random_instance(5, 8, 2, 3, &cfg, 42)?, inst);

    let traj = back.trajectory()?;
    println!("wrote {}", path.display());
    println!(
        "attacked sensors {:?}, {} steps, first output {:?}",
        back.scenario.support,
        traj.horizon(),
        traj.measurements[0].as_slice()
    );
    Ok(())
}
