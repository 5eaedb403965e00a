//! Stage 2: sigmoid friction fitted to the low-velocity residual of the
//! stage-1 model by multi-start Levenberg-Marquardt.
//!
//! cargo run --example friction_fit

use dynid::dataio::reference::{ur10_gains, ur10_reference};
use dynid::dataio::{simulate, AccelerationMode, NoiseSpec, SimulationConfig};
use dynid::pipeline::{identify_friction, identify_linear, LinearOptions};
use dynid::trajectory::{random_trajectory, ur10_limits, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let robot = ur10_reference();
    let traj = random_trajectory(1, &ur10_limits(), &TrajectoryConfig::default())?;
    let cfg = SimulationConfig {
        noise: NoiseSpec { v: 0.01, qd: 0.0 },
        seed: 21,
        mode: AccelerationMode::Recompute,
    };
    let samples = simulate(&robot, &traj, None, &cfg)?;
    let (linear, _) = identify_linear(&robot, &samples, &LinearOptions::default())?;
    let (model, reports) = identify_friction(&linear, &samples)?;

    let fitted = &model.friction.as_ref().expect("stage 2 sets friction").set;
    // The simulator's friction brought to current level.
    let truth = robot.friction.as_ref().expect("reference friction").set.divided_by(&ur10_gains())?;
    println!("joint  rows  starts  best  objective    [f_o, f_v, f_c, delta, nu] fitted / true");
    for (j, r) in reports.iter().enumerate() {
        let fmt = |p: [f64; 5]| p.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
        println!(
            "{:>5}  {:>4}  {:>6}  {:>4}  {:>9.3e}    [{}]",
            j + 1,
            r.samples,
            r.runs.len(),
            r.chosen.map_or("-".into(), |c| c.to_string()),
            r.objective,
            fmt(fitted.0[j].to_array())
        );
        println!("{:>42}[{}]", "", fmt(truth.0[j].to_array()));
    }
    Ok(())
}
