//! Held-out validation: per-joint MSE, MNAE, MNAE inside the friction
//! nonlinearity and the improvement of the full model over stage 1 alone.
//!
//! cargo run --example validation_report

use dynid::dataio::reference::ur10_reference;
use dynid::dataio::{simulate, AccelerationMode, NoiseSpec, SimulationConfig};
use dynid::estimation::EstimationReport;
use dynid::metrics::{mnae, rss_error};
use dynid::pipeline::{identify_friction, identify_linear, predict_sample_currents, LinearOptions};
use dynid::trajectory::{builtin, random_trajectory, ur10_limits, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Metric units: MNAE is a percentage of the channel range.
    let x = [-1.0, 0.0, 1.0, 0.5];
    let y = x.map(|v| v + 0.1);
    println!("mnae of a constant 0.1 offset on a range-2 channel: {} %", mnae(&x, &y)?);
    println!("rss distance of two gain vectors: {:.4}", rss_error(&[13.0, 12.0], &[13.5, 12.5])?);

    let robot = ur10_reference();
    let limits = ur10_limits();
    let cfg = SimulationConfig {
        noise: NoiseSpec { v: 0.01, qd: 0.0 },
        seed: 5,
        mode: AccelerationMode::Recompute,
    };
    let train = simulate(&robot, &random_trajectory(1, &limits, &TrajectoryConfig::default())?, None, &cfg)?;
    let held_out = simulate(&robot, &builtin("A", &limits)?, None, &SimulationConfig::noiseless())?;

    let (linear, _) = identify_linear(&robot, &train, &LinearOptions::default())?;
    let (full, _) = identify_friction(&linear, &train)?;
    let baseline = predict_sample_currents(&linear, None, &held_out)?;
    let ours = predict_sample_currents(&full, None, &held_out)?;
    let report = EstimationReport::compare(&held_out, &ours, Some(&baseline))?;

    print!("{}", report.to_table().to_csv());
    println!("average mnae {:.3} %, max {:.3} %", report.average_mnae(), report.max_mnae());
    Ok(())
}
