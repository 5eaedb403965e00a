//! Synthetic recordings from the reference model: noiseless, with current
//! noise, and with a payload mounted (scenario b).
//!
//! cargo run --example simulate_recording

use dynid::dataio::reference::{eccentric_payload, ur10_reference};
use dynid::dataio::samples::write_samples_to;
use dynid::dataio::{simulate, AccelerationMode, NoiseSpec, SimulationConfig};
use dynid::trajectory::{random_trajectory, ur10_limits, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let robot = ur10_reference();
    let traj = random_trajectory(1, &ur10_limits(), &TrajectoryConfig::default())?;

    let clean = simulate(&robot, &traj, None, &SimulationConfig::noiseless())?;
    let noisy_cfg = SimulationConfig {
        noise: NoiseSpec { v: 0.05, qd: 0.0 },
        seed: 7,
        mode: AccelerationMode::Recompute,
    };
    let noisy = simulate(&robot, &traj, None, &noisy_cfg)?;
    let loaded = simulate(&robot, &traj, Some(&eccentric_payload()), &noisy_cfg)?;

    println!("{} samples, scenario {} / {}", clean.len(), noisy.scenario.tag(), loaded.scenario.tag());
    println!("joint  range(v) A  rms noise A  rms payload effect A");
    for j in 0..robot.dof() {
        let c = clean.current_channel(j);
        let rms = |other: &[f64]| (c.iter().zip(other).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / c.len() as f64).sqrt();
        println!(
            "{:>5}  {:>10.3}  {:>11.4}  {:>19.3}",
            j + 1,
            dynid::metrics::range(&c).unwrap_or(0.0),
            rms(&noisy.current_channel(j)),
            rms(&loaded.current_channel(j))
        );
    }

    let mut head = Vec::new();
    write_samples_to(&mut head, &noisy.select(&[0, 1]))?;
    print!("{}", String::from_utf8(head)?);
    Ok(())
}
