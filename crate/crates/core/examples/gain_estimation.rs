//! Stage 3: drive gains from a payload-free and a payload recording, with
//! four payload parameters left unknown. Wrist joints go through the
//! regrouped, bounded path.
//!
//! cargo run --example gain_estimation

use dynid::dataio::reference::{eccentric_payload, ur10_reference, UR10_GAINS};
use dynid::dataio::{simulate, SimulationConfig};
use dynid::estimation::{GainBounds, GainPath, KnownPayload, PathChoice};
use dynid::payload::{payload_to_frame_n, KnownParameters};
use dynid::pipeline::{identify_friction, identify_gains, identify_linear, LinearOptions};
use dynid::trajectory::{random_trajectory, ur10_limits, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let robot = ur10_reference();
    let limits = ur10_limits();
    let cfg = TrajectoryConfig::default();
    let payload = eccentric_payload();
    let a = simulate(&robot, &random_trajectory(1, &limits, &cfg)?, None, &SimulationConfig::noiseless())?;
    let b = simulate(&robot, &random_trajectory(2, &limits, &cfg)?, Some(&payload), &SimulationConfig::noiseless())?;

    let (m1, _) = identify_linear(&robot, &a, &LinearOptions::default())?;
    let (m2, _) = identify_friction(&m1, &a)?;
    let known = KnownPayload {
        values: payload_to_frame_n(&payload)?,
        known: KnownParameters::all_except(&["m", "mz", "ixx", "iyy"])?,
    };
    let (model, est) = identify_gains(&m2, &a, &b, &known, &GainBounds::default(), PathChoice::Auto)?;

    println!("model stage {}; unknown payload columns {:?}", model.stage().name(), est.unknown_payload);
    println!("joint  path       rank  bounds            K fitted   K true    error %");
    for (j, g) in est.joints.iter().enumerate() {
        let path = match g.solve.path {
            GainPath::Direct => "direct",
            GainPath::Regrouped { .. } => "regrouped",
        };
        println!(
            "{:>5}  {:<9}  {:>4}  [{:>5.1}, {:>6.2}]  {:>8.4}  {:>8.4}  {:>8.4}",
            j + 1,
            path,
            g.solve.rank,
            g.bounds.0,
            g.bounds.1,
            est.k[j],
            UR10_GAINS[j],
            100.0 * (est.k[j] - UR10_GAINS[j]) / UR10_GAINS[j]
        );
    }
    Ok(())
}
