//! The identified inverse-dynamics solver: torque split into inertia,
//! Coriolis, friction and gravity terms, reconfigured for a new payload
//! without re-identification.
//!
//! cargo run --example payload_solver

use dynid::dataio::reference::{eccentric_payload, ur10_reference};
use dynid::dataio::{simulate, true_torques, SimulationConfig};
use dynid::estimation::{GainBounds, KnownPayload, PathChoice};
use dynid::payload::{payload_to_frame_n, KnownParameters, PayloadSpec};
use dynid::pipeline::{identify_friction, identify_gains, identify_linear, LinearOptions};
use dynid::solver::IdentifiedModel;
use dynid::trajectory::{builtin, random_trajectory, ur10_limits, TrajectoryConfig};

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
    let (model, _) = identify_gains(&m2, &a, &b, &known, &GainBounds::default(), PathChoice::Auto)?;

    let arm = IdentifiedModel::from_robot_model(&model)?;
    let hand = arm.configure_payload(&PayloadSpec::franka_hand())?;

    let states = builtin("B", &limits)?.sample();
    let s = &states[400];
    let terms = hand.terms(s)?;
    println!("state 400 with a gripper mounted, N m:");
    println!("joint  M(q)qdd   C(q,qd)qd  friction  gravity    total");
    let total = hand.torque(s)?;
    for j in 0..hand.dof() {
        println!(
            "{:>5}  {:>8.3}  {:>9.3}  {:>8.3}  {:>8.3}  {:>8.3}",
            j + 1,
            terms.inertia_qdd[j],
            terms.coriolis_qd[j],
            terms.friction[j],
            terms.gravity[j],
            total[j]
        );
    }
    let m = hand.inertia(&s.q)?;
    println!("inertia matrix symmetric to {:.1e}", (&m - m.transpose()).amax());

    // Same arm, three payloads, scored against the simulator's own torques.
    for (name, spec) in [("none", PayloadSpec::zero()), ("gripper", PayloadSpec::franka_hand()), ("eccentric", payload)] {
        let solver = arm.configure_payload(&spec)?;
        let truth = true_torques(&robot, &states, Some(&spec))?;
        let mut worst: f64 = 0.0;
        for (s, t) in states.iter().zip(&truth) {
            worst = worst.max((solver.torque(s)? - t).amax());
        }
        println!("payload {name:<9}: max |tau_solver - tau_true| = {worst:.2e} N m");
    }
    Ok(())
}
