//! Random finite-Fourier excitation trajectories scaled into the UR10 joint
//! limits, plus the two built-in validation trajectories.
//!
//! cargo run --example excitation_trajectory -- [seed]

use dynid::dataio::table::trajectory_table;
use dynid::trajectory::{builtin, random_trajectory, ur10_limits, TrajectoryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let limits = ur10_limits();
    let traj = random_trajectory(seed, &limits, &TrajectoryConfig::default())?;
    println!(
        "seed {seed}: {} harmonics, period {} s, {} samples",
        traj.harmonics(),
        traj.period,
        traj.n_samples()
    );
    let [q, qd, qdd] = traj.peaks();
    println!("joint   |q|max/limit  |qd|max/limit  |qdd|max/limit");
    for j in 0..traj.dof() {
        println!(
            "{:>5}   {:>11.3}  {:>12.3}  {:>13.3}",
            j + 1,
            q[j] / limits.q_max[j],
            qd[j] / limits.qd_max[j],
            qdd[j] / limits.qdd_max[j]
        );
    }

    let table = trajectory_table(&traj.times(), &traj.sample());
    println!("csv header: {}", table.header.join(","));

    for name in ["A", "B"] {
        let t = builtin(name, &limits)?;
        println!("built-in {name}: {} samples over {} s", t.n_samples(), t.duration);
    }
    Ok(())
}
