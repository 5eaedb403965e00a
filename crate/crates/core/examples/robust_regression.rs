//! Bisquare IRLS on a line fit with injected outliers, then the same
//! machinery inside stage 1 on a noisy UR10 recording.
//!
//! cargo run --example robust_regression

use dynid::dataio::reference::ur10_reference;
use dynid::dataio::{simulate, AccelerationMode, NoiseSpec, SimulationConfig};
use dynid::estimation::{llse, robust_fit};
use dynid::pipeline::{identify_linear, LinearOptions};
use dynid::trajectory::{random_trajectory, ur10_limits, TrajectoryConfig};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // y = 1 + 2x with a little ripple and every 10th point pushed up by 5.
    let m = 100;
    let stack = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / m as f64 });
    let rhs = DVector::from_fn(m, |i, _| {
        let x = i as f64 / m as f64;
        1.0 + 2.0 * x + 0.01 * (7.0 * i as f64).sin() + if i % 10 == 0 { 5.0 } else { 0.0 }
    });
    let plain = llse(&stack, &rhs)?;
    let fit = robust_fit(&stack, &rhs)?;
    let w = fit.weights.diagonal();
    println!("ordinary LS: intercept {:.4}, slope {:.4}", plain[0], plain[1]);
    println!(
        "bisquare IRLS: intercept {:.4}, slope {:.4} after {} passes; outlier weight {:.3}, inlier mean {:.3}",
        fit.solution.x[0],
        fit.solution.x[1],
        fit.iterations,
        w.iter().step_by(10).fold(0.0_f64, |a, &b| a.max(b)),
        w.iter().enumerate().filter(|(i, _)| i % 10 != 0).map(|(_, v)| v).sum::<f64>() / 90.0
    );

    // Stage 1: per-joint robust weights, then weighted LS for chi.
    let robot = ur10_reference();
    let traj = random_trajectory(1, &ur10_limits(), &TrajectoryConfig::default())?;
    let cfg = SimulationConfig {
        noise: NoiseSpec { v: 0.05, qd: 0.0 },
        seed: 11,
        mode: AccelerationMode::Recompute,
    };
    let samples = simulate(&robot, &traj, None, &cfg)?;
    let (model, reports) = identify_linear(&robot, &samples, &LinearOptions::default())?;
    println!("stage 1 on {} samples -> model stage {}", samples.len(), model.stage().name());
    println!("joint  rows  condition  irls  residual rms A");
    for (j, r) in reports.iter().enumerate() {
        println!(
            "{:>5}  {:>4}  {:>9.1}  {:>4}  {:>14.4}",
            j + 1,
            r.samples,
            r.condition,
            r.irls_iterations,
            r.residual_rms
        );
    }
    Ok(())
}
