//! Numerical base-parameter reduction: which of the 13n standard columns
//! survive, and a check that the minimal regressor reproduces full torques.
//!
//! cargo run --example base_parameters

use dynid::dataio::reference::{ur10_current_friction, ur10_gains, ur10_links};
use dynid::dynamics::{regressor, DynamicParameters};
use dynid::kinematics::ur10_chain;
use dynid::reduction::{
    compute_base_map, minimal_regressor, random_state, DEFAULT_PROBES, DEFAULT_PROBE_SEED, DEFAULT_SVD_TOLERANCE,
};
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chain = ur10_chain();
    let map = compute_base_map(&chain, DEFAULT_PROBES, DEFAULT_PROBE_SEED, DEFAULT_SVD_TOLERANCE)?;
    println!(
        "{} standard columns -> {} coefficients ({} inertial), {} dependent",
        13 * chain.dof(),
        map.n_coeff(),
        map.n_inertial(),
        map.dependent().len()
    );
    for j in 0..chain.dof() {
        println!("joint {}: {} columns", j + 1, map.joint_columns(j).len());
    }

    // Torque-level linear friction for the reference arm.
    let k = ur10_gains();
    let fr: Vec<[f64; 3]> = ur10_current_friction()
        .0
        .iter()
        .zip(k.iter())
        .map(|(f, k)| [f.f_o * k, f.f_v * k, f.f_c * k])
        .collect();
    let pi = DynamicParameters::from_parts(&ur10_links(), &fr)?;
    let pi_m = map.project(&pi)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let s = random_state(&mut rng, chain.dof());
        let full = regressor(&chain, &s)? * pi.as_vector();
        let reduced = minimal_regressor(&map, &chain, &s)? * &pi_m;
        worst = worst.max((reduced - &full).norm() / full.norm());
    }
    println!("max relative torque difference over 200 states: {worst:.2e}");
    Ok(())
}
