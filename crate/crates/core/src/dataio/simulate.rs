//! Synthetic recordings from a complete robot model: rigid-body torque plus
//! friction, converted to motor currents, with seeded measurement noise.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::model_file::RobotModel;
use super::samples::{check_timestamps, differentiate, SampleSet, Scenario, Source, DEFAULT_QD_THRESHOLD};
use crate::dynamics::{rnea, JointState};
use crate::error::{check_len, Error, Result};
use crate::payload::{links_with_payload, payload_to_frame_n, PayloadSpec};
use crate::trajectory::FourierTrajectory;

/// Acceleration the rigid-body model is driven with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccelerationMode {
    /// Backward-Euler derivative of the true `q̇`, the same estimate the
    /// identification pipeline forms, so noiseless data is exactly
    /// consistent with it.
    #[default]
    Recompute,
    /// The analytic trajectory acceleration, stored as is.
    Exact,
}

/// Standard deviations of the additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    /// Current noise, A.
    pub v: f64,
    /// Velocity noise, rad/s.
    pub qd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub noise: NoiseSpec,
    pub seed: u64,
    pub mode: AccelerationMode,
}

impl SimulationConfig {
    pub fn noiseless() -> Self {
        Self {
            noise: NoiseSpec::default(),
            seed: 0,
            mode: AccelerationMode::Recompute,
        }
    }
}

/// `τ = RNEA(links ⊕ payload) + friction` at each state.
pub fn true_torques(
    model: &RobotModel,
    states: &[JointState],
    payload: Option<&PayloadSpec>,
) -> Result<Vec<DVector<f64>>> {
    let (links, friction, gains) = model.simulation_parts()?;
    let links = match payload {
        Some(p) => links_with_payload(links, &payload_to_frame_n(p)?),
        None => links.to_vec(),
    };
    states
        .iter()
        .map(|s| Ok(rnea(&model.chain, &links, s)? + friction.torque(&s.qd, Some(gains))?))
        .collect()
}

/// Records a trajectory given as sampled states. With a payload the set is
/// tagged scenario b.
pub fn simulate_states(
    model: &RobotModel,
    t: &[f64],
    states: &[JointState],
    payload: Option<&PayloadSpec>,
    cfg: &SimulationConfig,
) -> Result<SampleSet> {
    check_len("trajectory samples", t.len(), states.len())?;
    let n = model.dof();
    if let Some(s) = states.iter().find(|s| s.dof() != n) {
        return Err(Error::DimensionMismatch {
            context: "trajectory width",
            expected: n,
            got: s.dof(),
        });
    }
    let period = check_timestamps(t)?;
    let (_, _, gains) = model.simulation_parts()?;
    for (name, sigma) in [("current", cfg.noise.v), ("velocity", cfg.noise.qd)] {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} noise σ = {sigma}")));
        }
    }

    let qd_true: Vec<DVector<f64>> = states.iter().map(|s| s.qd.clone()).collect();
    let driven: Vec<JointState> = match cfg.mode {
        AccelerationMode::Exact => states.to_vec(),
        AccelerationMode::Recompute => {
            let qdd = differentiate(&qd_true, period)?;
            states
                .iter()
                .zip(qdd)
                .map(|(s, a)| JointState {
                    q: s.q.clone(),
                    qd: s.qd.clone(),
                    qdd: a,
                })
                .collect()
        }
    };
    let tau = true_torques(model, &driven, payload)?;

    // Normal::new(0, 0) is valid and draws exact zeros
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nv = Normal::new(0.0, cfg.noise.v).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let nq = Normal::new(0.0, cfg.noise.qd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut qd = Vec::with_capacity(states.len());
    let mut v = Vec::with_capacity(states.len());
    for (s, tk) in states.iter().zip(&tau) {
        let mut qdk = s.qd.clone();
        let mut vk = tk.component_div(gains);
        for j in 0..n {
            qdk[j] += nq.sample(&mut rng);
            vk[j] += nv.sample(&mut rng);
        }
        qd.push(qdk);
        v.push(vk);
    }
    let qdd = match cfg.mode {
        AccelerationMode::Recompute => differentiate(&qd, period)?,
        AccelerationMode::Exact => states.iter().map(|s| s.qdd.clone()).collect(),
    };
    let set = SampleSet {
        t: t.to_vec(),
        q: states.iter().map(|s| s.q.clone()).collect(),
        qd,
        qdd,
        v,
        scenario: if payload.is_some() { Scenario::B } else { Scenario::A },
        source: Source::Simulated,
        qd_threshold: DEFAULT_QD_THRESHOLD,
    };
    set.check_shapes()?;
    Ok(set)
}

/// Samples `traj` and records it.
pub fn simulate(
    model: &RobotModel,
    traj: &FourierTrajectory,
    payload: Option<&PayloadSpec>,
    cfg: &SimulationConfig,
) -> Result<SampleSet> {
    simulate_states(model, &traj.times(), &traj.sample(), payload, cfg)
}
