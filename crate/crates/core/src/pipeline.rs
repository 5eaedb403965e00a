//! The three identification stages run on robot-model files. Each stage
//! reads its predecessor's outputs from the model and refuses to run
//! without them.

use nalgebra::DVector;

use crate::dataio::{
    simulate::true_torques, FrictionLaw, FrictionLevel, FrictionModel, Identification, RobotModel, SampleSet,
    Scenario, Stage,
};
use crate::error::{Error, Result};
use crate::estimation::friction::friction_residual_currents;
use crate::estimation::linear::identify_coefficients;
use crate::estimation::{
    estimate_gains, fit_friction, predict_currents, predict_currents_full, FrictionJointReport, GainBounds,
    GainEstimate, KnownPayload, LinearJointReport, PathChoice,
};
use crate::payload::PayloadSpec;
use crate::dataio::samples::DEFAULT_QD_THRESHOLD;
use crate::reduction::{compute_base_map, DEFAULT_PROBES, DEFAULT_PROBE_SEED, DEFAULT_SVD_TOLERANCE};
use crate::solver::IdentifiedModel;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOptions {
    pub n_probe: usize,
    pub probe_seed: u64,
    pub svd_tolerance: f64,
    /// `q̇⁺`, stored in the model for the later stages.
    pub qd_threshold: f64,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            n_probe: DEFAULT_PROBES,
            probe_seed: DEFAULT_PROBE_SEED,
            svd_tolerance: DEFAULT_SVD_TOLERANCE,
            qd_threshold: DEFAULT_QD_THRESHOLD,
        }
    }
}

fn with_threshold(samples: &SampleSet, threshold: f64) -> SampleSet {
    SampleSet {
        qd_threshold: threshold,
        ..samples.clone()
    }
}

fn require_scenario(samples: &SampleSet, scenario: Scenario, what: &str) -> Result<()> {
    if samples.scenario == scenario {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} needs scenario-{} samples, got scenario {}",
            scenario.tag(),
            samples.scenario.tag()
        )))
    }
}

/// Stage 1. Only the kinematics of `robot` are used; the result is a new
/// model holding the base-parameter map and `χ̂`.
pub fn identify_linear(
    robot: &RobotModel,
    samples: &SampleSet,
    opts: &LinearOptions,
) -> Result<(RobotModel, Vec<LinearJointReport>)> {
    require_scenario(samples, Scenario::A, "stage 1")?;
    let map = compute_base_map(&robot.chain, opts.n_probe, opts.probe_seed, opts.svd_tolerance)?;
    let samples = with_threshold(samples, opts.qd_threshold);
    let (chi, reports) = identify_coefficients(&map, &robot.chain, &samples)?;
    let mut out = RobotModel::new(&robot.metadata.name, robot.chain.clone());
    out.metadata.provenance = "identified".into();
    out.limits = robot.limits.clone();
    out.identification = Some(Identification {
        map,
        chi,
        qd_threshold: opts.qd_threshold,
    });
    Ok((out, reports))
}

/// Stage 2. Replaces any friction in the model by the fitted current-level
/// sigmoid set and drops gains estimated against an older fit.
pub fn identify_friction(
    model: &RobotModel,
    samples: &SampleSet,
) -> Result<(RobotModel, Vec<FrictionJointReport>)> {
    model.stage().require(Stage::Linear, "friction")?;
    let id = model.identification.as_ref().ok_or(Error::IncompleteModel("identification"))?;
    let residuals = friction_residual_currents(&id.map, &model.chain, &id.chi, samples)?;
    let (set, reports) = fit_friction(&residuals, &samples.qd, id.qd_threshold)?;
    let mut out = model.clone();
    out.friction = Some(FrictionModel {
        level: FrictionLevel::Current,
        law: FrictionLaw::Sigmoid,
        set,
    });
    out.gains = None;
    Ok((out, reports))
}

/// Stage 3.
pub fn identify_gains(
    model: &RobotModel,
    samples_a: &SampleSet,
    samples_b: &SampleSet,
    payload: &KnownPayload,
    bounds: &GainBounds,
    choice: PathChoice,
) -> Result<(RobotModel, GainEstimate)> {
    model.stage().require(Stage::Friction, "gains")?;
    require_scenario(samples_a, Scenario::A, "--samples-a")?;
    require_scenario(samples_b, Scenario::B, "--samples-b")?;
    let id = model.identification.as_ref().ok_or(Error::IncompleteModel("identification"))?;
    let psi = &model.friction.as_ref().ok_or(Error::IncompleteModel("friction"))?.set;
    let a = with_threshold(samples_a, id.qd_threshold);
    let b = with_threshold(samples_b, id.qd_threshold);
    let estimate = estimate_gains(&id.map, &model.chain, psi, &a, &b, payload, bounds, choice)?;
    let mut out = model.clone();
    out.gains = Some(estimate.k.clone());
    Ok((out, estimate))
}

/// Currents predicted by `model` at every sample, using whatever the model
/// holds: ground-truth parts for a reference model, otherwise the latest
/// identified stage. A payload needs ground truth or identified gains.
pub fn predict_sample_currents(
    model: &RobotModel,
    payload: Option<&PayloadSpec>,
    samples: &SampleSet,
) -> Result<Vec<DVector<f64>>> {
    let states: Vec<_> = (0..samples.len()).map(|k| samples.state(k)).collect();
    let stage = model.stage();
    if stage == Stage::None {
        if model.links.is_none() {
            stage.require(Stage::Linear, "prediction")?;
        }
        let (_, _, gains) = model.simulation_parts()?;
        return Ok(true_torques(model, &states, payload)?
            .into_iter()
            .map(|tau| tau.component_div(gains))
            .collect());
    }
    if payload.is_some() {
        stage.require(Stage::Gains, "payload prediction")?;
    }
    let id = model.identification.as_ref().ok_or(Error::IncompleteModel("identification"))?;
    match stage {
        Stage::Gains => {
            let mut solver = IdentifiedModel::from_robot_model(model)?;
            if let Some(p) = payload {
                solver = solver.configure_payload(p)?;
            }
            states.iter().map(|s| solver.currents(s)).collect()
        }
        Stage::Friction => {
            let psi = &model.friction.as_ref().ok_or(Error::IncompleteModel("friction"))?.set;
            states
                .iter()
                .map(|s| predict_currents_full(&id.map, &model.chain, &id.chi, psi, s))
                .collect()
        }
        _ => states
            .iter()
            .map(|s| predict_currents(&id.map, &model.chain, &id.chi, s))
            .collect(),
    }
}
