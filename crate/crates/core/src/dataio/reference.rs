//! A synthetic UR10 with plausible inertials, published gain and friction
//! magnitudes, and the payloads used throughout the tests and examples.

use nalgebra::{DVector, Matrix3, Vector3};

use super::model_file::{FrictionLaw, FrictionLevel, FrictionModel, RobotModel};
use crate::dynamics::{FrictionSet, InertialParameters, JointFriction};
use crate::kinematics::ur10_chain;
use crate::payload::{rot_z, PayloadSpec};
use crate::trajectory::ur10_limits;

/// Ground-truth motor drive gains, N·m/A.
pub const UR10_GAINS: [f64; 6] = [13.9557, 13.8669, 11.5049, 11.5438, 11.6143, 11.4149];

/// Current-level sigmoid friction rows `(f_v, f_o, f_c, δ, ν)` per joint.
pub const UR10_CURRENT_FRICTION: [[f64; 5]; 6] = [
    [1.0640, -1.0066, 2.0506, 7.9467, -0.0185],
    [0.9944, 0.9563, -2.4017, -59.9536, -0.0019],
    [0.6796, -0.8120, 1.6478, 19.8251, -0.0053],
    [0.3159, -0.1767, 0.4688, 134.8982, -0.0186],
    [0.2244, -0.1924, 0.4760, 331.4421, -0.0118],
    [0.2358, -0.2453, 0.5980, 459.1933, -0.0130],
];

const MASSES: [f64; 6] = [7.1, 12.7, 4.27, 2.0, 2.0, 0.365];
const COMS: [[f64; 3]; 6] = [
    [0.021, 0.0, 0.027],
    [0.38, 0.0, 0.158],
    [0.24, 0.0, 0.068],
    [0.0, 0.007, 0.018],
    [0.0, 0.007, 0.018],
    [0.0, 0.0, -0.026],
];
/// Solid cylinders `(radius, length, axis)` standing in for the link shells.
const SHAPES: [(f64, f64, usize); 6] = [
    (0.075, 0.18, 2),
    (0.060, 0.612, 0),
    (0.045, 0.5723, 0),
    (0.045, 0.12, 2),
    (0.045, 0.12, 2),
    (0.045, 0.05, 2),
];

fn cylinder(mass: f64, radius: f64, length: f64, axis: usize) -> Matrix3<f64> {
    let perp = mass * (3.0 * radius * radius + length * length) / 12.0;
    let mut d = Vector3::from_element(perp);
    d[axis] = 0.5 * mass * radius * radius;
    Matrix3::from_diagonal(&d)
}

pub fn ur10_links() -> Vec<InertialParameters> {
    (0..6)
        .map(|i| {
            let (r, l, axis) = SHAPES[i];
            InertialParameters::from_com(MASSES[i], Vector3::from(COMS[i]), cylinder(MASSES[i], r, l, axis))
        })
        .collect()
}

pub fn ur10_current_friction() -> FrictionSet {
    FrictionSet(
        UR10_CURRENT_FRICTION
            .iter()
            .map(|r| JointFriction {
                f_v: r[0],
                f_o: r[1],
                f_c: r[2],
                delta: r[3],
                nu: r[4],
            })
            .collect(),
    )
}

pub fn ur10_gains() -> DVector<f64> {
    DVector::from_row_slice(&UR10_GAINS)
}

/// Smallest sigmoid steepness in the simulation model, s/rad. Identification
/// treats friction as affine above the linearity threshold, which only holds
/// once `σ(δ(ν + q̇⁺))` has saturated; at 100 s/rad and `q̇⁺ = 0.17` the
/// remainder is below 1e-6.
pub const SATURATING_STEEPNESS: f64 = 100.0;

/// Complete simulation model with torque-level sigmoid friction: the rows
/// of [`UR10_CURRENT_FRICTION`] scaled by the gains, with `|δ|` raised to
/// [`SATURATING_STEEPNESS`] where the published value is shallower
/// (joints 1 to 3).
pub fn ur10_reference() -> RobotModel {
    let gains = ur10_gains();
    let mut current = ur10_current_friction();
    for p in current.0.iter_mut() {
        if p.delta.abs() < SATURATING_STEEPNESS {
            p.delta = SATURATING_STEEPNESS.copysign(p.delta);
        }
    }
    let mut m = RobotModel::new("ur10-reference", ur10_chain());
    m.metadata.provenance = "synthetic ground truth".into();
    m.links = Some(ur10_links());
    m.friction = Some(FrictionModel {
        level: FrictionLevel::Torque,
        law: FrictionLaw::Sigmoid,
        set: current.scaled_by(&gains).expect("six joints"),
    });
    m.gains = Some(gains);
    m.limits = Some(ur10_limits());
    m
}

/// [`ur10_reference`] with its friction evaluated by another law.
pub fn ur10_reference_with_law(law: FrictionLaw) -> RobotModel {
    let mut m = ur10_reference();
    if let Some(f) = m.friction.as_mut() {
        f.law = law;
    }
    m
}

/// An off-axis tool of 4.823 kg: every payload parameter is non-zero.
pub fn eccentric_payload() -> PayloadSpec {
    let i = Matrix3::new(0.0121, 0.0007, -0.0004, 0.0007, 0.0153, 0.0011, -0.0004, 0.0011, 0.0094);
    PayloadSpec {
        mass: 4.823,
        com_l: Vector3::new(0.12, -0.09, 0.06),
        inertia_l: i,
        rotation: rot_z(std::f64::consts::FRAC_PI_6),
        translation: Vector3::new(0.0, 0.0, 0.015),
    }
}

/// A rotationally symmetric cylinder centred on the flange axis.
pub fn concentric_payload() -> PayloadSpec {
    PayloadSpec {
        mass: 2.5,
        com_l: Vector3::new(0.0, 0.0, 0.05),
        inertia_l: cylinder(2.5, 0.04, 0.1, 2),
        rotation: Matrix3::identity(),
        translation: Vector3::zeros(),
    }
}
