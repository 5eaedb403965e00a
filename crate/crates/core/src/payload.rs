//! Payloads rigidly attached to the last link: conversion to last-link
//! parameter increments `π_L` and the torque split `τ = τ_arm + Y_n π_L`.

use nalgebra::{DVector, Matrix3, Vector3};

use crate::dynamics::{
    link_regressor, rnea, InertialParameters, JointState, INERTIAL_NAMES, PARAMS_PER_LINK,
};
use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::{is_rotation, skew};

const SYMMETRY_TOL: f64 = 1e-12;
const ROTATION_TOL: f64 = 1e-12;

/// A payload in its own frame `l`, and the pose of `l` in the last link
/// frame `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayloadSpec {
    pub mass: f64,
    /// Centre of mass in frame `l`, m.
    pub com_l: Vector3<f64>,
    /// Inertia about the centre of mass, frame-`l` axes, kg·m².
    pub inertia_l: Matrix3<f64>,
    /// `R_l^n`: orientation of frame `l` in frame `n`.
    pub rotation: Matrix3<f64>,
    /// `t_l^n`: origin of frame `l` in frame `n`, m.
    pub translation: Vector3<f64>,
}

impl PayloadSpec {
    pub fn zero() -> Self {
        Self {
            mass: 0.0,
            com_l: Vector3::zeros(),
            inertia_l: Matrix3::zeros(),
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Franka Hand gripper, mounted concentrically on the flange with a 45°
    /// rotation about `z_n`.
    pub fn franka_hand() -> Self {
        Self {
            mass: 0.73,
            com_l: Vector3::new(0.0, 0.010, 0.030),
            inertia_l: Matrix3::from_diagonal(&Vector3::new(1.0e-3, 2.5e-3, 1.7e-3)),
            rotation: rot_z(std::f64::consts::FRAC_PI_4),
            translation: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.mass.is_finite()
            && self.com_l.iter().all(|x| x.is_finite())
            && self.inertia_l.iter().all(|x| x.is_finite())
            && self.rotation.iter().all(|x| x.is_finite())
            && self.translation.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite payload field".into()));
        }
        if self.mass < 0.0 {
            return Err(Error::InvalidInput(format!("payload mass {} < 0", self.mass)));
        }
        if (self.inertia_l - self.inertia_l.transpose()).amax() > SYMMETRY_TOL {
            return Err(Error::InvalidInput("payload inertia is not symmetric".into()));
        }
        if !is_rotation(&self.rotation, ROTATION_TOL) {
            return Err(Error::InvalidInput(
                "R_l_n is not a proper rotation (orthonormal, det +1)".into(),
            ));
        }
        Ok(())
    }

    /// The same physical payload described in another frame `l'`, where
    /// `(rotation, translation)` is the pose of `l'` in `l`.
    pub fn reexpressed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        let rt = rotation.transpose();
        Self {
            mass: self.mass,
            com_l: rt * (self.com_l - translation),
            inertia_l: rt * self.inertia_l * rotation,
            rotation: self.rotation * rotation,
            translation: self.translation + self.rotation * translation,
        }
    }
}

/// Rotation by `angle` about `z`.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `π_L` in frame `n`: `r_L = R r_l + t`,
/// `I_L = R I_l Rᵀ + m [r_L]ₓᵀ[r_L]ₓ`.
pub fn payload_to_frame_n(spec: &PayloadSpec) -> Result<InertialParameters> {
    spec.validate()?;
    let r_l = spec.rotation * spec.com_l + spec.translation;
    let s = skew(&r_l);
    let inertia = spec.rotation * spec.inertia_l * spec.rotation.transpose()
        + s.transpose() * s * spec.mass;
    Ok(InertialParameters {
        mass: spec.mass,
        first_moment: r_l * spec.mass,
        inertia,
    })
}

/// Adds `π_L` to the last link's parameters.
pub fn apply_payload(last_link: &InertialParameters, pi_l: &InertialParameters) -> InertialParameters {
    *last_link + *pi_l
}

/// Links with the payload folded into the last one.
pub fn links_with_payload(
    links: &[InertialParameters],
    pi_l: &InertialParameters,
) -> Vec<InertialParameters> {
    let mut out = links.to_vec();
    if let Some(last) = out.last_mut() {
        *last = apply_payload(last, pi_l);
    }
    out
}

/// `Y_n(state) π_L` with the chain's gravity.
pub fn payload_torque(
    chain: &KinematicChain,
    state: &JointState,
    pi_l: &InertialParameters,
) -> Result<DVector<f64>> {
    payload_torque_with_gravity(chain, state, &chain.gravity, pi_l)
}

pub fn payload_torque_with_gravity(
    chain: &KinematicChain,
    state: &JointState,
    gravity: &Vector3<f64>,
    pi_l: &InertialParameters,
) -> Result<DVector<f64>> {
    let yn = link_regressor(chain, state, gravity, chain.dof() - 1)?;
    Ok(yn * DVector::from_row_slice(&pi_l.to_array()))
}

/// `(τ_arm, τ_L)`: rigid-body torques without the payload and the payload
/// share `Y_n π_L`.
pub fn split_torques(
    chain: &KinematicChain,
    links: &[InertialParameters],
    pi_l: &InertialParameters,
    state: &JointState,
) -> Result<(DVector<f64>, DVector<f64>)> {
    Ok((rnea(chain, links, state)?, payload_torque(chain, state, pi_l)?))
}

/// Which of the ten payload parameters are known a priori, in
/// [`INERTIAL_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownParameters(pub [bool; PARAMS_PER_LINK]);

impl KnownParameters {
    pub fn all() -> Self {
        Self([true; PARAMS_PER_LINK])
    }

    pub fn none() -> Self {
        Self([false; PARAMS_PER_LINK])
    }

    /// All known except the named parameters.
    pub fn all_except(unknown: &[&str]) -> Result<Self> {
        let mut mask = [true; PARAMS_PER_LINK];
        for name in unknown {
            mask[parameter_index(name)?] = false;
        }
        Ok(Self(mask))
    }

    /// Exactly the named parameters known.
    pub fn only(known: &[&str]) -> Result<Self> {
        let mut mask = [false; PARAMS_PER_LINK];
        for name in known {
            mask[parameter_index(name)?] = true;
        }
        Ok(Self(mask))
    }

    pub fn known_indices(&self) -> Vec<usize> {
        (0..PARAMS_PER_LINK).filter(|&k| self.0[k]).collect()
    }

    pub fn unknown_indices(&self) -> Vec<usize> {
        (0..PARAMS_PER_LINK).filter(|&k| !self.0[k]).collect()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.known_indices().into_iter().map(|k| INERTIAL_NAMES[k]).collect()
    }
}

pub fn parameter_index(name: &str) -> Result<usize> {
    INERTIAL_NAMES
        .iter()
        .position(|n| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::InvalidInput(format!("unknown payload parameter '{name}'")))
}

/// `π_L` as a 10-vector.
pub fn payload_vector(pi_l: &InertialParameters) -> DVector<f64> {
    DVector::from_row_slice(&pi_l.to_array())
}

pub fn payload_from_vector(v: &DVector<f64>) -> Result<InertialParameters> {
    check_len("payload parameter vector", PARAMS_PER_LINK, v.len())?;
    InertialParameters::from_slice(v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rnea;
    use crate::kinematics::{ur10_chain, STANDARD_GRAVITY};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn zero_mass_payload_is_zero() {
        let p = payload_to_frame_n(&PayloadSpec::zero()).unwrap();
        assert_eq!(p, InertialParameters::zero());
    }

    #[test]
    fn identity_pose_is_plain_steiner_shift() {
        let spec = PayloadSpec {
            mass: 1.5,
            com_l: Vector3::new(0.02, -0.01, 0.05),
            inertia_l: Matrix3::new(0.01, 0.001, 0.0, 0.001, 0.02, 0.0, 0.0, 0.0, 0.015),
            ..PayloadSpec::zero()
        };
        let p = payload_to_frame_n(&spec).unwrap();
        let s = skew(&spec.com_l);
        assert_relative_eq!(p.inertia, spec.inertia_l + s.transpose() * s * 1.5, epsilon = 1e-15);
        assert_relative_eq!(p.com().unwrap(), spec.com_l, epsilon = 1e-15);
    }

    #[test]
    fn franka_hand_by_direct_evaluation() {
        let p = payload_to_frame_n(&PayloadSpec::franka_hand()).unwrap();
        // Rz(45°)·(0, 0.01, 0.03) = (−0.01/√2, 0.01/√2, 0.03)
        let r = Vector3::new(-0.01 * FRAC_1_SQRT_2, 0.01 * FRAC_1_SQRT_2, 0.03);
        assert_relative_eq!(p.first_moment, r * 0.73, epsilon = 1e-15);
        // rotated diag(1, 2.5) about z: xx = yy = 1.75e-3, xy = ∓0.75e-3
        let (x, y, z) = (r.x, r.y, r.z);
        let m = 0.73;
        let expected = Matrix3::new(
            1.75e-3 + m * (y * y + z * z),
            -0.75e-3 - m * x * y,
            -m * x * z,
            -0.75e-3 - m * x * y,
            1.75e-3 + m * (x * x + z * z),
            -m * y * z,
            -m * x * z,
            -m * y * z,
            1.7e-3 + m * (x * x + y * y),
        );
        assert_relative_eq!(p.inertia, expected, epsilon = 1e-15);
    }

    #[test]
    fn mass_and_com_mixing() {
        let link = InertialParameters::from_com(2.0, Vector3::new(0.0, 0.0, -0.026), Matrix3::identity() * 1e-3);
        let pl = payload_to_frame_n(&PayloadSpec::franka_hand()).unwrap();
        let sum = apply_payload(&link, &pl);
        assert_relative_eq!(sum.mass, 2.73, epsilon = 1e-15);
        let mixed = (link.com().unwrap() * 2.0 + pl.com().unwrap() * 0.73) / 2.73;
        assert_relative_eq!(sum.com().unwrap(), mixed, epsilon = 1e-15);
        assert_eq!(apply_payload(&link, &InertialParameters::zero()), link);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = PayloadSpec::franka_hand();
        s.rotation[(0, 0)] = 2.0;
        assert!(payload_to_frame_n(&s).is_err());
        let mut s = PayloadSpec::franka_hand();
        s.mass = -1.0;
        assert!(payload_to_frame_n(&s).is_err());
        let mut s = PayloadSpec::franka_hand();
        s.inertia_l[(0, 1)] = 1e-3;
        assert!(payload_to_frame_n(&s).is_err());
    }

    #[test]
    fn frame_covariance() {
        let spec = PayloadSpec {
            mass: 1.2,
            com_l: Vector3::new(0.01, 0.02, 0.08),
            inertia_l: Matrix3::new(0.004, 0.0002, 0.0, 0.0002, 0.005, 0.0001, 0.0, 0.0001, 0.003),
            rotation: rot_z(0.3),
            translation: Vector3::new(0.0, 0.0, 0.02),
        };
        let alt = spec.reexpressed(&rot_z(-1.1), &Vector3::new(0.03, -0.02, 0.01));
        let a = payload_to_frame_n(&spec).unwrap();
        let b = payload_to_frame_n(&alt).unwrap();
        for (x, y) in a.to_array().iter().zip(b.to_array().iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn point_mass_static_torque_by_hand() {
        // UR10 at q = 0: frames 2..6 lie along base x; a point mass at the
        // flange origin loads the shoulder, elbow and wrist-1 joints with m g
        // times the horizontal distance to each joint axis.
        let chain = ur10_chain();
        let spec = PayloadSpec { mass: 2.0, ..PayloadSpec::zero() };
        let pl = payload_to_frame_n(&spec).unwrap();
        let q = DVector::zeros(6);
        let tau = payload_torque(&chain, &JointState::at_rest(q.clone()), &pl).unwrap();
        let poses = chain.all_poses(&q).unwrap();
        let flange = poses[5].origin;
        for j in 0..6 {
            let (axis, origin) = if j == 0 {
                (Vector3::z(), Vector3::zeros())
            } else {
                (poses[j - 1].rotation.column(2).into_owned(), poses[j - 1].origin)
            };
            let force = Vector3::new(0.0, 0.0, -2.0 * STANDARD_GRAVITY);
            // torque the joint must supply to hold the weight
            let expected = -(flange - origin).cross(&force).dot(&axis);
            assert_relative_eq!(tau[j], expected, epsilon = 1e-12);
        }
        assert!(tau[1].abs() > 10.0);
    }

    #[test]
    fn superposition_on_ur10() {
        let chain = ur10_chain();
        let links: Vec<InertialParameters> = (0..6)
            .map(|i| InertialParameters::from_com(1.0 + i as f64, Vector3::new(0.01, 0.02, -0.03), Matrix3::identity() * 0.01))
            .collect();
        let pl = payload_to_frame_n(&PayloadSpec::franka_hand()).unwrap();
        let state = JointState::new(
            DVector::from_vec(vec![0.1, -0.4, 1.0, 0.3, -0.2, 0.7]),
            DVector::from_vec(vec![0.5, -1.0, 0.2, 1.5, -0.3, 0.9]),
            DVector::from_vec(vec![-2.0, 1.0, 3.0, -0.5, 4.0, 0.1]),
        )
        .unwrap();
        let (arm, load) = split_torques(&chain, &links, &pl, &state).unwrap();
        let full = rnea(&chain, &links_with_payload(&links, &pl), &state).unwrap();
        assert!((full - arm - load).amax() < 1e-9);
    }

    #[test]
    fn known_parameter_masks() {
        let k = KnownParameters::all_except(&["m", "mz", "ixx", "iyy"]).unwrap();
        assert_eq!(k.unknown_indices(), vec![0, 3, 4, 7]);
        assert!(KnownParameters::only(&["mass"]).is_err());
        assert_eq!(KnownParameters::only(&["m"]).unwrap().known_indices(), vec![0]);
    }
}
