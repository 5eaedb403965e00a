//! Denavit–Hartenberg chains (standard, distal convention) and forward
//! kinematics.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DVector, Matrix3, Matrix4, Vector3};

use crate::error::{check_len, Error, Result};

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// One row of a standard DH table. The joint angle is `q_j + joint_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub joint_offset: f64,
}

impl DhRow {
    pub fn new(a: f64, alpha: f64, d: f64) -> Self {
        Self {
            a,
            alpha: normalize_angle(alpha),
            d,
            joint_offset: 0.0,
        }
    }

    /// Rotation and origin of this frame w.r.t. the previous one.
    pub fn transform(&self, q: f64) -> FramePose {
        let theta = q + self.joint_offset;
        let (st, ct) = theta.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        FramePose {
            rotation: Matrix3::new(ct, -st * ca, st * sa, st, ct * ca, -ct * sa, 0.0, sa, ca),
            origin: Vector3::new(self.a * ct, self.a * st, self.d),
        }
    }

    /// Origin of this frame w.r.t. the previous one, expressed in this frame.
    /// Independent of the joint angle.
    pub fn origin_in_own_frame(&self) -> Vector3<f64> {
        let (sa, ca) = self.alpha.sin_cos();
        Vector3::new(self.a, self.d * sa, self.d * ca)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.d.is_finite() && self.alpha.is_finite())
            || !self.joint_offset.is_finite()
        {
            return Err(Error::InvalidInput("non-finite DH parameter".into()));
        }
        if self.a < 0.0 {
            return Err(Error::InvalidInput(format!("DH length a = {} < 0", self.a)));
        }
        Ok(())
    }
}

/// Maps an angle into (−π, π].
pub fn normalize_angle(angle: f64) -> f64 {
    let mut x = angle % (2.0 * PI);
    if x <= -PI {
        x += 2.0 * PI;
    } else if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Rigid pose: rotation and origin of a frame w.r.t. the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePose {
    pub rotation: Matrix3<f64>,
    pub origin: Vector3<f64>,
}

impl FramePose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            origin: Vector3::zeros(),
        }
    }

    /// `self ∘ other`: `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &FramePose) -> FramePose {
        FramePose {
            rotation: self.rotation * other.rotation,
            origin: self.origin + self.rotation * other.origin,
        }
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.origin);
        m
    }
}

/// Serial chain of revolute joints described by DH rows.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    pub rows: Vec<DhRow>,
    /// Gravitational acceleration in the base frame (m/s²).
    pub gravity: Vector3<f64>,
}

impl KinematicChain {
    pub fn new(rows: Vec<DhRow>) -> Result<Self> {
        Self::with_gravity(rows, Vector3::new(0.0, 0.0, -STANDARD_GRAVITY))
    }

    pub fn with_gravity(rows: Vec<DhRow>, gravity: Vector3<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("a chain needs at least one joint".into()));
        }
        for row in &rows {
            row.validate()?;
        }
        if !gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::InvalidInput("non-finite gravity".into()));
        }
        Ok(Self { rows, gravity })
    }

    /// Number of joints.
    pub fn dof(&self) -> usize {
        self.rows.len()
    }

    /// Pose of frame `i` (1-based) w.r.t. frame 0.
    pub fn link_pose(&self, q: &DVector<f64>, i: usize) -> Result<FramePose> {
        check_len("joint vector", self.dof(), q.len())?;
        if i == 0 || i > self.dof() {
            return Err(Error::IndexOutOfRange {
                index: i,
                max: self.dof(),
            });
        }
        Ok(self.rows[..i]
            .iter()
            .zip(q.iter())
            .fold(FramePose::identity(), |acc, (row, &qj)| acc.compose(&row.transform(qj))))
    }

    /// Poses of frames 1..=n w.r.t. frame 0.
    pub fn all_poses(&self, q: &DVector<f64>) -> Result<Vec<FramePose>> {
        check_len("joint vector", self.dof(), q.len())?;
        let mut acc = FramePose::identity();
        Ok(self
            .rows
            .iter()
            .zip(q.iter())
            .map(|(row, &qj)| {
                acc = acc.compose(&row.transform(qj));
                acc
            })
            .collect())
    }

    /// Sum of |a| and |d| over the chain; a Lipschitz bound for frame origins.
    pub fn total_length(&self) -> f64 {
        self.rows.iter().map(|r| r.a.abs() + r.d.abs()).sum()
    }
}

/// The UR10 (CB-series) DH table.
pub fn ur10_chain() -> KinematicChain {
    let rows = vec![
        DhRow::new(0.0, -FRAC_PI_2, 0.1273),
        DhRow::new(0.612, 0.0, 0.0),
        DhRow::new(0.5723, 0.0, 0.0),
        DhRow::new(0.0, -FRAC_PI_2, 0.163941),
        DhRow::new(0.0, FRAC_PI_2, 0.1157),
        DhRow::new(0.0, 0.0, 0.0922),
    ];
    KinematicChain::new(rows).expect("static UR10 table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ur10_table_values() {
        let chain = ur10_chain();
        assert_eq!(chain.dof(), 6);
        assert_eq!(chain.rows[1].a, 0.612);
        assert_eq!(chain.rows[5].d, 0.0922);
        assert_eq!(chain.rows[3].d, 0.163941);
        assert_eq!(chain.rows[0].alpha, -FRAC_PI_2);
        assert_eq!(chain.rows[4].alpha, FRAC_PI_2);
        assert!(chain.rows.iter().all(|r| r.joint_offset == 0.0));
    }

    #[test]
    fn single_zero_row_is_identity() {
        let chain = KinematicChain::new(vec![DhRow::new(0.0, 0.0, 0.0)]).unwrap();
        let pose = chain.link_pose(&DVector::from_element(1, 0.0), 1).unwrap();
        assert_relative_eq!(pose.rotation, Matrix3::identity(), epsilon = 1e-15);
        assert_relative_eq!(pose.origin, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn ur10_first_frame_at_base_height() {
        let chain = ur10_chain();
        let pose = chain.link_pose(&DVector::zeros(6), 1).unwrap();
        assert_relative_eq!(pose.origin, Vector3::new(0.0, 0.0, 0.1273), epsilon = 1e-15);
    }

    #[test]
    fn index_errors() {
        let chain = ur10_chain();
        assert!(matches!(
            chain.link_pose(&DVector::zeros(6), 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            chain.link_pose(&DVector::zeros(6), 7),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            chain.link_pose(&DVector::zeros(5), 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn angle_normalization() {
        assert_relative_eq!(normalize_angle(-PI), PI);
        assert_relative_eq!(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(normalize_angle(0.25), 0.25);
    }

    #[test]
    fn rejects_negative_length() {
        assert!(KinematicChain::new(vec![DhRow::new(-0.1, 0.0, 0.0)]).is_err());
        assert!(KinematicChain::new(vec![]).is_err());
    }
}
