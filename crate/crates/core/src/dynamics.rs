//! Rigid-body inverse dynamics (recursive Newton–Euler), the
//! linear-in-parameters regressor and the joint friction laws.
//!
//! Link parameters use the `(m, m·r, I_origin)` coordinates: mass, first
//! moment of mass and the inertia tensor about the link frame origin, all in
//! the link's own DH frame. Every quantity the recursion produces is linear
//! in these ten numbers, so a regressor column is one backward sweep with a
//! unit parameter.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::{skew, sym_from6, sym_to6};

/// Inertial parameters per link.
pub const PARAMS_PER_LINK: usize = 10;
/// Linear friction parameters per joint: offset, viscous, Coulomb.
pub const FRICTION_PER_JOINT: usize = 3;
/// Total parameters per joint/link pair.
pub const PARAMS_PER_JOINT: usize = PARAMS_PER_LINK + FRICTION_PER_JOINT;

/// Names of the ten inertial parameters in vector order.
pub const INERTIAL_NAMES: [&str; PARAMS_PER_LINK] =
    ["m", "mx", "my", "mz", "ixx", "ixy", "ixz", "iyy", "iyz", "izz"];

/// Mass, first moment and origin-referenced inertia of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialParameters {
    pub mass: f64,
    /// `m·r`, with `r` the centre of mass in the link frame.
    pub first_moment: Vector3<f64>,
    /// Inertia tensor about the link frame origin.
    pub inertia: Matrix3<f64>,
}

impl InertialParameters {
    pub fn zero() -> Self {
        Self {
            mass: 0.0,
            first_moment: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }

    /// Builds origin-referenced parameters from a centre of mass and an
    /// inertia tensor about that centre (axes parallel to the link frame),
    /// via `I = Î + m [r]ₓᵀ[r]ₓ`.
    pub fn from_com(mass: f64, com: Vector3<f64>, inertia_com: Matrix3<f64>) -> Self {
        let s = skew(&com);
        Self {
            mass,
            first_moment: com * mass,
            inertia: inertia_com + s.transpose() * s * mass,
        }
    }

    /// Centre of mass, undefined for a massless link.
    pub fn com(&self) -> Option<Vector3<f64>> {
        (self.mass != 0.0).then(|| self.first_moment / self.mass)
    }

    /// Inertia about the centre of mass (inverse Steiner shift).
    pub fn inertia_about_com(&self) -> Option<Matrix3<f64>> {
        self.com().map(|r| {
            let s = skew(&r);
            self.inertia - s.transpose() * s * self.mass
        })
    }

    /// `[m, mx, my, mz, Ixx, Ixy, Ixz, Iyy, Iyz, Izz]`.
    pub fn to_array(&self) -> [f64; PARAMS_PER_LINK] {
        let i = sym_to6(&self.inertia);
        [
            self.mass,
            self.first_moment.x,
            self.first_moment.y,
            self.first_moment.z,
            i[0],
            i[1],
            i[2],
            i[3],
            i[4],
            i[5],
        ]
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        check_len("inertial parameter block", PARAMS_PER_LINK, v.len())?;
        Ok(Self {
            mass: v[0],
            first_moment: Vector3::new(v[1], v[2], v[3]),
            inertia: sym_from6(&[v[4], v[5], v[6], v[7], v[8], v[9]]),
        })
    }

    /// The `k`-th unit parameter vector.
    pub fn unit(k: usize) -> Self {
        let mut v = [0.0; PARAMS_PER_LINK];
        v[k] = 1.0;
        Self::from_slice(&v).expect("fixed length")
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mass: self.mass * s,
            first_moment: self.first_moment * s,
            inertia: self.inertia * s,
        }
    }

    /// Spatial wrench (force, moment about the frame origin) the link needs
    /// for the given frame-origin motion.
    fn wrench(&self, m: &LinkMotion) -> (Vector3<f64>, Vector3<f64>) {
        let h = &self.first_moment;
        let force = m.acc * self.mass + m.omega_dot.cross(h) + m.omega.cross(&m.omega.cross(h));
        let moment = self.inertia * m.omega_dot
            + m.omega.cross(&(self.inertia * m.omega))
            + h.cross(&m.acc);
        (force, moment)
    }
}

impl std::ops::Add for InertialParameters {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            mass: self.mass + rhs.mass,
            first_moment: self.first_moment + rhs.first_moment,
            inertia: self.inertia + rhs.inertia,
        }
    }
}

/// Sigmoidal friction parameters of one joint.
///
/// `f(q̇) = f_o + f_v q̇ + f_c / (1 + exp(−δ (ν + q̇)))`. The steepness `δ` is
/// the column some tables label `α`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointFriction {
    pub f_o: f64,
    pub f_v: f64,
    pub f_c: f64,
    pub delta: f64,
    pub nu: f64,
}

impl JointFriction {
    pub fn sigmoid(&self, qd: f64) -> f64 {
        self.f_o + self.f_v * qd + self.f_c * logistic(self.delta * (self.nu + qd))
    }

    /// The linear law `f_o + f_v q̇ + f_c sgn(q̇)` with the same coefficients.
    pub fn linear(&self, qd: f64) -> f64 {
        self.f_o + self.f_v * qd + self.f_c * sgn(qd)
    }

    /// Partial derivatives of [`Self::sigmoid`] w.r.t. `(f_o, f_v, f_c, δ, ν)`.
    pub fn sigmoid_gradient(&self, qd: f64) -> [f64; 5] {
        let z = self.delta * (self.nu + qd);
        let s = logistic(z);
        let ds = s * (1.0 - s);
        [
            1.0,
            qd,
            s,
            self.f_c * ds * (self.nu + qd),
            self.f_c * ds * self.delta,
        ]
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.f_o, self.f_v, self.f_c, self.delta, self.nu]
    }

    pub fn from_array(p: [f64; 5]) -> Self {
        Self {
            f_o: p[0],
            f_v: p[1],
            f_c: p[2],
            delta: p[3],
            nu: p[4],
        }
    }

    /// Divides the amplitude terms by a gain (torque → current level).
    pub fn divided_by(&self, gain: f64) -> Self {
        Self {
            f_o: self.f_o / gain,
            f_v: self.f_v / gain,
            f_c: self.f_c / gain,
            ..*self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Friction parameters of every joint.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionSet(pub Vec<JointFriction>);

impl FrictionSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn joints(&self) -> &[JointFriction] {
        &self.0
    }

    /// Current-level set from a torque-level one.
    pub fn divided_by(&self, gains: &DVector<f64>) -> Result<Self> {
        check_len("gain vector", self.len(), gains.len())?;
        Ok(Self(
            self.0
                .iter()
                .zip(gains.iter())
                .map(|(f, &k)| f.divided_by(k))
                .collect(),
        ))
    }

    pub fn scaled_by(&self, gains: &DVector<f64>) -> Result<Self> {
        self.divided_by(&gains.map(|k| 1.0 / k))
    }
}

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Sign with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Element-wise `f_o + f_v q̇ + f_c sgn(q̇)`.
pub fn friction_linear(
    f_o: &DVector<f64>,
    f_v: &DVector<f64>,
    f_c: &DVector<f64>,
    qd: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = qd.len();
    check_len("friction offset", n, f_o.len())?;
    check_len("viscous coefficient", n, f_v.len())?;
    check_len("Coulomb coefficient", n, f_c.len())?;
    Ok(DVector::from_fn(n, |j, _| f_o[j] + f_v[j] * qd[j] + f_c[j] * sgn(qd[j])))
}

/// Element-wise sigmoidal friction.
pub fn friction_sigmoid(psi: &FrictionSet, qd: &DVector<f64>) -> Result<DVector<f64>> {
    check_len("friction set", qd.len(), psi.len())?;
    Ok(DVector::from_fn(qd.len(), |j, _| psi.0[j].sigmoid(qd[j])))
}

/// Joint positions, velocities and accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, qd: DVector<f64>, qdd: DVector<f64>) -> Result<Self> {
        check_len("joint velocity", q.len(), qd.len())?;
        check_len("joint acceleration", q.len(), qdd.len())?;
        let s = Self { q, qd, qdd };
        if !s.q.iter().chain(s.qd.iter()).chain(s.qdd.iter()).all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite joint state".into()));
        }
        Ok(s)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            q: DVector::zeros(n),
            qd: DVector::zeros(n),
            qdd: DVector::zeros(n),
        }
    }

    /// Static state at `q`.
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qd: DVector::zeros(n),
            qdd: DVector::zeros(n),
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

/// Stacked dynamic parameters: ten inertial values per link (links 1..n),
/// then `[f_o, f_v, f_c]` per joint. Length `13 n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicParameters {
    values: DVector<f64>,
    dof: usize,
}

impl DynamicParameters {
    pub fn zeros(dof: usize) -> Self {
        Self {
            values: DVector::zeros(PARAMS_PER_JOINT * dof),
            dof,
        }
    }

    pub fn from_vector(values: DVector<f64>, dof: usize) -> Result<Self> {
        check_len("dynamic parameter vector", PARAMS_PER_JOINT * dof, values.len())?;
        Ok(Self { values, dof })
    }

    /// Assembles the vector from link parameters and `[f_o, f_v, f_c]` rows.
    pub fn from_parts(links: &[InertialParameters], friction: &[[f64; 3]]) -> Result<Self> {
        check_len("friction rows", links.len(), friction.len())?;
        let n = links.len();
        let mut p = Self::zeros(n);
        for (i, link) in links.iter().enumerate() {
            p.set_link(i, link);
        }
        for (j, f) in friction.iter().enumerate() {
            for (k, &v) in f.iter().enumerate() {
                p.values[Self::friction_index(n, j, k)] = v;
            }
        }
        Ok(p)
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    /// Position of inertial parameter `k` of link `i` (both 0-based).
    pub fn inertial_index(i: usize, k: usize) -> usize {
        PARAMS_PER_LINK * i + k
    }

    /// Position of friction parameter `k` of joint `j` (both 0-based).
    pub fn friction_index(dof: usize, j: usize, k: usize) -> usize {
        PARAMS_PER_LINK * dof + FRICTION_PER_JOINT * j + k
    }

    pub fn link(&self, i: usize) -> InertialParameters {
        let s = Self::inertial_index(i, 0);
        InertialParameters::from_slice(&self.values.as_slice()[s..s + PARAMS_PER_LINK])
            .expect("fixed length")
    }

    pub fn set_link(&mut self, i: usize, link: &InertialParameters) {
        let s = Self::inertial_index(i, 0);
        for (k, v) in link.to_array().into_iter().enumerate() {
            self.values[s + k] = v;
        }
    }

    pub fn links(&self) -> Vec<InertialParameters> {
        (0..self.dof).map(|i| self.link(i)).collect()
    }

    pub fn friction(&self, j: usize) -> [f64; 3] {
        let s = Self::friction_index(self.dof, j, 0);
        [self.values[s], self.values[s + 1], self.values[s + 2]]
    }
}

/// Motion of one link frame origin, expressed in that frame.
#[derive(Debug, Clone, Copy)]
struct LinkMotion {
    omega: Vector3<f64>,
    omega_dot: Vector3<f64>,
    acc: Vector3<f64>,
}

/// Forward-recursion results of the Newton–Euler algorithm.
struct ForwardPass {
    /// Rotation of frame i w.r.t. frame i−1.
    rot: Vec<Matrix3<f64>>,
    /// Origin of frame i w.r.t. frame i−1, in frame i.
    offset: Vec<Vector3<f64>>,
    /// Joint axis `z_{i−1}`, in frame i.
    axis: Vec<Vector3<f64>>,
    motion: Vec<LinkMotion>,
}

impl ForwardPass {
    fn new(chain: &KinematicChain, state: &JointState, gravity: &Vector3<f64>) -> Self {
        let n = chain.dof();
        let z = Vector3::z();
        let mut rot = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n);
        let mut axis = Vec::with_capacity(n);
        let mut motion = Vec::with_capacity(n);
        // gravity enters as a fictitious upward acceleration of the base
        let mut prev = LinkMotion {
            omega: Vector3::zeros(),
            omega_dot: Vector3::zeros(),
            acc: -gravity,
        };
        for (i, row) in chain.rows.iter().enumerate() {
            let r = row.transform(state.q[i]).rotation;
            let rt = r.transpose();
            let p = row.origin_in_own_frame();
            let (qd, qdd) = (state.qd[i], state.qdd[i]);
            let omega = rt * (prev.omega + z * qd);
            let omega_dot = rt * (prev.omega_dot + z * qdd + prev.omega.cross(&z) * qd);
            let acc = rt * prev.acc + omega_dot.cross(&p) + omega.cross(&omega.cross(&p));
            let m = LinkMotion {
                omega,
                omega_dot,
                acc,
            };
            rot.push(r);
            offset.push(p);
            axis.push(rt * z);
            motion.push(m);
            prev = m;
        }
        Self {
            rot,
            offset,
            axis,
            motion,
        }
    }

    /// Joint torques produced by a wrench applied on link `i` alone.
    fn propagate(&self, i: usize, force: Vector3<f64>, moment: Vector3<f64>, out: &mut [f64]) {
        let mut f = force;
        let mut n = moment;
        out[i] += self.joint_torque(i, &f, &n);
        for j in (0..i).rev() {
            let r = &self.rot[j + 1];
            f = r * f;
            n = r * n + (r * self.offset[j + 1]).cross(&f);
            out[j] += self.joint_torque(j, &f, &n);
        }
    }

    /// Axis component of the moment about the joint's origin `O_{i−1}`,
    /// given the sub-chain wrench with moment about `O_i`.
    fn joint_torque(&self, i: usize, f: &Vector3<f64>, n: &Vector3<f64>) -> f64 {
        (n + self.offset[i].cross(f)).dot(&self.axis[i])
    }
}

fn check_inputs(chain: &KinematicChain, n_links: usize, state: &JointState) -> Result<()> {
    let n = chain.dof();
    check_len("link parameters", n, n_links)?;
    check_len("joint positions", n, state.q.len())?;
    check_len("joint velocities", n, state.qd.len())?;
    check_len("joint accelerations", n, state.qdd.len())
}

/// Rigid-body torques `M(q)q̈ + C(q,q̇)q̇ + g(q)` (no friction) by the
/// recursive Newton–Euler algorithm, with the chain's gravity.
pub fn rnea(
    chain: &KinematicChain,
    links: &[InertialParameters],
    state: &JointState,
) -> Result<DVector<f64>> {
    rnea_with_gravity(chain, links, state, &chain.gravity)
}

/// [`rnea`] with an explicit gravity vector (zero to drop the gravity term).
pub fn rnea_with_gravity(
    chain: &KinematicChain,
    links: &[InertialParameters],
    state: &JointState,
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>> {
    check_inputs(chain, links.len(), state)?;
    let n = chain.dof();
    let fp = ForwardPass::new(chain, state, gravity);
    let mut tau = vec![0.0; n];
    let mut f = Vector3::zeros();
    let mut m = Vector3::zeros();
    // single backward sweep accumulating the wrench of the sub-chain
    for i in (0..n).rev() {
        let (fi, ni) = links[i].wrench(&fp.motion[i]);
        if i + 1 < n {
            let r = &fp.rot[i + 1];
            let f_child = r * f;
            m = ni + r * m + (r * fp.offset[i + 1]).cross(&f_child);
            f = fi + f_child;
        } else {
            f = fi;
            m = ni;
        }
        tau[i] = fp.joint_torque(i, &f, &m);
    }
    Ok(DVector::from_vec(tau))
}

/// Joint-space inertia matrix; column `k` is the torque for `q̈ = e_k` with
/// zero velocity and gravity.
pub fn inertia_matrix(
    chain: &KinematicChain,
    links: &[InertialParameters],
    q: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = chain.dof();
    check_len("joint positions", n, q.len())?;
    let mut m = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut state = JointState::at_rest(q.clone());
        state.qdd[k] = 1.0;
        let col = rnea_with_gravity(chain, links, &state, &Vector3::zeros())?;
        m.set_column(k, &col);
    }
    Ok(m)
}

/// Coriolis and centrifugal torques `C(q, q̇) q̇`.
pub fn coriolis_vector(
    chain: &KinematicChain,
    links: &[InertialParameters],
    q: &DVector<f64>,
    qd: &DVector<f64>,
) -> Result<DVector<f64>> {
    let state = JointState::new(q.clone(), qd.clone(), DVector::zeros(q.len()))?;
    rnea_with_gravity(chain, links, &state, &Vector3::zeros())
}

/// Gravity torques `g(q)`.
pub fn gravity_vector(
    chain: &KinematicChain,
    links: &[InertialParameters],
    q: &DVector<f64>,
) -> Result<DVector<f64>> {
    rnea(chain, links, &JointState::at_rest(q.clone()))
}

/// Full regressor `Y` (n × 13n) with the chain's gravity: `Y π` equals the
/// rigid-body torques plus linear friction.
pub fn regressor(chain: &KinematicChain, state: &JointState) -> Result<DMatrix<f64>> {
    regressor_with_gravity(chain, state, &chain.gravity)
}

/// [`regressor`] with an explicit gravity vector.
pub fn regressor_with_gravity(
    chain: &KinematicChain,
    state: &JointState,
    gravity: &Vector3<f64>,
) -> Result<DMatrix<f64>> {
    let n = chain.dof();
    check_inputs(chain, n, state)?;
    let mut y = DMatrix::zeros(n, PARAMS_PER_JOINT * n);
    let fp = ForwardPass::new(chain, state, gravity);
    let mut col = vec![0.0; n];
    for i in 0..n {
        fill_link_columns(&fp, i, &mut col, |k, c| {
            y.set_column(DynamicParameters::inertial_index(i, k), &DVector::from_column_slice(c))
        });
    }
    for j in 0..n {
        let qd = state.qd[j];
        y[(j, DynamicParameters::friction_index(n, j, 0))] = 1.0;
        y[(j, DynamicParameters::friction_index(n, j, 1))] = qd;
        y[(j, DynamicParameters::friction_index(n, j, 2))] = sgn(qd);
    }
    Ok(y)
}

/// The ten columns of `Y` belonging to one link (0-based `link`), n × 10.
pub fn link_regressor(
    chain: &KinematicChain,
    state: &JointState,
    gravity: &Vector3<f64>,
    link: usize,
) -> Result<DMatrix<f64>> {
    let n = chain.dof();
    check_inputs(chain, n, state)?;
    if link >= n {
        return Err(Error::IndexOutOfRange {
            index: link + 1,
            max: n,
        });
    }
    let fp = ForwardPass::new(chain, state, gravity);
    let mut block = DMatrix::zeros(n, PARAMS_PER_LINK);
    let mut col = vec![0.0; n];
    fill_link_columns(&fp, link, &mut col, |k, c| {
        block.set_column(k, &DVector::from_column_slice(c))
    });
    Ok(block)
}

fn fill_link_columns(
    fp: &ForwardPass,
    link: usize,
    scratch: &mut [f64],
    mut emit: impl FnMut(usize, &[f64]),
) {
    let m = &fp.motion[link];
    for k in 0..PARAMS_PER_LINK {
        let (f, moment) = unit_wrench(k, m);
        scratch.iter_mut().for_each(|x| *x = 0.0);
        fp.propagate(link, f, moment, scratch);
        emit(k, scratch);
    }
}

/// Wrench of the `k`-th unit inertial parameter; written out per parameter
/// kind to avoid multiplying by the nine zeros of a basis vector.
fn unit_wrench(k: usize, m: &LinkMotion) -> (Vector3<f64>, Vector3<f64>) {
    match k {
        0 => (m.acc, Vector3::zeros()),
        1..=3 => {
            let mut e = Vector3::zeros();
            e[k - 1] = 1.0;
            (
                m.omega_dot.cross(&e) + m.omega.cross(&m.omega.cross(&e)),
                e.cross(&m.acc),
            )
        }
        _ => {
            let mut six = [0.0; 6];
            six[k - 4] = 1.0;
            let e = sym_from6(&six);
            (Vector3::zeros(), e * m.omega_dot + m.omega.cross(&(e * m.omega)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{ur10_chain, DhRow};
    use approx::assert_relative_eq;

    fn pendulum() -> (KinematicChain, Vec<InertialParameters>) {
        let chain = KinematicChain::with_gravity(
            vec![DhRow::new(0.0, 0.0, 0.0)],
            Vector3::new(0.0, -crate::kinematics::STANDARD_GRAVITY, 0.0),
        )
        .unwrap();
        let link = InertialParameters::from_com(2.0, Vector3::new(0.5, 0.0, 0.0), Matrix3::zeros());
        (chain, vec![link])
    }

    #[test]
    fn zero_parameters_give_zero_torque() {
        let chain = ur10_chain();
        let links = vec![InertialParameters::zero(); 6];
        let state = JointState::new(
            DVector::from_element(6, 0.3),
            DVector::from_element(6, -0.7),
            DVector::from_element(6, 1.1),
        )
        .unwrap();
        assert_eq!(rnea(&chain, &links, &state).unwrap(), DVector::zeros(6));
        assert_eq!(inertia_matrix(&chain, &links, &state.q).unwrap(), DMatrix::zeros(6, 6));
    }

    #[test]
    fn pendulum_static_torque() {
        let (chain, links) = pendulum();
        let tau = rnea(&chain, &links, &JointState::zeros(1)).unwrap();
        assert_relative_eq!(tau[0], 9.80665, epsilon = 1e-12);
        // m g r cos q
        let q = 0.4_f64;
        let tau = gravity_vector(&chain, &links, &DVector::from_element(1, q)).unwrap();
        assert_relative_eq!(tau[0], 9.80665 * q.cos(), epsilon = 1e-12);
    }

    #[test]
    fn pendulum_inertia() {
        let (chain, links) = pendulum();
        let m = inertia_matrix(&chain, &links, &DVector::zeros(1)).unwrap();
        assert_relative_eq!(m[(0, 0)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn steiner_round_trip() {
        let com_inertia = Matrix3::new(0.2, 0.01, -0.02, 0.01, 0.3, 0.005, -0.02, 0.005, 0.25);
        let p = InertialParameters::from_com(3.0, Vector3::new(0.1, -0.2, 0.05), com_inertia);
        assert_relative_eq!(p.inertia_about_com().unwrap(), com_inertia, epsilon = 1e-14);
        assert_relative_eq!(p.com().unwrap(), Vector3::new(0.1, -0.2, 0.05), epsilon = 1e-15);
        assert_relative_eq!(p.inertia, p.inertia.transpose());
        let back = InertialParameters::from_slice(&p.to_array()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn linear_friction_values() {
        let v = |x: f64| DVector::from_element(1, x);
        // sgn(0) = 0 leaves only the offset
        assert_eq!(friction_linear(&v(0.4), &v(2.0), &v(3.0), &v(0.0)).unwrap()[0], 0.4);
        assert_relative_eq!(
            friction_linear(&v(0.0), &v(1.0), &v(0.0), &v(0.3)).unwrap()[0],
            0.3
        );
        // first joint of the published sigmoidal table read as a linear law at 1 rad/s
        let tau = friction_linear(&v(-1.0066), &v(1.0640), &v(2.0506), &v(1.0)).unwrap()[0];
        assert_relative_eq!(tau, 2.108, epsilon = 1e-12);
    }

    #[test]
    fn linear_friction_is_odd_without_offset() {
        let f = JointFriction {
            f_o: 0.0,
            f_v: 0.7,
            f_c: 1.3,
            delta: 1.0,
            nu: 0.0,
        };
        for &x in &[0.0, 0.01, 0.5, 3.0] {
            assert_eq!(f.linear(-x), -f.linear(x));
        }
    }

    #[test]
    fn sigmoid_midpoint_and_limit() {
        let f = JointFriction {
            f_o: 0.2,
            f_v: 0.5,
            f_c: 1.5,
            delta: 30.0,
            nu: -0.02,
        };
        assert_relative_eq!(f.sigmoid(0.02), 0.2 + 0.5 * 0.02 + 0.75, epsilon = 1e-15);
        let steep = JointFriction { delta: 1e6, ..f };
        for &x in &[-0.5, -0.03, 0.05, 1.2] {
            let step = if x + steep.nu > 0.0 { 1.0 } else { 0.0 };
            assert!((steep.sigmoid(x) - (0.2 + 0.5 * x + 1.5 * step)).abs() < 1e-6);
        }
    }

    #[test]
    fn sigmoid_gradient_matches_finite_differences() {
        let f = JointFriction {
            f_o: -0.8,
            f_v: 0.68,
            f_c: 1.65,
            delta: 19.8,
            nu: -0.0053,
        };
        let x = 0.031;
        let g = f.sigmoid_gradient(x);
        let p = f.to_array();
        for k in 0..5 {
            let h = 1e-6 * p[k].abs().max(1e-3);
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let fd = (JointFriction::from_array(a).sigmoid(x) - JointFriction::from_array(b).sigmoid(x))
                / (2.0 * h);
            assert_relative_eq!(g[k], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let chain = ur10_chain();
        let links = vec![InertialParameters::zero(); 5];
        assert!(matches!(
            rnea(&chain, &links, &JointState::zeros(6)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(regressor(&chain, &JointState::zeros(5)).is_err());
    }

    #[test]
    fn static_regressor_friction_blocks() {
        let chain = ur10_chain();
        let y = regressor(&chain, &JointState::at_rest(DVector::from_element(6, 0.2))).unwrap();
        for j in 0..6 {
            assert_eq!(y[(j, DynamicParameters::friction_index(6, j, 0))], 1.0);
            assert_eq!(y[(j, DynamicParameters::friction_index(6, j, 1))], 0.0);
            assert_eq!(y[(j, DynamicParameters::friction_index(6, j, 2))], 0.0);
        }
    }
}
