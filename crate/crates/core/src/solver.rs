//! Inverse-dynamics solver on an identified model. Every term is evaluated
//! from the coefficient-level model with the complementary inputs zeroed;
//! a configured payload adds `Y_n π_L` to the rigid-body terms.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::dataio::{FrictionLaw, FrictionLevel, RobotModel, Stage};
use crate::dynamics::{friction_sigmoid, link_regressor, FrictionSet, InertialParameters, JointState};
use crate::error::{check_len, Error, Result};
use crate::estimation::CurrentCoefficients;
use crate::kinematics::KinematicChain;
use crate::payload::{payload_to_frame_n, PayloadSpec};
use crate::reduction::{minimal_regressor_with_gravity, BaseParameterMap};

/// `τ̂ = K̂ (U_f χ̂_f + v_Ψ̂) [+ Y_n π_L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedModel {
    chain: KinematicChain,
    map: BaseParameterMap,
    /// Coefficients with the linear-friction entries zeroed.
    chi_f: CurrentCoefficients,
    /// Current-level sigmoid friction.
    psi: FrictionSet,
    gains: DVector<f64>,
    payload: Option<InertialParameters>,
}

/// The four terms of the equation of motion at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueTerms {
    pub inertia_qdd: DVector<f64>,
    pub coriolis_qd: DVector<f64>,
    pub friction: DVector<f64>,
    pub gravity: DVector<f64>,
}

impl TorqueTerms {
    pub fn sum(&self) -> DVector<f64> {
        &self.inertia_qdd + &self.coriolis_qd + &self.friction + &self.gravity
    }
}

impl IdentifiedModel {
    pub fn new(
        chain: KinematicChain,
        map: BaseParameterMap,
        chi: &CurrentCoefficients,
        psi: FrictionSet,
        gains: DVector<f64>,
    ) -> Result<Self> {
        let n = chain.dof();
        check_len("base map dof", n, map.dof())?;
        check_len("coefficient blocks", n, chi.dof())?;
        check_len("coefficient block length", map.n_coeff(), chi.n_coeff)?;
        check_len("friction joints", n, psi.len())?;
        check_len("gains", n, gains.len())?;
        if gains.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidInput("gains must be positive and finite".into()));
        }
        Ok(Self {
            chi_f: chi.without_friction(&map),
            chain,
            map,
            psi,
            gains,
            payload: None,
        })
    }

    /// Requires all three identification stages.
    pub fn from_robot_model(model: &RobotModel) -> Result<Self> {
        model.stage().require(Stage::Gains, "solve")?;
        let id = model.identification.as_ref().ok_or(Error::IncompleteModel("identification"))?;
        let friction = model.friction.as_ref().ok_or(Error::IncompleteModel("friction"))?;
        debug_assert!(friction.level == FrictionLevel::Current && friction.law == FrictionLaw::Sigmoid);
        let gains = model.gains.clone().ok_or(Error::IncompleteModel("gains"))?;
        Self::new(model.chain.clone(), id.map.clone(), &id.chi, friction.set.clone(), gains)
    }

    pub fn dof(&self) -> usize {
        self.chain.dof()
    }

    pub fn gains(&self) -> &DVector<f64> {
        &self.gains
    }

    pub fn payload(&self) -> Option<&InertialParameters> {
        self.payload.as_ref()
    }

    /// A copy configured with `spec`; `self` is left untouched.
    pub fn configure_payload(&self, spec: &PayloadSpec) -> Result<Self> {
        let pi_l = payload_to_frame_n(spec)?;
        Ok(Self {
            payload: Some(pi_l),
            ..self.clone()
        })
    }

    pub fn clear_payload(&self) -> Self {
        Self {
            payload: None,
            ..self.clone()
        }
    }

    fn check_state(&self, state: &JointState) -> Result<()> {
        check_len("state dof", self.dof(), state.dof())
    }

    /// Rigid-body torque (arm plus payload) with an explicit gravity vector.
    fn rigid(&self, state: &JointState, gravity: &Vector3<f64>) -> Result<DVector<f64>> {
        let y = minimal_regressor_with_gravity(&self.map, &self.chain, state, gravity)?;
        let c = self.chi_f.n_coeff;
        let mut tau = DVector::from_fn(self.dof(), |j, _| {
            self.gains[j] * y.row(j).dot(&self.chi_f.chi.rows(j * c, c).transpose())
        });
        if let Some(p) = &self.payload {
            let yn = link_regressor(&self.chain, state, gravity, self.dof() - 1)?;
            tau += yn * DVector::from_row_slice(&p.to_array());
        }
        Ok(tau)
    }

    pub fn torque(&self, state: &JointState) -> Result<DVector<f64>> {
        self.check_state(state)?;
        Ok(self.rigid(state, &self.chain.gravity)? + self.friction(&state.qd)?)
    }

    /// Predicted motor currents `τ̂ / K̂`.
    pub fn currents(&self, state: &JointState) -> Result<DVector<f64>> {
        Ok(self.torque(state)?.component_div(&self.gains))
    }

    /// `M(q)`, column `i` from a unit `q̈_i` at rest without gravity.
    pub fn inertia(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dof();
        check_len("position dof", n, q.len())?;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut state = JointState::at_rest(q.clone());
            state.qdd[i] = 1.0;
            m.set_column(i, &self.rigid(&state, &Vector3::zeros())?);
        }
        Ok(m)
    }

    /// `g(q)`: rigid-body torque at rest.
    pub fn gravity(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("position dof", self.dof(), q.len())?;
        self.rigid(&JointState::at_rest(q.clone()), &self.chain.gravity)
    }

    /// `C(q, q̇) q̇` as the residual of the zero-acceleration torque over `g(q)`.
    pub fn coriolis_times_qd(&self, q: &DVector<f64>, qd: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dof();
        check_len("position dof", n, q.len())?;
        check_len("velocity dof", n, qd.len())?;
        let state = JointState {
            q: q.clone(),
            qd: qd.clone(),
            qdd: DVector::zeros(n),
        };
        Ok(self.rigid(&state, &self.chain.gravity)? - self.gravity(q)?)
    }

    /// Torque-level friction `K̂ v_Ψ̂(q̇)`.
    pub fn friction(&self, qd: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(friction_sigmoid(&self.psi, qd)?.component_mul(&self.gains))
    }

    pub fn terms(&self, state: &JointState) -> Result<TorqueTerms> {
        self.check_state(state)?;
        Ok(TorqueTerms {
            inertia_qdd: self.inertia(&state.q)? * &state.qdd,
            coriolis_qd: self.coriolis_times_qd(&state.q, &state.qd)?,
            friction: self.friction(&state.qd)?,
            gravity: self.gravity(&state.q)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::reference::{ur10_current_friction, ur10_gains, ur10_links};
    use crate::dynamics::{rnea, DynamicParameters};
    use crate::kinematics::ur10_chain;
    use crate::reduction::{compute_base_map, random_state, DEFAULT_PROBES, DEFAULT_PROBE_SEED, DEFAULT_SVD_TOLERANCE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The solver built from exact coefficients of the reference inertials.
    fn exact_model() -> IdentifiedModel {
        let chain = ur10_chain();
        let map = compute_base_map(&chain, DEFAULT_PROBES, DEFAULT_PROBE_SEED, DEFAULT_SVD_TOLERANCE).unwrap();
        let params = DynamicParameters::from_parts(&ur10_links(), &[[0.0; 3]; 6]).unwrap();
        let pi_m = map.project(&params).unwrap();
        let gains = ur10_gains();
        let chi = CurrentCoefficients::from_model(&map, &pi_m, &gains).unwrap();
        IdentifiedModel::new(chain, map, &chi, ur10_current_friction(), gains).unwrap()
    }

    #[test]
    fn rigid_part_matches_rnea() {
        let m = exact_model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = random_state(&mut rng, 6);
            let expected = rnea(&m.chain, &ur10_links(), &s).unwrap() + m.friction(&s.qd).unwrap();
            let got = m.torque(&s).unwrap();
            assert!((got - &expected).amax() < 1e-9 * (1.0 + expected.amax()));
        }
    }

    #[test]
    fn terms_sum_to_torque() {
        let m = exact_model().configure_payload(&PayloadSpec::franka_hand()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s = random_state(&mut rng, 6);
            let d = m.terms(&s).unwrap().sum() - m.torque(&s).unwrap();
            assert!(d.amax() < 1e-9, "{d}");
        }
    }

    #[test]
    fn inertia_is_symmetric() {
        let m = exact_model();
        let q = DVector::from_vec(vec![0.3, -1.1, 0.7, 0.2, -0.4, 1.0]);
        let b = m.inertia(&q).unwrap();
        assert!((&b - b.transpose()).amax() < 1e-8);
    }

    #[test]
    fn at_rest_only_gravity_and_offsets() {
        let m = exact_model();
        let q = DVector::from_vec(vec![0.1, -0.5, 0.9, 0.0, 1.0, -0.3]);
        let zero = DVector::zeros(6);
        assert!(m.coriolis_times_qd(&q, &zero).unwrap().amax() < 1e-12);
        let f = m.friction(&zero).unwrap();
        for (j, p) in ur10_current_friction().joints().iter().enumerate() {
            assert!((f[j] - m.gains[j] * p.sigmoid(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn payload_configuration_round_trips_bitwise() {
        let m = exact_model();
        let s = random_state(&mut ChaCha8Rng::seed_from_u64(3), 6);
        let with = m.configure_payload(&PayloadSpec::franka_hand()).unwrap();
        assert_ne!(with.torque(&s).unwrap(), m.torque(&s).unwrap());
        assert_eq!(with.clear_payload().torque(&s).unwrap(), m.torque(&s).unwrap());
        let zero = m.configure_payload(&PayloadSpec::zero()).unwrap();
        assert_eq!(zero.torque(&s).unwrap(), m.torque(&s).unwrap());
    }
}
