//! Three-stage identification at current level: linear coefficients,
//! sigmoidal friction, then motor drive gains.

pub mod friction;
pub mod gains;
pub mod least_squares;
pub mod linear;
pub mod report;
pub mod robust;

pub use friction::{fit_friction, friction_residual_currents, predict_currents_full, FrictionJointReport};
pub use gains::{
    estimate_gains, ground_truth_gains, GainBounds, GainEstimate, GainPath, KnownPayload, PathChoice,
};
pub use least_squares::{llse, wlse, WeightMatrix};
pub use linear::{identify_coefficients, predict_currents, CurrentCoefficients, LinearJointReport};
pub use report::{EstimationReport, JointMetrics};
pub use robust::{robust_fit, robust_weights, RobustFit};
