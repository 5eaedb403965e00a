//! Stage 1: per-joint current-level coefficients `χ_j` by robust WLSE on the
//! linearity-region samples.

use nalgebra::{DMatrix, DVector};

use super::robust::robust_fit;
use crate::dataio::SampleSet;
use crate::dynamics::JointState;
use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::scaled_condition_number;
use crate::reduction::{minimal_regressor, BaseParameterMap};

/// Column-normalized condition number above which a joint's stack is
/// rejected as not persistently exciting.
pub const MAX_CONDITION: f64 = 1e8;

/// Stacked `χ`: block `j` (length `c`) holds joint `j`'s coefficients, zero
/// at positions the joint cannot identify.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentCoefficients {
    pub chi: DVector<f64>,
    pub n_coeff: usize,
    /// Variance estimates, same layout as `chi`.
    pub covariance_diag: Option<DVector<f64>>,
}

impl CurrentCoefficients {
    pub fn new(chi: DVector<f64>, n_coeff: usize) -> Result<Self> {
        if n_coeff == 0 || chi.len() % n_coeff != 0 {
            return Err(Error::DimensionMismatch {
                context: "coefficient vector (multiple of c)",
                expected: n_coeff,
                got: chi.len(),
            });
        }
        Ok(Self {
            chi,
            n_coeff,
            covariance_diag: None,
        })
    }

    pub fn dof(&self) -> usize {
        self.chi.len() / self.n_coeff
    }

    pub fn block(&self, j: usize) -> DVector<f64> {
        self.chi.rows(j * self.n_coeff, self.n_coeff).into_owned()
    }

    /// `χ_f`: the coefficients with every friction entry zeroed.
    pub fn without_friction(&self, map: &BaseParameterMap) -> Self {
        let mut out = self.clone();
        let r = map.n_inertial();
        for j in 0..self.dof() {
            out.chi.rows_mut(j * self.n_coeff + r, self.n_coeff - r).fill(0.0);
        }
        out.covariance_diag = None;
        out
    }

    /// Joint `j`'s linear friction `[f_o, f_v, f_c]` at current level.
    pub fn linear_friction(&self, map: &BaseParameterMap, j: usize) -> [f64; 3] {
        let b = j * self.n_coeff;
        [0, 1, 2].map(|k| self.chi[b + map.friction_coeff(j, k)])
    }

    /// Ground-truth layout for a model: `χ_j = G_j π_m / K_j`.
    pub fn from_model(map: &BaseParameterMap, pi_m: &DVector<f64>, gains: &DVector<f64>) -> Result<Self> {
        check_len("gains", map.dof(), gains.len())?;
        let c = map.n_coeff();
        let mut chi = DVector::zeros(map.dof() * c);
        for j in 0..map.dof() {
            let block = map.joint_coefficients(j, pi_m)? / gains[j];
            chi.rows_mut(j * c, c).copy_from(&block);
        }
        Self::new(chi, c)
    }
}

/// Per-joint diagnostics of a stage-1 fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearJointReport {
    pub samples: usize,
    pub condition: f64,
    pub irls_iterations: usize,
    pub irls_converged: bool,
    pub residual_rms: f64,
}

/// `Ŷ(state_k)` for every sample, evaluated once.
pub fn minimal_rows(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    samples: &SampleSet,
) -> Result<Vec<DMatrix<f64>>> {
    check_len("sample dof", chain.dof(), samples.dof())?;
    (0..samples.len())
        .map(|k| minimal_regressor(map, chain, &samples.state(k)))
        .collect()
}

/// Joint `j`'s stack over `idx`, restricted to `cols`.
pub(crate) fn joint_stack(rows: &[DMatrix<f64>], idx: &[usize], j: usize, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), cols.len(), |r, c| rows[idx[r]][(j, cols[c])])
}

pub fn identify_coefficients(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    samples: &SampleSet,
) -> Result<(CurrentCoefficients, Vec<LinearJointReport>)> {
    let rows = minimal_rows(map, chain, samples)?;
    identify_coefficients_from_rows(map, &rows, samples)
}

pub fn identify_coefficients_from_rows(
    map: &BaseParameterMap,
    rows: &[DMatrix<f64>],
    samples: &SampleSet,
) -> Result<(CurrentCoefficients, Vec<LinearJointReport>)> {
    let n = map.dof();
    let c = map.n_coeff();
    check_len("regressor rows", samples.len(), rows.len())?;
    let mut chi = DVector::zeros(n * c);
    let mut var = DVector::zeros(n * c);
    let mut reports = Vec::with_capacity(n);
    for j in 0..n {
        let idx = samples.linear_indices(j);
        let cols = map.joint_columns(j);
        if idx.len() < cols.len() {
            return Err(Error::TooFewSamples {
                joint: j + 1,
                found: idx.len(),
                required: cols.len(),
            });
        }
        let a = joint_stack(rows, &idx, j, &cols);
        let b = DVector::from_iterator(idx.len(), idx.iter().map(|&k| samples.v[k][j]));
        let condition = scaled_condition_number(&a);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::InsufficientExcitation {
                joint: j + 1,
                condition,
                limit: MAX_CONDITION,
            });
        }
        let fit = robust_fit(&a, &b)?;
        let dof_resid = (idx.len() - cols.len()).max(1) as f64;
        let w = fit.weights.diagonal();
        let sigma2 = fit
            .solution
            .residual
            .iter()
            .zip(w.iter())
            .map(|(r, w)| w * r * r)
            .sum::<f64>()
            / dof_resid;
        for (k, &col) in cols.iter().enumerate() {
            chi[j * c + col] = fit.solution.x[k];
            var[j * c + col] = sigma2 * fit.solution.unscaled_covariance[k];
        }
        reports.push(LinearJointReport {
            samples: idx.len(),
            condition,
            irls_iterations: fit.iterations,
            irls_converged: fit.converged,
            residual_rms: fit.solution.residual.norm() / (idx.len() as f64).sqrt(),
        });
    }
    let mut out = CurrentCoefficients::new(chi, c)?;
    out.covariance_diag = Some(var);
    Ok((out, reports))
}

/// `v̂ = U χ`: row `j` of `Ŷ` against block `j`.
pub fn predict_currents(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    chi: &CurrentCoefficients,
    state: &JointState,
) -> Result<DVector<f64>> {
    let y = minimal_regressor(map, chain, state)?;
    predict_from_row(&y, chi)
}

pub(crate) fn predict_from_row(y: &DMatrix<f64>, chi: &CurrentCoefficients) -> Result<DVector<f64>> {
    check_len("coefficient blocks", y.nrows(), chi.dof())?;
    check_len("coefficient block length", y.ncols(), chi.n_coeff)?;
    let c = chi.n_coeff;
    Ok(DVector::from_fn(y.nrows(), |j, _| {
        y.row(j).dot(&chi.chi.rows(j * c, c).transpose())
    }))
}
