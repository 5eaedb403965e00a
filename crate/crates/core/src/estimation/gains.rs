//! Stage 3: motor drive gains from paired recordings without (a) and with (b)
//! a partially known payload.
//!
//! Per joint the unknowns are `ζ_j = [χ_f,j; π_uL/K_j; 1/K_j]`. When the
//! payload columns are structurally dependent (the wrist joints of a UR10),
//! the stack is solved for the regrouped combinations `λ = φ + Bφ̄` and `K_j`
//! is read off only if its reciprocal does not mix with any dropped column;
//! otherwise the minimum-norm member is taken and clamped into the bounds.

use nalgebra::{DMatrix, DVector};

use super::least_squares::{column_scales, wlse_full, WeightMatrix, RANK_TOLERANCE};
use super::linear::minimal_rows;
use super::robust::robust_fit;
use crate::dataio::{SampleSet, Scenario};
use crate::dynamics::{friction_sigmoid, link_regressor, FrictionSet, InertialParameters};
use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::PivotedQr;
use crate::payload::KnownParameters;
use crate::reduction::BaseParameterMap;

pub const DEFAULT_LOWER_GAIN: f64 = 10.0;
/// Payload columns with RMS below this are treated as structurally zero.
pub const PAYLOAD_FLOOR: f64 = 1e-9;
/// Largest coupling of `1/K` to a dropped column for `K` to count as
/// determined, in column-normalized units.
pub const COUPLING_TOLERANCE: f64 = 1e-8;

/// The payload as far as it is known: values at the unknown positions are
/// ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownPayload {
    pub values: InertialParameters,
    pub known: KnownParameters,
}

impl KnownPayload {
    pub fn unknown_count(&self) -> usize {
        self.known.unknown_indices().len()
    }
}

/// Bounds on the gains of rank-deficient joints. `upper = None` takes the
/// largest gain already estimated for a preceding joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainBounds {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl Default for GainBounds {
    fn default() -> Self {
        Self {
            lower: DEFAULT_LOWER_GAIN,
            upper: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathChoice {
    /// Direct solve when the stack has full column rank.
    Auto,
    /// Always go through the regrouped, bounded problem.
    Regrouped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainPath {
    Direct,
    Regrouped {
        /// `1/K` is a column of its own in the regrouped problem.
        determined: bool,
        /// The unconstrained estimate fell outside the bounds.
        clamped: bool,
    },
}

/// Solution of one joint's gain system.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGainSolve {
    pub gain: f64,
    pub zeta: DVector<f64>,
    /// Which entries of `zeta` belong to `φ` (identifiable after regrouping).
    pub identifiable_mask: Vec<bool>,
    pub rank: usize,
    pub path: GainPath,
    pub irls_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointGain {
    pub solve: JointGainSolve,
    /// Coefficient positions of the leading `χ_f,j` entries of `ζ_j`.
    pub coefficient_columns: Vec<usize>,
    pub bounds: (f64, f64),
    pub samples: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainEstimate {
    pub k: DVector<f64>,
    pub joints: Vec<JointGain>,
    /// Indices (into the ten payload parameters) of the unknown entries
    /// following `χ_f,j` in each `ζ_j`.
    pub unknown_payload: Vec<usize>,
}

impl GainEstimate {
    /// Joints (1-based) that went through the regrouped problem.
    pub fn regrouped_joints(&self) -> Vec<usize> {
        self.joints
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g.solve.path, GainPath::Regrouped { .. }))
            .map(|(j, _)| j + 1)
            .collect()
    }
}

/// Solves `S ζ = rhs` for one joint; the last column of `S` multiplies
/// `1/K`. `bounds` only act on the regrouped path.
pub fn solve_gain_system(
    stack: &DMatrix<f64>,
    rhs: &DVector<f64>,
    bounds: (f64, f64),
    choice: PathChoice,
    joint: usize,
) -> Result<JointGainSolve> {
    let p = stack.ncols();
    check_len("gain stack rows", stack.nrows(), rhs.len())?;
    if p == 0 {
        return Err(Error::InvalidInput("empty gain stack".into()));
    }
    let s_col = p - 1;
    let scale = column_scales(stack);
    let mut scaled = stack.clone();
    for (j, mut c) in scaled.column_iter_mut().enumerate() {
        c /= scale[j];
    }
    let qr = PivotedQr::new(scaled, RANK_TOLERANCE);
    let rank = qr.rank();
    let indep = qr.independent().to_vec();
    let dep = qr.dependent().to_vec();

    let basic = stack.select_columns(&indep);
    let fit = robust_fit(&basic, rhs)?;
    let mut zeta = DVector::zeros(p);
    for (k, &c) in indep.iter().enumerate() {
        zeta[c] = fit.solution.x[k];
    }
    let mut mask = vec![false; p];
    indep.iter().for_each(|&c| mask[c] = true);

    let positive_gain = |s: f64| {
        let k = 1.0 / s;
        (k.is_finite() && k > 0.0).then_some(k)
    };

    if rank == p && choice == PathChoice::Auto {
        let gain = positive_gain(zeta[s_col]).ok_or_else(|| {
            Error::Numeric(format!("joint {joint}: estimated 1/K = {} gives no positive gain", zeta[s_col]))
        })?;
        return Ok(JointGainSolve {
            gain,
            zeta,
            identifiable_mask: mask,
            rank,
            path: GainPath::Direct,
            irls_iterations: fit.iterations,
        });
    }

    let (lower, upper) = bounds;
    if !(lower < upper) {
        return Err(Error::InfeasibleBounds { joint, lower, upper });
    }
    let clamp = |k: Option<f64>| match k {
        Some(k) if k >= lower && k <= upper => (k, false),
        Some(k) if k > upper => (upper, true),
        // non-positive reciprocals sit closest to the lower bound
        _ => (lower, true),
    };

    let b = qr.regrouping();
    let s_pos = indep.iter().position(|&c| c == s_col);
    let determined = s_pos.is_some_and(|i| b.row(i).iter().all(|x| x.abs() <= COUPLING_TOLERANCE));

    if determined {
        let (gain, clamped) = clamp(positive_gain(zeta[s_col]));
        if clamped {
            // fix 1/K at the bound and refit the remaining basic columns
            let s = 1.0 / gain;
            let others: Vec<usize> = indep.iter().copied().filter(|&c| c != s_col).collect();
            let rhs2 = rhs - stack.column(s_col) * s;
            let w = WeightMatrix::new(fit.weights.diagonal().clone())?;
            let sol = wlse_full(&stack.select_columns(&others), &rhs2, &w)?;
            zeta.fill(0.0);
            for (k, &c) in others.iter().enumerate() {
                zeta[c] = sol.x[k];
            }
            zeta[s_col] = s;
        }
        return Ok(JointGainSolve {
            gain,
            zeta,
            identifiable_mask: mask,
            rank,
            path: GainPath::Regrouped { determined: true, clamped },
            irls_iterations: fit.iterations,
        });
    }

    // 1/K mixes with dropped columns: minimum-norm member of the solution
    // family φ = λ − Bφ̄ in column-normalized units
    let lambda = DVector::from_iterator(rank, indep.iter().map(|&c| zeta[c] * scale[c]));
    let normal = b.transpose() * &b + DMatrix::identity(dep.len(), dep.len());
    let phibar = normal
        .cholesky()
        .ok_or_else(|| Error::Numeric(format!("joint {joint}: regrouped minimum-norm solve failed")))?
        .solve(&(b.transpose() * &lambda));
    let phi = &lambda - &b * &phibar;
    for (k, &c) in indep.iter().enumerate() {
        zeta[c] = phi[k] / scale[c];
    }
    for (k, &c) in dep.iter().enumerate() {
        zeta[c] = phibar[k] / scale[c];
    }
    let (gain, clamped) = clamp(positive_gain(zeta[s_col]));
    zeta[s_col] = 1.0 / gain;
    Ok(JointGainSolve {
        gain,
        zeta,
        identifiable_mask: mask,
        rank,
        path: GainPath::Regrouped { determined: false, clamped },
        irls_iterations: fit.iterations,
    })
}

/// Estimates `K` joint by joint on the linearity-region samples of both
/// recordings.
#[allow(clippy::too_many_arguments)]
pub fn estimate_gains(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    psi: &FrictionSet,
    samples_a: &SampleSet,
    samples_b: &SampleSet,
    payload: &KnownPayload,
    bounds: &GainBounds,
    choice: PathChoice,
) -> Result<GainEstimate> {
    let n = map.dof();
    check_len("friction set", n, psi.len())?;
    check_len("scenario a dof", n, samples_a.dof())?;
    check_len("scenario b dof", n, samples_b.dof())?;
    if samples_a.scenario != Scenario::A || samples_b.scenario != Scenario::B {
        return Err(Error::InvalidInput(
            "gain estimation needs a scenario-a and a scenario-b recording".into(),
        ));
    }
    let unknown = payload.known.unknown_indices();
    if unknown.len() >= 10 {
        return Err(Error::InvalidInput(
            "at least one payload parameter must be known".into(),
        ));
    }
    let known = payload.known.known_indices();
    let values = payload.values.to_array();

    let rows_a = minimal_rows(map, chain, samples_a)?;
    let rows_b = minimal_rows(map, chain, samples_b)?;
    let yn_b = (0..samples_b.len())
        .map(|k| link_regressor(chain, &samples_b.state(k), &chain.gravity, n - 1))
        .collect::<Result<Vec<_>>>()?;
    let friction = |set: &SampleSet| -> Result<Vec<DVector<f64>>> {
        set.qd.iter().map(|qd| friction_sigmoid(psi, qd)).collect()
    };
    let fr_a = friction(samples_a)?;
    let fr_b = friction(samples_b)?;

    let mut k_hat = DVector::zeros(n);
    let mut joints = Vec::with_capacity(n);
    for j in 0..n {
        let cols = map.joint_basis(j).active.clone();
        let idx_a = samples_a.linear_indices(j);
        let idx_b = samples_b.linear_indices(j);
        let (p, nu) = (cols.len(), unknown.len());
        let width = p + nu + 1;
        let m = idx_a.len() + idx_b.len();
        if idx_b.is_empty() || m < width {
            return Err(Error::TooFewSamples {
                joint: j + 1,
                found: m,
                required: width,
            });
        }
        let mut stack = DMatrix::zeros(m, width);
        let mut rhs = DVector::zeros(m);
        for (r, &k) in idx_a.iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                stack[(r, c)] = rows_a[k][(j, col)];
            }
            rhs[r] = samples_a.v[k][j] - fr_a[k][j];
        }
        for (i, &k) in idx_b.iter().enumerate() {
            let r = idx_a.len() + i;
            for (c, &col) in cols.iter().enumerate() {
                stack[(r, c)] = rows_b[k][(j, col)];
            }
            for (c, &u) in unknown.iter().enumerate() {
                stack[(r, p + c)] = yn_b[k][(j, u)];
            }
            stack[(r, width - 1)] = known.iter().map(|&kk| yn_b[k][(j, kk)] * values[kk]).sum();
            rhs[r] = samples_b.v[k][j] - fr_b[k][j];
        }
        // structurally zero payload columns carry only rounding noise
        let mut any_payload = false;
        for c in p..width {
            let rms = stack.column(c).norm() / (m as f64).sqrt();
            if rms < PAYLOAD_FLOOR {
                stack.column_mut(c).fill(0.0);
            } else {
                any_payload = true;
            }
        }
        if !any_payload {
            return Err(Error::PayloadNotExciting { floor: PAYLOAD_FLOOR });
        }

        let upper = bounds.upper.unwrap_or_else(|| {
            if j == 0 {
                f64::INFINITY
            } else {
                k_hat.rows(0, j).max()
            }
        });
        let solve = solve_gain_system(&stack, &rhs, (bounds.lower, upper), choice, j + 1)?;
        k_hat[j] = solve.gain;
        joints.push(JointGain {
            solve,
            coefficient_columns: cols,
            bounds: (bounds.lower, upper),
            samples: (idx_a.len(), idx_b.len()),
        });
    }
    Ok(GainEstimate {
        k: k_hat,
        joints,
        unknown_payload: unknown,
    })
}

/// Mean per-joint ratio `τ_d / v_d`, with the number of samples rejected
/// for `v_d = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthGains {
    pub k: DVector<f64>,
    pub rejected: Vec<usize>,
}

pub fn ground_truth_gains(tau_d: &[DVector<f64>], v_d: &[DVector<f64>]) -> Result<GroundTruthGains> {
    check_len("target current samples", tau_d.len(), v_d.len())?;
    let n = tau_d.first().map_or(0, |t| t.len());
    let mut k = DVector::zeros(n);
    let mut rejected = vec![0; n];
    for j in 0..n {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, v) in tau_d.iter().zip(v_d) {
            check_len("target torque width", n, t.len())?;
            check_len("target current width", n, v.len())?;
            if v[j] == 0.0 {
                rejected[j] += 1;
            } else {
                sum += t[j] / v[j];
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::TooFewSamples {
                joint: j + 1,
                found: 0,
                required: 1,
            });
        }
        k[j] = sum / count as f64;
    }
    Ok(GroundTruthGains { k, rejected })
}
