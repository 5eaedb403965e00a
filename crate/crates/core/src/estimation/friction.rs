//! Stage 2: sigmoidal friction at current level, fitted per joint on the
//! low-velocity samples by Levenberg–Marquardt from a fixed grid of starts.

use nalgebra::{DMatrix, DVector};

use super::least_squares::llse;
use super::linear::{minimal_rows, predict_from_row, CurrentCoefficients};
use crate::dataio::SampleSet;
use crate::dynamics::{friction_sigmoid, sgn, FrictionSet, JointFriction, JointState};
use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::PivotedQr;
use crate::reduction::{minimal_regressor, BaseParameterMap};

pub const MIN_REGION_SAMPLES: usize = 50;
pub const MAX_LM_ITERATIONS: usize = 400;
/// Objectives closer than this (relative) count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-8;

/// `v̂_f = v − U_f χ̂_f` for every sample: the part of the measured current
/// the non-friction model leaves unexplained.
pub fn friction_residual_currents(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    chi: &CurrentCoefficients,
    samples: &SampleSet,
) -> Result<Vec<DVector<f64>>> {
    let rows = minimal_rows(map, chain, samples)?;
    friction_residual_from_rows(map, &rows, chi, samples)
}

pub fn friction_residual_from_rows(
    map: &BaseParameterMap,
    rows: &[DMatrix<f64>],
    chi: &CurrentCoefficients,
    samples: &SampleSet,
) -> Result<Vec<DVector<f64>>> {
    check_len("regressor rows", samples.len(), rows.len())?;
    let chi_f = chi.without_friction(map);
    rows.iter()
        .zip(samples.v.iter())
        .map(|(y, v)| Ok(v - predict_from_row(y, &chi_f)?))
        .collect()
}

/// Result of one Levenberg–Marquardt run.
#[derive(Debug, Clone, PartialEq)]
pub struct LmRun {
    pub start: [f64; 5],
    pub params: [f64; 5],
    /// Sum of squared residuals after each accepted step, starting with the
    /// initial point.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub diverged: bool,
}

impl LmRun {
    pub fn objective(&self) -> f64 {
        *self.history.last().unwrap_or(&f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrictionJointReport {
    pub samples: usize,
    pub runs: Vec<LmRun>,
    /// Index into `runs` of the winner, `None` when the affine fit won.
    pub chosen: Option<usize>,
    pub objective: f64,
}

fn objective(p: &JointFriction, x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&xi, &yi)| (p.sigmoid(xi) - yi).powi(2)).sum()
}

/// Minimizes `Σ (f(x_k; p) − y_k)²` from `start`. Only steps that lower the
/// objective are taken, so `history` is non-increasing.
pub fn levenberg_marquardt(start: [f64; 5], x: &[f64], y: &[f64]) -> LmRun {
    let m = x.len();
    let mut p = JointFriction::from_array(start);
    let mut f = objective(&p, x, y);
    let mut history = vec![f];
    let mut mu = 1e-3;
    let mut iterations = 0;
    let diverged_run = |history: Vec<f64>, iterations| LmRun {
        start,
        params: [f64::NAN; 5],
        history,
        iterations,
        diverged: true,
    };
    if !f.is_finite() {
        return diverged_run(history, 0);
    }
    while iterations < MAX_LM_ITERATIONS {
        iterations += 1;
        let mut jac = DMatrix::zeros(m + 5, 5);
        let mut rhs = DVector::zeros(m + 5);
        for k in 0..m {
            let g = p.sigmoid_gradient(x[k]);
            for i in 0..5 {
                jac[(k, i)] = g[i];
            }
            rhs[k] = y[k] - p.sigmoid(x[k]);
        }
        let grad = jac.rows(0, m).transpose() * rhs.rows(0, m);
        if grad.amax() <= 1e-15 * (1.0 + f) {
            break;
        }
        // Marquardt scaling by the Jacobian column norms
        let diag: Vec<f64> = (0..5)
            .map(|i| jac.view((0, i), (m, 1)).norm_squared().max(1e-12))
            .collect();
        let mut accepted = false;
        let mut stalled = false;
        while mu < 1e16 {
            for i in 0..5 {
                jac[(m + i, i)] = (mu * diag[i]).sqrt();
            }
            let qr = PivotedQr::new(jac.clone(), 1e-14);
            let step = qr.solve_basic(&rhs);
            let mut trial = p.to_array();
            for i in 0..5 {
                trial[i] += step[i];
            }
            let cand = JointFriction::from_array(trial);
            let fc = objective(&cand, x, y);
            if fc.is_finite() && fc < f {
                let rel = (f - fc) / f.max(f64::MIN_POSITIVE);
                let tiny_step = step.norm() <= 1e-12 * (1.0 + DVector::from_row_slice(&p.to_array()).norm());
                p = cand;
                f = fc;
                history.push(f);
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                stalled = rel < 1e-14 || tiny_step;
                break;
            }
            mu *= 4.0;
        }
        if !accepted || stalled || f == 0.0 {
            break;
        }
    }
    if !p.is_finite() {
        return diverged_run(history, iterations);
    }
    LmRun {
        start,
        params: p.to_array(),
        history,
        iterations,
        diverged: false,
    }
}

/// The eight deterministic starts: signs of `f_c` and `δ`, and two
/// steepness magnitudes, seeded from a linear `[1, x, sgn x]` fit.
pub fn starting_points(x: &[f64], y: &[f64], threshold: f64) -> Result<Vec<[f64; 5]>> {
    let m = x.len();
    let a = DMatrix::from_fn(m, 3, |k, i| match i {
        0 => 1.0,
        1 => x[k],
        _ => sgn(x[k]),
    });
    let (f_o, f_v, c) = match llse(&a, &DVector::from_column_slice(y)) {
        Ok(s) => (s[0], s[1], s[2]),
        // one-sided velocities: no Coulomb term can be separated
        Err(_) => {
            let s = llse(&a.columns(0, 2).into_owned(), &DVector::from_column_slice(y))?;
            (s[0], s[1], 0.0)
        }
    };
    let mag = if c != 0.0 { 2.0 * c.abs() } else { 1e-3 };
    let mut starts = Vec::with_capacity(8);
    for fc_sign in [1.0, -1.0] {
        for scale in [4.0, 40.0] {
            for d_sign in [1.0, -1.0] {
                let f_c = fc_sign * mag;
                starts.push([f_o - 0.5 * f_c, f_v, f_c, d_sign * scale / threshold, 0.0]);
            }
        }
    }
    Ok(starts)
}

/// Fits one joint. Best objective wins; near-ties go to the smallest
/// parameter norm, which also prefers the affine law when `f_c` is idle.
pub fn fit_joint(x: &[f64], y: &[f64], threshold: f64, joint: usize) -> Result<(JointFriction, FrictionJointReport)> {
    check_len("friction samples", x.len(), y.len())?;
    if x.len() < MIN_REGION_SAMPLES {
        return Err(Error::TooFewSamples {
            joint,
            found: x.len(),
            required: MIN_REGION_SAMPLES,
        });
    }
    let runs: Vec<LmRun> = starting_points(x, y, threshold)?
        .into_iter()
        .map(|s| levenberg_marquardt(s, x, y))
        .collect();
    if runs.iter().all(|r| r.diverged) {
        let diagnostics = runs
            .iter()
            .map(|r| format!("start {:?}: {} iterations, objective {:e}", r.start, r.iterations, r.objective()))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::FitDiverged { joint, diagnostics });
    }

    let affine = {
        let a = DMatrix::from_fn(x.len(), 2, |k, i| if i == 0 { 1.0 } else { x[k] });
        let s = llse(&a, &DVector::from_column_slice(y))?;
        JointFriction { f_o: s[0], f_v: s[1], f_c: 0.0, delta: 0.0, nu: 0.0 }
    };
    let scale: f64 = y.iter().map(|v| v * v).sum();
    let tie = |a: f64, b: f64| (a - b).abs() <= TIE_TOLERANCE * a.max(b) + 1e-14 * scale;
    let norm = |p: &[f64; 5]| p.iter().map(|v| v * v).sum::<f64>();

    let mut best: (Option<usize>, [f64; 5], f64) = (None, affine.to_array(), objective(&affine, x, y));
    for (i, r) in runs.iter().enumerate() {
        if r.diverged {
            continue;
        }
        let f = r.objective();
        let better = if tie(f, best.2) {
            norm(&r.params) < norm(&best.1)
        } else {
            f < best.2
        };
        if better {
            best = (Some(i), r.params, f);
        }
    }
    let fit = JointFriction::from_array(best.1);
    Ok((
        fit,
        FrictionJointReport {
            samples: x.len(),
            runs,
            chosen: best.0,
            objective: best.2,
        },
    ))
}

/// Fits every joint on samples with `|q̇_j| < threshold`.
pub fn fit_friction(
    residuals: &[DVector<f64>],
    qd: &[DVector<f64>],
    threshold: f64,
) -> Result<(FrictionSet, Vec<FrictionJointReport>)> {
    check_len("residual samples", qd.len(), residuals.len())?;
    let n = qd.first().map_or(0, |v| v.len());
    let mut set = Vec::with_capacity(n);
    let mut reports = Vec::with_capacity(n);
    for j in 0..n {
        let (x, y): (Vec<f64>, Vec<f64>) = qd
            .iter()
            .zip(residuals)
            .filter(|(q, _)| q[j].abs() < threshold)
            .map(|(q, r)| (q[j], r[j]))
            .unzip();
        let (f, rep) = fit_joint(&x, &y, threshold, j + 1)?;
        set.push(f);
        reports.push(rep);
    }
    Ok((FrictionSet(set), reports))
}

/// `v̂ = U_f χ̂_f + v_Ψ̂(q̇)`.
pub fn predict_currents_full(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    chi: &CurrentCoefficients,
    psi: &FrictionSet,
    state: &JointState,
) -> Result<DVector<f64>> {
    let y = minimal_regressor(map, chain, state)?;
    Ok(predict_from_row(&y, &chi.without_friction(map))? + friction_sigmoid(psi, &state.qd)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::reference::UR10_CURRENT_FRICTION;

    fn grid(m: usize, lim: f64) -> Vec<f64> {
        (0..m).map(|k| -lim + 2.0 * lim * (k as f64 + 0.5) / m as f64).collect()
    }

    #[test]
    fn history_is_non_increasing() {
        let truth = JointFriction { f_o: -0.07, f_v: 0.076, f_c: 0.147, delta: 7.95, nu: -0.0185 };
        let x = grid(200, 0.17);
        let y: Vec<f64> = x.iter().map(|&v| truth.sigmoid(v)).collect();
        for s in starting_points(&x, &y, 0.17).unwrap() {
            let run = levenberg_marquardt(s, &x, &y);
            assert!(run.history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn affine_data_gives_affine_fit() {
        let x = grid(120, 0.17);
        let y: Vec<f64> = x.iter().map(|&v| 0.3 + 1.2 * v).collect();
        let (f, _) = fit_joint(&x, &y, 0.17, 1).unwrap();
        assert!(f.f_c.abs() < 1e-6);
        assert!((f.f_o - 0.3).abs() < 1e-9 && (f.f_v - 1.2).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let x = grid(30, 0.17);
        let y = x.clone();
        assert!(matches!(fit_joint(&x, &y, 0.17, 2), Err(Error::TooFewSamples { joint: 2, .. })));
    }

    #[test]
    fn eight_starts_cover_sign_grid() {
        let x = grid(100, 0.17);
        let y: Vec<f64> = x.iter().map(|&v| 0.1 * sgn(v)).collect();
        let s = starting_points(&x, &y, 0.17).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.iter().filter(|p| p[2] > 0.0).count(), 4);
        assert_eq!(s.iter().filter(|p| p[3] > 0.0).count(), 4);
        // f_c σ(δx) + f_o reproduces the sgn fit at both ends for the
        // sign-consistent starts
        let p = JointFriction::from_array(s[0]);
        assert!((p.sigmoid(0.17) - 0.1).abs() < 0.05);
    }

    #[test]
    fn recovers_ur10_rows_noiseless() {
        let x = grid(400, 0.17);
        for (j, row) in UR10_CURRENT_FRICTION.iter().enumerate() {
            let truth = JointFriction { f_v: row[0], f_o: row[1], f_c: row[2], delta: row[3], nu: row[4] };
            let y: Vec<f64> = x.iter().map(|&v| truth.sigmoid(v)).collect();
            let (fit, rep) = fit_joint(&x, &y, 0.17, j + 1).unwrap();
            for (a, b) in fit.to_array().iter().zip(truth.to_array()) {
                assert!((a - b).abs() <= 1e-4 * b.abs(), "joint {}: {:?} vs {:?} ({:e})", j + 1, fit, truth, rep.objective);
            }
        }
    }
}
