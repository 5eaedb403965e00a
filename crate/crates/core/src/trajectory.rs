//! Finite Fourier-series excitation trajectories
//! `q(t) = q₀ + Σ_k a_k sin(kωt) + b_k cos(kωt)`, `ω = 2π/T_f`,
//! with exact derivatives, and an excitation score.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::JointState;
use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::{condition_number, numerical_rank};
use crate::reduction::{minimal_regressor, BaseParameterMap};

pub const DEFAULT_HARMONICS: usize = 5;
pub const DEFAULT_PERIOD_S: f64 = 20.0;
pub const DEFAULT_RATE_HZ: f64 = 125.0;

/// Share of each limit the generator budgets for amplitudes.
const LIMIT_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct JointLimits {
    pub q_max: DVector<f64>,
    pub qd_max: DVector<f64>,
    pub qdd_max: DVector<f64>,
}

impl JointLimits {
    pub fn dof(&self) -> usize {
        self.q_max.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dof();
        check_len("velocity limits", n, self.qd_max.len())?;
        check_len("acceleration limits", n, self.qdd_max.len())?;
        let all = self.q_max.iter().chain(self.qd_max.iter()).chain(self.qdd_max.iter());
        if all.clone().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput("joint limits must be positive and finite".into()));
        }
        Ok(())
    }
}

/// UR10 limits: ±2π position, 120°/s on the two base joints and 180°/s on
/// the others. The acceleration bound is an operating choice.
pub fn ur10_limits() -> JointLimits {
    let base = 2.0 * PI / 3.0;
    JointLimits {
        q_max: DVector::from_element(6, 2.0 * PI),
        qd_max: DVector::from_vec(vec![base, base, PI, PI, PI, PI]),
        qdd_max: DVector::from_element(6, 8.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierTrajectory {
    pub q0: DVector<f64>,
    /// Sine coefficients, one vector per harmonic.
    pub a: Vec<DVector<f64>>,
    /// Cosine coefficients, one vector per harmonic.
    pub b: Vec<DVector<f64>>,
    /// Fundamental period `T_f`, s.
    pub period: f64,
    pub duration: f64,
    pub sample_period: f64,
}

impl FourierTrajectory {
    pub fn new(
        q0: DVector<f64>,
        a: Vec<DVector<f64>>,
        b: Vec<DVector<f64>>,
        period: f64,
        duration: f64,
        sample_period: f64,
    ) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "need N_h ≥ 1 harmonics with matching a/b (got {} and {})",
                a.len(),
                b.len()
            )));
        }
        let n = q0.len();
        for h in a.iter().chain(b.iter()) {
            check_len("harmonic coefficients", n, h.len())?;
        }
        if !(period > 0.0 && duration > 0.0 && sample_period > 0.0) {
            return Err(Error::InvalidInput("times must be positive".into()));
        }
        let ratio = period / sample_period;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "T_f = {period} s is not a multiple of the sample period {sample_period} s"
            )));
        }
        Ok(Self {
            q0,
            a,
            b,
            period,
            duration,
            sample_period,
        })
    }

    pub fn dof(&self) -> usize {
        self.q0.len()
    }

    pub fn harmonics(&self) -> usize {
        self.a.len()
    }

    pub fn evaluate(&self, t: f64) -> JointState {
        let w = 2.0 * PI / self.period;
        let n = self.dof();
        let mut q = self.q0.clone();
        let mut qd = DVector::zeros(n);
        let mut qdd = DVector::zeros(n);
        for (k, (a, b)) in self.a.iter().zip(self.b.iter()).enumerate() {
            let wk = w * (k + 1) as f64;
            let (s, c) = (wk * t).sin_cos();
            q += a * s + b * c;
            qd += (a * c - b * s) * wk;
            qdd -= (a * s + b * c) * (wk * wk);
        }
        JointState { q, qd, qdd }
    }

    /// Number of samples on the grid; a duration that is not a whole number
    /// of periods is rounded down.
    pub fn n_samples(&self) -> usize {
        ((self.duration / self.sample_period) + 1e-9).floor() as usize
    }

    /// Sample times `k · sample_period`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples()).map(|k| k as f64 * self.sample_period).collect()
    }

    pub fn sample(&self) -> Vec<JointState> {
        self.times().into_iter().map(|t| self.evaluate(t)).collect()
    }

    /// Peak |q|, |q̇|, |q̈| per joint over the sample grid.
    pub fn peaks(&self) -> [DVector<f64>; 3] {
        let n = self.dof();
        let mut out: [DVector<f64>; 3] = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
        for s in self.sample() {
            for j in 0..n {
                out[0][j] = out[0][j].max(s.q[j].abs());
                out[1][j] = out[1][j].max(s.qd[j].abs());
                out[2][j] = out[2][j].max(s.qdd[j].abs());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub harmonics: usize,
    pub period: f64,
    pub duration: f64,
    pub sample_period: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            harmonics: DEFAULT_HARMONICS,
            period: DEFAULT_PERIOD_S,
            duration: DEFAULT_PERIOD_S,
            sample_period: 1.0 / DEFAULT_RATE_HZ,
        }
    }
}

/// Random coefficients scaled so the triangle-inequality bounds on |q|, |q̇|
/// and |q̈| stay within a fraction of the limits.
pub fn random_trajectory(
    seed: u64,
    limits: &JointLimits,
    cfg: &TrajectoryConfig,
) -> Result<FourierTrajectory> {
    limits.validate()?;
    if cfg.harmonics == 0 {
        return Err(Error::InvalidInput("N_h must be at least 1".into()));
    }
    let n = limits.dof();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 2.0 * PI / cfg.period;
    let mut a: Vec<DVector<f64>> = (0..cfg.harmonics)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let mut b: Vec<DVector<f64>> = (0..cfg.harmonics)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let q0 = DVector::from_fn(n, |j, _| {
        rng.random_range(-0.25..0.25) * limits.q_max[j].min(PI)
    });
    for j in 0..n {
        let mut pos = 0.0;
        let mut vel = 0.0;
        let mut acc = 0.0;
        for k in 0..cfg.harmonics {
            let wk = w * (k + 1) as f64;
            let amp = a[k][j].abs() + b[k][j].abs();
            pos += amp;
            vel += amp * wk;
            acc += amp * wk * wk;
        }
        let room = (limits.q_max[j] - q0[j].abs()).max(0.0);
        let scale = (LIMIT_FRACTION * room / pos)
            .min(LIMIT_FRACTION * limits.qd_max[j] / vel)
            .min(LIMIT_FRACTION * limits.qdd_max[j] / acc);
        for k in 0..cfg.harmonics {
            a[k][j] *= scale;
            b[k][j] *= scale;
        }
    }
    FourierTrajectory::new(q0, a, b, cfg.period, cfg.duration, cfg.sample_period)
}

/// Seeds behind the named trajectories.
const BUILTIN_SEEDS: [(&str, u64); 2] = [("A", 0xA11CE), ("B", 0xB0B)];

/// Built-in held-out trajectories "A" and "B" (default configuration).
pub fn builtin(name: &str, limits: &JointLimits) -> Result<FourierTrajectory> {
    let seed = BUILTIN_SEEDS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|&(_, s)| s)
        .ok_or_else(|| Error::InvalidInput(format!("no built-in trajectory '{name}'")))?;
    random_trajectory(seed, limits, &TrajectoryConfig::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    /// `(joint, quantity, peak, limit)` for every exceeded limit; joints are
    /// 1-based, quantity is `q`, `qd` or `qdd`.
    pub violations: Vec<(usize, &'static str, f64, f64)>,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationScore {
    /// 2-norm condition number of the stacked minimal regressor.
    pub condition: f64,
    pub rank: usize,
    pub rank_deficient: bool,
    pub feasibility: Feasibility,
}

pub fn check_limits(traj: &FourierTrajectory, limits: &JointLimits) -> Result<Feasibility> {
    check_len("limits dof", traj.dof(), limits.dof())?;
    let peaks = traj.peaks();
    let mut violations = Vec::new();
    for j in 0..traj.dof() {
        for (k, (name, lim)) in [("q", &limits.q_max), ("qd", &limits.qd_max), ("qdd", &limits.qdd_max)]
            .into_iter()
            .enumerate()
        {
            if peaks[k][j] > lim[j] {
                violations.push((j + 1, name, peaks[k][j], lim[j]));
            }
        }
    }
    Ok(Feasibility { violations })
}

/// Condition number of `Ŷ` stacked over the trajectory samples, plus a
/// limit check. Infeasible trajectories are reported, not rejected.
pub fn excitation_score(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    traj: &FourierTrajectory,
    limits: &JointLimits,
) -> Result<ExcitationScore> {
    let n = chain.dof();
    let c = map.n_coeff();
    let samples = traj.sample();
    let mut stack = DMatrix::zeros(samples.len() * n, c);
    for (s, state) in samples.iter().enumerate() {
        stack
            .view_mut((s * n, 0), (n, c))
            .copy_from(&minimal_regressor(map, chain, state)?);
    }
    let rank = numerical_rank(&stack, map.svd_tolerance);
    let rank_deficient = rank < c;
    Ok(ExcitationScore {
        condition: if rank_deficient {
            f64::INFINITY
        } else {
            condition_number(&stack)
        },
        rank,
        rank_deficient,
        feasibility: check_limits(traj, limits)?,
    })
}
