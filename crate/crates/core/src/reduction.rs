//! Base-parameter reduction: the minimal regressor `Ŷ` and the projection
//! `π ↦ π_m` found by numerical rank analysis of a probe stack.
//!
//! Coefficient layout (length `c = r + 3n`): the `r` independent inertial
//! combinations first, then `[f_o, f_v, f_c]` per joint. Friction columns
//! never enter the rank analysis.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    regressor_with_gravity, DynamicParameters, JointState, FRICTION_PER_JOINT, PARAMS_PER_LINK,
};
use crate::error::{check_len, Error, Result};
use crate::kinematics::KinematicChain;
use crate::linalg::{numerical_rank, PivotedQr};

pub const DEFAULT_PROBES: usize = 200;
pub const DEFAULT_SVD_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed;

/// Probe envelope: `|q| ≤ π`, `|q̇| ≤ 3`, `|q̈| ≤ 10`.
const PROBE_Q: f64 = std::f64::consts::PI;
const PROBE_QD: f64 = 3.0;
const PROBE_QDD: f64 = 10.0;

/// The subset of base coefficients that one joint's regressor row can see.
///
/// Row `j` of `Ŷ` is structurally blind to some inertial coefficients (links
/// before `j`) and mixes others; `regroup` maps the `r` inertial base
/// coefficients to the `active.len()` combinations row `j` identifies:
/// `ŷ_j · π_m = ŷ_j[active] · (regroup · π_m[..r])`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointBasis {
    pub active: Vec<usize>,
    pub regroup: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseParameterMap {
    dof: usize,
    /// Inertial columns of `Y` kept in `Ŷ`, in pivot order.
    independent: Vec<usize>,
    /// Inertial columns folded into the independent ones.
    dependent: Vec<usize>,
    /// `Y_dep = Y_indep · regroup`.
    regroup: DMatrix<f64>,
    joint_bases: Vec<JointBasis>,
    pub svd_tolerance: f64,
    pub n_probe: usize,
    pub seed: u64,
    /// Set when two probe seeds disagree on the rank.
    pub rank_warning: Option<String>,
}

impl BaseParameterMap {
    /// Rebuilds a map from its stored parts (see `dataio::model_file`).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dof: usize,
        independent: Vec<usize>,
        dependent: Vec<usize>,
        regroup: DMatrix<f64>,
        joint_bases: Vec<JointBasis>,
        svd_tolerance: f64,
        n_probe: usize,
        seed: u64,
    ) -> Result<Self> {
        let r = independent.len();
        check_len("inertial column partition", PARAMS_PER_LINK * dof, r + dependent.len())?;
        let mut seen = vec![false; PARAMS_PER_LINK * dof];
        for &i in independent.iter().chain(dependent.iter()) {
            if i >= seen.len() || seen[i] {
                return Err(Error::InvalidInput(format!("bad inertial column index {i}")));
            }
            seen[i] = true;
        }
        if regroup.shape() != (r, dependent.len()) {
            return Err(Error::InvalidInput("regroup matrix shape".into()));
        }
        check_len("joint bases", dof, joint_bases.len())?;
        for b in &joint_bases {
            if b.regroup.shape() != (b.active.len(), r) || b.active.iter().any(|&a| a >= r) {
                return Err(Error::InvalidInput("joint basis shape".into()));
            }
        }
        Ok(Self {
            dof,
            independent,
            dependent,
            regroup,
            joint_bases,
            svd_tolerance,
            n_probe,
            seed,
            rank_warning: None,
        })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    /// Number of base coefficients `c`.
    pub fn n_coeff(&self) -> usize {
        self.n_inertial() + FRICTION_PER_JOINT * self.dof
    }

    /// Number of independent inertial combinations `r`.
    pub fn n_inertial(&self) -> usize {
        self.independent.len()
    }

    pub fn independent(&self) -> &[usize] {
        &self.independent
    }

    pub fn dependent(&self) -> &[usize] {
        &self.dependent
    }

    pub fn regroup(&self) -> &DMatrix<f64> {
        &self.regroup
    }

    pub fn joint_bases(&self) -> &[JointBasis] {
        &self.joint_bases
    }

    pub fn joint_basis(&self, j: usize) -> &JointBasis {
        &self.joint_bases[j]
    }

    /// Position of friction coefficient `k` of joint `j` in `π_m`.
    pub fn friction_coeff(&self, j: usize, k: usize) -> usize {
        self.n_inertial() + FRICTION_PER_JOINT * j + k
    }

    /// Coefficient positions row `j` can identify: its active inertial
    /// combinations, then its own three friction terms.
    pub fn joint_columns(&self, j: usize) -> Vec<usize> {
        let mut cols = self.joint_bases[j].active.clone();
        cols.extend((0..FRICTION_PER_JOINT).map(|k| self.friction_coeff(j, k)));
        cols
    }

    /// The `c × 13n` matrix `P` with `π_m = P π`.
    pub fn projection(&self) -> DMatrix<f64> {
        let n = self.dof;
        let mut p = DMatrix::zeros(self.n_coeff(), (PARAMS_PER_LINK + FRICTION_PER_JOINT) * n);
        for (k, &col) in self.independent.iter().enumerate() {
            p[(k, col)] = 1.0;
            for (d, &dcol) in self.dependent.iter().enumerate() {
                p[(k, dcol)] = self.regroup[(k, d)];
            }
        }
        for j in 0..n {
            for k in 0..FRICTION_PER_JOINT {
                p[(self.friction_coeff(j, k), DynamicParameters::friction_index(n, j, k))] = 1.0;
            }
        }
        p
    }

    /// `π_m = P π`.
    pub fn project(&self, params: &DynamicParameters) -> Result<DVector<f64>> {
        check_len("parameter dof", self.dof, params.dof())?;
        let pi = params.as_vector();
        let mut out = DVector::zeros(self.n_coeff());
        for (k, &col) in self.independent.iter().enumerate() {
            let mut v = pi[col];
            for (d, &dcol) in self.dependent.iter().enumerate() {
                v += self.regroup[(k, d)] * pi[dcol];
            }
            out[k] = v;
        }
        for j in 0..self.dof {
            for k in 0..FRICTION_PER_JOINT {
                out[self.friction_coeff(j, k)] =
                    pi[DynamicParameters::friction_index(self.dof, j, k)];
            }
        }
        Ok(out)
    }

    /// Joint `j`'s identifiable coefficient vector as a full `c`-vector:
    /// regrouped combinations at the active positions, own friction terms,
    /// zeros elsewhere.
    pub fn joint_coefficients(&self, j: usize, pi_m: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("coefficient vector", self.n_coeff(), pi_m.len())?;
        let basis = &self.joint_bases[j];
        let r = self.n_inertial();
        let grouped = &basis.regroup * pi_m.rows(0, r);
        let mut out = DVector::zeros(self.n_coeff());
        for (k, &a) in basis.active.iter().enumerate() {
            out[a] = grouped[k];
        }
        for k in 0..FRICTION_PER_JOINT {
            let i = self.friction_coeff(j, k);
            out[i] = pi_m[i];
        }
        Ok(out)
    }

    /// Columns of `Ŷ` selected from a full regressor.
    pub fn reduce(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dof;
        check_len("regressor columns", (PARAMS_PER_LINK + FRICTION_PER_JOINT) * n, y.ncols())?;
        let mut out = DMatrix::zeros(y.nrows(), self.n_coeff());
        for (k, &col) in self.independent.iter().enumerate() {
            out.set_column(k, &y.column(col));
        }
        for j in 0..n {
            for k in 0..FRICTION_PER_JOINT {
                out.set_column(
                    self.friction_coeff(j, k),
                    &y.column(DynamicParameters::friction_index(n, j, k)),
                );
            }
        }
        Ok(out)
    }

    fn check_chain(&self, chain: &KinematicChain) -> Result<()> {
        check_len("base map / chain dof", self.dof, chain.dof())
    }
}

/// Uniform random probe state inside the probe envelope.
pub fn random_state(rng: &mut impl Rng, n: usize) -> JointState {
    let draw = |rng: &mut dyn rand::RngCore, lim: f64| {
        DVector::from_fn(n, |_, _| rng.random_range(-lim..=lim))
    };
    JointState {
        q: draw(rng, PROBE_Q),
        qd: draw(rng, PROBE_QD),
        qdd: draw(rng, PROBE_QDD),
    }
}

fn probe_stack(chain: &KinematicChain, n_probe: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = chain.dof();
    let p = PARAMS_PER_LINK * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stack = DMatrix::zeros(n_probe * n, p);
    for s in 0..n_probe {
        let state = random_state(&mut rng, n);
        let y = regressor_with_gravity(chain, &state, &chain.gravity)?;
        stack.view_mut((s * n, 0), (n, p)).copy_from(&y.columns(0, p));
    }
    Ok(stack)
}

/// Rank-revealing split of a stack's columns, with the rank decided by SVD.
fn split_columns(stack: DMatrix<f64>, tol: f64) -> PivotedQr {
    let rank = numerical_rank(&stack, tol);
    PivotedQr::new(stack, tol).with_rank(rank)
}

/// Probes the chain and derives the base-parameter map.
pub fn compute_base_map(
    chain: &KinematicChain,
    n_probe: usize,
    seed: u64,
    tol: f64,
) -> Result<BaseParameterMap> {
    let n = chain.dof();
    let p = PARAMS_PER_LINK * n;
    if n_probe * n < (PARAMS_PER_LINK + FRICTION_PER_JOINT) * n {
        return Err(Error::InvalidInput(format!(
            "{n_probe} probes give {} rows, need at least {}",
            n_probe * n,
            (PARAMS_PER_LINK + FRICTION_PER_JOINT) * n
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("SVD tolerance {tol} outside (0, 1)")));
    }
    let stack = probe_stack(chain, n_probe, seed)?;

    // per-row analysis against the global basis
    let row_stacks: Vec<DMatrix<f64>> = (0..n)
        .map(|j| DMatrix::from_fn(n_probe, p, |s, c| stack[(s * n + j, c)]))
        .collect();

    let qr = split_columns(stack, tol);
    let independent = qr.independent().to_vec();
    let dependent = qr.dependent().to_vec();
    let regroup = qr.regrouping();
    let r = independent.len();

    let mut joint_bases = Vec::with_capacity(n);
    for rows in row_stacks {
        let reduced = DMatrix::from_fn(n_probe, r, |s, k| rows[(s, independent[k])]);
        let row_qr = split_columns(reduced, tol);
        let active = row_qr.independent().to_vec();
        let b = row_qr.regrouping();
        let mut g = DMatrix::zeros(active.len(), r);
        for (k, &a) in active.iter().enumerate() {
            g[(k, a)] = 1.0;
            for (d, &dcol) in row_qr.dependent().iter().enumerate() {
                g[(k, dcol)] = b[(k, d)];
            }
        }
        // ascending order keeps coefficient listings readable
        let mut order: Vec<usize> = (0..active.len()).collect();
        order.sort_by_key(|&k| active[k]);
        joint_bases.push(JointBasis {
            active: order.iter().map(|&k| active[k]).collect(),
            regroup: g.select_rows(order.iter()),
        });
    }

    let mut map = BaseParameterMap::from_parts(
        n,
        independent,
        dependent,
        regroup,
        joint_bases,
        tol,
        n_probe,
        seed,
    )?;
    let check_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    let other = numerical_rank(&probe_stack(chain, n_probe, check_seed)?, tol);
    if other != r {
        map.rank_warning = Some(format!(
            "probe rank {r} (seed {seed}) differs from {other} (seed {check_seed})"
        ));
    }
    Ok(map)
}

/// `Ŷ(state)`, n × c.
pub fn minimal_regressor(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    state: &JointState,
) -> Result<DMatrix<f64>> {
    minimal_regressor_with_gravity(map, chain, state, &chain.gravity)
}

/// [`minimal_regressor`] with an explicit gravity vector.
pub fn minimal_regressor_with_gravity(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    state: &JointState,
    gravity: &Vector3<f64>,
) -> Result<DMatrix<f64>> {
    map.check_chain(chain)?;
    map.reduce(&regressor_with_gravity(chain, state, gravity)?)
}

/// Block-diagonal current-level regressor `U`, n × (n·c): row `j` of `Ŷ` in
/// the `j`-th diagonal block.
pub fn current_level_regressor(
    map: &BaseParameterMap,
    chain: &KinematicChain,
    state: &JointState,
) -> Result<DMatrix<f64>> {
    Ok(block_diagonal_rows(&minimal_regressor(map, chain, state)?))
}

pub(crate) fn block_diagonal_rows(y: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = y.shape();
    let mut u = DMatrix::zeros(n, n * c);
    for j in 0..n {
        u.view_mut((j, j * c), (1, c)).copy_from(&y.row(j));
    }
    u
}
