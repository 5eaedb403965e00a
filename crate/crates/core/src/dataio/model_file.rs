//! Robot-model files: kinematics, optional ground-truth inertials, friction,
//! gains and the identification results of each completed stage. TOML with
//! units carried in key names.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{FrictionSet, InertialParameters, JointFriction};
use crate::error::{Error, Result, SchemaError};
use crate::estimation::CurrentCoefficients;
use crate::kinematics::{DhRow, KinematicChain};
use crate::linalg::{sym_from6, sym_to6};
use crate::reduction::{BaseParameterMap, JointBasis};
use crate::trajectory::JointLimits;

/// Identification stages in the order they must run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    None,
    Linear,
    Friction,
    Gains,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::None => "none",
            Stage::Linear => "linear",
            Stage::Friction => "friction",
            Stage::Gains => "gains",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Stage::None, Stage::Linear, Stage::Friction, Stage::Gains]
            .into_iter()
            .find(|st| st.name() == s)
    }

    /// Fails with [`Error::StageOrder`] unless `self` has reached `needed`.
    pub fn require(self, needed: Stage, requested: &'static str) -> Result<()> {
        if self >= needed {
            Ok(())
        } else {
            Err(Error::StageOrder {
                missing: needed.name(),
                requested,
            })
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrictionLevel {
    /// Parameters in N·m.
    Torque,
    /// Parameters in A, i.e. torque-level values divided by `K`.
    Current,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrictionLaw {
    /// `f_o + f_v q̇ + f_c sgn q̇`; `δ`, `ν` unused.
    Linear,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrictionModel {
    pub level: FrictionLevel,
    pub law: FrictionLaw,
    pub set: FrictionSet,
}

impl FrictionModel {
    /// Friction at this model's level.
    pub fn evaluate(&self, qd: &DVector<f64>) -> Result<DVector<f64>> {
        crate::error::check_len("friction joints", self.set.len(), qd.len())?;
        Ok(DVector::from_iterator(
            qd.len(),
            self.set.joints().iter().zip(qd.iter()).map(|(p, &x)| match self.law {
                FrictionLaw::Linear => p.linear(x),
                FrictionLaw::Sigmoid => p.sigmoid(x),
            }),
        ))
    }

    /// Friction torque given the gains (needed for current-level sets).
    pub fn torque(&self, qd: &DVector<f64>, gains: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        let f = self.evaluate(qd)?;
        match self.level {
            FrictionLevel::Torque => Ok(f),
            FrictionLevel::Current => {
                let k = gains.ok_or(Error::IncompleteModel("gains for current-level friction"))?;
                Ok(f.component_mul(k))
            }
        }
    }
}

/// Outputs of stage 1 and the base-parameter map they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub map: BaseParameterMap,
    pub chi: CurrentCoefficients,
    pub qd_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub name: String,
    pub provenance: String,
}

/// In-memory robot-model file.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub metadata: Metadata,
    pub chain: KinematicChain,
    /// Ground-truth link parameters (simulation models only).
    pub links: Option<Vec<InertialParameters>>,
    pub friction: Option<FrictionModel>,
    pub gains: Option<DVector<f64>>,
    pub limits: Option<JointLimits>,
    pub identification: Option<Identification>,
}

impl RobotModel {
    pub fn new(name: &str, chain: KinematicChain) -> Self {
        Self {
            metadata: Metadata {
                name: name.into(),
                provenance: String::new(),
            },
            chain,
            links: None,
            friction: None,
            gains: None,
            limits: None,
            identification: None,
        }
    }

    pub fn dof(&self) -> usize {
        self.chain.dof()
    }

    /// Last identification stage whose outputs are present.
    pub fn stage(&self) -> Stage {
        if self.identification.is_none() {
            return Stage::None;
        }
        let friction_fitted = self
            .friction
            .as_ref()
            .is_some_and(|f| f.level == FrictionLevel::Current && f.law == FrictionLaw::Sigmoid);
        match (friction_fitted, self.gains.is_some()) {
            (true, true) => Stage::Gains,
            (true, false) => Stage::Friction,
            _ => Stage::Linear,
        }
    }

    /// Inertials, friction and gains as the simulator needs them.
    pub fn simulation_parts(&self) -> Result<(&[InertialParameters], &FrictionModel, &DVector<f64>)> {
        let links = self.links.as_deref().ok_or(Error::IncompleteModel("inertial parameters"))?;
        let friction = self.friction.as_ref().ok_or(Error::IncompleteModel("friction"))?;
        let gains = self.gains.as_ref().ok_or(Error::IncompleteModel("gains"))?;
        Ok((links, friction, gains))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dof();
        let bad = |what: &str, got: usize| {
            Error::from(SchemaError::Config(format!("{what} has {got} joints, model has {n}")))
        };
        if let Some(l) = &self.links {
            if l.len() != n {
                return Err(bad("[inertial]", l.len()));
            }
        }
        if let Some(f) = &self.friction {
            if f.set.len() != n {
                return Err(bad("[friction]", f.set.len()));
            }
        }
        if let Some(k) = &self.gains {
            if k.len() != n {
                return Err(bad("[gains]", k.len()));
            }
            if k.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(SchemaError::Config("gains must be positive and finite".into()).into());
            }
        }
        if let Some(l) = &self.limits {
            if l.dof() != n {
                return Err(bad("[limits]", l.dof()));
            }
        }
        if let Some(id) = &self.identification {
            if id.map.dof() != n || id.chi.dof() != n || id.chi.n_coeff != id.map.n_coeff() {
                return Err(SchemaError::Config("[identification] dimensions disagree with the chain".into()).into());
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        self.validate()?;
        toml::to_string(&ModelDoc::from_model(self))
            .map_err(|e| Error::Numeric(format!("model serialization: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ModelDoc = toml::from_str(text).map_err(|e| SchemaError::Config(e.to_string()))?;
        let model = doc.into_model()?;
        model.validate()?;
        Ok(model)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    metadata: MetaDoc,
    gravity: GravityDoc,
    dh: DhDoc,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    inertial: BTreeMap<String, LinkDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    friction: BTreeMap<String, FrictionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gains: Option<GainsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    limits: Option<LimitsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    identification: Option<IdentDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaDoc {
    name: String,
    #[serde(default)]
    provenance: String,
    /// Informational; the stage is re-derived from the sections present.
    #[serde(default)]
    stage: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GravityDoc {
    g_mps2: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DhDoc {
    a_m: Vec<f64>,
    alpha_rad: Vec<f64>,
    d_m: Vec<f64>,
    #[serde(default)]
    offset_rad: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    mass_kg: f64,
    com_m: [f64; 3],
    inertia_origin_kgm2: [f64; 6],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrictionDoc {
    level: String,
    law: String,
    f_o: f64,
    f_v: f64,
    f_c: f64,
    #[serde(default)]
    delta_s_per_rad: f64,
    #[serde(default)]
    nu_rad_per_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDoc {
    #[serde(rename = "K_NmA")]
    k_nma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LimitsDoc {
    q_rad: Vec<f64>,
    qd_rad_per_s: Vec<f64>,
    qdd_rad_per_s2: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentDoc {
    qd_threshold_rad_per_s: f64,
    svd_tolerance: f64,
    n_probe: usize,
    /// Hex, since TOML integers are signed 64-bit.
    probe_seed: String,
    independent: Vec<usize>,
    dependent: Vec<usize>,
    /// Rows follow `independent`.
    regroup: Vec<Vec<f64>>,
    /// `n·c` coefficients, joint blocks in order.
    chi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chi_variance: Option<Vec<f64>>,
    joint: BTreeMap<String, JointBasisDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointBasisDoc {
    active: Vec<usize>,
    regroup: Vec<Vec<f64>>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(SchemaError::Config(format!("{what}: rows must have {ncols} entries")).into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Entries keyed `<prefix>_1 .. <prefix>_n`, in index order.
fn indexed<T>(map: BTreeMap<String, T>, prefix: &str) -> Result<Vec<T>> {
    let mut items: Vec<(usize, T)> = Vec::with_capacity(map.len());
    for (key, v) in map {
        let idx = key
            .strip_prefix(prefix)
            .and_then(|s| s.strip_prefix('_'))
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| SchemaError::Config(format!("bad section key '{key}', expected {prefix}_<i>")))?;
        items.push((idx, v));
    }
    items.sort_by_key(|(i, _)| *i);
    for (k, (i, _)) in items.iter().enumerate() {
        if *i != k + 1 {
            return Err(SchemaError::Config(format!("{prefix} sections must be numbered 1..{}", items.len())).into());
        }
    }
    Ok(items.into_iter().map(|(_, v)| v).collect())
}

fn level_name(l: FrictionLevel) -> &'static str {
    match l {
        FrictionLevel::Torque => "torque",
        FrictionLevel::Current => "current",
    }
}

fn law_name(l: FrictionLaw) -> &'static str {
    match l {
        FrictionLaw::Linear => "linear",
        FrictionLaw::Sigmoid => "sigmoid",
    }
}

impl ModelDoc {
    fn from_model(m: &RobotModel) -> Self {
        let rows = &m.chain.rows;
        let inertial = m
            .links
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, l)| {
                let com = l.com().unwrap_or_else(Vector3::zeros);
                (
                    format!("link_{}", i + 1),
                    LinkDoc {
                        mass_kg: l.mass,
                        com_m: [com.x, com.y, com.z],
                        inertia_origin_kgm2: sym_to6(&l.inertia),
                    },
                )
            })
            .collect();
        let friction = m
            .friction
            .iter()
            .flat_map(|f| {
                f.set.joints().iter().enumerate().map(move |(j, p)| {
                    (
                        format!("joint_{}", j + 1),
                        FrictionDoc {
                            level: level_name(f.level).into(),
                            law: law_name(f.law).into(),
                            f_o: p.f_o,
                            f_v: p.f_v,
                            f_c: p.f_c,
                            delta_s_per_rad: p.delta,
                            nu_rad_per_s: p.nu,
                        },
                    )
                })
            })
            .collect();
        let identification = m.identification.as_ref().map(|id| IdentDoc {
            qd_threshold_rad_per_s: id.qd_threshold,
            svd_tolerance: id.map.svd_tolerance,
            n_probe: id.map.n_probe,
            probe_seed: format!("{:#x}", id.map.seed),
            independent: id.map.independent().to_vec(),
            dependent: id.map.dependent().to_vec(),
            regroup: rows_of(id.map.regroup()),
            chi: id.chi.chi.iter().copied().collect(),
            chi_variance: id.chi.covariance_diag.as_ref().map(|v| v.iter().copied().collect()),
            joint: id
                .map
                .joint_bases()
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    (
                        format!("joint_{}", j + 1),
                        JointBasisDoc {
                            active: b.active.clone(),
                            regroup: rows_of(&b.regroup),
                        },
                    )
                })
                .collect(),
        });
        Self {
            metadata: MetaDoc {
                name: m.metadata.name.clone(),
                provenance: m.metadata.provenance.clone(),
                stage: m.stage().name().into(),
            },
            gravity: GravityDoc {
                g_mps2: [m.chain.gravity.x, m.chain.gravity.y, m.chain.gravity.z],
            },
            dh: DhDoc {
                a_m: rows.iter().map(|r| r.a).collect(),
                alpha_rad: rows.iter().map(|r| r.alpha).collect(),
                d_m: rows.iter().map(|r| r.d).collect(),
                offset_rad: rows.iter().map(|r| r.joint_offset).collect(),
            },
            inertial,
            friction,
            gains: m.gains.as_ref().map(|k| GainsDoc {
                k_nma: k.iter().copied().collect(),
            }),
            limits: m.limits.as_ref().map(|l| LimitsDoc {
                q_rad: l.q_max.iter().copied().collect(),
                qd_rad_per_s: l.qd_max.iter().copied().collect(),
                qdd_rad_per_s2: l.qdd_max.iter().copied().collect(),
            }),
            identification,
        }
    }

    fn into_model(self) -> Result<RobotModel> {
        let cfg = |msg: String| Error::from(SchemaError::Config(msg));
        let dh = &self.dh;
        let n = dh.a_m.len();
        if n == 0 || dh.alpha_rad.len() != n || dh.d_m.len() != n || !(dh.offset_rad.is_empty() || dh.offset_rad.len() == n) {
            return Err(cfg("[dh] arrays must be non-empty and equally long".into()));
        }
        let rows = (0..n)
            .map(|i| DhRow {
                a: dh.a_m[i],
                alpha: dh.alpha_rad[i],
                d: dh.d_m[i],
                joint_offset: dh.offset_rad.get(i).copied().unwrap_or(0.0),
            })
            .collect();
        let chain = KinematicChain::with_gravity(rows, Vector3::from(self.gravity.g_mps2))?;

        let links = if self.inertial.is_empty() {
            None
        } else {
            let docs = indexed(self.inertial, "link")?;
            Some(
                docs.into_iter()
                    .map(|d| InertialParameters {
                        mass: d.mass_kg,
                        first_moment: Vector3::from(d.com_m) * d.mass_kg,
                        inertia: sym_from6(&d.inertia_origin_kgm2),
                    })
                    .collect(),
            )
        };

        let friction = if self.friction.is_empty() {
            None
        } else {
            let docs = indexed(self.friction, "joint")?;
            let parse_level = |s: &str| match s {
                "torque" => Ok(FrictionLevel::Torque),
                "current" => Ok(FrictionLevel::Current),
                _ => Err(cfg(format!("friction level '{s}' (expected torque|current)"))),
            };
            let parse_law = |s: &str| match s {
                "linear" => Ok(FrictionLaw::Linear),
                "sigmoid" => Ok(FrictionLaw::Sigmoid),
                _ => Err(cfg(format!("friction law '{s}' (expected linear|sigmoid)"))),
            };
            let level = parse_level(&docs[0].level)?;
            let law = parse_law(&docs[0].law)?;
            let mut set = Vec::with_capacity(docs.len());
            for d in &docs {
                if parse_level(&d.level)? != level || parse_law(&d.law)? != law {
                    return Err(cfg("all joints must share one friction level and law".into()));
                }
                set.push(JointFriction {
                    f_o: d.f_o,
                    f_v: d.f_v,
                    f_c: d.f_c,
                    delta: d.delta_s_per_rad,
                    nu: d.nu_rad_per_s,
                });
            }
            Some(FrictionModel {
                level,
                law,
                set: FrictionSet(set),
            })
        };

        let limits = match self.limits {
            Some(l) => {
                let lim = JointLimits {
                    q_max: DVector::from_vec(l.q_rad),
                    qd_max: DVector::from_vec(l.qd_rad_per_s),
                    qdd_max: DVector::from_vec(l.qdd_rad_per_s2),
                };
                lim.validate()?;
                Some(lim)
            }
            None => None,
        };

        let identification = match self.identification {
            Some(id) => {
                let seed_text = id.probe_seed.trim_start_matches("0x");
                let seed = u64::from_str_radix(seed_text, 16)
                    .map_err(|_| cfg(format!("probe_seed '{}' is not hex", id.probe_seed)))?;
                let r = id.independent.len();
                let regroup = if id.dependent.is_empty() {
                    DMatrix::zeros(r, 0)
                } else {
                    matrix_from_rows(&id.regroup, id.dependent.len(), "identification.regroup")?
                };
                let bases = indexed(id.joint, "joint")?
                    .into_iter()
                    .map(|b| {
                        Ok(JointBasis {
                            regroup: matrix_from_rows(&b.regroup, r, "identification.joint.regroup")?,
                            active: b.active,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let map = BaseParameterMap::from_parts(
                    n,
                    id.independent,
                    id.dependent,
                    regroup,
                    bases,
                    id.svd_tolerance,
                    id.n_probe,
                    seed,
                )?;
                let mut chi = CurrentCoefficients::new(DVector::from_vec(id.chi), map.n_coeff())?;
                chi.covariance_diag = id.chi_variance.map(DVector::from_vec);
                Some(Identification {
                    map,
                    chi,
                    qd_threshold: id.qd_threshold_rad_per_s,
                })
            }
            None => None,
        };

        let model = RobotModel {
            metadata: Metadata {
                name: self.metadata.name,
                provenance: self.metadata.provenance,
            },
            chain,
            links,
            friction,
            gains: self.gains.map(|g| DVector::from_vec(g.k_nma)),
            limits,
            identification,
        };
        if !self.metadata.stage.is_empty() {
            match Stage::parse(&self.metadata.stage) {
                Some(s) if s == model.stage() => {}
                _ => {
                    return Err(cfg(format!(
                        "metadata.stage '{}' does not match the sections present ({})",
                        self.metadata.stage,
                        model.stage()
                    )))
                }
            }
        }
        Ok(model)
    }
}
