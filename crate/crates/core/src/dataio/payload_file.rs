//! Payload files: `mass_kg`, `com_l_m`, `inertia_l_kgm2`, `R_l_n`,
//! `t_l_n_m`, and optionally which parameters are known a priori.
//!
//! `R_l_n` is the orientation of the payload frame expressed in the flange
//! frame, row-major. Writing its transpose by mistake still passes the
//! rotation check, so a flipped mounting angle only shows up as wrong torques.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SchemaError};
use crate::linalg::{sym_from6, sym_to6};
use crate::payload::{KnownParameters, PayloadSpec};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayloadDoc {
    mass_kg: f64,
    com_l_m: [f64; 3],
    /// `xx, yy, zz` or `xx, xy, xz, yy, yz, zz`, about the centre of mass.
    inertia_l_kgm2: Vec<f64>,
    #[serde(rename = "R_l_n", default = "identity9")]
    r_l_n: [f64; 9],
    #[serde(default)]
    t_l_n_m: [f64; 3],
    /// Names from `m, mx, my, mz, ixx, ixy, ixz, iyy, iyz, izz`; all known
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    known_parameters: Option<Vec<String>>,
}

fn identity9() -> [f64; 9] {
    [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
}

/// A payload file: the physical spec and the a-priori knowledge mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PayloadFile {
    pub spec: PayloadSpec,
    pub known: KnownParameters,
}

impl PayloadFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: PayloadDoc = toml::from_str(text).map_err(|e| SchemaError::Config(e.to_string()))?;
        let inertia = match doc.inertia_l_kgm2.as_slice() {
            [xx, yy, zz] => Matrix3::from_diagonal(&Vector3::new(*xx, *yy, *zz)),
            [a, b, c, d, e, f] => sym_from6(&[*a, *b, *c, *d, *e, *f]),
            other => {
                return Err(SchemaError::Config(format!(
                    "inertia_l_kgm2 needs 3 or 6 values, got {}",
                    other.len()
                ))
                .into())
            }
        };
        let spec = PayloadSpec {
            mass: doc.mass_kg,
            com_l: Vector3::from(doc.com_l_m),
            inertia_l: inertia,
            rotation: Matrix3::from_row_slice(&doc.r_l_n),
            translation: Vector3::from(doc.t_l_n_m),
        };
        spec.validate().map_err(|e| SchemaError::Config(e.to_string()))?;
        let known = match doc.known_parameters {
            None => KnownParameters::all(),
            Some(names) => {
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                KnownParameters::only(&refs).map_err(|e| SchemaError::Config(e.to_string()))?
            }
        };
        Ok(Self { spec, known })
    }

    pub fn to_toml(&self) -> Result<String> {
        let s = &self.spec;
        let r = s.rotation;
        let doc = PayloadDoc {
            mass_kg: s.mass,
            com_l_m: [s.com_l.x, s.com_l.y, s.com_l.z],
            inertia_l_kgm2: sym_to6(&s.inertia_l).to_vec(),
            r_l_n: [r[(0, 0)], r[(0, 1)], r[(0, 2)], r[(1, 0)], r[(1, 1)], r[(1, 2)], r[(2, 0)], r[(2, 1)], r[(2, 2)]],
            t_l_n_m: [s.translation.x, s.translation.y, s.translation.z],
            known_parameters: (self.known != KnownParameters::all())
                .then(|| self.known.names().into_iter().map(String::from).collect()),
        };
        toml::to_string(&doc).map_err(|e| Error::Numeric(format!("payload serialization: {e}")))
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_shorthand_and_defaults() {
        let p = PayloadFile::from_toml("mass_kg = 0.73\ncom_l_m = [0.0, 0.01, 0.03]\ninertia_l_kgm2 = [1e-3, 2.5e-3, 1.7e-3]\n").unwrap();
        assert_eq!(p.spec.inertia_l[(1, 1)], 2.5e-3);
        assert_eq!(p.spec.rotation, Matrix3::identity());
        assert_eq!(p.known, KnownParameters::all());
    }

    #[test]
    fn round_trip_with_mask() {
        let f = PayloadFile {
            spec: PayloadSpec::franka_hand(),
            known: KnownParameters::all_except(&["m", "mz"]).unwrap(),
        };
        assert_eq!(PayloadFile::from_toml(&f.to_toml().unwrap()).unwrap(), f);
    }

    #[test]
    fn rejects_bad_inertia_length() {
        let e = PayloadFile::from_toml("mass_kg = 1.0\ncom_l_m = [0.0, 0.0, 0.0]\ninertia_l_kgm2 = [1.0, 2.0]\n");
        assert!(matches!(e, Err(Error::Schema(SchemaError::Config(_)))));
    }

    #[test]
    fn rejects_improper_rotation() {
        let e = PayloadFile::from_toml(
            "mass_kg = 1.0\ncom_l_m = [0.0, 0.0, 0.0]\ninertia_l_kgm2 = [1e-3, 1e-3, 1e-3]\nR_l_n = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]\n",
        );
        assert!(e.is_err());
    }
}
