//! Per-joint error metrics of predicted against measured currents.

use nalgebra::DVector;

use crate::dataio::{SampleSet, Table};
use crate::error::{check_len, Result};
use crate::metrics::{eta, mnae, mnae_with_range, mse, range};

#[derive(Debug, Clone, PartialEq)]
pub struct JointMetrics {
    /// 1-based.
    pub joint: usize,
    pub mse: f64,
    /// Percent of the measured range.
    pub mnae: f64,
    /// MNAE over `|q̇_j| < q̇⁺` only, still normalized by the full range so
    /// the two figures compare directly.
    pub mnae_nonlinear_region: f64,
    /// `MNAE_baseline / MNAE`, when a baseline was given.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport {
    pub joints: Vec<JointMetrics>,
}

impl EstimationReport {
    /// Compares `predicted` (and optionally `baseline`) to the currents of
    /// `samples`. Identical predictions give an all-zero report.
    pub fn compare(
        samples: &SampleSet,
        predicted: &[DVector<f64>],
        baseline: Option<&[DVector<f64>]>,
    ) -> Result<Self> {
        check_len("predicted samples", samples.len(), predicted.len())?;
        if let Some(b) = baseline {
            check_len("baseline samples", samples.len(), b.len())?;
        }
        let mut joints = Vec::with_capacity(samples.dof());
        for j in 0..samples.dof() {
            let x = samples.current_channel(j);
            let y: Vec<f64> = predicted.iter().map(|p| p[j]).collect();
            let ours = mnae(&x, &y)?;
            let idx = samples.nonlinear_indices(j);
            let pick = |s: &[f64]| idx.iter().map(|&k| s[k]).collect::<Vec<_>>();
            let full_range = range(&x).unwrap_or(0.0);
            let eta = match baseline {
                Some(b) => {
                    let yb: Vec<f64> = b.iter().map(|p| p[j]).collect();
                    let theirs = mnae(&x, &yb)?;
                    // A perfect prediction has no finite improvement factor.
                    (ours > 0.0).then(|| eta(theirs, ours)).transpose()?
                }
                None => None,
            };
            joints.push(JointMetrics {
                joint: j + 1,
                mse: mse(&x, &y)?,
                mnae: ours,
                mnae_nonlinear_region: mnae_with_range(&pick(&x), &pick(&y), full_range)?,
                eta,
            });
        }
        Ok(Self { joints })
    }

    pub fn average_mnae(&self) -> f64 {
        self.joints.iter().map(|j| j.mnae).sum::<f64>() / self.joints.len().max(1) as f64
    }

    pub fn max_mnae(&self) -> f64 {
        self.joints.iter().map(|j| j.mnae).fold(0.0, f64::max)
    }

    /// `joint,mse,mnae,mnae_nonlinear_region[,eta]`; an undefined η is
    /// written as `inf`.
    pub fn to_table(&self) -> Table {
        let with_eta = self.joints.iter().any(|j| j.eta.is_some());
        let mut header: Vec<String> = ["joint", "mse", "mnae", "mnae_nonlinear_region"].map(String::from).into();
        if with_eta {
            header.push("eta".into());
        }
        let rows = self
            .joints
            .iter()
            .map(|j| {
                let mut row = vec![j.joint as f64, j.mse, j.mnae, j.mnae_nonlinear_region];
                if with_eta {
                    row.push(j.eta.unwrap_or(f64::INFINITY));
                }
                row
            })
            .collect();
        Table { header, rows }
    }
}
