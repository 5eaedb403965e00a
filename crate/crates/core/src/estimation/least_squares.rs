//! Ordinary and weighted linear least squares through a column-scaled,
//! column-pivoted QR factorization (never the normal equations).

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::PivotedQr;

/// Relative pivot threshold below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Diagonal weights `w_k = 1/σ_k²`, one per stacked row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DVector<f64>);

impl WeightMatrix {
    pub fn new(w: DVector<f64>) -> Result<Self> {
        if let Some(k) = w.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "weight {k} is {}, weights must be positive and finite",
                w[k]
            )));
        }
        Ok(Self(w))
    }

    pub fn unit(m: usize) -> Self {
        Self(DVector::from_element(m, 1.0))
    }

    pub fn from_sigmas(sigma: &DVector<f64>) -> Result<Self> {
        Self::new(sigma.map(|s| 1.0 / (s * s)))
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A solved least-squares problem with what is needed for diagnostics.
#[derive(Debug, Clone)]
pub struct LsSolution {
    pub x: DVector<f64>,
    /// Unweighted residual `rhs − A x`.
    pub residual: DVector<f64>,
    /// Diagonal of `(AᵀWA)⁻¹`, original column order.
    pub unscaled_covariance: DVector<f64>,
}

/// `argmin ‖rhs − A x‖₂`.
pub fn llse(stack: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    wlse(stack, rhs, &WeightMatrix::unit(stack.nrows()))
}

/// `argmin ‖W^{1/2}(rhs − A x)‖₂`.
pub fn wlse(stack: &DMatrix<f64>, rhs: &DVector<f64>, weights: &WeightMatrix) -> Result<DVector<f64>> {
    Ok(wlse_full(stack, rhs, weights)?.x)
}

pub fn wlse_full(
    stack: &DMatrix<f64>,
    rhs: &DVector<f64>,
    weights: &WeightMatrix,
) -> Result<LsSolution> {
    let (m, p) = stack.shape();
    check_len("right-hand side", m, rhs.len())?;
    check_len("weights", m, weights.len())?;
    if m < p {
        return Err(Error::InvalidInput(format!(
            "underdetermined stack: {m} rows for {p} unknowns"
        )));
    }
    if stack.iter().chain(rhs.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite entry in least-squares stack".into()));
    }
    let sqrt_w = weights.diagonal().map(f64::sqrt);
    let mut a = stack.clone();
    for (i, mut row) in a.row_iter_mut().enumerate() {
        row *= sqrt_w[i];
    }
    let b = rhs.component_mul(&sqrt_w);
    let scale = column_scales(&a);
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col /= scale[j];
    }
    let qr = PivotedQr::new(a, RANK_TOLERANCE);
    if qr.rank() < p {
        let mut columns = qr.dependent().to_vec();
        columns.sort_unstable();
        return Err(Error::RankDeficient { columns });
    }
    let x = qr.solve_basic(&b).component_div(&scale);
    let residual = rhs - stack * &x;
    let unscaled_covariance = qr
        .unscaled_covariance_diag()
        .component_div(&scale.component_mul(&scale));
    Ok(LsSolution {
        x,
        residual,
        unscaled_covariance,
    })
}

/// Column norms, with 1 standing in for zero columns so they surface as
/// dependent rather than as a division by zero.
pub(crate) fn column_scales(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        a.ncols(),
        a.column_iter().map(|c| {
            let n = c.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        }),
    )
}
