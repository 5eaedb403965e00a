//! Robust weights by iteratively reweighted least squares with the bisquare
//! influence function.

use nalgebra::{DMatrix, DVector};

use super::least_squares::{wlse_full, LsSolution, WeightMatrix};
use crate::error::Result;

pub const BISQUARE_TUNING: f64 = 4.685;
/// Consistency factor turning a median absolute deviation into a Gaussian σ.
pub const MAD_TO_SIGMA: f64 = 0.6745;
pub const MAX_ITERATIONS: usize = 50;
pub const WEIGHT_TOLERANCE: f64 = 1e-6;
/// Bisquare weights reach exactly zero; rows keep this much so the weight
/// matrix stays positive definite.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RobustFit {
    pub weights: WeightMatrix,
    pub solution: LsSolution,
    pub iterations: usize,
    /// False when the iteration limit was reached first.
    pub converged: bool,
    /// Robust residual scale at the final iterate.
    pub scale: f64,
}

/// Bisquare weight of a residual already divided by `tuning · scale`.
pub fn bisquare(u: f64) -> f64 {
    if u.abs() < 1.0 {
        let t = 1.0 - u * u;
        t * t
    } else {
        0.0
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// `MAD / 0.6745` with the deviation taken about the median.
pub fn robust_scale(residual: &DVector<f64>) -> f64 {
    let mut r: Vec<f64> = residual.iter().copied().collect();
    let med = median(&mut r);
    let mut dev: Vec<f64> = residual.iter().map(|x| (x - med).abs()).collect();
    median(&mut dev) / MAD_TO_SIGMA
}

/// Runs IRLS from unit weights until no weight moves by more than
/// [`WEIGHT_TOLERANCE`] or [`MAX_ITERATIONS`] passes.
pub fn robust_fit(stack: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<RobustFit> {
    let m = stack.nrows();
    let mut weights = WeightMatrix::unit(m);
    let mut solution = wlse_full(stack, rhs, &weights)?;
    let mut scale = robust_scale(&solution.residual);
    let tiny = f64::EPSILON * rhs.amax().max(1.0);
    if scale <= tiny {
        // exact (or nearly exact) fit: nothing to downweight
        return Ok(RobustFit {
            weights,
            solution,
            iterations: 0,
            converged: true,
            scale,
        });
    }
    for it in 1..=MAX_ITERATIONS {
        let next = solution
            .residual
            .map(|r| bisquare(r / (BISQUARE_TUNING * scale)).max(WEIGHT_FLOOR));
        let change = (&next - weights.diagonal()).amax();
        weights = WeightMatrix::new(next)?;
        solution = wlse_full(stack, rhs, &weights)?;
        scale = robust_scale(&solution.residual);
        if change < WEIGHT_TOLERANCE || scale <= tiny {
            return Ok(RobustFit {
                weights,
                solution,
                iterations: it,
                converged: true,
                scale,
            });
        }
    }
    Ok(RobustFit {
        weights,
        solution,
        iterations: MAX_ITERATIONS,
        converged: false,
        scale,
    })
}

/// Final IRLS weights for the stack.
pub fn robust_weights(stack: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<WeightMatrix> {
    Ok(robust_fit(stack, rhs)?.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn line_stack(m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / m as f64 })
    }

    /// `E[w]` for standard Gaussian residuals at the true scale, by
    /// Simpson quadrature of `bisquare(z/c)·φ(z)` over `|z| < c`.
    fn expected_gaussian_weight() -> f64 {
        let c = BISQUARE_TUNING;
        let n = 20_000;
        let h = 2.0 * c / n as f64;
        let f = |z: f64| bisquare(z / c) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(-c) + f(c);
        for i in 1..n {
            let z = -c + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
        }
        s * h / 3.0
    }

    #[test]
    fn gaussian_residuals_keep_high_weights() {
        // Individual weights fall below 0.8 once |r| > 1.52σ, so the check is
        // on the mean weight against its Gaussian expectation.
        let expected = expected_gaussian_weight();
        assert!((expected - 0.915108).abs() < 1e-6, "{expected}");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 2000;
        let a = line_stack(m);
        let b = DVector::from_fn(m, |i, _| 1.0 + 0.5 * a[(i, 1)] + 0.1 * { let z: f64 = StandardNormal.sample(&mut rng); z });
        let fit = robust_fit(&a, &b).unwrap();
        assert!(fit.converged);
        let mean = fit.weights.diagonal().mean();
        assert!((mean - expected).abs() < 0.02, "mean weight {mean} vs {expected}");
    }

    #[test]
    fn gross_outlier_is_suppressed() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = 200;
        let a = line_stack(m);
        let mut b = DVector::from_fn(m, |i, _| 2.0 - a[(i, 1)] + 0.01 * { let z: f64 = StandardNormal.sample(&mut rng); z });
        b[57] += 0.2;
        let fit = robust_fit(&a, &b).unwrap();
        assert!(fit.weights.diagonal()[57] < 0.01);
        assert!((fit.solution.x[0] - 2.0).abs() < 0.01);
    }

    #[test]
    fn exact_fit_keeps_unit_weights() {
        let a = line_stack(20);
        let b = &a * DVector::from_vec(vec![0.3, -0.7]);
        let w = robust_weights(&a, &b).unwrap();
        assert!(w.diagonal().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn bisquare_shape() {
        assert_eq!(bisquare(0.0), 1.0);
        assert_eq!(bisquare(1.0), 0.0);
        assert_eq!(bisquare(-2.0), 0.0);
        // 20σ residual at unit scale
        assert!(bisquare(20.0 / BISQUARE_TUNING) < 0.01);
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
