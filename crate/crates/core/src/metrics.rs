//! Error metrics: mean squared error, mean normalized absolute error (in
//! percent of the reference range) and the improvement factor.

use crate::error::{check_len, Error, Result};

/// `(1/ς) Σ (x_k − y_k)²`.
pub fn mse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("mse operands", x.len(), y.len())?;
    if x.is_empty() {
        return Err(Error::InvalidInput("mse of empty series".into()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64)
}

/// `(200/ς) Σ |x_k − y_k| / (max x − min x)`, normalized by the range of
/// the reference `x`.
pub fn mnae(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("mnae operands", x.len(), y.len())?;
    let range = range(x).ok_or_else(|| Error::InvalidInput("mnae of empty series".into()))?;
    if !(range > 0.0) {
        return Err(Error::InvalidInput(
            "mnae undefined: reference series has zero range".into(),
        ));
    }
    mnae_with_range(x, y, range)
}

/// [`mnae`] over a subset, normalized by a range taken elsewhere (e.g. the
/// full series). An empty subset gives 0.
pub fn mnae_with_range(x: &[f64], y: &[f64], range: f64) -> Result<f64> {
    check_len("mnae operands", x.len(), y.len())?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
    Ok(200.0 * sum / (x.len() as f64 * range))
}

pub fn range(x: &[f64]) -> Option<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    (!x.is_empty()).then_some(max - min)
}

/// Improvement factor `η = MNAE_baseline / MNAE_ours`.
pub fn eta(mnae_baseline: f64, mnae_ours: f64) -> Result<f64> {
    if !(mnae_ours > 0.0) || !(mnae_baseline >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "η undefined for baseline {mnae_baseline}, ours {mnae_ours}"
        )));
    }
    Ok(mnae_baseline / mnae_ours)
}

/// Root of the summed squared deviation, `√Σ (x_k − y_k)²`. This is the
/// quantity published tables of gain error against ground truth report.
pub fn rss_error(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok((mse(x, y)? * x.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_series_score_zero() {
        let x = [0.3, -1.0, 2.5];
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        assert_eq!(mnae(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn unit_offset_mse() {
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn range_two_offset_tenth_is_ten_percent() {
        let x = [-1.0, 0.0, 1.0, 0.5];
        let y: Vec<f64> = x.iter().map(|v| v + 0.1).collect();
        let m = mnae(&x, &y).unwrap();
        assert!((m - 10.0).abs() < 1e-12, "{m}");
    }

    #[test]
    fn zero_range_is_an_error() {
        assert!(mnae(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn eta_needs_positive_denominator() {
        assert_eq!(eta(6.0, 3.0).unwrap(), 2.0);
        assert!(eta(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn mnae_is_scale_invariant(
            xs in prop::collection::vec(-10.0f64..10.0, 3..40),
            noise in prop::collection::vec(-1.0f64..1.0, 40),
            a in 0.01f64..100.0,
        ) {
            prop_assume!(range(&xs).unwrap() > 1e-6);
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| x + e).collect();
            let base = mnae(&xs, &ys).unwrap();
            let sx: Vec<f64> = xs.iter().map(|v| a * v).collect();
            let sy: Vec<f64> = ys.iter().map(|v| a * v).collect();
            let scaled = mnae(&sx, &sy).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-9 * (1.0 + base));
        }

        #[test]
        fn mse_is_symmetric_and_nonnegative(
            xs in prop::collection::vec(-5.0f64..5.0, 1..20),
            shift in -2.0f64..2.0,
        ) {
            let ys: Vec<f64> = xs.iter().map(|x| x * 0.5 + shift).collect();
            let a = mse(&xs, &ys).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a, mse(&ys, &xs).unwrap());
        }
    }
}
