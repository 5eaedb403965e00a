//! Zero-phase low-pass filtering.
//!
//! Second-order Butterworth section from the bilinear transform with
//! frequency prewarping, `K = tan(π f_c / f_s)`:
//!
//! ```text
//!          K² (1 + 2z⁻¹ + z⁻²)
//! H(z) = ---------------------------------------------------
//!        (1 + √2K + K²) + 2(K² − 1) z⁻¹ + (1 − √2K + K²) z⁻²
//! ```
//!
//! run forward then backward over the series (squared magnitude, zero
//! phase). Both ends are padded by odd reflection and the filter state starts
//! at its steady state for the first padded value.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF_HZ: f64 = 10.0;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 125.0;

/// Samples of odd reflection added on each end.
const PAD: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    /// Denominator with `a0 = 1` omitted.
    pub a: [f64; 2],
}

impl Biquad {
    pub fn butterworth_lowpass(cutoff_hz: f64, rate_hz: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && rate_hz > 0.0 && cutoff_hz.is_finite() && rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bad filter frequencies: cutoff {cutoff_hz} Hz, rate {rate_hz} Hz"
            )));
        }
        if cutoff_hz >= rate_hz / 2.0 {
            return Err(Error::InvalidInput(format!(
                "cutoff {cutoff_hz} Hz is not below the Nyquist frequency {} Hz",
                rate_hz / 2.0
            )));
        }
        let k = (std::f64::consts::PI * cutoff_hz / rate_hz).tan();
        let s2 = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + s2 * k + k * k);
        let b0 = k * k * norm;
        Ok(Self {
            b: [b0, 2.0 * b0, b0],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - s2 * k + k * k) * norm],
        })
    }

    /// Transposed direct form II, starting from the steady state of a
    /// constant input `x[0]`.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let x0 = x.first().copied().unwrap_or(0.0);
        let mut z2 = (b2 - a2) * x0;
        let mut z1 = (b1 - a1) * x0 + z2;
        x.iter()
            .map(|&xi| {
                let y = b0 * xi + z1;
                z1 = b1 * xi - a1 * y + z2;
                z2 = b2 * xi - a2 * y;
                y
            })
            .collect()
    }
}

/// Zero-phase Butterworth low-pass of one series.
pub fn lowpass(series: &[f64], cutoff_hz: f64, rate_hz: f64) -> Result<Vec<f64>> {
    let f = Biquad::butterworth_lowpass(cutoff_hz, rate_hz)?;
    let m = series.len();
    if m < 2 {
        return Ok(series.to_vec());
    }
    let pad = PAD.min(m - 1);
    let (first, last) = (series[0], series[m - 1]);
    let mut ext = Vec::with_capacity(m + 2 * pad);
    ext.extend((1..=pad).rev().map(|k| 2.0 * first - series[k]));
    ext.extend_from_slice(series);
    ext.extend((1..=pad).map(|k| 2.0 * last - series[m - 1 - k]));

    let mut y = f.run(&ext);
    y.reverse();
    let mut y = f.run(&y);
    y.reverse();
    Ok(y[pad..pad + m].to_vec())
}

/// [`lowpass`] applied to every channel of a vector series.
pub fn lowpass_channels(
    series: &[DVector<f64>],
    cutoff_hz: f64,
    rate_hz: f64,
) -> Result<Vec<DVector<f64>>> {
    let n = series.first().map_or(0, |v| v.len());
    let mut out = vec![DVector::zeros(n); series.len()];
    for j in 0..n {
        let ch: Vec<f64> = series.iter().map(|v| v[j]).collect();
        for (k, y) in lowpass(&ch, cutoff_hz, rate_hz)?.into_iter().enumerate() {
            out[k][j] = y;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    const FS: f64 = DEFAULT_SAMPLE_RATE_HZ;
    const FC: f64 = DEFAULT_CUTOFF_HZ;

    fn tone(freq: f64, m: usize) -> Vec<f64> {
        (0..m).map(|k| (2.0 * PI * freq * k as f64 / FS).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn unit_dc_gain() {
        let f = Biquad::butterworth_lowpass(FC, FS).unwrap();
        let dc = (f.b.iter().sum::<f64>()) / (1.0 + f.a[0] + f.a[1]);
        assert!((dc - 1.0).abs() < 1e-14);
        let y = lowpass(&vec![3.25; 400], FC, FS).unwrap();
        assert!(y.iter().all(|v| (v - 3.25).abs() < 1e-10));
    }

    #[test]
    fn attenuates_tone_above_cutoff() {
        let x = tone(4.0 * FC, 2500);
        let y = lowpass(&x, FC, FS).unwrap();
        // interior, away from the padded ends
        let ratio = rms(&y[200..2300]) / rms(&x[200..2300]);
        assert!(ratio < 0.05, "{ratio}");
    }

    #[test]
    fn preserves_tone_in_band() {
        let x = tone(FC / 10.0, 2500);
        let y = lowpass(&x, FC, FS).unwrap();
        let ratio = rms(&y[200..2300]) / rms(&x[200..2300]);
        assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn reduces_white_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = lowpass(&x, FC, FS).unwrap();
        assert!(rms(&y) < 0.6 * rms(&x));
    }

    #[test]
    fn linear() {
        let x = tone(3.0, 300);
        let z: Vec<f64> = (0..300).map(|k| (k as f64 * 0.37).cos()).collect();
        let mix: Vec<f64> = x.iter().zip(&z).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let (fx, fz, fm) = (
            lowpass(&x, FC, FS).unwrap(),
            lowpass(&z, FC, FS).unwrap(),
            lowpass(&mix, FC, FS).unwrap(),
        );
        for k in 0..300 {
            assert!((fm[k] - (2.0 * fx[k] - 0.5 * fz[k])).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_cutoff_at_nyquist() {
        assert!(lowpass(&[0.0, 1.0], FS / 2.0, FS).is_err());
    }
}
