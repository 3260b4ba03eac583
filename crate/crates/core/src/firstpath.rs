//! Detection thresholds and first-path detection on a power delay profile.
//!
//! Three threshold rules are provided:
//!
//! - **Method 1**: `delta_db` below the profile maximum. `delta_db = 0`
//!   degenerates to picking the strongest tap.
//! - **Method 2**: `a * m + b * m / sqrt(K)` where `m` is the mean of the
//!   whole profile, standing in for the noise mean, and `m / sqrt(K)` is the
//!   standard deviation of K-fold averaged noise power.
//! - **Method 3**: `m + gamma * s` where `m` and `s` are the mean and
//!   population standard deviation of the profile after removing the `L`
//!   strongest taps.
//!
//! The detected first path is the earliest tap strictly above the threshold.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::receiver::{PowerDelayProfile, TapGrid};
use crate::SPEED_OF_LIGHT;

/// Threshold rule and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "lowercase"))]
pub enum ThresholdSpec {
    M1 { delta_db: f64 },
    M2 { a: f64, b: f64 },
    M3 { l_strongest: usize, gamma: f64 },
}

impl ThresholdSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdSpec::M1 { delta_db } => {
                if !(delta_db.is_finite() && delta_db >= 0.0) {
                    return Err(Error::InvalidThreshold("delta_db must be >= 0"));
                }
            }
            ThresholdSpec::M2 { a, b } => {
                if !(a >= 0.0 && b >= 0.0) || !(a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidThreshold("a and b must be >= 0"));
                }
                if a == 0.0 && b == 0.0 {
                    return Err(Error::InvalidThreshold("a and b cannot both be 0"));
                }
            }
            ThresholdSpec::M3 { l_strongest, gamma } => {
                if l_strongest == 0 {
                    return Err(Error::InvalidThreshold("l_strongest must be >= 1"));
                }
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::InvalidThreshold("gamma must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Threshold in linear power for `pdp`.
    pub fn threshold(&self, pdp: &PowerDelayProfile) -> Result<f64> {
        match *self {
            ThresholdSpec::M1 { delta_db } => threshold_method1(pdp, delta_db),
            ThresholdSpec::M2 { a, b } => Ok(threshold_method2(pdp, a, b)),
            ThresholdSpec::M3 { l_strongest, gamma } => threshold_method3(pdp, l_strongest, gamma),
        }
    }

    /// Threshold followed by detection. A profile without any positive tap
    /// yields no detection rather than an error.
    ///
    /// Method 1 at `delta_db = 0` puts the threshold exactly on the maximum,
    /// which the strict detector can never exceed; it is resolved as the
    /// strongest tap (lowest index among ties) instead.
    pub fn detect(&self, pdp: &PowerDelayProfile) -> Result<Detection> {
        if let ThresholdSpec::M1 { delta_db } = *self {
            if delta_db == 0.0 {
                let max = pdp.max();
                return Ok(Detection {
                    tap_index: if max > 0.0 { pdp.argmax() } else { None },
                    threshold: max,
                });
            }
        }
        match self.threshold(pdp) {
            Ok(theta) => Ok(detect_first_path(pdp, theta)),
            Err(Error::ZeroProfile) => Ok(Detection {
                tap_index: None,
                threshold: 0.0,
            }),
            Err(e) => Err(e),
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self {
            ThresholdSpec::M1 { .. } => "m1",
            ThresholdSpec::M2 { .. } => "m2",
            ThresholdSpec::M3 { .. } => "m3",
        }
    }
}

/// Noise mean and standard deviation in z(n), linear power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseStats {
    pub mean: f64,
    pub std: f64,
}

impl NoiseStats {
    /// Whole-profile mean as the noise mean, `mean / sqrt(K)` as its spread.
    pub fn from_profile_mean(pdp: &PowerDelayProfile) -> Self {
        let mean = pdp.mean();
        Self {
            mean,
            std: mean / libm::sqrt(pdp.k_averages.max(1) as f64),
        }
    }

    /// Mean and population std of what remains after the `l` strongest taps
    /// are removed. Among equal powers the lower tap index counts as stronger.
    pub fn excluding_strongest(pdp: &PowerDelayProfile, l: usize) -> Result<Self> {
        let n = pdp.len();
        if l == 0 || l >= n {
            return Err(Error::InvalidStrongestCount { l, n_taps: n });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| pdp.z[j].total_cmp(&pdp.z[i]).then(i.cmp(&j)));
        let rest = &order[l..];
        let count = rest.len() as f64;
        let mean = rest.iter().map(|&i| pdp.z[i]).sum::<f64>() / count;
        let var = rest
            .iter()
            .map(|&i| {
                let d = pdp.z[i] - mean;
                d * d
            })
            .sum::<f64>()
            / count;
        Ok(Self {
            mean,
            std: libm::sqrt(var),
        })
    }
}

/// Earliest-path detection outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub tap_index: Option<usize>,
    pub threshold: f64,
}

/// `max(z) * 10^(-delta_db / 10)`.
pub fn threshold_method1(pdp: &PowerDelayProfile, delta_db: f64) -> Result<f64> {
    let max = pdp.max();
    if max.is_nan() || max <= 0.0 {
        return Err(Error::ZeroProfile);
    }
    if delta_db == 0.0 {
        return Ok(max);
    }
    Ok(max * libm::pow(10.0, -delta_db / 10.0))
}

/// `mean(z) * (a + b / sqrt(K))`.
pub fn threshold_method2(pdp: &PowerDelayProfile, a: f64, b: f64) -> f64 {
    let noise = NoiseStats::from_profile_mean(pdp);
    a * noise.mean + b * noise.std
}

/// Noise mean plus `gamma` noise standard deviations, with the noise taken
/// as everything except the `l_strongest` strongest taps.
pub fn threshold_method3(pdp: &PowerDelayProfile, l_strongest: usize, gamma: f64) -> Result<f64> {
    let noise = NoiseStats::excluding_strongest(pdp, l_strongest)?;
    Ok(noise.mean + gamma * noise.std)
}

/// First tap with `z > threshold`.
pub fn detect_first_path(pdp: &PowerDelayProfile, threshold: f64) -> Detection {
    Detection {
        tap_index: pdp.z.iter().position(|&v| v > threshold),
        threshold,
    }
}

/// One-way range for a tap index.
pub fn tap_to_range(tap_index: usize, grid: &TapGrid) -> f64 {
    SPEED_OF_LIGHT * tap_index as f64 * grid.tap_spacing_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pdp(z: &[f64], k: usize) -> PowerDelayProfile {
        PowerDelayProfile::from_powers(z.to_vec(), k)
    }

    #[test]
    fn method1_db_arithmetic() {
        let mut z = vec![0.0; 8];
        z[3] = 1e-6;
        let t = threshold_method1(&pdp(&z, 1), 11.0).unwrap();
        assert!((t / libm::pow(10.0, -7.1) - 1.0).abs() < 1e-12);

        let t = threshold_method1(&pdp(&[1.0, 4.0, 2.0], 1), 3.0103).unwrap();
        assert!((t - 2.0).abs() < 1e-4);
        let t = threshold_method1(&pdp(&[1.0, 4.0, 2.0], 1), 10.0 * libm::log10(2.0)).unwrap();
        assert!((t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn method1_zero_delta_is_max_tap() {
        let p = pdp(&[0.2, 5.0, 1.0, 5.0], 1);
        let t = threshold_method1(&p, 0.0).unwrap();
        assert_eq!(t, 5.0);
        // Strict detection at the max never fires; the trivial detector is argmax.
        assert_eq!(detect_first_path(&p, t).tap_index, None);
        let d = ThresholdSpec::M1 { delta_db: 0.0 }.detect(&p).unwrap();
        assert_eq!(d.tap_index, Some(1));
        assert_eq!(d.threshold, 5.0);
    }

    #[test]
    fn method1_rejects_zero_profile() {
        assert_eq!(
            threshold_method1(&pdp(&[0.0; 4], 1), 3.0),
            Err(Error::ZeroProfile)
        );
        let d = ThresholdSpec::M1 { delta_db: 3.0 }
            .detect(&pdp(&[0.0; 4], 1))
            .unwrap();
        assert_eq!(d.tap_index, None);
    }

    #[test]
    fn method2_arithmetic() {
        assert_eq!(threshold_method2(&pdp(&[2.0; 16], 4), 6.0, 4.0), 16.0);
        let p = pdp(&[1.0, 2.0, 3.0, 6.0], 17);
        assert_eq!(threshold_method2(&p, 1.0, 0.0), 3.0);
        let t = threshold_method2(&pdp(&[1.0; 16], 450), 6.0, 4.0);
        assert!((t - 6.188_561_808_316_413).abs() < 1e-12);
    }

    #[test]
    fn method3_examples() {
        let z = [9.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(threshold_method3(&pdp(&z, 1), 1, 2.0).unwrap(), 1.0);
        assert!(
            (threshold_method3(&pdp(&[1.0, 2.0, 4.0, 8.0], 1), 2, 1.0).unwrap() - 2.0).abs()
                < 1e-15
        );
        let p = pdp(&[5.0, 1.0, 3.0, 2.0, 7.0], 1);
        assert_eq!(threshold_method3(&p, 2, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn method3_ties_favor_lower_index() {
        // Taps 1 and 2 tie; tap 1 is removed as "stronger", leaving {0, 2, 3}.
        let p = pdp(&[0.0, 4.0, 4.0, 1.0], 1);
        let s = NoiseStats::excluding_strongest(&p, 1).unwrap();
        assert!((s.mean - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn method3_rejects_bad_l() {
        let p = pdp(&[1.0; 4], 1);
        assert_eq!(
            threshold_method3(&p, 4, 1.0),
            Err(Error::InvalidStrongestCount { l: 4, n_taps: 4 })
        );
        assert!(threshold_method3(&p, 0, 1.0).is_err());
    }

    #[test]
    fn detector_boundaries() {
        let p = pdp(&[0.5, 3.0, 1.0, 5.0], 1);
        assert_eq!(detect_first_path(&p, 2.0).tap_index, Some(1));
        assert_eq!(detect_first_path(&p, 10.0).tap_index, None);
        assert_eq!(detect_first_path(&p, 3.0).tap_index, Some(3));
    }

    #[test]
    fn tap_ranges() {
        let g = TapGrid::default();
        assert_eq!(tap_to_range(0, &g), 0.0);
        assert!((tap_to_range(1, &g) - 78.070_952_604_166_67).abs() < 1e-9);
        assert!((tap_to_range(10, &g) - 780.709_526_041_666_7).abs() < 1e-8);
    }

    #[test]
    fn spec_validation() {
        assert!(ThresholdSpec::M1 { delta_db: -1.0 }.validate().is_err());
        assert!(ThresholdSpec::M2 { a: 0.0, b: 0.0 }.validate().is_err());
        assert!(ThresholdSpec::M2 { a: 0.0, b: 1.0 }.validate().is_ok());
        assert!(ThresholdSpec::M3 {
            l_strongest: 0,
            gamma: 1.0
        }
        .validate()
        .is_err());
        assert!(ThresholdSpec::M3 {
            l_strongest: 10,
            gamma: 8.0
        }
        .validate()
        .is_ok());
    }
}
