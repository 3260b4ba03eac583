//! Noisy channel estimates and the non-coherently averaged power delay
//! profile `z(n) = (1/K) * sum_i |h_i(n)|^2`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{CHIP_PERIOD_S, SPEED_OF_LIGHT};

/// Uniform delay grid of the searcher window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TapGrid {
    pub tap_spacing_s: f64,
    pub n_taps: usize,
}

impl Default for TapGrid {
    fn default() -> Self {
        Self {
            tap_spacing_s: CHIP_PERIOD_S,
            n_taps: 128,
        }
    }
}

impl TapGrid {
    pub fn new(tap_spacing_s: f64, n_taps: usize) -> Self {
        Self {
            tap_spacing_s,
            n_taps,
        }
    }

    /// Nearest tap index for a delay (round half away from zero).
    pub fn nearest_tap(&self, delay_s: f64) -> usize {
        libm::round(delay_s / self.tap_spacing_s).max(0.0) as usize
    }

    /// Range covered by one tap, meters.
    pub fn tap_range_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.tap_spacing_s
    }

    /// Total range covered by the window, meters.
    pub fn span_m(&self) -> f64 {
        self.tap_range_m() * self.n_taps as f64
    }
}

/// One estimated channel impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSnapshot {
    pub taps: Vec<Complex64>,
    pub slot_index: usize,
}

/// Circularly symmetric complex Gaussian estimation noise; real and
/// imaginary parts each have standard deviation `sigma_h / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma_h: f64,
}

impl NoiseModel {
    pub fn new(sigma_h: f64) -> Result<Self> {
        if !(sigma_h.is_finite() && sigma_h > 0.0) {
            return Err(Error::Config {
                field: "sigma_h",
                reason: "must be positive and finite",
            });
        }
        Ok(Self { sigma_h })
    }

    /// Noise sized from a reference tap power and a post-correlation SNR.
    pub fn from_snr(reference_power: f64, snr_db: f64) -> Result<Self> {
        Self::new(libm::sqrt(reference_power / libm::pow(10.0, snr_db / 10.0)))
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    /// Per-tap noise power `sigma_h^2`, the noise mean of z(n).
    pub fn variance(&self) -> f64 {
        self.sigma_h * self.sigma_h
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let s = self.sigma_h * core::f64::consts::FRAC_1_SQRT_2;
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    }
}

/// Adds i.i.d. estimation noise to every tap of the true response.
pub fn observe_cir<R: Rng + ?Sized>(
    true_taps: &[Complex64],
    noise: &NoiseModel,
    slot_index: usize,
    rng: &mut R,
) -> CirSnapshot {
    let taps = true_taps.iter().map(|&h| h + noise.sample(rng)).collect();
    CirSnapshot { taps, slot_index }
}

/// Averaged power delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub z: Vec<f64>,
    pub k_averages: usize,
    pub grid: TapGrid,
}

impl PowerDelayProfile {
    /// Wraps an existing profile; `z` must match the grid and be non-negative.
    pub fn new(z: Vec<f64>, k_averages: usize, grid: TapGrid) -> Result<Self> {
        if z.len() != grid.n_taps {
            return Err(Error::TapCountMismatch {
                index: 0,
                expected: grid.n_taps,
                got: z.len(),
            });
        }
        if k_averages == 0 {
            return Err(Error::NoSnapshots);
        }
        Ok(Self {
            z,
            k_averages,
            grid,
        })
    }

    /// Profile on a grid sized to `z` with the chip spacing; handy for tests
    /// and hand-built profiles.
    pub fn from_powers(z: Vec<f64>, k_averages: usize) -> Self {
        let grid = TapGrid::new(CHIP_PERIOD_S, z.len());
        Self {
            z,
            k_averages: k_averages.max(1),
            grid,
        }
    }

    pub fn max(&self) -> f64 {
        self.z.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        if self.z.is_empty() {
            return 0.0;
        }
        self.z.iter().sum::<f64>() / self.z.len() as f64
    }

    /// Index of the strongest tap (lowest index among ties).
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.z.iter().enumerate() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Running sum of `|h_i(n)|^2` for streaming averaging.
#[derive(Debug, Clone)]
pub struct PdpAccumulator {
    sum: Vec<f64>,
    count: usize,
    grid: TapGrid,
}

impl PdpAccumulator {
    pub fn new(grid: TapGrid) -> Self {
        Self {
            sum: vec![0.0; grid.n_taps],
            count: 0,
            grid,
        }
    }

    pub fn push(&mut self, taps: &[Complex64]) -> Result<()> {
        if taps.len() != self.sum.len() {
            return Err(Error::TapCountMismatch {
                index: self.count,
                expected: self.sum.len(),
                got: taps.len(),
            });
        }
        for (acc, h) in self.sum.iter_mut().zip(taps) {
            *acc += h.norm_sqr();
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<PowerDelayProfile> {
        if self.count == 0 {
            return Err(Error::NoSnapshots);
        }
        let k = self.count as f64;
        Ok(PowerDelayProfile {
            z: self.sum.into_iter().map(|s| s / k).collect(),
            k_averages: self.count,
            grid: self.grid,
        })
    }
}

/// Non-coherent average of `K` snapshots on `grid`.
pub fn average_pdp(snapshots: &[CirSnapshot], grid: TapGrid) -> Result<PowerDelayProfile> {
    if snapshots.is_empty() {
        return Err(Error::NoSnapshots);
    }
    let mut acc = PdpAccumulator::new(grid);
    for (index, s) in snapshots.iter().enumerate() {
        acc.push(&s.taps).map_err(|_| Error::TapCountMismatch {
            index,
            expected: grid.n_taps,
            got: s.taps.len(),
        })?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn snap(taps: &[Complex64]) -> CirSnapshot {
        CirSnapshot {
            taps: taps.to_vec(),
            slot_index: 0,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_snapshot_is_squared_magnitude() {
        let pdp = average_pdp(
            &[snap(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 2.0)])],
            TapGrid::new(1e-6, 3),
        )
        .unwrap();
        assert_eq!(pdp.z, vec![1.0, 0.0, 4.0]);
        assert_eq!(pdp.k_averages, 1);
    }

    #[test]
    fn two_snapshots_average() {
        let s = [
            snap(&[c(1.0, 0.0), c(0.0, 0.0)]),
            snap(&[c(0.0, 0.0), c(1.0, 0.0)]),
        ];
        let pdp = average_pdp(&s, TapGrid::new(1e-6, 2)).unwrap();
        assert_eq!(pdp.z, vec![0.5, 0.5]);
        assert_eq!(pdp.k_averages, 2);
    }

    #[test]
    fn averaging_errors() {
        assert_eq!(
            average_pdp(&[], TapGrid::default()),
            Err(Error::NoSnapshots)
        );
        let s = [snap(&[c(1.0, 0.0); 2]), snap(&[c(1.0, 0.0); 3])];
        assert_eq!(
            average_pdp(&s, TapGrid::new(1e-6, 2)),
            Err(Error::TapCountMismatch {
                index: 1,
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn vanishing_noise_returns_input() {
        let noise = NoiseModel::new(1e-300).unwrap();
        let truth = [c(1.0, -2.0), c(0.5, 0.25)];
        let obs = observe_cir(&truth, &noise, 0, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(obs.taps, truth.to_vec());
    }

    #[test]
    fn noise_power_and_mean() {
        let sigma = 0.7;
        let noise = NoiseModel::new(sigma).unwrap();
        let n = 100_000;
        let zeros = vec![c(0.0, 0.0); n];
        let obs = observe_cir(&zeros, &noise, 0, &mut ChaCha8Rng::seed_from_u64(2));
        let power = obs.taps.iter().map(|t| t.norm_sqr()).sum::<f64>() / n as f64;
        assert!((power / (sigma * sigma) - 1.0).abs() < 0.02, "{power}");
        let mean_re = obs.taps.iter().map(|t| t.re).sum::<f64>() / n as f64;
        assert!(mean_re.abs() < 3.0 * sigma / libm::sqrt(2.0 * n as f64));
    }

    #[test]
    fn noise_model_rejects_bad_sigma() {
        assert!(NoiseModel::new(0.0).is_err());
        assert!(NoiseModel::new(f64::NAN).is_err());
        let n = NoiseModel::from_snr(4.0, 20.0).unwrap();
        assert!((n.variance() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn grid_helpers() {
        let g = TapGrid::default();
        assert_eq!(g.nearest_tap(7.4 * g.tap_spacing_s), 7);
        assert_eq!(g.nearest_tap(7.6 * g.tap_spacing_s), 8);
        assert!((g.tap_range_m() - 78.070_952_604_166_67).abs() < 1e-9);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        let pdp = PowerDelayProfile::from_powers(vec![1.0, 3.0, 3.0, 2.0], 1);
        assert_eq!(pdp.argmax(), Some(1));
    }
}
