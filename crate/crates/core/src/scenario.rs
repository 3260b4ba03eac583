//! Network layout, evaluation points, per-point measurement and positioning,
//! and campaign statistics.
//!
//! Randomness is split into ChaCha streams under one master seed: stream 0
//! draws the evaluation points, stream `i + 1` drives everything measured at
//! point `i`. Results therefore do not depend on the order in which points
//! are processed.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::firstpath::{tap_to_range, ThresholdSpec};
use crate::geometry::Point;
use crate::locate::{position_fix, FixStatus, PositionFix, RangeSet};
use crate::propagation::{
    draw_los, evolve_channel, received_power, render_into, ChannelParams, ChannelState,
    PathLossParams, LOS_DIRECT_SHARE,
};
use crate::receiver::{NoiseModel, PdpAccumulator, PowerDelayProfile, TapGrid};
use crate::CHIP_PERIOD_S;

/// Everything a campaign needs. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimConfig {
    pub seed: u64,
    pub n_points: usize,
    /// Inter-site distance.
    pub isd_m: f64,
    /// Post-correlation SNR of the strongest (LOS) tap at the cell corner.
    pub snr_db: f64,
    pub k_averages: usize,
    pub n_taps: usize,
    pub tap_spacing_s: f64,
    /// Time between successive CIR estimates (one slot).
    pub slot_s: f64,
    pub speed_mps: f64,
    /// Number of nearest stations measured.
    pub n_measured: usize,
    pub los_prob_serving: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r_scat_m: f64,
    pub mean_lifespan_s: f64,
    pub los_components: f64,
    pub nlos_components: f64,
    pub carrier_hz: f64,
    /// Decay length of scattered power with excess path; `None` disables.
    pub excess_decay_m: Option<f64>,
    pub degeneracy_tol: f64,
    pub threshold: ThresholdSpec,
    /// Makes every measured link LOS. Diagnostic.
    pub force_los: bool,
    /// Feeds true distances to the solver instead of detected ranges. Diagnostic.
    pub oracle_ranges: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        let ch = ChannelParams::default();
        Self {
            seed: 1,
            n_points: 1020,
            isd_m: 1000.0,
            snr_db: 30.0,
            k_averages: 450,
            n_taps: 128,
            tap_spacing_s: CHIP_PERIOD_S,
            slot_s: 0.01 / 15.0,
            speed_mps: 50.0 / 3.6,
            n_measured: 7,
            los_prob_serving: 0.2,
            alpha: ch.path_loss.alpha,
            beta: ch.path_loss.beta,
            r_scat_m: ch.r_scat_m,
            mean_lifespan_s: ch.mean_lifespan_s,
            los_components: ch.los_components,
            nlos_components: ch.nlos_components,
            carrier_hz: ch.carrier_hz,
            excess_decay_m: ch.excess_decay_m,
            degeneracy_tol: crate::locate::DEFAULT_DEGENERACY_TOL,
            threshold: ThresholdSpec::M1 { delta_db: 11.0 },
            force_los: false,
            oracle_ranges: false,
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config {
            field,
            reason: "must be positive and finite",
        })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::Config {
                field: "n_points",
                reason: "must be at least 1",
            });
        }
        positive("isd_m", self.isd_m)?;
        if !self.snr_db.is_finite() {
            return Err(Error::Config {
                field: "snr_db",
                reason: "must be finite",
            });
        }
        if self.k_averages == 0 {
            return Err(Error::Config {
                field: "k_averages",
                reason: "must be at least 1",
            });
        }
        if self.n_taps < 8 {
            return Err(Error::Config {
                field: "n_taps",
                reason: "must be at least 8",
            });
        }
        positive("tap_spacing_s", self.tap_spacing_s)?;
        positive("slot_s", self.slot_s)?;
        if !(self.speed_mps >= 0.0 && self.speed_mps.is_finite()) {
            return Err(Error::Config {
                field: "speed_mps",
                reason: "must be non-negative and finite",
            });
        }
        if !(3..=19).contains(&self.n_measured) {
            return Err(Error::Config {
                field: "n_measured",
                reason: "must be between 3 and 19",
            });
        }
        if !(0.0..=1.0).contains(&self.los_prob_serving) {
            return Err(Error::Config {
                field: "los_prob_serving",
                reason: "must be in [0, 1]",
            });
        }
        positive("alpha", self.alpha)?;
        if !self.beta.is_finite() {
            return Err(Error::Config {
                field: "beta",
                reason: "must be finite",
            });
        }
        positive("r_scat_m", self.r_scat_m)?;
        positive("mean_lifespan_s", self.mean_lifespan_s)?;
        if !(self.los_components >= 1.0 && self.los_components.is_finite()) {
            return Err(Error::Config {
                field: "los_components",
                reason: "must be at least 1 (the direct path)",
            });
        }
        positive("nlos_components", self.nlos_components)?;
        positive("carrier_hz", self.carrier_hz)?;
        if let Some(d) = self.excess_decay_m {
            positive("excess_decay_m", d)?;
        }
        positive("degeneracy_tol", self.degeneracy_tol)?;
        self.threshold.validate().map_err(|_| Error::Config {
            field: "threshold",
            reason: "invalid threshold parameters",
        })?;
        if let ThresholdSpec::M3 { l_strongest, .. } = self.threshold {
            if l_strongest >= self.n_taps {
                return Err(Error::Config {
                    field: "threshold",
                    reason: "l_strongest must be below n_taps",
                });
            }
        }
        let needed = 2.5 * self.isd_m + 2.0 * self.r_scat_m + self.speed_mps * self.measurement_s();
        if self.grid().span_m() < needed {
            return Err(Error::Config {
                field: "n_taps",
                reason: "delay window too short for the measured stations",
            });
        }
        Ok(())
    }

    pub fn grid(&self) -> TapGrid {
        TapGrid::new(self.tap_spacing_s, self.n_taps)
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            path_loss: PathLossParams {
                alpha: self.alpha,
                beta: self.beta,
            },
            r_scat_m: self.r_scat_m,
            mean_lifespan_s: self.mean_lifespan_s,
            los_components: self.los_components,
            nlos_components: self.nlos_components,
            carrier_hz: self.carrier_hz,
            excess_decay_m: self.excess_decay_m,
        }
    }

    /// Averaging window duration.
    pub fn measurement_s(&self) -> f64 {
        self.k_averages as f64 * self.slot_s
    }

    /// Estimation noise: `sigma_h^2` is the power of a LOS direct tap at the
    /// serving-cell corner divided by the configured SNR.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        let corner = self.isd_m / libm::sqrt(3.0);
        let reference = received_power(corner, &self.channel().path_loss)? * LOS_DIRECT_SHARE;
        NoiseModel::from_snr(reference, self.snr_db)
    }
}

/// Base stations on a hexagonal lattice: the serving site at the origin,
/// six at one inter-site distance and twelve on the second ring.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    pub stations: Vec<Point>,
    pub isd_m: f64,
}

/// Builds the 19-site layout.
pub fn build_network(isd_m: f64) -> Result<NetworkLayout> {
    positive("isd_m", isd_m)?;
    let mut stations = Vec::with_capacity(19);
    stations.push(Point::ORIGIN);
    let sixth = PI / 3.0;
    for i in 0..6 {
        stations.push(Point::from_polar(isd_m, i as f64 * sixth));
    }
    for i in 0..6 {
        let corner = Point::from_polar(2.0 * isd_m, i as f64 * sixth);
        let edge = Point::from_polar(libm::sqrt(3.0) * isd_m, (i as f64 + 0.5) * sixth);
        stations.push(corner);
        stations.push(edge);
    }
    Ok(NetworkLayout { stations, isd_m })
}

impl NetworkLayout {
    /// Distance from the center site to a corner of its cell.
    pub fn cell_circumradius(&self) -> f64 {
        self.isd_m / libm::sqrt(3.0)
    }

    /// Whether `p` lies in the center site's hexagonal cell.
    pub fn in_serving_cell(&self, p: Point) -> bool {
        let half = self.isd_m / 2.0;
        (0..6).all(|i| p.dot(Point::from_polar(1.0, i as f64 * PI / 3.0)) <= half + 1e-9)
    }

    /// Indices of the `n` closest stations, nearest first (ties by index).
    pub fn nearest(&self, p: Point, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.stations.len()).collect();
        idx.sort_by(|&a, &b| {
            p.distance(self.stations[a])
                .total_cmp(&p.distance(self.stations[b]))
                .then(a.cmp(&b))
        });
        idx.truncate(n);
        idx
    }
}

/// Where and how the mobile is when measured.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationPoint {
    pub position: Point,
    pub heading_rad: f64,
    pub speed_mps: f64,
}

impl EvaluationPoint {
    /// Mobile position `t_s` seconds from the middle of the measurement.
    pub fn position_at(&self, t_s: f64) -> Point {
        self.position + Point::from_polar(self.speed_mps * t_s, self.heading_rad)
    }
}

/// Uniform points in the serving cell by rejection from the bounding square.
pub fn sample_points<R: Rng + ?Sized>(
    n: usize,
    layout: &NetworkLayout,
    speed_mps: f64,
    rng: &mut R,
) -> Vec<EvaluationPoint> {
    let r = layout.cell_circumradius();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point::new(
            r * (2.0 * rng.random::<f64>() - 1.0),
            r * (2.0 * rng.random::<f64>() - 1.0),
        );
        if !layout.in_serving_cell(p) {
            continue;
        }
        let heading_rad = 2.0 * PI * rng.random::<f64>();
        out.push(EvaluationPoint {
            position: p,
            heading_rad,
            speed_mps,
        });
    }
    out
}

/// Stream 0 of the master seed: the evaluation points.
pub fn campaign_points(cfg: &SimConfig, layout: &NetworkLayout) -> Vec<EvaluationPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    sample_points(cfg.n_points, layout, cfg.speed_mps, &mut rng)
}

/// RNG for everything measured at point `point_id`.
pub fn point_rng(seed: u64, point_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point_id as u64 + 1);
    rng
}

/// Averaged profile from one station, before any thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct StationMeasurement {
    pub station: usize,
    /// 0 for the serving station, then by increasing distance.
    pub rank: usize,
    pub anchor: Point,
    pub los: bool,
    /// Distance at the middle of the measurement.
    pub true_distance_m: f64,
    pub pdp: PowerDelayProfile,
}

/// Measures the `n_measured` nearest stations from `pt`.
///
/// Each link gets its own LOS draw and channel; the channel is evolved slot
/// by slot while the mobile moves along its heading, and the noisy CIR
/// estimates are averaged into one profile. The trajectory is centered on
/// `pt.position`.
pub fn measure_point<R: Rng + ?Sized>(
    pt: &EvaluationPoint,
    layout: &NetworkLayout,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Vec<StationMeasurement>> {
    let noise = cfg.noise_model()?;
    let grid = cfg.grid();
    let params = cfg.channel();
    let half = cfg.measurement_s() / 2.0;
    let t_of = |i: usize| (i as f64 + 0.5) * cfg.slot_s - half;
    let mut taps = vec![Complex64::new(0.0, 0.0); grid.n_taps];

    let mut out = Vec::with_capacity(cfg.n_measured);
    for (rank, station) in layout
        .nearest(pt.position, cfg.n_measured)
        .into_iter()
        .enumerate()
    {
        let bs = layout.stations[station];
        let los = cfg.force_los || draw_los(rank == 0, cfg.los_prob_serving, rng);
        let mut state = ChannelState::new(
            station,
            bs,
            pt.position_at(t_of(0)),
            los,
            t_of(0),
            &params,
            rng,
        )?;
        let mut acc = PdpAccumulator::new(grid);
        for i in 0..cfg.k_averages {
            if i > 0 {
                state =
                    evolve_channel(state, bs, pt.position_at(t_of(i)), cfg.slot_s, &params, rng);
            }
            render_into(&state, &grid, &mut taps)?;
            for t in taps.iter_mut() {
                *t += noise.sample(rng);
            }
            acc.push(&taps)?;
        }
        out.push(StationMeasurement {
            station,
            rank,
            anchor: bs,
            los,
            true_distance_m: bs.distance(pt.position),
            pdp: acc.finish()?,
        });
    }
    Ok(out)
}

/// Per-station detection outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEstimate {
    pub station: usize,
    pub rank: usize,
    pub anchor: Point,
    pub los: bool,
    pub true_distance_m: f64,
    pub tap_index: Option<usize>,
    pub threshold: f64,
    pub range_m: Option<f64>,
}

impl RangeEstimate {
    pub fn detected(&self) -> bool {
        self.range_m.is_some()
    }

    /// Measured minus true range.
    pub fn signed_error_m(&self) -> Option<f64> {
        self.range_m.map(|r| r - self.true_distance_m)
    }
}

/// Applies `threshold` to every measured profile.
pub fn estimate_ranges(
    measurements: &[StationMeasurement],
    threshold: &ThresholdSpec,
) -> Result<Vec<RangeEstimate>> {
    measurements
        .iter()
        .map(|m| {
            let d = threshold.detect(&m.pdp)?;
            Ok(RangeEstimate {
                station: m.station,
                rank: m.rank,
                anchor: m.anchor,
                los: m.los,
                true_distance_m: m.true_distance_m,
                tap_index: d.tap_index,
                threshold: d.threshold,
                range_m: d.tap_index.map(|t| tap_to_range(t, &m.pdp.grid)),
            })
        })
        .collect()
}

/// Multilaterates from the detected ranges. The closest detected station
/// (normally the serving one) is the reference.
pub fn locate_estimates(estimates: &[RangeEstimate], degeneracy_tol: f64) -> PositionFix {
    let mut detected: Vec<&RangeEstimate> = estimates.iter().filter(|e| e.detected()).collect();
    detected.sort_by_key(|e| e.rank);
    let anchors: Vec<Point> = detected.iter().map(|e| e.anchor).collect();
    let ranges: Vec<f64> = detected.iter().filter_map(|e| e.range_m).collect();
    match RangeSet::new(&anchors, &ranges) {
        Ok(rs) => position_fix(&rs, degeneracy_tol),
        Err(_) => PositionFix::unavailable(FixStatus::InsufficientRanges),
    }
}

/// Outcome at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point_id: usize,
    pub true_pos: Point,
    pub fix: PositionFix,
    /// Euclidean error, when the fix is usable.
    pub error_m: Option<f64>,
    pub n_detected: usize,
    pub estimates: Vec<RangeEstimate>,
}

impl PointResult {
    /// Stations behind the winning fix: the reference first, then the
    /// subset members. Empty when the fix is unavailable.
    pub fn chosen_stations(&self) -> Vec<usize> {
        if !self.fix.is_ok() {
            return Vec::new();
        }
        let mut detected: Vec<&RangeEstimate> =
            self.estimates.iter().filter(|e| e.detected()).collect();
        detected.sort_by_key(|e| e.rank);
        core::iter::once(1)
            .chain(self.fix.chosen_subset.iter().copied())
            .filter_map(|anchor| detected.get(anchor - 1).map(|e| e.station))
            .collect()
    }
}

/// Measured profiles of one point, reusable across thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredPoint {
    pub point_id: usize,
    pub point: EvaluationPoint,
    pub measurements: Vec<StationMeasurement>,
}

pub fn measure_campaign_point(
    cfg: &SimConfig,
    layout: &NetworkLayout,
    point_id: usize,
    point: &EvaluationPoint,
) -> Result<MeasuredPoint> {
    let mut rng = point_rng(cfg.seed, point_id);
    Ok(MeasuredPoint {
        point_id,
        point: *point,
        measurements: measure_point(point, layout, cfg, &mut rng)?,
    })
}

/// Detection and positioning of an already measured point.
pub fn evaluate_point(
    measured: &MeasuredPoint,
    threshold: &ThresholdSpec,
    cfg: &SimConfig,
) -> Result<PointResult> {
    let mut estimates = estimate_ranges(&measured.measurements, threshold)?;
    if cfg.oracle_ranges {
        for e in &mut estimates {
            e.range_m = Some(e.true_distance_m);
        }
    }
    let fix = locate_estimates(&estimates, cfg.degeneracy_tol);
    let true_pos = measured.point.position;
    Ok(PointResult {
        point_id: measured.point_id,
        true_pos,
        error_m: fix.is_ok().then(|| fix.position.distance(true_pos)),
        n_detected: estimates.iter().filter(|e| e.detected()).count(),
        fix,
        estimates,
    })
}

/// Measure and evaluate one point with the configured threshold.
pub fn simulate_point(
    cfg: &SimConfig,
    layout: &NetworkLayout,
    point_id: usize,
    point: &EvaluationPoint,
) -> Result<PointResult> {
    let measured = measure_campaign_point(cfg, layout, point_id, point)?;
    evaluate_point(&measured, &cfg.threshold, cfg)
}

/// Positioning error summary over usable fixes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorStats {
    pub mean_m: f64,
    /// Population standard deviation.
    pub std_m: f64,
    pub p95_m: f64,
    pub n_points: usize,
    pub n_unavailable: usize,
}

impl ErrorStats {
    /// Statistics over the `Ok` fixes. All fields are NaN when there is none.
    pub fn from_results(results: &[PointResult]) -> Self {
        let errors: Vec<f64> = results.iter().filter_map(|r| r.error_m).collect();
        let n_unavailable = results.len() - errors.len();
        if errors.is_empty() {
            return Self {
                mean_m: f64::NAN,
                std_m: f64::NAN,
                p95_m: f64::NAN,
                n_points: results.len(),
                n_unavailable,
            };
        }
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        Self {
            mean_m: mean,
            std_m: libm::sqrt(var),
            p95_m: percentile(&errors, 0.95).expect("non-empty"),
            n_points: results.len(),
            n_unavailable,
        }
    }

    pub fn all_unavailable(&self) -> bool {
        self.n_unavailable == self.n_points
    }
}

/// Nearest-rank percentile: the element at `ceil(p * n) - 1` after sorting.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyPercentile);
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidPercentile(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = libm::ceil(p * sorted.len() as f64) as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Mean of measured-minus-true range over every detection in `results`.
pub fn mean_signed_range_error(results: &[PointResult]) -> Option<f64> {
    let errs: Vec<f64> = results
        .iter()
        .flat_map(|r| r.estimates.iter().filter_map(RangeEstimate::signed_error_m))
        .collect();
    (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
}

/// Per-point results plus their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub results: Vec<PointResult>,
    pub stats: ErrorStats,
}

/// Sequential campaign over `cfg.n_points` points.
pub fn run_campaign(cfg: &SimConfig) -> Result<Campaign> {
    cfg.validate()?;
    let layout = build_network(cfg.isd_m)?;
    let results = campaign_points(cfg, &layout)
        .iter()
        .enumerate()
        .map(|(id, pt)| simulate_point(cfg, &layout, id, pt))
        .collect::<Result<Vec<_>>>()?;
    let stats = ErrorStats::from_results(&results);
    Ok(Campaign { results, stats })
}
