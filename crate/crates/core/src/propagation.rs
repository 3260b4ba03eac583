//! Time-evolving multipath channel between one base station and the mobile.
//!
//! Each scattered component is a single-bounce path through a scatterer
//! dropped uniformly in a disc around the mobile. Components are born by a
//! Poisson process, live for an exponentially distributed lifespan and fade
//! with a half-period sine envelope over that lifespan. Delay, azimuth and
//! carrier phase follow the geometry as the mobile moves. Under LOS a direct
//! component is present whose power is held 6 dB above the sum of all
//! scattered components.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::receiver::TapGrid;
use crate::SPEED_OF_LIGHT;

/// Power ratio of the LOS direct component over all other components (6 dB).
pub const LOS_DOMINANCE: f64 = 3.981_071_705_534_972; // 10^0.6

/// Fraction of the received power budget carried by the LOS direct component.
pub const LOS_DIRECT_SHARE: f64 = LOS_DOMINANCE / (1.0 + LOS_DOMINANCE);

/// Slope/intercept of the log-distance path loss `beta + alpha * 10 log10(d_km)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathLossParams {
    pub alpha: f64,
    /// dB at 1 km.
    pub beta: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            alpha: 3.76,
            beta: 128.1,
        }
    }
}

/// Path loss in dB at `d_m` meters.
pub fn path_loss(d_m: f64, params: &PathLossParams) -> Result<f64> {
    if d_m.is_nan() || d_m <= 0.0 {
        return Err(Error::NonPositiveDistance(d_m));
    }
    Ok(params.beta + params.alpha * 10.0 * libm::log10(d_m / 1000.0))
}

/// Received power in linear units for a unit (0 dB) transmit reference.
pub fn received_power(d_m: f64, params: &PathLossParams) -> Result<f64> {
    Ok(libm::pow(10.0, -path_loss(d_m, params)? / 10.0))
}

/// Draws the propagation regime for one link. Only the serving station can
/// be LOS; it is with probability `p_los_serving`.
pub fn draw_los<R: Rng + ?Sized>(is_serving: bool, p_los_serving: f64, rng: &mut R) -> bool {
    if !is_serving {
        return false;
    }
    let u: f64 = rng.random();
    u < p_los_serving
}

/// Knobs of the scatterer channel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChannelParams {
    pub path_loss: PathLossParams,
    /// Radius of the scatterer disc around the mobile.
    pub r_scat_m: f64,
    pub mean_lifespan_s: f64,
    /// Mean component count under LOS, direct component included.
    pub los_components: f64,
    /// Mean component count under NLOS.
    pub nlos_components: f64,
    pub carrier_hz: f64,
    /// Scattered peak power decays as `exp(-excess / decay)` with the excess
    /// path length over the direct path. `None` keeps it delay-independent.
    pub excess_decay_m: Option<f64>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            path_loss: PathLossParams::default(),
            r_scat_m: 300.0,
            mean_lifespan_s: 2.0,
            los_components: 5.0,
            nlos_components: 25.0,
            carrier_hz: 2.0e9,
            excess_decay_m: Some(90.0),
        }
    }
}

impl ChannelParams {
    /// Stationary mean number of scattered (non-direct) components.
    pub fn scattered_target(&self, los: bool) -> f64 {
        if los {
            (self.los_components - 1.0).max(0.0)
        } else {
            self.nlos_components
        }
    }

    pub fn birth_rate(&self, los: bool) -> f64 {
        self.scattered_target(los) / self.mean_lifespan_s
    }

    /// Relative peak power of a path `excess_m` longer than the direct one.
    pub fn excess_taper(&self, excess_m: f64) -> f64 {
        match self.excess_decay_m {
            Some(d) if d > 0.0 => libm::exp(-excess_m.max(0.0) / d),
            _ => 1.0,
        }
    }
}

/// One propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathComponent {
    /// Peak complex amplitude; its argument is the initial phase.
    pub peak: Complex64,
    /// Instantaneous complex amplitude after fading and carrier rotation.
    pub amplitude: Complex64,
    pub delay_s: f64,
    /// Direction of arrival at the mobile.
    pub azimuth_rad: f64,
    pub birth_s: f64,
    /// Infinite for the LOS direct component.
    pub lifespan_s: f64,
    /// `None` marks the direct component.
    pub scatterer_pos: Option<Point>,
}

impl MultipathComponent {
    pub fn is_direct(&self) -> bool {
        self.scatterer_pos.is_none()
    }

    pub fn death_s(&self) -> f64 {
        self.birth_s + self.lifespan_s
    }

    pub fn is_alive(&self, t_s: f64) -> bool {
        t_s < self.death_s()
    }

    /// Half-sine envelope `sin(pi * age / lifespan)`, in [0, 1].
    pub fn fading_scale(&self, t_s: f64) -> f64 {
        if self.is_direct() {
            return 1.0;
        }
        let phase = (t_s - self.birth_s) / self.lifespan_s;
        if !(0.0..1.0).contains(&phase) {
            return 0.0;
        }
        libm::sin(PI * phase).clamp(0.0, 1.0)
    }

    pub fn power(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    fn update_geometry(&mut self, bs: Point, mobile: Point) {
        match self.scatterer_pos {
            None => {
                self.delay_s = bs.distance(mobile) / SPEED_OF_LIGHT;
                self.azimuth_rad = bs.bearing_to(mobile);
            }
            Some(s) => {
                self.delay_s = (bs.distance(s) + s.distance(mobile)) / SPEED_OF_LIGHT;
                self.azimuth_rad = mobile.bearing_to(s);
            }
        }
    }

    fn update_amplitude(&mut self, t_s: f64, carrier_hz: f64) {
        let magnitude = self.peak.norm() * self.fading_scale(t_s);
        let phase = self.peak.arg() - 2.0 * PI * libm::fmod(carrier_hz * self.delay_s, 1.0);
        self.amplitude = polar(magnitude, phase);
    }
}

fn polar(r: f64, theta: f64) -> Complex64 {
    Complex64::new(r * libm::cos(theta), r * libm::sin(theta))
}

/// Creates one component at time `now_s`.
///
/// The direct component sits exactly on the BS-mobile line of sight and
/// never dies. A scattered component gets a scatterer uniform in the disc of
/// radius `r_scat_m` around the mobile, a uniform phase and an exponential
/// lifespan; `peak_power` is its power at the envelope peak.
pub fn spawn_component<R: Rng + ?Sized>(
    bs: Point,
    mobile: Point,
    los_direct: bool,
    now_s: f64,
    peak_power: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> MultipathComponent {
    let phase = 2.0 * PI * rng.random::<f64>();
    let peak = polar(libm::sqrt(peak_power.max(0.0)), phase);
    let (scatterer_pos, lifespan_s) = if los_direct {
        (None, f64::INFINITY)
    } else {
        let r = params.r_scat_m * libm::sqrt(rng.random::<f64>());
        let theta = 2.0 * PI * rng.random::<f64>();
        let lifespan = Exp::new(1.0 / params.mean_lifespan_s)
            .expect("positive lifespan")
            .sample(rng);
        (Some(mobile + Point::from_polar(r, theta)), lifespan)
    };
    let mut c = MultipathComponent {
        peak,
        amplitude: Complex64::new(0.0, 0.0),
        delay_s: 0.0,
        azimuth_rad: 0.0,
        birth_s: now_s,
        lifespan_s,
        scatterer_pos,
    };
    c.update_geometry(bs, mobile);
    c.update_amplitude(now_s, params.carrier_hz);
    c
}

/// Channel between one base station and the mobile.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    /// Direct component first when `los` is set.
    pub components: Vec<MultipathComponent>,
    pub los: bool,
    pub bs_index: usize,
    /// Instantaneous total power over all components.
    pub total_power_linear: f64,
    /// Mean received power implied by path loss at the start of the link.
    pub budget_linear: f64,
    /// Peak power per unit exponential weight for newborn scattered paths.
    pub birth_scale: f64,
    pub time_s: f64,
}

impl ChannelState {
    /// Draws a channel already in its stationary regime at `now_s`.
    ///
    /// Scattered count is Poisson around the target; each live component has
    /// an exponential age and an independent exponential residual life, which
    /// is the stationary age law of Poisson births with exponential lifespans.
    /// Peak powers are exponential weights normalized to the path-loss budget.
    pub fn new<R: Rng + ?Sized>(
        bs_index: usize,
        bs: Point,
        mobile: Point,
        los: bool,
        now_s: f64,
        params: &ChannelParams,
        rng: &mut R,
    ) -> Result<Self> {
        let budget = received_power(bs.distance(mobile), &params.path_loss)?;
        let target = params.scattered_target(los);
        let count = poisson(target, rng);

        let mut components = Vec::with_capacity(count + 1);
        if los {
            components.push(spawn_component(
                bs,
                mobile,
                true,
                now_s,
                budget * LOS_DIRECT_SHARE,
                params,
                rng,
            ));
        }
        let scattered_budget = if los {
            budget * (1.0 - LOS_DIRECT_SHARE)
        } else {
            budget
        };
        let direct_m = bs.distance(mobile);
        let age_law = Exp::new(1.0 / params.mean_lifespan_s).expect("positive lifespan");
        let mut weights = Vec::with_capacity(count);
        let (mut weight_sum, mut tapered_sum) = (0.0, 0.0);
        for _ in 0..count {
            let w: f64 = rng.sample(Exp1);
            let mut c = spawn_component(bs, mobile, false, now_s, 1.0, params, rng);
            let age = age_law.sample(rng);
            let residual = c.lifespan_s;
            c.birth_s = now_s - age;
            c.lifespan_s = age + residual;
            let tw = w * params.excess_taper(c.delay_s * SPEED_OF_LIGHT - direct_m);
            weight_sum += w;
            tapered_sum += tw;
            weights.push(tw);
            components.push(c);
        }
        let first_scattered = usize::from(los);
        for (c, tw) in components[first_scattered..].iter_mut().zip(&weights) {
            c.peak *= libm::sqrt(scattered_budget * tw / tapered_sum);
        }
        let mean_taper = if weight_sum > 0.0 {
            tapered_sum / weight_sum
        } else {
            1.0
        };
        let birth_scale = scattered_budget / (params.scattered_target(los).max(1.0) * mean_taper);

        let mut state = ChannelState {
            components,
            los,
            bs_index,
            total_power_linear: 0.0,
            budget_linear: budget,
            birth_scale,
            time_s: now_s,
        };
        state.refresh(bs, mobile, now_s, params);
        Ok(state)
    }

    pub fn direct(&self) -> Option<&MultipathComponent> {
        self.components.iter().find(|c| c.is_direct())
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Recomputes geometry and instantaneous amplitudes at `t_s`.
    fn refresh(&mut self, bs: Point, mobile: Point, t_s: f64, params: &ChannelParams) {
        for c in &mut self.components {
            c.update_geometry(bs, mobile);
            c.update_amplitude(t_s, params.carrier_hz);
        }
        if self.los {
            let direct_power = self.direct().map_or(0.0, MultipathComponent::power);
            let others: f64 = self
                .components
                .iter()
                .filter(|c| !c.is_direct())
                .map(MultipathComponent::power)
                .sum();
            if others > 0.0 {
                let scale = libm::sqrt(direct_power / (LOS_DOMINANCE * others));
                for c in self.components.iter_mut().filter(|c| !c.is_direct()) {
                    c.amplitude *= scale;
                }
            }
        }
        self.time_s = t_s;
        self.total_power_linear = self.components.iter().map(MultipathComponent::power).sum();
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean).expect("positive mean").sample(rng);
    n as usize
}

/// Advances the channel by `dt_s` with the mobile now at `mobile`.
///
/// Dead components are dropped, new ones are born at uniform instants inside
/// the step, and every survivor's delay, azimuth and amplitude follow the new
/// geometry.
pub fn evolve_channel<R: Rng + ?Sized>(
    mut state: ChannelState,
    bs: Point,
    mobile: Point,
    dt_s: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> ChannelState {
    let start = state.time_s;
    let t = start + dt_s;
    state.components.retain(|c| c.is_alive(t));

    let births = poisson(params.birth_rate(state.los) * dt_s, rng);
    let direct_m = bs.distance(mobile);
    for _ in 0..births {
        let born = start + dt_s * rng.random::<f64>();
        let w: f64 = rng.sample(Exp1);
        let mut c = spawn_component(bs, mobile, false, born, 1.0, params, rng);
        let taper = params.excess_taper(c.delay_s * SPEED_OF_LIGHT - direct_m);
        c.peak *= libm::sqrt(state.birth_scale * w * taper);
        if c.is_alive(t) {
            state.components.push(c);
        }
    }
    state.refresh(bs, mobile, t, params);
    state
}

/// Renders the channel onto the tap grid by nearest-tap rounding; components
/// landing on the same tap add coherently.
pub fn true_cir(state: &ChannelState, grid: &TapGrid) -> Result<Vec<Complex64>> {
    let mut taps = vec![Complex64::new(0.0, 0.0); grid.n_taps];
    render_into(state, grid, &mut taps)?;
    Ok(taps)
}

/// Like [`true_cir`] but writes into a caller-owned buffer of `grid.n_taps`.
pub fn render_into(state: &ChannelState, grid: &TapGrid, taps: &mut [Complex64]) -> Result<()> {
    debug_assert_eq!(taps.len(), grid.n_taps);
    taps.iter_mut().for_each(|t| *t = Complex64::new(0.0, 0.0));
    for c in &state.components {
        let tap = grid.nearest_tap(c.delay_s);
        match taps.get_mut(tap) {
            Some(slot) => *slot += c.amplitude,
            None => {
                return Err(Error::DelayBeyondGrid {
                    delay_s: c.delay_s,
                    n_taps: grid.n_taps,
                })
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn path_loss_reference_points() {
        let p = PathLossParams::default();
        assert!((path_loss(1000.0, &p).unwrap() - 128.1).abs() < 1e-12);
        assert!((path_loss(100.0, &p).unwrap() - 90.5).abs() < 1e-9);
        assert!((path_loss(10000.0, &p).unwrap() - 165.7).abs() < 1e-9);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let p = PathLossParams::default();
        assert_eq!(path_loss(0.0, &p), Err(Error::NonPositiveDistance(0.0)));
        assert!(path_loss(-5.0, &p).is_err());
        assert!(path_loss(f64::NAN, &p).is_err());
    }

    #[test]
    fn neighbours_are_never_los() {
        let mut r = rng();
        assert!((0..1000).all(|_| !draw_los(false, 0.2, &mut r)));
    }

    #[test]
    fn serving_los_probability() {
        let mut r = rng();
        let n = 100_000;
        let hits = (0..n).filter(|_| draw_los(true, 0.2, &mut r)).count();
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.2).abs() < 0.01, "{frac}");
    }

    #[test]
    fn los_draw_at_cdf_edge() {
        struct Zeros;
        impl rand::RngCore for Zeros {
            fn next_u32(&mut self) -> u32 {
                0
            }
            fn next_u64(&mut self) -> u64 {
                0
            }
            fn fill_bytes(&mut self, dst: &mut [u8]) {
                dst.fill(0);
            }
        }
        assert!(draw_los(true, 0.2, &mut Zeros));
    }

    #[test]
    fn direct_component_geometry() {
        let c = spawn_component(
            Point::ORIGIN,
            Point::new(300.0, 400.0),
            true,
            0.0,
            1.0,
            &ChannelParams::default(),
            &mut rng(),
        );
        assert!(c.is_direct());
        assert_eq!(c.delay_s, 500.0 / SPEED_OF_LIGHT);
        assert!((c.delay_s - 1.6678e-6).abs() < 1e-10);
        assert!(c.lifespan_s.is_infinite());
        let expected_az = libm::atan2(400.0, 300.0);
        assert!((c.azimuth_rad - expected_az).abs() < 1e-12);
    }

    #[test]
    fn scattered_delays_bounded_by_disc() {
        let params = ChannelParams::default();
        let bs = Point::ORIGIN;
        let mobile = Point::new(300.0, 400.0);
        let los_delay = 500.0 / SPEED_OF_LIGHT;
        let mut r = rng();
        let mut max_excess: f64 = 0.0;
        for _ in 0..10_000 {
            let c = spawn_component(bs, mobile, false, 0.0, 1.0, &params, &mut r);
            let s = c.scatterer_pos.unwrap();
            assert!(s.distance(mobile) <= params.r_scat_m + 1e-9);
            assert!(c.delay_s >= los_delay * (1.0 - 1e-12));
            max_excess = max_excess.max(c.delay_s - los_delay);
        }
        assert!(max_excess <= 2.0 * params.r_scat_m / SPEED_OF_LIGHT);
        assert!(max_excess > 1.5e-6, "disc should be explored: {max_excess}");
    }

    #[test]
    fn half_sine_envelope() {
        let mut c = spawn_component(
            Point::ORIGIN,
            Point::new(500.0, 0.0),
            false,
            0.0,
            1.0,
            &ChannelParams::default(),
            &mut rng(),
        );
        c.birth_s = 0.0;
        c.lifespan_s = 2.0;
        assert!((c.fading_scale(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(c.fading_scale(2.0), 0.0);
        assert_eq!(c.fading_scale(5.0), 0.0);
        assert!(!c.is_alive(2.0));
    }

    #[test]
    fn los_state_holds_six_db_dominance() {
        let params = ChannelParams::default();
        let bs = Point::ORIGIN;
        let mut mobile = Point::new(250.0, -100.0);
        let mut r = rng();
        let mut s = ChannelState::new(0, bs, mobile, true, 0.0, &params, &mut r).unwrap();
        for _ in 0..200 {
            let others: f64 = s
                .components
                .iter()
                .filter(|c| !c.is_direct())
                .map(|c| c.power())
                .sum();
            if others > 0.0 {
                let ratio = s.direct().unwrap().power() / others;
                assert!((ratio / LOS_DOMINANCE - 1.0).abs() < 1e-9, "{ratio}");
            }
            mobile = mobile + Point::new(0.01, 0.0);
            s = evolve_channel(s, bs, mobile, 0.01, &params, &mut r);
        }
    }

    #[test]
    fn evolution_keeps_causality_and_envelope() {
        let params = ChannelParams::default();
        let grid = TapGrid::default();
        let bs = Point::new(1000.0, 0.0);
        let mut mobile = Point::new(0.0, 100.0);
        let mut r = rng();
        let mut s = ChannelState::new(3, bs, mobile, false, 0.0, &params, &mut r).unwrap();
        for _ in 0..500 {
            mobile = mobile + Point::new(0.1, 0.05);
            s = evolve_channel(s, bs, mobile, 0.02, &params, &mut r);
            let los_delay = bs.distance(mobile) / SPEED_OF_LIGHT;
            for c in &s.components {
                assert!(c.delay_s >= los_delay - grid.tap_spacing_s / 2.0);
                assert!(c.amplitude.norm() <= c.peak.norm() * (1.0 + 1e-12));
                assert!(c.is_alive(s.time_s));
            }
        }
    }

    #[test]
    fn rendering_to_taps() {
        let grid = TapGrid::default();
        let params = ChannelParams::default();
        let mut r = rng();
        let mut state = ChannelState::new(
            0,
            Point::ORIGIN,
            Point::new(10.0, 0.0),
            false,
            0.0,
            &params,
            &mut r,
        )
        .unwrap();
        let mut comp = spawn_component(
            Point::ORIGIN,
            Point::new(10.0, 0.0),
            true,
            0.0,
            1.0,
            &params,
            &mut r,
        );
        comp.delay_s = 7.0 * grid.tap_spacing_s;
        comp.amplitude = Complex64::new(1.0, 0.0);
        state.components = vec![comp.clone()];
        let cir = true_cir(&state, &grid).unwrap();
        assert_eq!(cir[7], Complex64::new(1.0, 0.0));
        assert!(cir
            .iter()
            .enumerate()
            .all(|(i, t)| i == 7 || t.norm() == 0.0));

        let mut neg = comp.clone();
        neg.amplitude = Complex64::new(-1.0, 0.0);
        state.components = vec![comp.clone(), neg];
        assert_eq!(
            true_cir(&state, &grid).unwrap()[7],
            Complex64::new(0.0, 0.0)
        );

        comp.delay_s = 7.4 * grid.tap_spacing_s;
        state.components = vec![comp.clone()];
        assert_eq!(
            true_cir(&state, &grid).unwrap()[7],
            Complex64::new(1.0, 0.0)
        );

        comp.delay_s = 200.0 * grid.tap_spacing_s;
        state.components = vec![comp];
        assert!(matches!(
            true_cir(&state, &grid),
            Err(Error::DelayBeyondGrid { n_taps: 128, .. })
        ));
    }
}
