//! Parallel campaign execution.
//!
//! Every point draws from its own RNG stream, so the output is the same for
//! any thread count and any scheduling.

use rayon::prelude::*;
use toaloc_core::firstpath::ThresholdSpec;
use toaloc_core::scenario::{
    build_network, campaign_points, evaluate_point, measure_campaign_point, Campaign, ErrorStats,
    MeasuredPoint, PointResult, SimConfig,
};

use crate::error::SimError;

/// Measures every campaign point; profiles are threshold-independent and can
/// be evaluated any number of times.
pub fn measure_all(cfg: &SimConfig) -> Result<Vec<MeasuredPoint>, SimError> {
    cfg.validate()?;
    let layout = build_network(cfg.isd_m)?;
    let points = campaign_points(cfg, &layout);
    let measured = points
        .par_iter()
        .enumerate()
        .map(|(id, pt)| measure_campaign_point(cfg, &layout, id, pt))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(measured)
}

pub fn evaluate_all(
    measured: &[MeasuredPoint],
    threshold: &ThresholdSpec,
    cfg: &SimConfig,
) -> Result<Vec<PointResult>, SimError> {
    let results = measured
        .par_iter()
        .map(|m| evaluate_point(m, threshold, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(results)
}

/// Campaign statistics for `threshold` on already measured points.
pub fn campaign_for(
    measured: &[MeasuredPoint],
    threshold: &ThresholdSpec,
    cfg: &SimConfig,
) -> Result<Campaign, SimError> {
    let results = evaluate_all(measured, threshold, cfg)?;
    let stats = ErrorStats::from_results(&results);
    Ok(Campaign { results, stats })
}

/// Parallel equivalent of `toaloc_core::scenario::run_campaign`.
pub fn run_campaign(cfg: &SimConfig) -> Result<Campaign, SimError> {
    let measured = measure_all(cfg)?;
    campaign_for(&measured, &cfg.threshold, cfg)
}
