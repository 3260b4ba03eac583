//! Threshold parameter sweeps on a shared set of measured points.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use toaloc_core::firstpath::ThresholdSpec;
use toaloc_core::scenario::{ErrorStats, MeasuredPoint, SimConfig};

use crate::config::ReportParams;
use crate::error::SimError;
use crate::runner::campaign_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    M1,
    M2,
    M3,
}

impl Method {
    pub fn params(self) -> &'static [Param] {
        match self {
            Method::M1 => &[Param::Delta],
            Method::M2 => &[Param::A, Param::B],
            Method::M3 => &[Param::L, Param::Gamma],
        }
    }
}

/// Threshold parameter that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Delta,
    A,
    B,
    L,
    Gamma,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Delta => "delta",
            Param::A => "a",
            Param::B => "b",
            Param::L => "L",
            Param::Gamma => "gamma",
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" | "Δ" | "d" => Ok(Param::Delta),
            "a" => Ok(Param::A),
            "b" => Ok(Param::B),
            "L" | "l" => Ok(Param::L),
            "gamma" | "γ" | "g" => Ok(Param::Gamma),
            _ => Err(format!("unknown sweep parameter `{s}`")),
        }
    }
}

/// One axis, `name=start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(param: Param, start: f64, stop: f64, step: f64) -> Result<Self, String> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err("axis bounds must be finite".into());
        }
        if step <= 0.0 {
            return Err("axis step must be positive".into());
        }
        if stop < start {
            return Err("axis stop must not be below start".into());
        }
        Ok(Self {
            param,
            start,
            stop,
            step,
        })
    }

    /// Grid values from `start` to `stop` inclusive; `stop` is kept when it
    /// lands on the grid up to rounding.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, range) = s
            .split_once('=')
            .ok_or_else(|| format!("expected name=start:stop:step, got `{s}`"))?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got `{range}`"));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{v}` is not a number"))
        };
        Axis::new(name.trim().parse()?, num(start)?, num(stop)?, num(step)?)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}={}:{}:{}",
            self.param.name(),
            self.start,
            self.stop,
            self.step
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub method: Method,
    pub axis1: Axis,
    pub axis2: Option<Axis>,
}

impl SweepGrid {
    pub fn new(method: Method, axis1: Axis, axis2: Option<Axis>) -> Result<Self, SimError> {
        for axis in core::iter::once(&axis1).chain(axis2.as_ref()) {
            if !method.params().contains(&axis.param) {
                return Err(SimError::Config(format!(
                    "parameter `{}` does not belong to {:?}",
                    axis.param.name(),
                    method
                )));
            }
            if axis.param == Param::L && axis.values().iter().any(|v| v.fract() != 0.0 || *v < 1.0)
            {
                return Err(SimError::Config("L must take integer values >= 1".into()));
            }
        }
        if axis2.is_some_and(|a| a.param == axis1.param) {
            return Err(SimError::Config(
                "both axes sweep the same parameter".into(),
            ));
        }
        Ok(Self {
            method,
            axis1,
            axis2,
        })
    }

    /// Default extents bracketing the usual optima and failure regions.
    pub fn default_for(method: Method) -> Self {
        let axis = |p, a, b, s| Axis::new(p, a, b, s).expect("valid default axis");
        match method {
            Method::M1 => Self::new(method, axis(Param::Delta, 0.0, 20.0, 1.0), None),
            Method::M2 => Self::new(
                method,
                axis(Param::A, 1.0, 12.0, 1.0),
                Some(axis(Param::B, 0.0, 8.0, 1.0)),
            ),
            Method::M3 => Self::new(
                method,
                axis(Param::L, 1.0, 20.0, 1.0),
                Some(axis(Param::Gamma, 0.0, 14.0, 1.0)),
            ),
        }
        .expect("default grid is valid")
    }

    pub fn n_cells(&self) -> usize {
        self.axis1.values().len() * self.axis2.map_or(1, |a| a.values().len())
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        core::iter::once(self.axis1.param.name())
            .chain(self.axis2.map(|a| a.param.name()))
            .collect()
    }

    /// Cells in grid order, axis2 varying fastest. Parameters not on an axis
    /// come from `base`.
    pub fn cells(&self, base: &ThresholdSpec) -> Vec<(Vec<f64>, ThresholdSpec)> {
        let v1 = self.axis1.values();
        let v2 = self.axis2.map(|a| a.values());
        let mut out = Vec::with_capacity(self.n_cells());
        for &x in &v1 {
            match &v2 {
                None => out.push((vec![x], self.spec(base, &[(self.axis1.param, x)]))),
                Some(v2) => {
                    let p2 = self.axis2.expect("axis2 present").param;
                    for &y in v2 {
                        out.push((
                            vec![x, y],
                            self.spec(base, &[(self.axis1.param, x), (p2, y)]),
                        ));
                    }
                }
            }
        }
        out
    }

    fn spec(&self, base: &ThresholdSpec, set: &[(Param, f64)]) -> ThresholdSpec {
        let mut spec = *base;
        for &(p, v) in set {
            match (&mut spec, p) {
                (ThresholdSpec::M1 { delta_db }, Param::Delta) => *delta_db = v,
                (ThresholdSpec::M2 { a, .. }, Param::A) => *a = v,
                (ThresholdSpec::M2 { b, .. }, Param::B) => *b = v,
                (ThresholdSpec::M3 { l_strongest, .. }, Param::L) => *l_strongest = v as usize,
                (ThresholdSpec::M3 { gamma, .. }, Param::Gamma) => *gamma = v,
                _ => unreachable!("axis validated against method"),
            }
        }
        spec
    }

    /// Starting spec for the off-axis parameters: the configured threshold
    /// when it uses this method, else the report defaults.
    pub fn base_spec(&self, configured: &ThresholdSpec, report: &ReportParams) -> ThresholdSpec {
        match (self.method, configured) {
            (Method::M1, ThresholdSpec::M1 { .. })
            | (Method::M2, ThresholdSpec::M2 { .. })
            | (Method::M3, ThresholdSpec::M3 { .. }) => *configured,
            (Method::M1, _) => report.m1_opt(),
            (Method::M2, _) => report.m2(),
            (Method::M3, _) => report.m3(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub spec: ThresholdSpec,
    pub stats: ErrorStats,
}

/// Evaluates every cell on the same measured points. Rows come back in grid
/// order whether or not cells run in parallel.
pub fn run_sweep(
    measured: &[MeasuredPoint],
    grid: &SweepGrid,
    base: &ThresholdSpec,
    cfg: &SimConfig,
    parallel_cells: bool,
) -> Result<Vec<SweepRow>, SimError> {
    let cells = grid.cells(base);
    for (_, spec) in &cells {
        spec.validate()
            .map_err(|e| SimError::Config(format!("sweep cell {spec:?}: {e}")))?;
        if let ThresholdSpec::M3 { l_strongest, .. } = spec {
            if *l_strongest >= cfg.n_taps {
                return Err(SimError::Config("sweep L must be below n_taps".into()));
            }
        }
    }
    let eval = |(values, spec): (Vec<f64>, ThresholdSpec)| {
        campaign_for(measured, &spec, cfg).map(|c| SweepRow {
            values,
            spec,
            stats: c.stats,
        })
    };
    if parallel_cells {
        cells.into_par_iter().map(eval).collect()
    } else {
        cells.into_iter().map(eval).collect()
    }
}
