//! Side-by-side comparison of the trivial detector and the three tuned
//! methods on one shared point set.

use std::fmt;

use toaloc_core::firstpath::ThresholdSpec;
use toaloc_core::scenario::{ErrorStats, MeasuredPoint, SimConfig};

use crate::config::ReportParams;
use crate::error::SimError;
use crate::runner::campaign_for;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportColumn {
    pub label: String,
    pub spec: ThresholdSpec,
    pub stats: ErrorStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub columns: Vec<ReportColumn>,
}

/// The four compared configurations, in table order.
pub fn report_specs(p: &ReportParams) -> [(String, ThresholdSpec); 4] {
    [
        ("M1 d=0".to_string(), ThresholdSpec::M1 { delta_db: 0.0 }),
        (format!("M1 d={}", p.delta_opt_db), p.m1_opt()),
        (format!("M2 ({},{})", p.m2_a, p.m2_b), p.m2()),
        (format!("M3 ({},{})", p.m3_l, p.m3_gamma), p.m3()),
    ]
}

pub fn build_report(
    measured: &[MeasuredPoint],
    params: &ReportParams,
    cfg: &SimConfig,
) -> Result<ReportTable, SimError> {
    let columns = report_specs(params)
        .into_iter()
        .map(|(label, spec)| {
            campaign_for(measured, &spec, cfg).map(|c| ReportColumn {
                label,
                spec,
                stats: c.stats,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReportTable { columns })
}

impl ReportTable {
    /// Rows `mean`, `std`, `p95`; one numeric cell per column.
    pub fn rows(&self) -> [(&'static str, Vec<f64>); 3] {
        let col = |f: fn(&ErrorStats) -> f64| self.columns.iter().map(|c| f(&c.stats)).collect();
        [
            ("mean", col(|s| s.mean_m)),
            ("std", col(|s| s.std_m)),
            ("p95", col(|s| s.p95_m)),
        ]
    }
}

impl fmt::Display for ReportTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<6}", "[m]")?;
        for c in &self.columns {
            write!(f, "{:>14}", c.label)?;
        }
        writeln!(f)?;
        for (name, values) in self.rows() {
            write!(f, "{name:<6}")?;
            for v in values {
                write!(f, "{v:>14.1}")?;
            }
            writeln!(f)?;
        }
        let unavailable: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}/{}", c.stats.n_unavailable, c.stats.n_points))
            .collect();
        writeln!(f, "unavailable: {}", unavailable.join(", "))
    }
}
