use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("power delay profile has no positive tap")]
    ZeroProfile,
    #[error("cannot average an empty snapshot list")]
    NoSnapshots,
    #[error("snapshot {index} has {got} taps, expected {expected}")]
    TapCountMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("component delay {delay_s:e} s lies beyond the {n_taps}-tap window")]
    DelayBeyondGrid { delay_s: f64, n_taps: usize },
    #[error("L = {l} strongest taps must be in 1..{n_taps}")]
    InvalidStrongestCount { l: usize, n_taps: usize },
    #[error("invalid threshold parameter: {0}")]
    InvalidThreshold(&'static str),
    #[error("invalid config field `{field}`: {reason}")]
    Config {
        field: &'static str,
        reason: &'static str,
    },
    #[error("range set: {0}")]
    RangeSet(&'static str),
    #[error("percentile of an empty list")]
    EmptyPercentile,
    #[error("percentile fraction {0} outside (0, 1]")]
    InvalidPercentile(f64),
}

pub type Result<T> = core::result::Result<T, Error>;
