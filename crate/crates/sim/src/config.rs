//! JSON run configuration: every simulation constant plus output and report
//! settings, all with defaults so a partial document is valid.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toaloc_core::firstpath::ThresholdSpec;
use toaloc_core::scenario::SimConfig;

use crate::error::SimError;

/// Parameters of the four-way comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportParams {
    pub delta_opt_db: f64,
    pub m2_a: f64,
    pub m2_b: f64,
    pub m3_l: usize,
    pub m3_gamma: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            delta_opt_db: 11.0,
            m2_a: 6.0,
            m2_b: 4.0,
            m3_l: 10,
            m3_gamma: 8.0,
        }
    }
}

impl ReportParams {
    pub fn m1_opt(&self) -> ThresholdSpec {
        ThresholdSpec::M1 {
            delta_db: self.delta_opt_db,
        }
    }

    pub fn m2(&self) -> ThresholdSpec {
        ThresholdSpec::M2 {
            a: self.m2_a,
            b: self.m2_b,
        }
    }

    pub fn m3(&self) -> ThresholdSpec {
        ThresholdSpec::M3 {
            l_strongest: self.m3_l,
            gamma: self.m3_gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub sim: SimConfig,
    pub out_dir: PathBuf,
    pub report: ReportParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            out_dir: PathBuf::from("out"),
            report: ReportParams::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a JSON document. Unknown top-level keys are
    /// rejected so that typos do not silently fall back to defaults.
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        let known = serde_json::to_value(RunConfig::default()).expect("default serializes");
        if let (Some(doc), Some(known)) = (value.as_object(), known.as_object()) {
            if let Some(key) = doc.keys().find(|k| !known.contains_key(*k)) {
                return Err(SimError::Config(format!("unknown field `{key}`")));
            }
        }
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        fs::write(path, self.to_json() + "\n").map_err(|e| SimError::io(path, e))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.sim.validate()?;
        for (name, spec) in [
            ("report.delta_opt_db", self.report.m1_opt()),
            ("report.m2", self.report.m2()),
            ("report.m3", self.report.m3()),
        ] {
            spec.validate()
                .map_err(|e| SimError::Config(format!("{name}: {e}")))?;
        }
        if self.report.m3_l >= self.sim.n_taps {
            return Err(SimError::Config("report.m3_l: must be below n_taps".into()));
        }
        Ok(())
    }
}
