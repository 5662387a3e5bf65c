//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cazone::{MergeParams, SafetyPolicy};
use crate::error::{from_json, Error, Result};
use crate::lidar::ClusterParams;
use crate::packing::DownsizeParams;
use crate::raster::{Rgb, NULL_BG};
use crate::scheduler::{Budget, LatencyTable};

/// Every field may be omitted; omitted fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub cluster: ClusterParams,
    pub merge: MergeParams,
    pub downsize: DownsizeParams,
    /// Free pixels kept around each zone on a canvas.
    pub gap: u32,
    pub null_bg: Rgb,
    pub safety_policy: SafetyPolicy,
    pub budget_ms: f64,
    /// CAZone share of the frame above which the whole frame is processed.
    pub fallback_coverage: f64,
    /// CSV latency table. Relative paths resolve against the config file.
    /// The bundled table is used when absent.
    pub latency_table: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cluster: ClusterParams::default(),
            merge: MergeParams::default(),
            downsize: DownsizeParams::default(),
            gap: 4,
            null_bg: NULL_BG,
            safety_policy: SafetyPolicy::default(),
            budget_ms: Budget::default().threshold_ms,
            fallback_coverage: 0.8,
            latency_table: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = from_json("config", text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (Some(table), Some(dir)) = (&cfg.latency_table, path.parent()) {
            if table.is_relative() {
                cfg.latency_table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        self.merge.validate()?;
        self.downsize.validate()?;
        if !(self.budget_ms > 0.0 && self.budget_ms.is_finite()) {
            return Err(Error::invalid("budget_ms", "must be a positive number"));
        }
        if !(self.fallback_coverage > 0.0 && self.fallback_coverage <= 1.0) {
            return Err(Error::invalid("fallback_coverage", "must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn budget(&self) -> Budget {
        Budget {
            threshold_ms: self.budget_ms,
        }
    }

    pub fn load_table(&self) -> Result<LatencyTable> {
        match &self.latency_table {
            Some(p) => LatencyTable::load(p),
            None => Ok(LatencyTable::table_one()),
        }
    }
}
