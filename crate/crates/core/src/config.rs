//! Run configuration shared by the command-line front end: an optional JSON
//! file mirroring every flag, and the worker-pool size.

use std::path::Path;

use serde::Deserialize;

use crate::analysis::AnalysisConfig;
use crate::error::{Error, Result};
use crate::metrics::ApMode;

pub const THREADS_ENV: &str = "DETDIAG_THREADS";

/// Every field is optional; flags given on the command line take precedence.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub tp_iou: Option<f64>,
    pub n_ref: Option<f64>,
    pub cuts: Option<Vec<f64>>,
    pub ap_mode: Option<ApMode>,
    pub schedule: Option<Vec<usize>>,
    pub exclude_duplicates: Option<bool>,
    pub score_threshold: Option<f64>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Parse {
            origin: path.display().to_string(),
            source,
        })
    }

    /// Fills unset fields of `self` from `fallback`.
    pub fn or(self, fallback: ConfigFile) -> ConfigFile {
        ConfigFile {
            tp_iou: self.tp_iou.or(fallback.tp_iou),
            n_ref: self.n_ref.or(fallback.n_ref),
            cuts: self.cuts.or(fallback.cuts),
            ap_mode: self.ap_mode.or(fallback.ap_mode),
            schedule: self.schedule.or(fallback.schedule),
            exclude_duplicates: self.exclude_duplicates.or(fallback.exclude_duplicates),
            score_threshold: self.score_threshold.or(fallback.score_threshold),
        }
    }

    pub fn analysis_config(&self) -> AnalysisConfig {
        let d = AnalysisConfig::default();
        AnalysisConfig {
            tp_iou: self.tp_iou.unwrap_or(d.tp_iou),
            n_ref: self.n_ref.or(d.n_ref),
            cuts: self.cuts.clone().unwrap_or(d.cuts),
            ap_mode: self.ap_mode.unwrap_or(d.ap_mode),
            schedule: self.schedule.clone().or(d.schedule),
            exclude_duplicates: self.exclude_duplicates.unwrap_or(d.exclude_duplicates),
        }
    }
}

/// Worker count from `DETDIAG_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Domain(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Dedicated pool capped at `threads` workers (rayon's default when `None`).
pub fn worker_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Domain(format!("cannot start worker pool: {e}")))
}
