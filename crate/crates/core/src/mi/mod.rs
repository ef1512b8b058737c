//! Mutual-information estimation and the supersample CMI experiment.

mod cmi;
mod knn;
mod plugin;

use serde::{Deserialize, Serialize};

pub use cmi::{
    delta_statistics, ecmi_statistic, mask_label, run_cmi_experiment, run_cmi_experiment_with,
    CellRecord, CmiExperimentConfig, CmiReport, MaskMode, OracleEstimates, StatisticRule,
};
pub use knn::{ksg_mixed_mi, ksg_mixed_mi_scalar};
pub use plugin::plugin_mi;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiMethod {
    Knn,
    Plugin,
}

/// An MI estimate in nats.
///
/// `value` keeps the raw (possibly slightly negative) estimate; `clamped` is
/// `max(value, 0)` and is what the bounds consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value: f64,
    pub clamped: f64,
    pub method: MiMethod,
    /// Neighbour count for the kNN estimator, bin count for the plug-in one.
    pub k: usize,
    pub n_pairs: usize,
    pub warning: Option<String>,
}

impl MiEstimate {
    pub(crate) fn new(value: f64, method: MiMethod, k: usize, n_pairs: usize) -> Self {
        Self {
            value,
            clamped: value.max(0.0),
            method,
            k,
            n_pairs,
            warning: None,
        }
    }

    pub(crate) fn degenerate(method: MiMethod, k: usize, n_pairs: usize, why: &str) -> Self {
        log::debug!("mutual information set to 0: {why}");
        Self {
            warning: Some(why.to_owned()),
            ..Self::new(0.0, method, k, n_pairs)
        }
    }

    /// Mean of several estimates (conditioning by averaging).
    pub(crate) fn average(parts: &[MiEstimate]) -> Option<Self> {
        let first = parts.first()?;
        let value = parts.iter().map(|p| p.value).sum::<f64>() / parts.len() as f64;
        let warnings: Vec<&str> = parts.iter().filter_map(|p| p.warning.as_deref()).collect();
        let warning = (!warnings.is_empty()).then(|| {
            format!(
                "{} of {} parts degenerate: {}",
                warnings.len(),
                parts.len(),
                warnings[0]
            )
        });
        Some(Self {
            warning,
            ..Self::new(
                value,
                first.method,
                first.k,
                parts.iter().map(|p| p.n_pairs).sum(),
            )
        })
    }
}

/// Label histogram in first-seen order.
pub(crate) fn label_counts(labels: &[u64]) -> std::collections::HashMap<u64, usize> {
    let mut counts = std::collections::HashMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}
