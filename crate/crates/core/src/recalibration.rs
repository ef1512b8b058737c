//! Histogram-binning recalibration.
//!
//! A recalibrator replaces each score with the mean label of its UMB bin on
//! the fit set. The fit set is either a held-out recalibration split or the
//! training set itself (`reused_training`); choosing and splitting the data
//! is the caller's job.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_stats, BinningMethod, BinningScheme};
use crate::data::{ScoredDataset, ScoredSample};
use crate::error::{Error, Result};
use crate::metrics::EceValue;

#[derive(Debug, Clone, PartialEq)]
pub struct Recalibrator {
    scheme: BinningScheme,
    mu: Vec<f64>,
    fit_size: usize,
    reused_training: bool,
}

#[derive(Serialize, Deserialize)]
struct RecalibratorRepr {
    edges: Vec<f64>,
    mu: Vec<f64>,
    fit_size: usize,
    reused_training: bool,
}

impl Serialize for Recalibrator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RecalibratorRepr {
            edges: self.scheme.edges().to_vec(),
            mu: self.mu.clone(),
            fit_size: self.fit_size,
            reused_training: self.reused_training,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Recalibrator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = RecalibratorRepr::deserialize(d)?;
        let scheme =
            BinningScheme::from_edges(BinningMethod::Umb, r.edges).map_err(D::Error::custom)?;
        if r.mu.len() != scheme.n_bins() || r.mu.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(D::Error::custom("mu must hold one value in [0, 1] per bin"));
        }
        Ok(Self {
            scheme,
            mu: r.mu,
            fit_size: r.fit_size,
            reused_training: r.reused_training,
        })
    }
}

impl Recalibrator {
    /// Fits on `d_fit` with `bins` uniform-mass bins. Needs `|d_fit| >= 2B`.
    pub fn fit(d_fit: &ScoredDataset, bins: usize, reused_training: bool) -> Result<Self> {
        if d_fit.len() < 2 * bins {
            return Err(Error::invalid(format!(
                "recalibration needs at least 2B = {} fit samples, got {}",
                2 * bins,
                d_fit.len()
            )));
        }
        let scheme = BinningScheme::umb(&d_fit.scores(), bins)?;
        let stats = bin_stats(&scheme, d_fit);
        let global = d_fit.mean_label();
        let mu = stats
            .bins
            .iter()
            .map(|b| {
                b.mean_label().unwrap_or_else(|| {
                    log::warn!("empty recalibration bin; using the global label mean");
                    global
                })
            })
            .collect();
        Ok(Self {
            scheme,
            mu,
            fit_size: d_fit.len(),
            reused_training,
        })
    }

    pub fn scheme(&self) -> &BinningScheme {
        &self.scheme
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn fit_size(&self) -> usize {
        self.fit_size
    }

    pub fn reused_training(&self) -> bool {
        self.reused_training
    }

    pub fn apply_one(&self, score: f64) -> f64 {
        self.mu[self.scheme.assign(score)]
    }

    pub fn apply(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply_one(s)).collect()
    }

    /// The dataset with every score recalibrated, labels unchanged.
    pub fn apply_dataset(&self, d: &ScoredDataset) -> Result<ScoredDataset> {
        let samples = d
            .samples()
            .iter()
            .map(|s| ScoredSample::new(self.apply_one(s.score()), s.label()))
            .collect::<Result<Vec<_>>>()?;
        ScoredDataset::new(samples, format!("{} (recalibrated)", d.provenance()))
    }

    /// ECE of the recalibrated function on `d`.
    ///
    /// The recalibrated function is constant on each bin of the scheme, so its
    /// bins are the scheme's bins applied to the original scores, each with
    /// mean prediction `mu[i]`.
    pub fn ece(&self, d: &ScoredDataset) -> EceValue {
        let stats = bin_stats(&self.scheme, d);
        let value = stats
            .bins
            .iter()
            .zip(&self.mu)
            .filter_map(|(b, &mu)| Some(b.mass * (mu - b.mean_label()?).abs()))
            .sum();
        EceValue {
            value,
            scheme: self.scheme.clone(),
            n_e: d.len(),
        }
    }
}

pub fn fit_recalibrator(
    d_fit: &ScoredDataset,
    bins: usize,
    reused_training: bool,
) -> Result<Recalibrator> {
    Recalibrator::fit(d_fit, bins, reused_training)
}

pub fn apply_recalibrator(r: &Recalibrator, scores: &[f64]) -> Vec<f64> {
    r.apply(scores)
}

/// TCE estimate of the recalibrated function: its ECE on fresh data `d_test`.
pub fn recalibrated_tce(r: &Recalibrator, d_test: &ScoredDataset) -> f64 {
    r.ece(d_test).value
}
