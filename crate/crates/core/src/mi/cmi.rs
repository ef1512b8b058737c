//! The supersample experiment: train on the masked half, evaluate a
//! statistic on both halves, and estimate its information about the mask.
//!
//! Every `(supersample, mask)` cell seeds its own streams from the config
//! seed and the cell index, so cells run in parallel and are reduced in
//! index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::{ksg_inner, to_columns};
use super::plugin::plugin_inner;
use super::MiEstimate;
use crate::binning::{BinningMethod, BinningScheme};
use crate::data::{make_supersample, ScoredDataset, Supersample};
use crate::error::{Error, Result};
use crate::metrics::ece;
use crate::models::{
    sample_synthetic, LabeledPoint, Learner, LogisticLearner, Scorer, TrainerConfig,
};
use crate::rng::derive_seed;

/// How the statistic's bins are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method", content = "bins")]
pub enum StatisticRule {
    Uwb(usize),
    /// Uniform-mass bins built from the training half's scores.
    Umb(usize),
}

impl StatisticRule {
    pub fn new(method: BinningMethod, bins: usize) -> Self {
        match method {
            BinningMethod::Uwb => Self::Uwb(bins),
            BinningMethod::Umb => Self::Umb(bins),
        }
    }

    fn scheme(self, train: &ScoredDataset) -> Result<BinningScheme> {
        match self {
            Self::Uwb(b) => BinningScheme::uwb(b),
            Self::Umb(b) => BinningScheme::umb(&train.scores(), b),
        }
    }
}

fn fit_and_score<L: Learner>(
    s: &Supersample<LabeledPoint>,
    learner: &L,
    seed: u64,
) -> Result<(ScoredDataset, ScoredDataset)> {
    let train = s.select(false);
    let test = s.select(true);
    let model = learner.fit(&train, seed)?;
    Ok((
        model.score_points(&train, "supersample train half")?,
        model.score_points(&test, "supersample test half")?,
    ))
}

/// `|ECE(test half) - ECE(train half)|` for a model trained on the train half.
pub fn ecmi_statistic<L: Learner>(
    s: &Supersample<LabeledPoint>,
    learner: &L,
    rule: StatisticRule,
    seed: u64,
) -> Result<f64> {
    let (train, test) = fit_and_score(s, learner, seed)?;
    gap(&train, &test, rule)
}

fn gap(train: &ScoredDataset, test: &ScoredDataset, rule: StatisticRule) -> Result<f64> {
    let scheme = rule.scheme(train)?;
    Ok((ece(test, &scheme).value - ece(train, &scheme).value).abs())
}

/// `(Delta_1, Delta_2)` with `bins` uniform-mass bins from the train half:
/// per-bin label mass and bin mass differences between the halves, summed in
/// absolute value.
pub fn delta_statistics<L: Learner>(
    s: &Supersample<LabeledPoint>,
    learner: &L,
    bins: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let (train, test) = fit_and_score(s, learner, seed)?;
    deltas(&train, &test, bins)
}

fn deltas(train: &ScoredDataset, test: &ScoredDataset, bins: usize) -> Result<(f64, f64)> {
    let scheme = BinningScheme::umb(&train.scores(), bins)?;
    let b = scheme.n_bins();
    let n = train.len() as f64;
    let (mut d1, mut d2) = (vec![0.0; b], vec![0.0; b]);
    for (d, sign) in [(test, 1.0), (train, -1.0)] {
        for smp in d.samples() {
            let i = scheme.assign(smp.score());
            d1[i] += sign * smp.label() as f64;
            d2[i] += sign;
        }
    }
    let sum = |v: &[f64]| v.iter().map(|x| (x / n).abs()).sum::<f64>();
    Ok((sum(&d1), sum(&d2)))
}

/// Canonical integer for a mask: the bit pattern itself up to 64 bits,
/// otherwise a seeded fold over its 64-bit words.
pub fn mask_label(mask: &[bool]) -> u64 {
    let words: Vec<u64> = mask
        .chunks(64)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u64, |w, (i, &b)| w | (u64::from(b) << i))
        })
        .collect();
    if words.len() <= 1 {
        return words.first().copied().unwrap_or(0);
    }
    words
        .iter()
        .enumerate()
        .fold(mask.len() as u64, |h, (i, &w)| derive_seed(h ^ w, i as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MaskMode {
    /// `n_masks` uniform draws per supersample.
    Sampled,
    /// All `2^n` masks, each trained `seeds_per_mask` times. Needs `n <= 12`.
    Exhaustive { seeds_per_mask: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmiExperimentConfig {
    pub n: usize,
    pub n_supersamples: usize,
    pub n_masks: usize,
    pub k: usize,
    pub bins: usize,
    pub binning: BinningMethod,
    pub trainer: TrainerConfig,
    pub seed: u64,
    pub mask_mode: MaskMode,
    /// Histogram bins for the plug-in oracle in exhaustive mode.
    pub plugin_bins: usize,
}

impl Default for CmiExperimentConfig {
    fn default() -> Self {
        Self {
            n: 500,
            n_supersamples: 5,
            n_masks: 10,
            k: 3,
            bins: 7,
            binning: BinningMethod::Umb,
            trainer: TrainerConfig::default(),
            seed: 0,
            mask_mode: MaskMode::Sampled,
            plugin_bins: 8,
        }
    }
}

impl CmiExperimentConfig {
    pub const MAX_EXHAUSTIVE_N: usize = 12;

    pub fn validate(&self) -> Result<()> {
        self.trainer.validate()?;
        if self.n_supersamples == 0 {
            return Err(Error::invalid("n_supersamples must be >= 1"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if self.bins == 0 || self.n < 2 * self.bins {
            return Err(Error::invalid(format!(
                "need 1 <= B and n >= 2B (n = {}, B = {})",
                self.n, self.bins
            )));
        }
        match self.mask_mode {
            MaskMode::Sampled if self.n_masks < 2 => Err(Error::invalid("n_masks must be >= 2")),
            MaskMode::Sampled if self.n_masks < self.k + 2 => Err(Error::invalid(format!(
                "n_masks must be >= k + 2 = {} for the kNN estimator",
                self.k + 2
            ))),
            MaskMode::Exhaustive { seeds_per_mask } => {
                if self.n > Self::MAX_EXHAUSTIVE_N {
                    return Err(Error::invalid(format!(
                        "exhaustive masks need n <= {}, got {}",
                        Self::MAX_EXHAUSTIVE_N,
                        self.n
                    )));
                }
                if seeds_per_mask == 0 {
                    return Err(Error::invalid("seeds_per_mask must be >= 1"));
                }
                if (1usize << self.n) * seeds_per_mask < 4 * self.plugin_bins.max(2) {
                    return Err(Error::invalid(
                        "too few exhaustive cells for the plug-in oracle",
                    ));
                }
                Ok(())
            }
            MaskMode::Sampled => Ok(()),
        }
    }

    fn cells_per_supersample(&self) -> usize {
        match self.mask_mode {
            MaskMode::Sampled => self.n_masks,
            MaskMode::Exhaustive { seeds_per_mask } => (1 << self.n) * seeds_per_mask,
        }
    }
}

/// One evaluated `(supersample, mask)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub supersample_idx: usize,
    pub mask_idx: usize,
    pub mask_label: u64,
    pub statistic: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// Plug-in estimates from exhaustive mask enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimates {
    pub ecmi: MiEstimate,
    pub i_delta1: MiEstimate,
    pub i_delta2: MiEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmiReport {
    pub ecmi: MiEstimate,
    pub i_delta1: MiEstimate,
    pub i_delta2: MiEstimate,
    /// Mean of the ECE-gap statistic over all cells.
    pub mean_gap: f64,
    pub oracle: Option<OracleEstimates>,
    pub cells: Vec<CellRecord>,
}

/// Runs the experiment with the logistic trainer from `cfg.trainer`.
pub fn run_cmi_experiment(cfg: &CmiExperimentConfig) -> Result<CmiReport> {
    run_cmi_experiment_with(cfg, &LogisticLearner::from_config(&cfg.trainer))
}

/// Runs the experiment with an arbitrary learner on the synthetic family.
pub fn run_cmi_experiment_with<L: Learner>(
    cfg: &CmiExperimentConfig,
    learner: &L,
) -> Result<CmiReport> {
    cfg.validate()?;
    let supersamples = (0..cfg.n_supersamples)
        .map(|j| {
            let seed = derive_seed(cfg.seed, j as u64);
            let source = sample_synthetic(2 * cfg.n, derive_seed(seed, 0));
            make_supersample(&source, cfg.n, derive_seed(seed, 1))
        })
        .collect::<Result<Vec<_>>>()?;

    let per = cfg.cells_per_supersample();
    let rule = StatisticRule::new(cfg.binning, cfg.bins);
    let cells = (0..cfg.n_supersamples * per)
        .into_par_iter()
        .map(|c| {
            let (j, t) = (c / per, c % per);
            let base = &supersamples[j];
            let s = match cfg.mask_mode {
                MaskMode::Sampled => base.remask(derive_seed(base.seed(), 100 + t as u64)),
                MaskMode::Exhaustive { seeds_per_mask } => {
                    let m = t / seeds_per_mask;
                    base.with_mask((0..cfg.n).map(|i| (m >> i) & 1 == 1).collect())?
                }
            };
            let fit_seed = derive_seed(derive_seed(cfg.trainer.seed, j as u64), t as u64);
            let (train, test) = fit_and_score(&s, learner, fit_seed)?;
            let (delta1, delta2) = deltas(&train, &test, cfg.bins)?;
            Ok(CellRecord {
                supersample_idx: j,
                mask_idx: t,
                mask_label: mask_label(s.mask()),
                statistic: gap(&train, &test, rule)?,
                delta1,
                delta2,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    type Field = fn(&CellRecord) -> f64;
    let fields: [Field; 3] = [|c| c.statistic, |c| c.delta1, |c| c.delta2];
    let estimate = |f: Field, plugin: bool| -> Result<MiEstimate> {
        let parts = cells
            .chunks(per)
            .map(|group| {
                let v: Vec<f64> = group.iter().map(f).collect();
                let labels: Vec<u64> = group.iter().map(|c| c.mask_label).collect();
                if plugin {
                    plugin_inner(&v, &labels, cfg.plugin_bins)
                } else {
                    ksg_inner(&to_columns(&v), &labels, cfg.k)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let est = MiEstimate::average(&parts).expect("at least one supersample");
        if let Some(w) = &est.warning {
            log::warn!("CMI estimate: {w}");
        }
        Ok(est)
    };
    let [ecmi, i_delta1, i_delta2] = fields.map(|f| estimate(f, false));
    let oracle = match cfg.mask_mode {
        MaskMode::Sampled => None,
        MaskMode::Exhaustive { .. } => {
            let [ecmi, i_delta1, i_delta2] = fields.map(|f| estimate(f, true));
            Some(OracleEstimates {
                ecmi: ecmi?,
                i_delta1: i_delta1?,
                i_delta2: i_delta2?,
            })
        }
    };
    let mean_gap = cells.iter().map(|c| c.statistic).sum::<f64>() / cells.len() as f64;
    Ok(CmiReport {
        ecmi: ecmi?,
        i_delta1: i_delta1?,
        i_delta2: i_delta2?,
        mean_gap,
        oracle,
        cells,
    })
}
