//! Desk-scale experiment drivers: the synthetic TCE-gap scaling study and the
//! held-out vs training-reuse recalibration comparison.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{BinningMethod, BinningScheme};
use crate::bounds::{recalib_holdout_bound, recalib_reuse_bound, total_bias_bound, BoundReport};
use crate::data::ScoredDataset;
use crate::error::{Error, Result};
use crate::metrics::{cube_root_bins, ece, optimal_bins};
use crate::models::{sample_synthetic, Scorer, SyntheticModel};
use crate::recalibration::Recalibrator;
use crate::rng::{self, derive_seed};

/// How the scaling study picks `B` for each `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "bins")]
pub enum BinRule {
    Optimal,
    CubeRoot,
    Fixed(usize),
}

impl BinRule {
    pub fn resolve(self, n: usize, lipschitz: f64) -> Result<usize> {
        match self {
            BinRule::Optimal => optimal_bins(n, lipschitz, BinningMethod::Uwb),
            BinRule::CubeRoot => Ok(cube_root_bins(n)),
            BinRule::Fixed(0) => Err(Error::invalid("fixed bin count must be >= 1")),
            BinRule::Fixed(b) => Ok(b),
        }
    }
}

impl std::str::FromStr for BinRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(BinRule::Optimal),
            "cube_root" | "cube-root" => Ok(BinRule::CubeRoot),
            other => other.parse().map(BinRule::Fixed).map_err(|_| {
                Error::invalid(format!(
                    "bin rule must be optimal, cube_root or an integer, got {other:?}"
                ))
            }),
        }
    }
}

/// `points` sizes spaced evenly in log scale over `[lo, hi]`, rounded and
/// deduplicated.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo || points == 0 {
        return Err(Error::invalid(
            "log grid needs 0 < lo <= hi and points >= 1",
        ));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as usize)
        .collect();
    grid.dedup();
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub beta0: f64,
    pub beta1: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub bin_rule: BinRule,
    /// Monte-Carlo draws for the reference TCE.
    pub n_mc: usize,
    /// Grid size for the Lipschitz estimate.
    pub lipschitz_grid: usize,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            beta0: 0.5,
            beta1: -1.5,
            n_grid: vec![1000, 3162, 10000, 31623, 100000],
            reps: 20,
            bin_rule: BinRule::Optimal,
            n_mc: 2_000_000,
            lipschitz_grid: 10_001,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub rep: usize,
    pub bins: usize,
    pub ece: f64,
    pub tce: f64,
    pub tce_gap: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub lipschitz: f64,
    pub tce: f64,
    pub tce_std_error: f64,
    pub rows: Vec<ScalingRow>,
    /// `(n, mean gap)` per grid point.
    pub mean_gaps: Vec<(usize, f64)>,
    /// Least-squares slope of `ln(mean gap)` on `ln(n)`.
    pub slope: f64,
}

impl ScalingResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("slope needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope needs at least two distinct x values"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// For each `(n, rep)`: draw a test set, bin it with UWB, and compare its ECE
/// with the model's TCE.
pub fn run_scaling(cfg: &ScalingConfig) -> Result<ScalingResult> {
    if cfg.n_grid.is_empty() || cfg.reps == 0 {
        return Err(Error::invalid(
            "scaling experiment needs a non-empty grid and reps >= 1",
        ));
    }
    let model = SyntheticModel::new(cfg.beta0, cfg.beta1)?;
    let oracle = model.oracle();
    let lipschitz = oracle.estimate_lipschitz(cfg.lipschitz_grid)?;
    let tce = oracle.mc_tce(cfg.n_mc, derive_seed(cfg.seed, u64::MAX));
    let bins = cfg
        .n_grid
        .iter()
        .map(|&n| cfg.bin_rule.resolve(n, lipschitz))
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|g| (0..cfg.reps).map(move |r| (g, r)))
        .collect();
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(c, &(g, rep))| {
            let n = cfg.n_grid[g];
            let d = model.score_points(
                &sample_synthetic(n, derive_seed(cfg.seed, c as u64)),
                "synthetic test",
            )?;
            let scheme = BinningScheme::uwb(bins[g])?;
            let e = ece(&d, &scheme).value;
            Ok(ScalingRow {
                n,
                rep,
                bins: bins[g],
                ece: e,
                tce: tce.value,
                tce_gap: (tce.value - e).abs(),
                bound: total_bias_bound(bins[g], n, lipschitz, BinningMethod::Uwb)?.value,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_gaps: Vec<(usize, f64)> = rows
        .chunks(cfg.reps)
        .map(|chunk| {
            (
                chunk[0].n,
                chunk.iter().map(|r| r.tce_gap).sum::<f64>() / chunk.len() as f64,
            )
        })
        .collect();
    let slope = if mean_gaps.len() >= 2 {
        let x: Vec<f64> = mean_gaps.iter().map(|&(n, _)| (n as f64).ln()).collect();
        let y: Vec<f64> = mean_gaps
            .iter()
            .map(|&(_, g)| g.max(f64::MIN_POSITIVE).ln())
            .collect();
        ols_slope(&x, &y)?
    } else {
        f64::NAN
    };
    Ok(ScalingResult {
        lipschitz,
        tce: tce.value,
        tce_std_error: tce.std_error,
        rows,
        mean_gaps,
        slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum RecalibVariant {
    /// Fit on `n_re` rows kept apart from training.
    Holdout { n_re: usize },
    /// Fit on the training rows themselves.
    Reuse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecalibrationOutcome {
    pub variant: RecalibVariant,
    pub bins: usize,
    pub n_fit: usize,
    pub n_test: usize,
    /// Test ECE of the raw scores under UMB bins from the fit set.
    pub ece_before: f64,
    /// Test ECE of the recalibrated function.
    pub ece_after: f64,
    pub bound: BoundReport,
    pub recalibrator: Recalibrator,
}

/// Fits on `fit`, evaluates on `test`, and attaches the matching bound.
/// `mi` supplies the two information terms for the reuse bound.
pub fn evaluate_recalibration(
    fit: &ScoredDataset,
    test: &ScoredDataset,
    bins: usize,
    variant: RecalibVariant,
    mi: (f64, f64),
) -> Result<RecalibrationOutcome> {
    if test.len() < 2 * bins {
        return Err(Error::invalid(format!(
            "test split has {} rows, needs at least 2B = {}",
            test.len(),
            2 * bins
        )));
    }
    let r = Recalibrator::fit(fit, bins, matches!(variant, RecalibVariant::Reuse))?;
    let bound = match variant {
        RecalibVariant::Holdout { .. } => recalib_holdout_bound(bins, fit.len())?,
        RecalibVariant::Reuse => recalib_reuse_bound(mi.0, mi.1, bins, fit.len())?,
    };
    Ok(RecalibrationOutcome {
        variant,
        bins,
        n_fit: fit.len(),
        n_test: test.len(),
        ece_before: ece(test, r.scheme()).value,
        ece_after: r.ece(test).value,
        bound,
        recalibrator: r,
    })
}

/// Synthetic split for recalibration: `(train, recal, test)` with sizes
/// `(n, n_re, n_test)`, each drawn independently.
pub fn synthetic_recalibration_data(
    model: &SyntheticModel,
    n: usize,
    n_re: usize,
    n_test: usize,
    seed: u64,
) -> Result<(ScoredDataset, Option<ScoredDataset>, ScoredDataset)> {
    let draw = |k: usize, i: u64, name: &str| {
        model.score_points(&sample_synthetic(k, derive_seed(seed, i)), name)
    };
    let train = draw(n, 0, "synthetic train")?;
    let recal = if n_re > 0 {
        Some(draw(n_re, 1, "synthetic recalibration")?)
    } else {
        None
    };
    Ok((train, recal, draw(n_test, 2, "synthetic test")?))
}

/// Splits a scored file for recalibration: a shuffled `eval_split` fraction
/// becomes the test set; the rest is the training set, of which the first
/// `n_re` rows form the held-out fit set for [`RecalibVariant::Holdout`].
/// Returns `(fit, test)`.
pub fn split_for_recalibration(
    d: &ScoredDataset,
    variant: RecalibVariant,
    eval_split: f64,
    seed: u64,
) -> Result<(ScoredDataset, ScoredDataset)> {
    if !(eval_split > 0.0 && eval_split < 1.0) {
        return Err(Error::invalid("eval split must lie in (0, 1)"));
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(&mut rng::stream(seed, 4));
    let n_test = (eval_split * d.len() as f64).round() as usize;
    if n_test == 0 || n_test == d.len() {
        return Err(Error::invalid(
            "eval split leaves an empty train or test set",
        ));
    }
    let (test_idx, rest) = order.split_at(n_test);
    let fit_idx = match variant {
        RecalibVariant::Reuse => rest,
        RecalibVariant::Holdout { n_re } => {
            if n_re > rest.len() {
                return Err(Error::invalid(format!(
                    "holdout needs n_re = {n_re} rows but only {} remain after the test split",
                    rest.len()
                )));
            }
            &rest[..n_re]
        }
    };
    Ok((
        d.subset(fit_idx, format!("{} (fit split)", d.provenance()))?,
        d.subset(test_idx, format!("{} (test split)", d.provenance()))?,
    ))
}
