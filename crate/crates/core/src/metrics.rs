//! Binned calibration error and the gap statistics built on it.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_stats, BinningMethod, BinningScheme};
use crate::bounds;
use crate::data::ScoredDataset;
use crate::error::{Error, Result};
use crate::models::{chunked_synthetic, sigmoid, CalibrationOracle, McEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceValue {
    pub value: f64,
    pub scheme: BinningScheme,
    pub n_e: usize,
}

/// `sum_i p_i |mean score_i - mean label_i|`; empty bins contribute nothing.
pub fn ece(d: &ScoredDataset, s: &BinningScheme) -> EceValue {
    let stats = bin_stats(s, d);
    let value = stats
        .bins
        .iter()
        .filter_map(|b| Some(b.mass * (b.mean_score()? - b.mean_label()?).abs()))
        .sum();
    EceValue {
        value,
        scheme: s.clone(),
        n_e: d.len(),
    }
}

/// Same quantity written as `sum_i |(1/n) sum_m (y_m - f_m) 1[f_m in bin i]|`.
pub fn ece_reformulated(d: &ScoredDataset, s: &BinningScheme) -> EceValue {
    let mut residual = vec![0.0; s.n_bins()];
    for sample in d.samples() {
        residual[s.assign(sample.score())] += sample.label() as f64 - sample.score();
    }
    let n = d.len() as f64;
    EceValue {
        value: residual.iter().map(|r| (r / n).abs()).sum(),
        scheme: s.clone(),
        n_e: d.len(),
    }
}

/// Monte-Carlo TCE of the binned predictor: `sum_i |E[(pi1(f) - f) 1[f in bin i]]|`.
///
/// Uses the closed-form calibration map in place of `Y`, which has the same
/// expectation and lower variance. The standard error combines the per-bin
/// errors in quadrature.
pub fn binned_tce(o: &CalibrationOracle, s: &BinningScheme, n_mc: usize, seed: u64) -> McEstimate {
    let n_mc = n_mc.max(1);
    let bins = s.n_bins();
    let parts = chunked_synthetic(n_mc, seed, |pts| {
        let mut sum = vec![0.0; bins];
        let mut sum_sq = vec![0.0; bins];
        for p in pts {
            let logit = o.model().logit(p.x);
            let f = sigmoid(logit);
            let r = o.calibration_at_logit(logit) - f;
            let b = s.assign(f);
            sum[b] += r;
            sum_sq[b] += r * r;
        }
        (sum, sum_sq)
    });
    let mut sum = vec![0.0; bins];
    let mut sum_sq = vec![0.0; bins];
    for (a, b) in parts {
        for i in 0..bins {
            sum[i] += a[i];
            sum_sq[i] += b[i];
        }
    }
    let n = n_mc as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for i in 0..bins {
        // the per-bin term is a mean over all n draws (zero outside the bin)
        let mean = sum[i] / n;
        value += mean.abs();
        if n_mc > 1 {
            var += ((sum_sq[i] - n * mean * mean) / (n - 1.0)).max(0.0) / n;
        }
    }
    McEstimate {
        value,
        std_error: var.sqrt(),
        n: n_mc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    TceGap,
    EceGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStatistic {
    pub kind: GapKind,
    pub value: f64,
    pub components: (f64, f64),
}

impl GapStatistic {
    fn new(kind: GapKind, a: f64, b: f64) -> Self {
        Self {
            kind,
            value: (a - b).abs(),
            components: (a, b),
        }
    }
}

/// `|TCE - ECE(d_test)|` with the TCE from the oracle by Monte Carlo.
pub fn tce_gap(
    o: &CalibrationOracle,
    d_test: &ScoredDataset,
    s: &BinningScheme,
    n_mc: usize,
    seed: u64,
) -> GapStatistic {
    let tce = o.mc_tce(n_mc, seed).value;
    GapStatistic::new(GapKind::TceGap, tce, ece(d_test, s).value)
}

/// `|ECE(d_test) - ECE(d_train)|` under one scheme. For UMB the scheme
/// should have been built from `d_train`.
pub fn ece_gap(d_train: &ScoredDataset, d_test: &ScoredDataset, s: &BinningScheme) -> GapStatistic {
    GapStatistic::new(GapKind::EceGap, ece(d_test, s).value, ece(d_train, s).value)
}

/// `floor(n^(1/3))`, computed exactly.
pub fn cube_root_bins(n: usize) -> usize {
    let mut b = (n as f64).cbrt().round() as usize;
    while b > 0 && b * b * b > n {
        b -= 1;
    }
    while (b + 1) * (b + 1) * (b + 1) <= n {
        b += 1;
    }
    b.max(1)
}

/// Bin count minimising the test-set total-bias bound.
///
/// UWB uses the stationary point `floor((2 n (1+L)^2 / ln 2)^(1/3))`; UMB scans
/// every `B` in `[1, n/2]`. Both clamp to `[1, n/2]`.
pub fn optimal_bins(n: usize, lipschitz: f64, variant: BinningMethod) -> Result<usize> {
    if n < 8 {
        return Err(Error::invalid(format!(
            "optimal bin count needs n >= 8, got {n}"
        )));
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(Error::invalid("Lipschitz constant must be finite and >= 0"));
    }
    let max_b = n / 2;
    let b = match variant {
        BinningMethod::Uwb => {
            let x = 2.0 * n as f64 * (1.0 + lipschitz).powi(2) / std::f64::consts::LN_2;
            x.cbrt().floor() as usize
        }
        BinningMethod::Umb => scan_argmin(n, lipschitz, BinningMethod::Umb)?,
    };
    Ok(b.clamp(1, max_b))
}

/// Integer argmin of the total-bias bound over `B` in `[1, n/2]`.
pub fn scan_argmin(n: usize, lipschitz: f64, variant: BinningMethod) -> Result<usize> {
    let mut best = (1, f64::INFINITY);
    for b in 1..=(n / 2).max(1) {
        let v = bounds::total_bias_bound(b, n, lipschitz, variant)?.value;
        if v < best.1 {
            best = (b, v);
        }
    }
    Ok(best.0)
}
