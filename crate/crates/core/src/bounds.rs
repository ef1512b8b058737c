//! Closed-form bias and generalization bounds for the binned ECE.
//!
//! Every function returns a [`BoundReport`] that stores its inputs, so a
//! report can be re-evaluated later. Logarithms are natural.
//!
//! | id                         | quantity                                              |
//! |----------------------------|-------------------------------------------------------|
//! | `stat-bias`                | `E|TCE(f_I) - ECE|` on test data                      |
//! | `binning-bias`             | `|TCE(f) - TCE(f_I)|`                                 |
//! | `total-bias`               | sum of the two above                                  |
//! | `high-prob`                | statistical bias with probability `1 - delta`         |
//! | `gen-ece`                  | expected train/test ECE gap via eCMI                  |
//! | `gen-tce`                  | total bias when the ECE is evaluated on training data |
//! | `metric-entropy`           | same, via a covering number of the model class        |
//! | `metric-entropy-parametric`| same, for a `d`-parameter `L0`-Lipschitz class        |
//! | `recalib-reuse`            | recalibration fit on the training set                 |
//! | `recalib-holdout`          | recalibration fit on `n_re` held-out samples          |

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::binning::BinningMethod;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    StatBias,
    BinningBias,
    TotalBias,
    HighProb,
    GenEce,
    GenTce,
    MetricEntropy,
    MetricEntropyParametric,
    RecalibReuse,
    RecalibHoldout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: BoundKind,
    pub value: f64,
    pub inputs: BTreeMap<String, f64>,
    pub variant: Option<BinningMethod>,
    /// `value > 1`; the ECE never exceeds 1.
    pub vacuous: bool,
}

impl BoundReport {
    fn new(
        name: BoundKind,
        value: f64,
        variant: Option<BinningMethod>,
        inputs: &[(&str, f64)],
    ) -> Self {
        Self {
            name,
            value,
            inputs: inputs.iter().map(|&(k, v)| (k.to_owned(), v)).collect(),
            variant,
            vacuous: value > 1.0,
        }
    }
}

fn check_bins(bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::invalid("number of bins must be >= 1"));
    }
    Ok(bins as f64)
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample size must be >= 1"));
    }
    Ok(n as f64)
}

fn check_mi(name: &str, v: f64) -> Result<f64> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} must be finite and >= 0, got {v}"
        )));
    }
    Ok(v)
}

fn check_lipschitz(l: f64) -> Result<f64> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!(
            "Lipschitz constant must be finite and >= 0, got {l}"
        )));
    }
    Ok(l)
}

/// `sqrt(2B ln2 / (n - B)) + 2B / (n - B)`, the UMB statistical term.
fn umb_term(b: f64, n: usize) -> Result<f64> {
    if n as f64 <= b {
        return Err(Error::invalid(format!(
            "UMB bounds need n > B (n = {n}, B = {b})"
        )));
    }
    let m = n as f64 - b;
    Ok((2.0 * b * LN_2 / m).sqrt() + 2.0 * b / m)
}

/// UWB: `sqrt(2B ln2 / n)`. UMB: `sqrt(2B ln2 / (n-B)) + 2B/(n-B)`.
pub fn stat_bias_bound(bins: usize, n: usize, variant: BinningMethod) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let value = match variant {
        BinningMethod::Uwb => (2.0 * b * LN_2 / nf).sqrt(),
        BinningMethod::Umb => umb_term(b, n)?,
    };
    Ok(BoundReport::new(
        BoundKind::StatBias,
        value,
        Some(variant),
        &[("B", b), ("n", nf)],
    ))
}

/// UWB: `(1+L)/B`. UMB: `(1+L)(1/B + umb_term)`.
pub fn binning_bias_bound(
    bins: usize,
    n: usize,
    lipschitz: f64,
    variant: BinningMethod,
) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let l = check_lipschitz(lipschitz)?;
    let value = match variant {
        BinningMethod::Uwb => (1.0 + l) / b,
        BinningMethod::Umb => (1.0 + l) * (1.0 / b + umb_term(b, n)?),
    };
    Ok(BoundReport::new(
        BoundKind::BinningBias,
        value,
        Some(variant),
        &[("B", b), ("n", nf), ("L", l)],
    ))
}

/// UWB: `(1+L)/B + sqrt(2B ln2 / n)`. UMB: `(1+L)/B + (2+L) umb_term`.
pub fn total_bias_bound(
    bins: usize,
    n: usize,
    lipschitz: f64,
    variant: BinningMethod,
) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let l = check_lipschitz(lipschitz)?;
    let value = match variant {
        BinningMethod::Uwb => (1.0 + l) / b + (2.0 * b * LN_2 / nf).sqrt(),
        BinningMethod::Umb => (1.0 + l) / b + (2.0 + l) * umb_term(b, n)?,
    };
    Ok(BoundReport::new(
        BoundKind::TotalBias,
        value,
        Some(variant),
        &[("B", b), ("n", nf), ("L", l)],
    ))
}

/// `sqrt(2 (B ln2 + ln(1/delta)) / n)`.
pub fn high_prob_bound(bins: usize, n: usize, delta: f64) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let value = (2.0 * (b * LN_2 + (1.0 / delta).ln()) / nf).sqrt();
    Ok(BoundReport::new(
        BoundKind::HighProb,
        value,
        None,
        &[("B", b), ("n", nf), ("delta", delta)],
    ))
}

/// `sqrt(8 (eCMI + B ln2) / n)`.
pub fn gen_ece_bound(ecmi: f64, bins: usize, n: usize) -> Result<BoundReport> {
    let e = check_mi("eCMI", ecmi)?;
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let value = (8.0 * (e + b * LN_2) / nf).sqrt();
    Ok(BoundReport::new(
        BoundKind::GenEce,
        value,
        None,
        &[("eCMI", e), ("B", b), ("n", nf)],
    ))
}

/// UWB: `(1+L)/B + sqrt(8 (eCMI + B ln2)/n)`; UMB adds
/// `(1+L) sqrt(2 (fCMI + B ln2)/n)`. `fcmi` is required for UMB only.
pub fn gen_tce_bound(
    ecmi: f64,
    fcmi: Option<f64>,
    bins: usize,
    n: usize,
    lipschitz: f64,
    variant: BinningMethod,
) -> Result<BoundReport> {
    let e = check_mi("eCMI", ecmi)?;
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let l = check_lipschitz(lipschitz)?;
    let mut value = (1.0 + l) / b + (8.0 * (e + b * LN_2) / nf).sqrt();
    let mut inputs = vec![("eCMI", e), ("B", b), ("n", nf), ("L", l)];
    if variant == BinningMethod::Umb {
        let f = check_mi(
            "fCMI",
            fcmi.ok_or_else(|| Error::invalid("UMB generalization bound needs fCMI"))?,
        )?;
        value += (1.0 + l) * (2.0 * (f + b * LN_2) / nf).sqrt();
        inputs.push(("fCMI", f));
    }
    Ok(BoundReport::new(
        BoundKind::GenTce,
        value,
        Some(variant),
        &inputs,
    ))
}

/// `(1+L)/B + (2+L) delta + sqrt(8 B ln(2N) / n)` where `log_cover = ln N`
/// is the metric entropy at radius `delta / B`.
pub fn metric_entropy_bound(
    bins: usize,
    n: usize,
    lipschitz: f64,
    delta: f64,
    log_cover: f64,
) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let l = check_lipschitz(lipschitz)?;
    if !(delta > 0.0 && delta <= 1.0 / b) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1/B], got {delta}"
        )));
    }
    let log_n = check_mi("log covering number", log_cover)?;
    let value = (1.0 + l) / b + (2.0 + l) * delta + (8.0 * b * (LN_2 + log_n) / nf).sqrt();
    Ok(BoundReport::new(
        BoundKind::MetricEntropy,
        value,
        Some(BinningMethod::Uwb),
        &[
            ("B", b),
            ("n", nf),
            ("L", l),
            ("delta", delta),
            ("logN", log_n),
        ],
    ))
}

/// `(3+2L)/B + sqrt(8 d B ln(2 L0 B^2) / n)`, i.e. the covering bound with
/// `delta = 1/B` and `N ~ (L0 B / delta)^d`.
pub fn metric_entropy_parametric_bound(
    bins: usize,
    n: usize,
    lipschitz: f64,
    dim: usize,
    l0: f64,
) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let l = check_lipschitz(lipschitz)?;
    if dim == 0 {
        return Err(Error::invalid("parameter dimension must be >= 1"));
    }
    let arg = 2.0 * l0 * b * b;
    if !(l0 > 0.0 && arg > 1.0 && arg.is_finite()) {
        return Err(Error::invalid(format!(
            "need L0 > 0 and 2 L0 B^2 > 1, got L0 = {l0}"
        )));
    }
    let d = dim as f64;
    let value = (3.0 + 2.0 * l) / b + (8.0 * d * b * arg.ln() / nf).sqrt();
    Ok(BoundReport::new(
        BoundKind::MetricEntropyParametric,
        value,
        Some(BinningMethod::Uwb),
        &[("B", b), ("n", nf), ("L", l), ("d", d), ("L0", l0)],
    ))
}

/// Training-reuse recalibration:
/// `sqrt(2 (I1 + B ln2)/n) + sqrt(2 (I2 + B ln2)/n)`.
///
/// `I1`, `I2` are the CMIs of the two Delta statistics; passing fCMI in both
/// slots gives the looser single-CMI form.
pub fn recalib_reuse_bound(
    i_delta1: f64,
    i_delta2: f64,
    bins: usize,
    n: usize,
) -> Result<BoundReport> {
    let i1 = check_mi("I(Delta1; U | Z)", i_delta1)?;
    let i2 = check_mi("I(Delta2; U | Z)", i_delta2)?;
    let b = check_bins(bins)?;
    let nf = check_n(n)?;
    let value = (2.0 * (i1 + b * LN_2) / nf).sqrt() + (2.0 * (i2 + b * LN_2) / nf).sqrt();
    Ok(BoundReport::new(
        BoundKind::RecalibReuse,
        value,
        Some(BinningMethod::Umb),
        &[("I_delta1", i1), ("I_delta2", i2), ("B", b), ("n", nf)],
    ))
}

/// Held-out recalibration on `n_re` samples: `sqrt(2B ln2/(n_re-B)) + 2B/(n_re-B)`.
pub fn recalib_holdout_bound(bins: usize, n_re: usize) -> Result<BoundReport> {
    let b = check_bins(bins)?;
    let value = umb_term(b, n_re)?;
    Ok(BoundReport::new(
        BoundKind::RecalibHoldout,
        value,
        Some(BinningMethod::Umb),
        &[("B", b), ("n_re", n_re as f64)],
    ))
}
