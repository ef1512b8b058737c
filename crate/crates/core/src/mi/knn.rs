//! kNN estimator of `I(V; C)` for continuous `V` and discrete `C`.
//!
//! For each point with label `c`, let `d` be the distance (max-norm) to its
//! `k`-th nearest neighbour among points with the same label and `m` the
//! number of points of any label within distance `d`. Then
//!
//! ```text
//! I = psi(N) + <psi(k)> - <psi(N_c)> - <psi(m)>
//! ```
//!
//! Points whose label occurs only once carry no within-label neighbour and
//! are dropped; `k` is capped at `N_c - 1` for small label groups.

use statrs::function::gamma::digamma;

use super::{label_counts, MiEstimate, MiMethod};
use crate::error::{Error, Result};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn ksg_mixed_mi(values: &[Vec<f64>], labels: &[u64], k: usize) -> Result<MiEstimate> {
    let est = ksg_inner(values, labels, k)?;
    if let Some(w) = &est.warning {
        log::warn!("kNN mutual information: {w}");
    }
    Ok(est)
}

pub(crate) fn ksg_inner(values: &[Vec<f64>], labels: &[u64], k: usize) -> Result<MiEstimate> {
    let n = values.len();
    if n != labels.len() {
        return Err(Error::invalid(format!(
            "{n} values but {} labels",
            labels.len()
        )));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if n < k + 2 {
        return Err(Error::invalid(format!(
            "kNN MI needs at least k + 2 = {} pairs, got {n}",
            k + 2
        )));
    }
    let dim = values[0].len();
    if dim == 0 || values.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("values must share one non-zero dimension"));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }

    let counts = label_counts(labels);
    if counts.len() < 2 {
        return Ok(MiEstimate::degenerate(
            MiMethod::Knn,
            k,
            n,
            "fewer than 2 distinct labels",
        ));
    }
    let kept: Vec<usize> = (0..n).filter(|&i| counts[&labels[i]] > 1).collect();
    let kept_labels = label_counts(&kept.iter().map(|&i| labels[i]).collect::<Vec<_>>());
    if kept_labels.len() < 2 {
        return Ok(MiEstimate::degenerate(
            MiMethod::Knn,
            k,
            n,
            "fewer than 2 labels occur more than once",
        ));
    }

    let big_n = kept.len();
    let mut same = Vec::with_capacity(big_n);
    let mut all = Vec::with_capacity(big_n);
    let (mut sum_k, mut sum_nc, mut sum_m) = (0.0, 0.0, 0.0);
    for &i in &kept {
        let nc = counts[&labels[i]];
        let ki = k.min(nc - 1);
        same.clear();
        all.clear();
        for &j in &kept {
            if j == i {
                continue;
            }
            let d = dist(&values[i], &values[j]);
            all.push(d);
            if labels[j] == labels[i] {
                same.push(d);
            }
        }
        let (_, radius, _) = same.select_nth_unstable_by(ki - 1, f64::total_cmp);
        let radius = *radius;
        let m = all.iter().filter(|&&d| d <= radius).count();
        sum_k += digamma(ki as f64);
        sum_nc += digamma(nc as f64);
        sum_m += digamma(m as f64);
    }
    let nf = big_n as f64;
    let value = digamma(nf) + (sum_k - sum_nc - sum_m) / nf;
    let mut est = MiEstimate::new(value, MiMethod::Knn, k, n);
    if big_n < n {
        est.warning = Some(format!("{} singleton-label points dropped", n - big_n));
    }
    Ok(est)
}

/// [`ksg_mixed_mi`] for scalar values.
pub fn ksg_mixed_mi_scalar(values: &[f64], labels: &[u64], k: usize) -> Result<MiEstimate> {
    ksg_mixed_mi(&to_columns(values), labels, k)
}

pub(crate) fn to_columns(values: &[f64]) -> Vec<Vec<f64>> {
    values.iter().map(|&x| vec![x]).collect()
}
