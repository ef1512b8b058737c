//! Histogram plug-in MI: equal-mass bins on the values, exact joint counts.

use std::collections::HashMap;

use super::{label_counts, MiEstimate, MiMethod};
use crate::error::{Error, Result};

pub fn plugin_mi(values: &[f64], labels: &[u64], bins: usize) -> Result<MiEstimate> {
    let est = plugin_inner(values, labels, bins)?;
    if let Some(w) = &est.warning {
        log::warn!("plug-in mutual information: {w}");
    }
    Ok(est)
}

pub(crate) fn plugin_inner(values: &[f64], labels: &[u64], bins: usize) -> Result<MiEstimate> {
    let n = values.len();
    if n != labels.len() {
        return Err(Error::invalid(format!(
            "{n} values but {} labels",
            labels.len()
        )));
    }
    if bins < 2 {
        return Err(Error::invalid("plug-in MI needs at least 2 bins"));
    }
    if n < 4 * bins {
        return Err(Error::invalid(format!(
            "plug-in MI with {bins} bins needs at least {} pairs, got {n}",
            4 * bins
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    let label_count = label_counts(labels);
    if label_count.len() < 2 {
        return Ok(MiEstimate::degenerate(
            MiMethod::Plugin,
            bins,
            n,
            "fewer than 2 distinct labels",
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    // tied values share the bin of the first member of their run
    let mut value_bin = vec![0usize; n];
    let mut run_start = 0;
    for (rank, &i) in order.iter().enumerate() {
        if rank > 0 && values[i] != values[order[rank - 1]] {
            run_start = rank;
        }
        value_bin[i] = run_start * bins / n;
    }

    let mut joint: HashMap<(usize, u64), usize> = HashMap::new();
    let mut marginal = vec![0usize; bins];
    for i in 0..n {
        *joint.entry((value_bin[i], labels[i])).or_insert(0) += 1;
        marginal[value_bin[i]] += 1;
    }
    let nf = n as f64;
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable_by_key(|&(key, _)| key);
    let value = cells
        .iter()
        .map(|&((b, l), c)| {
            let c = c as f64;
            c / nf * (c * nf / (marginal[b] as f64 * label_count[&l] as f64)).ln()
        })
        .sum();
    Ok(MiEstimate::new(value, MiMethod::Plugin, bins, n))
}
