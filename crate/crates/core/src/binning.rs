//! Uniform-width and uniform-mass binning schemes.
//!
//! Bin `i` (0-based here) is the right-closed interval `(u_i, u_{i+1}]`; the
//! first bin additionally contains 0 so that every score in `[0, 1]` lands
//! somewhere.

use serde::{Deserialize, Serialize};

use crate::data::ScoredDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BinningMethod {
    Uwb,
    Umb,
}

impl std::fmt::Display for BinningMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BinningMethod::Uwb => "uwb",
            BinningMethod::Umb => "umb",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    method: BinningMethod,
    edges: Vec<f64>,
    /// Set when tied UMB order statistics forced bins to merge.
    #[serde(skip)]
    tie_collapsed: bool,
}

impl BinningScheme {
    /// `B` equal-width bins: edges `i / B`.
    pub fn uwb(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("number of bins must be >= 1"));
        }
        let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
        Ok(Self {
            method: BinningMethod::Uwb,
            edges,
            tie_collapsed: false,
        })
    }

    /// Equal-mass bins with interior edges at the order statistics
    /// `f_(floor(n b / B))`, `b = 1..B-1`.
    ///
    /// Requires `n >= 2B`. Interior edges that would leave a bin empty (only
    /// possible with tied scores) are dropped, reducing `B` and setting
    /// [`BinningScheme::tie_collapsed`].
    pub fn umb(scores: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("number of bins must be >= 1"));
        }
        let n = scores.len();
        if n < 2 * bins {
            return Err(Error::invalid(format!(
                "uniform-mass binning needs n >= 2B (n = {n}, B = {bins})"
            )));
        }
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::invalid("scores must lie in [0, 1]"));
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        // number of scores <= e; the first bin also owns the zeros
        let at_or_below = |e: f64| sorted.partition_point(|&s| s <= e);

        let candidates = (1..bins).map(|b| sorted[n * b / bins - 1]);
        let mut edges = vec![0.0];
        let mut below = 0;
        for u in candidates {
            if u > *edges.last().unwrap() && u < 1.0 {
                edges.push(u);
                below = at_or_below(u);
            }
        }
        // the last bin (u_{B-1}, 1] must hold something too
        while edges.len() > 1 && below == n {
            edges.pop();
            below = at_or_below(*edges.last().unwrap());
            if edges.len() == 1 {
                below = 0;
            }
        }
        edges.push(1.0);
        let tie_collapsed = edges.len() - 1 < bins;
        if tie_collapsed {
            log::warn!(
                "tied scores collapsed uniform-mass binning from {bins} to {} bins",
                edges.len() - 1
            );
        }
        Ok(Self {
            method: BinningMethod::Umb,
            edges,
            tie_collapsed,
        })
    }

    /// Rebuilds a scheme from stored edges, checking its invariants.
    pub fn from_edges(method: BinningMethod, edges: Vec<f64>) -> Result<Self> {
        let s = Self {
            method,
            edges,
            tie_collapsed: false,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let e = &self.edges;
        if e.len() < 2 || e[0] != 0.0 || *e.last().unwrap() != 1.0 {
            return Err(Error::invalid("bin edges must start at 0 and end at 1"));
        }
        if e.windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::invalid("bin edges must be strictly increasing"));
        }
        Ok(())
    }

    pub fn method(&self) -> BinningMethod {
        self.method
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn tie_collapsed(&self) -> bool {
        self.tie_collapsed
    }

    /// 0-based bin of `score`. Exact comparisons against stored edges.
    pub fn assign(&self, score: f64) -> usize {
        let interior = &self.edges[1..self.edges.len() - 1];
        interior.partition_point(|&u| u < score)
    }

    pub fn stats(&self, d: &ScoredDataset) -> BinStats {
        bin_stats(self, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub count: usize,
    pub sum_score: f64,
    pub sum_label: f64,
    /// `count / n`.
    pub mass: f64,
}

impl BinSummary {
    /// Mean score, `None` for an empty bin.
    pub fn mean_score(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_score / self.count as f64)
    }

    /// Mean label, `None` for an empty bin.
    pub fn mean_label(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_label / self.count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub bins: Vec<BinSummary>,
    pub n: usize,
}

pub fn bin_stats(s: &BinningScheme, d: &ScoredDataset) -> BinStats {
    let mut bins = vec![
        BinSummary {
            count: 0,
            sum_score: 0.0,
            sum_label: 0.0,
            mass: 0.0,
        };
        s.n_bins()
    ];
    for sample in d.samples() {
        let b = &mut bins[s.assign(sample.score())];
        b.count += 1;
        b.sum_score += sample.score();
        b.sum_label += sample.label() as f64;
    }
    let n = d.len();
    for b in &mut bins {
        b.mass = b.count as f64 / n as f64;
    }
    BinStats { bins, n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uwb_edges() {
        assert_eq!(BinningScheme::uwb(1).unwrap().edges(), &[0.0, 1.0]);
        assert_eq!(
            BinningScheme::uwb(4).unwrap().edges(),
            &[0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert!(BinningScheme::uwb(0).is_err());
    }

    #[test]
    fn umb_order_statistic() {
        let s = BinningScheme::umb(&[0.4, 0.1, 0.3, 0.2], 2).unwrap();
        assert_eq!(s.edges(), &[0.0, 0.2, 1.0]);
        assert!(!s.tie_collapsed());
    }

    #[test]
    fn umb_ties_collapse() {
        let s = BinningScheme::umb(&[0.5; 4], 2).unwrap();
        assert_eq!(s.n_bins(), 1);
        assert!(s.tie_collapsed());

        // two tied blocks: middle edge duplicates collapse, the rest survive
        let scores = [0.2, 0.2, 0.2, 0.2, 0.7, 0.7, 0.9, 0.95];
        let s = BinningScheme::umb(&scores, 4).unwrap();
        assert!(s.tie_collapsed());
        let st = bin_stats(
            &s,
            &crate::data::ScoredDataset::from_pairs(
                &scores.iter().map(|&x| (x, 0)).collect::<Vec<_>>(),
                "t",
            )
            .unwrap(),
        );
        assert!(st.bins.iter().all(|b| b.count > 0));
    }

    #[test]
    fn umb_all_ones_and_zeros() {
        let s = BinningScheme::umb(&[1.0; 6], 3).unwrap();
        assert_eq!(s.edges(), &[0.0, 1.0]);
        let s = BinningScheme::umb(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0], 3).unwrap();
        assert_eq!(s.edges(), &[0.0, 1.0]);
    }

    #[test]
    fn umb_preconditions() {
        let scores: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        assert!(BinningScheme::umb(&scores, 6).is_err());
        assert!(BinningScheme::umb(&scores, 0).is_err());
        assert!(BinningScheme::umb(&scores, 5).is_ok());
    }

    #[test]
    fn assign_boundaries() {
        let s = BinningScheme::uwb(4).unwrap();
        assert_eq!(s.assign(0.25), 0);
        assert_eq!(s.assign(0.2500001), 1);
        assert_eq!(s.assign(0.0), 0);
        assert_eq!(s.assign(1.0), 3);
        assert_eq!(s.assign(0.75), 2);
    }

    #[test]
    fn stats_examples() {
        let d = ScoredDataset::from_pairs(&[(0.3, 0), (0.3, 0), (0.3, 1)], "t").unwrap();
        let st = bin_stats(&BinningScheme::uwb(1).unwrap(), &d);
        let b = st.bins[0];
        assert_eq!(b.count, 3);
        assert!((b.mean_score().unwrap() - 0.3).abs() < 1e-15);
        assert!((b.mean_label().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.mass, 1.0);

        let d = ScoredDataset::from_pairs(&[(0.3, 1), (0.4, 0)], "t").unwrap();
        let st = bin_stats(&BinningScheme::uwb(4).unwrap(), &d);
        assert_eq!(
            st.bins.iter().map(|b| b.count).collect::<Vec<_>>(),
            vec![0, 2, 0, 0]
        );
        assert_eq!(st.bins[0].mass, 0.0);
        assert!(st.bins[0].mean_score().is_none());

        let d = ScoredDataset::from_pairs(&[(0.9, 1)], "t").unwrap();
        let st = bin_stats(&BinningScheme::uwb(2).unwrap(), &d);
        assert_eq!(st.bins[1].count, 1);
        assert_eq!(st.bins[1].mean_score(), Some(0.9));
        assert_eq!(st.bins[1].mean_label(), Some(1.0));
    }

    #[test]
    fn json_round_trip() {
        let s = BinningScheme::umb(&[0.11, 0.37, 0.52, 0.93, 0.12, 0.64], 3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"method\":\"umb\""));
        let back: BinningScheme = serde_json::from_str(&json).unwrap();
        assert_eq!(back.edges(), s.edges());
        assert_eq!(back.method(), s.method());
        assert!(BinningScheme::from_edges(BinningMethod::Uwb, vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }
}
