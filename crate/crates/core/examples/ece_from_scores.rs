//! Binned ECE of a score file under both binning schemes.
//!
//! `cargo run --example ece_from_scores -- path/to/scores.csv`
//! Without an argument, scores from a synthetic model are used.

use calibound::binning::{BinningMethod, BinningScheme};
use calibound::data::{load_scores, ScoreFormat};
use calibound::metrics::{ece, ece_reformulated, optimal_bins};
use calibound::models::{sample_synthetic, Scorer, SyntheticModel};

fn main() -> calibound::Result<()> {
    let d = match std::env::args().nth(1) {
        Some(path) => load_scores(&path, ScoreFormat::from_path(path.as_ref()))?,
        None => {
            SyntheticModel::new(0.5, -1.5)?.score_points(&sample_synthetic(4000, 1), "synthetic")?
        }
    };
    println!("{} samples, mean label {:.4}", d.len(), d.mean_label());

    for method in [BinningMethod::Uwb, BinningMethod::Umb] {
        let bins = optimal_bins(d.len(), 1.0, method)?;
        let scheme = match method {
            BinningMethod::Uwb => BinningScheme::uwb(bins)?,
            BinningMethod::Umb => BinningScheme::umb(&d.scores(), bins)?,
        };
        let e = ece(&d, &scheme);
        println!(
            "{method}: B = {:>3}  ECE = {:.5}  (reformulated {:.5})",
            scheme.n_bins(),
            e.value,
            ece_reformulated(&d, &scheme).value
        );
    }
    Ok(())
}
