//! Uniform-mass bin edges, per-bin summaries and tie handling.

use calibound::binning::BinningScheme;
use calibound::data::ScoredDataset;

fn main() -> calibound::Result<()> {
    let d = ScoredDataset::from_pairs(
        &[
            (0.05, 0),
            (0.12, 0),
            (0.31, 1),
            (0.33, 0),
            (0.48, 1),
            (0.52, 0),
            (0.77, 1),
            (0.91, 1),
        ],
        "toy",
    )?;
    let s = BinningScheme::umb(&d.scores(), 4)?;
    println!("edges {:?}", s.edges());
    for (i, b) in s.stats(&d).bins.iter().enumerate() {
        println!(
            "bin {i}: count {}  mean score {:.3}  mean label {:.3}",
            b.count,
            b.mean_score().unwrap_or(f64::NAN),
            b.mean_label().unwrap_or(f64::NAN)
        );
    }

    // heavily tied scores merge bins instead of producing empty ones
    let tied = [0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.7, 0.9];
    let s = BinningScheme::umb(&tied, 4)?;
    println!(
        "tied scores: asked for 4 bins, got {} (edges {:?})",
        s.n_bins(),
        s.edges()
    );
    Ok(())
}
