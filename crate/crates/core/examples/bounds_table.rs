//! Closed-form bias and generalization bounds at a few sample sizes.

use calibound::binning::BinningMethod;
use calibound::bounds::*;
use calibound::metrics::{cube_root_bins, optimal_bins};

fn main() -> calibound::Result<()> {
    let l = 1.0;
    println!(
        "{:>7} {:>4} {:>10} {:>10} {:>10} {:>10}",
        "n", "B", "total UWB", "total UMB", "gen ECE", "high prob"
    );
    for n in [1000, 4000, 20000, 100000] {
        let b = optimal_bins(n, l, BinningMethod::Uwb)?;
        println!(
            "{n:>7} {b:>4} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            total_bias_bound(b, n, l, BinningMethod::Uwb)?.value,
            total_bias_bound(b, n, l, BinningMethod::Umb)?.value,
            gen_ece_bound(0.0, cube_root_bins(n), n)?.value,
            high_prob_bound(b, n, 0.05)?.value,
        );
    }
    println!();
    println!(
        "recalibration, B = 15: holdout (n_re = 100) {:.4}, reuse (n = 4000, zero MI) {:.4}",
        recalib_holdout_bound(15, 100)?.value,
        recalib_reuse_bound(0.0, 0.0, 15, 4000)?.value
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&gen_tce_bound(
            0.0,
            Some(0.0),
            15,
            4000,
            l,
            BinningMethod::Umb
        )?)?
    );
    Ok(())
}
